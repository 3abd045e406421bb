"""TSPLIB (NODE_COORD_SECTION) reader and unit-square normalization."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tsp import Instance

log = logging.getLogger(__name__)

KNOWN_TYPES = ("EUC_2D", "CEIL_2D", "GEO")


class TsplibError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class TsplibInstance:
    name: str
    dimension: int
    edge_weight_type: str  # EUC_2D, CEIL_2D, GEO, or whatever the file says
    raw_coords: np.ndarray

    @property
    def name_suffix_matches(self) -> bool | None:
        m = re.search(r"(\d+)$", self.name)
        return None if m is None else int(m.group(1)) == self.dimension


@dataclass(frozen=True)
class NormalizedInstance:
    instance: Instance
    scale: float
    offset: tuple[float, float]
    source: TsplibInstance | None = None

    def denormalize_coords(self, coords: np.ndarray) -> np.ndarray:
        return coords * self.scale + np.asarray(self.offset)


def parse_tsplib(text: str | bytes) -> TsplibInstance:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    header: dict[str, str] = {}
    nodes: dict[int, tuple[float, float]] = {}
    in_coords = False
    section_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords:
            parts = line.split()
            if not re.match(r"^[+-]?\d", parts[0]):
                in_coords = False  # another section begins
            else:
                if len(parts) < 3:
                    raise TsplibError(f"expected 'index x y', got {line!r}", lineno)
                try:
                    idx = int(float(parts[0]))
                    x, y = float(parts[1]), float(parts[2])
                except ValueError:
                    raise TsplibError(f"unparseable number in {line!r}", lineno) from None
                if idx in nodes:
                    raise TsplibError(f"duplicate node index {idx}", lineno)
                nodes[idx] = (x, y)
                continue
        key, sep, value = line.partition(":")
        key = key.strip().upper()
        if key == "NODE_COORD_SECTION":
            in_coords = True
            section_line = lineno
        elif sep:
            header[key] = value.strip()
        else:
            # keyword without colon, e.g. "DIMENSION 400"
            parts = line.split(None, 1)
            header[parts[0].upper()] = parts[1].strip() if len(parts) > 1 else ""
    if "DIMENSION" not in header:
        raise TsplibError("missing DIMENSION")
    try:
        dimension = int(header["DIMENSION"])
    except ValueError:
        raise TsplibError(f"unparseable DIMENSION {header['DIMENSION']!r}") from None
    if section_line is None:
        raise TsplibError("missing NODE_COORD_SECTION")
    if len(nodes) != dimension:
        raise TsplibError(f"DIMENSION is {dimension} but {len(nodes)} coordinates were read",
                          section_line)
    coords = np.array([nodes[k] for k in sorted(nodes)], dtype=np.float64)
    inst = TsplibInstance(
        name=header.get("NAME", ""),
        dimension=dimension,
        edge_weight_type=header.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper(),
        raw_coords=coords,
    )
    if inst.name_suffix_matches is False:
        log.warning("instance %s declares DIMENSION %d", inst.name, dimension)
    return inst


def read_tsplib(path) -> TsplibInstance:
    return parse_tsplib(Path(path).read_bytes())


def normalize(raw: TsplibInstance) -> NormalizedInstance:
    """Map coordinates into [0,1]^2 with one isotropic scale."""
    if raw.dimension < 1:
        raise ValueError("empty instance")
    c = raw.raw_coords
    lo = c.min(axis=0)
    span = float((c.max(axis=0) - lo).max())
    scale = span if span > 0 else 1.0
    norm = np.clip((c - lo) / scale, 0.0, 1.0)
    return NormalizedInstance(Instance(norm), scale, (float(lo[0]), float(lo[1])), raw)


def denormalize_length(norm: NormalizedInstance, normalized_length: float) -> float:
    if normalized_length < 0:
        raise ValueError("length must be nonnegative")
    return normalized_length * norm.scale
