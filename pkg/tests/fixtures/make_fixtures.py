"""Regenerate the synthetic TSPLIB fixtures (python make_fixtures.py)."""
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent


def write(name, coords, ewt="EUC_2D", comment="synthetic fixture", shuffle=False, colon=True, seed=0):
    sep = " : " if colon else " "
    lines = [f"NAME{sep}{name}", f"COMMENT{sep}{comment}", f"TYPE{sep}TSP",
             f"DIMENSION{sep}{len(coords)}", f"EDGE_WEIGHT_TYPE{sep}{ewt}", "NODE_COORD_SECTION"]
    idx = np.arange(len(coords))
    if shuffle:
        idx = np.random.default_rng(seed).permutation(idx)
    lines += [f"{i + 1} {coords[i][0]:.4f} {coords[i][1]:.4f}" for i in idx]
    lines.append("EOF")
    (HERE / f"{name}.tsp").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    rng = np.random.default_rng(400)
    write("rd400", np.round(rng.uniform(0, 1000, (400, 2)), 2), shuffle=True, seed=1)
    rng = np.random.default_rng(7146)
    lat = rng.uniform(22000.0, 31667.0, 7146)
    lon = rng.uniform(25000.0, 36000.0, 7146)
    write("eg7146", np.stack([lat, lon], 1), colon=False, comment="synthetic stand-in, 7146 locations")
    write("tri3", [(0, 0), (3, 0), (0, 4)])
    write("geo5", rng.uniform(-40, 40, (5, 2)), ewt="GEO")
