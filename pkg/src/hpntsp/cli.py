"""Command-line harness: generate, train, evaluate, render."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .checkpoint import CheckpointError
from .heuristics import two_opt
from .model import greedy_tours
from .render import render_tour_svg
from .train import REGIMES, ConfigError, TrainConfig, TrainState, append_metrics, load_model, regime, train
from .tsp import Tour, generate_uniform, read_batch, write_batch
from .tsplib import denormalize_length, normalize, read_tsplib

log = logging.getLogger("hpntsp")


def load_config(spec: str) -> TrainConfig:
    """A regime name ("small", "large", "smoke") or a JSON file; a file may name a base regime."""
    if spec in REGIMES:
        return regime(spec)
    path = Path(spec)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    base = raw.pop("regime", None)
    if base is not None:
        merged = {**REGIMES[base], **raw} if base in REGIMES else None
        if merged is None:
            raise ConfigError(f"regime: unknown {base!r}")
        if "model" in raw:
            merged["model"] = {**REGIMES[base].get("model", {}), **raw["model"]}
        raw = merged
    return TrainConfig.from_dict(raw)


def _load_instances(args):
    """Returns (instances, normalized TSPLIB instance or None)."""
    if args.tsplib:
        norm = normalize(read_tsplib(args.tsplib))
        return [norm.instance], norm
    if args.dataset:
        return read_batch(args.dataset)[1], None
    return generate_uniform(args.n, args.count, args.seed), None


def cmd_generate(args) -> None:
    insts = generate_uniform(args.n, args.count, args.seed) if args.count else []
    write_batch(args.out, insts, n=args.n)
    print(f"wrote {len(insts)} instances of n={args.n} to {args.out}")


def cmd_train(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.checkpoint:
        state = TrainState.load(args.checkpoint)
        if args.config:
            cfg = load_config(args.config)
            if cfg.model != state.cfg.model:
                raise ConfigError("model: checkpoint was trained with a different model config")
            state.cfg = cfg
    else:
        cfg = load_config(args.config or "smoke")
        if args.seed is not None:
            cfg.seed = args.seed
        state = TrainState.fresh(cfg)
    if args.epochs is not None:
        state.cfg.epochs = args.epochs
    state.cfg.validate()
    (out / "config.json").write_text(json.dumps(state.cfg.to_dict(), indent=2) + "\n")

    def on_epoch(st: TrainState, m) -> None:
        append_metrics(out / "metrics.csv", m)
        st.save(out / f"checkpoint_epoch{m.epoch}.npz")
        st.save(out / "checkpoint.npz")
        print(f"epoch {m.epoch}: sampled {m.mean_sampled_len:.4f} greedy {m.mean_greedy_len:.4f} "
              f"p={m.p_value:.3g} refreshed={m.baseline_refreshed}", flush=True)

    train(state=state, on_epoch=on_epoch)


def cmd_evaluate(args) -> None:
    methods = bench.parse_methods(args.methods, args.two_opt)
    needs_model = any(m.split("+")[0] in bench.NEURAL for m in methods)
    if needs_model and not args.checkpoint:
        raise ValueError("neural methods need --checkpoint")
    model = load_model(args.checkpoint) if needs_model else None
    instances, norm = _load_instances(args)
    results = bench.evaluate(instances, methods, model, seed=args.seed, workers=args.workers)
    report = bench.write_report(args.out, results, scale=norm.scale if norm else None)
    print(report.table())
    if norm is not None:
        print(f"(lengths normalized by scale {norm.scale:g}; denormalized values are planar Euclidean)")
    print(f"per-instance results: {Path(args.out) / 'results.csv'}")


def cmd_render(args) -> None:
    instances, norm = _load_instances(args)
    if not 0 <= args.index < len(instances):
        raise ValueError(f"--index {args.index} out of range for {len(instances)} instances")
    inst = instances[args.index]
    method = bench.parse_methods(args.methods, args.two_opt)[0]
    if method.split("+")[0] in bench.NEURAL:
        if not args.checkpoint:
            raise ValueError("neural methods need --checkpoint")
        tour = Tour.of(inst, greedy_tours(load_model(args.checkpoint), inst.coords[None])[0])
        if method.endswith("+2opt"):
            tour = two_opt(inst, tour)
    else:
        tour = bench.solve_heuristic(method, inst, args.index, args.seed)
    title = f"{method}  length {tour.length:.4f}"
    if norm is not None:
        title += f" ({denormalize_length(norm, tour.length):.1f} denormalized)"
    render_tour_svg(inst, tour.order, args.out, title)
    print(f"wrote {args.out}: {title}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hpntsp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a uniform instance batch file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train with REINFORCE and a rollout baseline")
    t.add_argument("--config", help=f"regime name ({', '.join(REGIMES)}) or JSON file")
    t.add_argument("--checkpoint", help="resume from this training checkpoint")
    t.add_argument("--seed", type=int, help="override the config seed (fresh runs only)")
    t.add_argument("--epochs", type=int, help="override the number of epochs")
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(func=cmd_train)

    for name, helptext in (("evaluate", "benchmark methods and write a report"),
                           ("render", "draw one tour as SVG")):
        e = sub.add_parser(name, help=helptext)
        src = e.add_mutually_exclusive_group()
        src.add_argument("--dataset", help="instance batch file")
        src.add_argument("--tsplib", help="TSPLIB .tsp file")
        e.add_argument("--n", type=int, default=50, help="size of generated instances (no input file)")
        e.add_argument("--count", type=int, default=1000)
        e.add_argument("--seed", type=int, default=0)
        e.add_argument("--methods", default="nearest_neighbor",
                       help=f"comma list from {', '.join(bench.METHODS)}, optional +2opt suffix")
        e.add_argument("--two-opt", action="store_true", help="refine every tour with 2-opt")
        e.add_argument("--checkpoint")
        e.add_argument("--out", required=True)
        if name == "evaluate":
            e.add_argument("--workers", type=int, default=1)
            e.set_defaults(func=cmd_evaluate)
        else:
            e.add_argument("--index", type=int, default=0)
            e.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, KeyError, OSError, CheckpointError) as exc:
        print(f"hpntsp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
