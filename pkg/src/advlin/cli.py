"""Command line entry point: ``advlin {train,tune,game,bounds,data}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import metrics
from .data import dataset_to_csv
from .erm_game import GameParams, run_erm_game
from .harness import ConfigError, ExperimentConfig, build_dataset, emit_bound_table, run_experiment, tune_step_size


def _load_config(args, **overrides) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.seed is not None:
        raw["seed"] = args.seed
    return ExperimentConfig.from_dict(raw)


def cmd_train(args):
    cfg = _load_config(args)
    summary = run_experiment(cfg)
    print(f"wrote {cfg.output_dir} (gamma={summary['gamma']:.6g})")


def cmd_tune(args):
    cfg = _load_config(args)
    S, _ = build_dataset(cfg)
    alphas = args.alpha if args.alpha else cfg.alphas
    result = {}
    for a in alphas:
        r = tune_step_size(cfg, a, S)
        result[f"{a:g}"] = {"chosen": r.chosen, "grid": [[e, s if s != float("inf") else None] for e, s in r.grid]}
        print(f"alpha={a:g} eta={r.chosen:g}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tuning.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_game(args):
    params = GameParams(args.d, args.gamma, args.alpha, args.eps)
    state = run_erm_game(params, args.T, seed=args.seed or 0)
    summary = state.summary()
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "game.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if not state.admissible:
        raise RuntimeError(state.failure or "game not admissible")


def cmd_bounds(args):
    inputs = metrics.BoundInputs(args.n, args.d, args.gamma, args.alpha, args.eta,
                                 delta_conf=args.delta, q=args.q, c=args.c)
    path = None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        path = Path(args.out) / "bounds.csv"
    sys.stdout.write(emit_bound_table(inputs, args.t, path))


def cmd_data(args):
    cfg = _load_config(args)
    S, scale = build_dataset(cfg)
    path = None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        path = Path(args.out) / "dataset.csv"
    text = dataset_to_csv(S, path)
    if path is None:
        sys.stdout.write(text)
    gamma = metrics.max_margin(S).gamma
    print(f"n={S.n} d={S.d} max_norm={S.max_norm:.6g} gamma={gamma:.6g} scale={scale:.6g}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="advlin", description=__doc__)
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("train", help="run an experiment sweep").set_defaults(func=cmd_train)

    t = sub.add_parser("tune", help="grid-search the step size per alpha")
    t.add_argument("--alpha", type=float, action="append")
    t.set_defaults(func=cmd_tune)

    g = sub.add_parser("game", help="play the worst-case ERM game")
    g.add_argument("--d", type=int, default=50)
    g.add_argument("--gamma", type=float, default=0.5)
    g.add_argument("--alpha", type=float, default=0.4)
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--T", type=int, default=100)
    g.set_defaults(func=cmd_game)

    b = sub.add_parser("bounds", help="tabulate convergence bounds")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--d", type=int, default=2)
    b.add_argument("--gamma", type=float, required=True)
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--eta", type=float, required=True)
    b.add_argument("--delta", type=float, default=0.1)
    b.add_argument("--q", type=float, default=2.0)
    b.add_argument("--c", type=float, default=1.0)
    b.add_argument("--t", type=int, nargs="*", default=[2, 10, 100, 1000, 10000])
    b.set_defaults(func=cmd_bounds)

    sub.add_parser("data", help="export the configured dataset as CSV").set_defaults(func=cmd_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"advlin: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
