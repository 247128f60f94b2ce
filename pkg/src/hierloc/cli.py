"""Command-line experiment harness.

Subcommands: run (execute an experiment), preset (emit a preset config),
compare (paired-seed comparison of several algorithms), replay (re-run a
single trial from a manifest).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import HierlocError
from .experiments import (
    ExperimentConfig,
    compare,
    preset,
    replay_trial,
    run_experiment,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file (.json or .toml)")
    parser.add_argument("--preset", choices=("net1", "net2", "net3"), help="scenario preset")
    parser.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    parser.add_argument("--seed", type=int, help="base seed; trial i uses seed+i")
    parser.add_argument("--workers", type=int, help="concurrent trial workers")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--particles", type=int, dest="K", help="particles per belief (K)")
    parser.add_argument("--iterations", type=int, dest="T", help="message exchanges (T)")
    parser.add_argument("--sampling-multiplier", type=float, dest="h", help="fusion pool factor h")
    parser.add_argument(
        "--score-unassignable",
        choices=("exclude", "prior-mean"),
        help="how unlocalizable agents enter the error CDF",
    )
    parser.add_argument(
        "--no-figures",
        action="store_true",
        help="skip PNG rendering next to the CSV output",
    )


def _build_config(args, algorithm: str | None = None, threshold: int | None = None):
    overrides: dict = {}
    if args.preset:
        overrides["scenario"] = preset(args.preset).to_dict()
        overrides["preset_name"] = args.preset
    if algorithm is not None:
        overrides["algorithm"] = algorithm
        overrides["threshold_init"] = threshold
    for attr, name in [
        ("trials", "trials"),
        ("seed", "base_seed"),
        ("workers", "workers"),
        ("K", "K"),
        ("T", "T"),
        ("h", "h"),
        ("score_unassignable", "score_unassignable"),
    ]:
        value = getattr(args, attr, None)
        if value is not None:
            overrides[name] = value
    if args.no_figures:
        overrides["render_figures"] = False

    if args.config:
        base = ExperimentConfig.from_file(args.config).to_dict()
    elif "scenario" in overrides:
        base = {}
    else:
        raise HierlocError("provide --config or --preset")
    base.update(overrides)
    if algorithm is None and "algorithm" not in base:
        base["algorithm"] = "nbp"
    if base.get("algorithm") != "hierarchical":
        base.pop("threshold_init", None)
    return ExperimentConfig.from_dict(base)


def _parse_algorithm(spec: str) -> tuple[str, int | None]:
    """'hierarchical:2' -> ('hierarchical', 2); plain names pass through."""
    if ":" in spec:
        name, _, raw = spec.partition(":")
        return name, int(raw)
    return spec, None


def cmd_run(args) -> int:
    algorithm = threshold = None
    if args.algorithm:
        algorithm, threshold = _parse_algorithm(args.algorithm)
        if args.threshold_init is not None:
            threshold = args.threshold_init
    config = _build_config(args, algorithm, threshold)
    result = run_experiment(config, args.out)
    print(f"{config.label}: {config.trials} trials, pooled median error "
          f"{result.median_error():.3f} m, CDF(1m) {result.cdf.value_at(1.0):.3f}")
    if args.out:
        print(f"results written to {args.out}")
    return 0


def cmd_preset(args) -> int:
    config = ExperimentConfig(
        scenario=preset(args.network), preset_name=args.network, algorithm="hierarchical"
    )
    doc = json.dumps(config.to_dict(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc + "\n")
    else:
        print(doc)
    return 0


def cmd_compare(args) -> int:
    configs = []
    for spec in args.algorithms:
        algorithm, threshold = _parse_algorithm(spec)
        configs.append(_build_config(args, algorithm, threshold))
    rows = compare(configs, args.out)
    header = f"{'algorithm':<18}{'med err':>9}{'CDF(1m)':>9}{'time[s]':>9}{'msgs':>10}"
    print(header)
    for row in rows:
        print(
            f"{row.label:<18}{row.median_error:>9.3f}{row.cdf_100:>9.3f}"
            f"{row.median_runtime_s:>9.3f}{row.mean_messages:>10.0f}"
        )
    if args.out:
        print(f"comparison written to {args.out}")
    return 0


def cmd_replay(args) -> int:
    record, ok = replay_trial(args.manifest, args.trial)
    status = "reproduced" if ok else "MISMATCH"
    print(
        f"trial {record.trial} (seed {record.seed}): {status}; "
        f"{len(record.scored)} scored agents, {record.total_messages} messages"
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "trial": record.trial,
                    "seed": record.seed,
                    "scenario_hash": record.scenario_hash,
                    "reproduced": ok,
                    "errors": {str(k): v for k, v in record.errors.items()},
                },
                fh,
                indent=2,
            )
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierloc",
        description="Cooperative localization experiments: NBP and hierarchical NBP",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment")
    _add_common(p_run)
    p_run.add_argument(
        "--algorithm",
        help="nbp | nbp-bfs | nbp-min | hierarchical[:threshold]",
    )
    p_run.add_argument("--threshold-init", type=int, choices=(0, 1, 2, 3))
    p_run.set_defaults(func=cmd_run)

    p_preset = sub.add_parser("preset", help="emit a preset experiment config")
    p_preset.add_argument("network", choices=("net1", "net2", "net3"))
    p_preset.add_argument("--out", help="write JSON here instead of stdout")
    p_preset.set_defaults(func=cmd_preset)

    p_cmp = sub.add_parser("compare", help="paired-seed comparison of algorithms")
    _add_common(p_cmp)
    p_cmp.add_argument(
        "--algorithms",
        nargs="+",
        required=True,
        help="e.g. nbp nbp-bfs hierarchical:3",
    )
    p_cmp.set_defaults(func=cmd_compare)

    p_replay = sub.add_parser("replay", help="re-run one trial from a manifest")
    p_replay.add_argument("--manifest", required=True)
    p_replay.add_argument("--trial", type=int, required=True)
    p_replay.add_argument("--out", help="write the replayed record as JSON")
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HierlocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
