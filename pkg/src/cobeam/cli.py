"""Command line front end.

    cobeam run --preset fig_tx_sweep --drops 50 --out results.csv
    cobeam validate --out report.json
    cobeam oracle --which scalar

Exit codes: 0 success, 1 a run or check failed (too many solver failures,
or a validation criterion did not pass), 2 bad usage or config.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import acceptance, harness, oracles
from .impairments import ImpairmentModel
from .scenario import make_manual_scenario

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cobeam",
        description="Coordinated multicell beamforming under transceiver impairments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte-Carlo experiment")
    run_p.add_argument("--config", help="TOML config file")
    run_p.add_argument(
        "--preset",
        choices=sorted(harness.PRESETS),
        help="named experiment preset (ignored when --config is given)",
    )
    run_p.add_argument("--drops", type=int, help="number of random user drops")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel drop workers")
    run_p.add_argument("--out", required=True, help="CSV output path")
    run_p.add_argument("--summary-json", help="also write aggregate summary here")
    run_p.add_argument("--quiet", action="store_true", help="suppress progress output")

    val_p = sub.add_parser("validate", help="run the acceptance checks")
    val_p.add_argument(
        "--tolerance-scale",
        type=float,
        default=1.0,
        help="multiply all tolerances (diagnostics only; 1.0 is the contract)",
    )
    val_p.add_argument("--criteria", nargs="*", help="subset of criterion ids")
    val_p.add_argument("--out", help="write a JSON report here")

    ora_p = sub.add_parser("oracle", help="print reference values")
    ora_p.add_argument("--which", choices=("scalar", "grid", "socp"), default="scalar")
    ora_p.add_argument("--out", help="write JSON here instead of stdout")
    return parser


def _cmd_run(args) -> int:
    if args.config:
        cfg = harness.load_config(args.config)
        overrides = {}
        if args.drops is not None:
            overrides["drops"] = args.drops
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
    else:
        cfg = harness.preset_config(
            args.preset or "custom", drops=args.drops, seed=args.seed
        )
    progress = None
    if not args.quiet:

        def progress(done, total):
            print(f"drop {done}/{total}", file=sys.stderr)

    result = harness.run_experiment(cfg, jobs=max(1, args.jobs), progress=progress)
    harness.write_csv(result.records, args.out)
    if args.summary_json:
        harness.write_summary(result, args.summary_json)
    if not args.quiet:
        print(
            f"wrote {len(result.records)} records to {args.out} "
            f"(failure fraction {result.failure_fraction:.3f})",
            file=sys.stderr,
        )
    if result.failure_fraction > 0.2:
        print("error: more than 20% of solves failed", file=sys.stderr)
        return 1
    return 0


def _cmd_validate(args) -> int:
    if args.tolerance_scale <= 0:
        print("error: --tolerance-scale must be positive", file=sys.stderr)
        return 2
    results = acceptance.run_all(
        ids=args.criteria or None,
        tolerance_scale=args.tolerance_scale,
        stream=sys.stdout,
    )
    if args.out:
        payload = [
            {
                "id": r.criterion_id,
                "passed": r.passed,
                "detail": r.detail,
                "values": r.values,
            }
            for r in results
        ]
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0 if all(r.passed for r in results) else 1


def _cmd_oracle(args) -> int:
    if args.which == "scalar":
        feasible, p, beta = oracles.scalar_qos(
            gain=1.0, sigma2=1.0, q=100.0, kappa1=5.0, kappa3=5.0, delta=1.0, target=1.0
        )
        payload = {
            "scalar_qos": {"feasible": feasible, "p_star": p, "beta_star": beta},
            "scalar_fpo": oracles.scalar_fpo(
                gain=1.0, sigma2=1.0, q=100.0, kappa1=5.0, kappa3=5.0, delta=1.0
            ),
        }
    elif args.which == "grid":
        channels = np.zeros((2, 2, 1, 1), dtype=complex)
        channels[0, 0, 0, 0] = 1.0
        channels[1, 1, 0, 0] = 0.9
        channels[0, 1, 0, 0] = 0.3
        channels[1, 0, 0, 0] = 0.2
        sc = make_manual_scenario(channels, 1.0, [[(1.0, 50.0)], [(1.0, 50.0)]])
        model = ImpairmentModel(kappa1=5.0, kappa3=5.0)
        payload = {"grid_fpo": oracles.grid_fpo(sc, model, n_grid=400)}
    else:
        suite = oracles.socp_suite(count=5)
        payload = {
            "socp": [oracles.brute_force_socp(inst, n_angles=5000) for inst in suite]
        }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_oracle(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
