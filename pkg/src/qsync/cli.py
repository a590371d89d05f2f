"""Command-line entry point: ``qsync run|sweep|picture|fuzz``.

Scenario parameters come from a named preset or a flat key-value config
file, optionally overridden with repeated ``--set key value`` pairs.  The
output directory defaults to ``./qsync_out/<scenario>`` and can be overridden
with ``--outdir`` or the ``QSYNC_OUTDIR`` environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .dynamics import SimulationError
from .scenarios import (
    PRESETS,
    apply_overrides,
    parse_config_file,
    preset,
    run_scenario,
    run_sweep,
)

__all__ = ["main"]


def _load_config(source: str, scenario_default: str | None = None):
    """Resolve a preset name or a config-file path into a ScenarioConfig."""
    if source in PRESETS:
        return preset(source)
    path = Path(source)
    if not path.exists():
        raise ValueError(
            f"{source!r} is neither a preset ({', '.join(PRESETS)}) nor a config file"
        )
    mapping = parse_config_file(path)
    name = mapping.pop("scenario", scenario_default or "custom")
    base = preset(name) if name in PRESETS else apply_overrides(preset("fig3"), {"scenario": name})
    return apply_overrides(base, mapping)


def _outdir(args, cfg) -> Path:
    if args.outdir:
        return Path(args.outdir)
    env = os.environ.get("QSYNC_OUTDIR")
    if env:
        return Path(env) / cfg.scenario
    return Path("qsync_out") / cfg.scenario


def _collect_overrides(pairs) -> dict[str, str]:
    return {key: value for key, value in pairs or []}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qsync",
        description="Quantum phase synchronization simulator and criteria toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument(
            "--set",
            dest="overrides",
            nargs=2,
            action="append",
            metavar=("KEY", "VALUE"),
            help="override a config key (repeatable)",
        )
        p.add_argument("--outdir", help="output directory")

    p_run = sub.add_parser("run", help="run a scenario preset or config file")
    p_run.add_argument("source", help=f"preset name ({', '.join(PRESETS)}) or config path")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep from a config file")
    p_sweep.add_argument("source", help="config path (or preset) with sweep_<param> axes")
    p_sweep.add_argument("--workers", type=int, default=None, help="worker pool size")
    add_common(p_sweep)

    p_pic = sub.add_parser("picture", help="run the rotated-frame analytic pipeline")
    p_pic.add_argument("--theta", type=float, default=None)
    p_pic.add_argument("--alpha-re", type=float, default=None)
    p_pic.add_argument("--alpha-im", type=float, default=None)
    p_pic.add_argument("--t", type=float, default=None, help="free evolution time")
    add_common(p_pic)

    p_fuzz = sub.add_parser("fuzz", help="randomized checks of the uncertainty bounds")
    p_fuzz.add_argument("--trials", type=int, default=None)
    p_fuzz.add_argument("--seed", type=int, default=None)
    add_common(p_fuzz)

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            cfg = _load_config(args.source)
            cfg = apply_overrides(cfg, _collect_overrides(args.overrides))
            result = run_scenario(cfg, outdir=_outdir(args, cfg))
        elif args.command == "sweep":
            cfg = _load_config(args.source)
            cfg = apply_overrides(cfg, _collect_overrides(args.overrides))
            rows = run_sweep(cfg, outdir=_outdir(args, cfg), max_workers=args.workers)
            failures = sum(1 for r in rows if r["status"] != "ok")
            print(f"sweep: {len(rows)} cells, {failures} failures")
            return 0 if failures == 0 else 1
        elif args.command == "picture":
            cfg = preset("picture")
            direct = {
                "theta": args.theta,
                "alpha_re": args.alpha_re,
                "alpha_im": args.alpha_im,
                "picture_t": args.t,
            }
            overrides = {k: str(v) for k, v in direct.items() if v is not None}
            overrides.update(_collect_overrides(args.overrides))
            cfg = apply_overrides(cfg, overrides)
            result = run_scenario(cfg, outdir=_outdir(args, cfg))
        else:  # fuzz
            cfg = preset("fuzz")
            direct = {"trials": args.trials, "seed": args.seed}
            overrides = {k: str(v) for k, v in direct.items() if v is not None}
            overrides.update(_collect_overrides(args.overrides))
            cfg = apply_overrides(cfg, overrides)
            result = run_scenario(cfg, outdir=_outdir(args, cfg))
    except SimulationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    summary = result["summary"]
    ok = bool(summary.get("ok"))
    if args.command == "run" and cfg.scenario in ("fig3", "fig4", "custom"):
        lock = summary["final_window"]["lock"]
        print(
            f"{cfg.scenario}: sandwich violations {summary['sandwich_violations']}, "
            f"gated {summary['gated_samples']}, locked {lock.get('locked')}"
        )
    elif args.command == "picture":
        print(
            f"picture: |<b1>| = {summary['means']['abs_b1']:.6g}, "
            f"phase difference = {summary['means']['phase_difference']:.6g}, "
            f"sufficient bound = {summary['sufficient_bound']:.6g}"
        )
    elif args.command == "fuzz":
        viol = summary["violations"]
        print(
            f"fuzz: {summary['trials']} trials, "
            f"violations {sum(viol.values())} {viol}"
        )
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
