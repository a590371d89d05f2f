"""Named scenario presets, run orchestration, and deterministic file output.

Two dynamic scenarios ship as presets:

* ``fig3``: strong blue-detuned drive; means and covariance are integrated
  jointly and the bound ordering is checked pointwise along the run.
* ``fig4``: undriven mixture of coherent branches; each branch evolves in
  the single-leaking-mode frame with the derived effective decay rates and
  is rotated back before the mixture moments are assembled.  The lock onto
  the anti-phase configuration and the slow amplitude decay both emerge from
  that evolution.

``picture`` runs the asymptotic rotated-frame pipeline at a single time and
``fuzz`` drives the randomized inequality checks.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from itertools import product
from pathlib import Path

import numpy as np

from . import criteria, picture
from .dynamics import simulate
from .oracle import RandomCmSpec, fuzz_suite
from .state import MeanState, SystemParams, mech_submatrix, vacuum_cm, validate_cm

__all__ = [
    "ScenarioConfig",
    "preset",
    "parse_config_file",
    "apply_overrides",
    "run_scenario",
    "run_sweep",
    "TIMESERIES_COLUMNS",
]

PRESETS = ("fig3", "fig4", "picture", "fuzz")

TIMESERIES_COLUMNS = (
    "t",
    "q1",
    "p1",
    "q2",
    "p2",
    "x",
    "y",
    "n1",
    "n2",
    "phi1",
    "phi2",
    "phi_minus_unwrapped",
    "var_minus",
    "l_nec",
    "l_nec_argmax",
    "u_suf",
    "log_neg",
    "gated",
    "verdict",
)

SWEEP_COLUMNS = (
    "cell",
    "status",
    "locked",
    "locked_value",
    "lock_slope",
    "var_minus",
    "l_nec",
    "u_suf",
    "log_neg",
    "sandwich_violations",
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully-resolved description of one scenario run."""

    scenario: str
    params: SystemParams = field(default_factory=SystemParams)
    t_end: float = 100.0
    sample_dt: float = 1.0
    epsilon: float = 1e-3  # sync precision threshold, rad^2 (not a paper value)
    n_min: float = 1e-2
    rtol: float = 1e-8
    atol: float = 1e-10
    window: float = 50.0
    slope_tol: float = 1e-4
    theta: float = np.pi / 4
    alpha_re: float = 500.0 * np.sqrt(2.0)
    alpha_im: float = 500.0 * np.sqrt(2.0)
    picture_t: float = 0.0
    seed: int = 12345
    trials: int = 100_000
    squeeze_max: float = 2.0
    layers: int = 3
    mode_count: int = 2
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.sample_dt <= 0:
            raise ValueError("sample_dt must be positive")

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    def echo(self) -> dict:
        out = {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name not in ("params", "sweep")
        }
        out["params"] = self.params.to_mapping()
        out["sweep"] = {k: list(v) for k, v in self.sweep.items()}
        return out


def preset(name: str) -> ScenarioConfig:
    """Fully-populated configuration for a named scenario."""
    if name == "fig3":
        return ScenarioConfig(
            scenario="fig3",
            params=SystemParams(
                omega1=1.0,
                omega2=0.999,
                gamma1=5e-6,
                gamma2=5e-6,
                g1=1e-5 / np.sqrt(2.0),
                g2=1e-5 / np.sqrt(2.0),
                kappa=0.05,
                delta=1.0,
                eta=3600.0,
            ),
            t_end=1.0e4,
            sample_dt=1.0,
            window=2000.0,
        )
    if name == "fig4":
        return ScenarioConfig(
            scenario="fig4",
            params=SystemParams(
                omega1=1.0,
                omega2=0.999,
                gamma1=0.0,
                gamma2=0.0,
                g1=0.02 / np.sqrt(2.0),
                g2=0.02 / np.sqrt(2.0),
                kappa=1.0,
                delta=0.0,
                eta=0.0,
            ),
            t_end=6.0e4,
            sample_dt=1.0,
            window=5000.0,
        )
    if name == "picture":
        cfg = preset("fig4")
        return replace(cfg, scenario="picture")
    if name == "fuzz":
        return ScenarioConfig(scenario="fuzz")
    raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")


# --- configuration files and overrides --------------------------------------


def parse_config_file(path) -> dict[str, str]:
    """Read a flat ``key = value`` file; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


_PARAM_KEYS = {f.name for f in fields(SystemParams)}
_INT_KEYS = {"seed", "trials", "layers", "mode_count"}
_FLOAT_KEYS = {
    "t_end",
    "sample_dt",
    "epsilon",
    "n_min",
    "rtol",
    "atol",
    "window",
    "slope_tol",
    "theta",
    "alpha_re",
    "alpha_im",
    "picture_t",
    "squeeze_max",
}


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, str]) -> ScenarioConfig:
    """Apply flat key-value overrides; physical rates go into params.

    Sweep axes are written as ``sweep_<param> = v1,v2,...`` and must
    reference existing parameter or scalar config names.
    """
    params = cfg.params
    updates: dict = {}
    sweep = dict(cfg.sweep)
    for key, value in overrides.items():
        if key == "scenario":
            updates["scenario"] = str(value)
        elif key in _PARAM_KEYS:
            params = params.replace(**{key: float(value)})
        elif key in _INT_KEYS:
            updates[key] = int(value)
        elif key in _FLOAT_KEYS:
            updates[key] = float(value)
        elif key.startswith("sweep_"):
            axis = key[len("sweep_") :]
            if axis not in _PARAM_KEYS and axis not in _FLOAT_KEYS:
                raise ValueError(f"sweep axis {axis!r} is not a known parameter")
            sweep[axis] = [float(v) for v in str(value).split(",") if v.strip()]
        else:
            raise ValueError(f"unknown configuration key {key!r}")
    return replace(cfg, params=params, sweep=sweep, **updates)


# --- formatting --------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


# --- row assembly ------------------------------------------------------------


def _sandwich_violation(rep: criteria.SyncReport, slack: float = 1e-12) -> bool:
    if rep.gated:
        return False
    return (rep.var_minus < rep.l_nec - slack) or (rep.var_minus > rep.u_suf + slack)


def _rows_from_moments(ts, means6, mech_cms, cfg: ScenarioConfig):
    """Per-sample synchronization rows from mean vectors and mechanical CMs."""
    rows = []
    reports = []
    phi_raw = np.full(len(ts), np.nan)
    for i, t in enumerate(ts):
        rep = criteria.report(mech_cms[i], means6[i], float(t), cfg.epsilon, cfg.n_min)
        reports.append(rep)
        if not rep.gated:
            phi_raw[i] = rep.phi_minus_classical
    phi_unwrapped = criteria.unwrap_phase_series(phi_raw)
    violations = 0
    for i, t in enumerate(ts):
        rep = reports[i]
        if _sandwich_violation(rep):
            violations += 1
        q1, p1, q2, p2, x, y = means6[i]
        rows.append(
            {
                "t": float(t),
                "q1": q1,
                "p1": p1,
                "q2": q2,
                "p2": p2,
                "x": x,
                "y": y,
                "n1": rep.frame.n1,
                "n2": rep.frame.n2,
                "phi1": rep.frame.phi1,
                "phi2": rep.frame.phi2,
                "phi_minus_unwrapped": phi_unwrapped[i],
                "var_minus": rep.var_minus,
                "l_nec": rep.l_nec,
                "l_nec_argmax": rep.l_nec_argmax,
                "u_suf": rep.u_suf,
                "log_neg": picture.gaussian_log_negativity(mech_cms[i]),
                "gated": rep.gated,
                "verdict": rep.verdict,
            }
        )
    return rows, phi_unwrapped, violations


def _final_window_stats(rows, ts, phi_unwrapped, cfg: ScenarioConfig) -> dict:
    gated = np.array([r["gated"] for r in rows], dtype=bool)
    try:
        lock = criteria.lock_from_series(
            ts, phi_unwrapped, cfg.window, cfg.slope_tol, gated=gated
        )
        lock_info = {
            "locked": lock.locked,
            "locked_value": lock.value,
            "lock_slope": lock.slope,
            "samples_used": lock.n_used,
        }
    except criteria.InsufficientDataError as exc:
        lock_info = {"locked": None, "error": str(exc)}
    sel = (np.asarray(ts) >= ts[-1] - cfg.window) & ~gated
    stats = {}
    for key in ("var_minus", "l_nec", "u_suf", "log_neg", "n1", "n2"):
        vals = np.array([r[key] for r in rows], dtype=float)[sel]
        stats[f"mean_{key}"] = float(np.mean(vals)) if len(vals) else np.nan
    return {"lock": lock_info, "window": cfg.window, **stats}


# --- scenario runners --------------------------------------------------------


def _run_fig3_like(cfg: ScenarioConfig) -> dict:
    traj = simulate(
        cfg.params,
        MeanState.zero(),
        vacuum_cm(),
        cfg.t_end,
        cfg.sample_dt,
        rtol=cfg.rtol,
        atol=cfg.atol,
    )
    mech_cms = [mech_submatrix(v) for v in traj.covs]
    rows, phi_unwrapped, violations = _rows_from_moments(traj.ts, traj.means, mech_cms, cfg)
    cm_ok = all(validate_cm(v).is_physical for v in traj.covs)
    summary = {
        "scenario": cfg.scenario,
        "sandwich_violations": violations,
        "covariances_physical": cm_ok,
        "gated_samples": int(sum(r["gated"] for r in rows)),
        "final_window": _final_window_stats(rows, traj.ts, phi_unwrapped, cfg),
        "config": cfg.echo(),
        "ok": violations == 0 and cm_ok,
    }
    return {"rows": rows, "summary": summary}


def _fig4_moments(cfg: ScenarioConfig):
    """Closed-form mixture moments of the undriven branch evolution."""
    rates = picture.single_leaking_rates(cfg.params)
    mix0 = picture.two_branch_mixture(cfg.theta, cfg.alpha)
    rotated0 = picture.beam_splitter(mix0, rates.picture.r, "to_single_leaking")
    n_samples = int(np.floor(cfg.t_end / cfg.sample_dt + 1e-9))
    ts = np.arange(n_samples + 1) * cfg.sample_dt
    means6 = np.zeros((len(ts), 6))
    mech_cms = []
    for i, t in enumerate(ts):
        evolved = picture.evolve_leaking(rotated0, rates, float(t))
        mix_t = picture.beam_splitter(evolved, rates.picture.r, "to_schrodinger")
        b1, b2 = picture.mixture_means(mix_t)
        means6[i, :4] = np.sqrt(2.0) * np.array([b1.real, b1.imag, b2.real, b2.imag])
        mech_cms.append(picture.mixture_second_moments(mix_t))
    return ts, means6, mech_cms, rates


def _run_fig4(cfg: ScenarioConfig) -> dict:
    ts, means6, mech_cms, rates = _fig4_moments(cfg)
    rows, phi_unwrapped, violations = _rows_from_moments(ts, means6, mech_cms, cfg)
    summary = {
        "scenario": cfg.scenario,
        "sandwich_violations": violations,
        "gated_samples": int(sum(r["gated"] for r in rows)),
        "effective_rates": {
            "rotation_angle": rates.picture.r,
            "omega1_t": rates.picture.omega1_t,
            "omega2_t": rates.picture.omega2_t,
            "g2_t": rates.picture.g2_t,
            "residual_coupling": rates.residual_coupling,
            "decay_fast": rates.decay_fast,
            "decay_slow": rates.decay_slow,
        },
        "final_window": _final_window_stats(rows, ts, phi_unwrapped, cfg),
        "config": cfg.echo(),
        "ok": violations == 0,
    }
    return {"rows": rows, "summary": summary}


def _run_picture(cfg: ScenarioConfig) -> dict:
    """Asymptotic rotated-frame pipeline at a single evolution time."""
    p = cfg.params
    r = picture.rotation_angle(p.g1, p.g2)
    pp = picture.transformed_params(p, r)
    validity = picture.validity_margins(p, r)
    mix0 = picture.two_branch_mixture(cfg.theta, cfg.alpha)
    rotated = picture.beam_splitter(mix0, r, "to_single_leaking")
    decayed = picture.decay_mode2(rotated)
    evolved = picture.evolve_free(decayed, pp.omega1_t, cfg.picture_t)
    final = picture.beam_splitter(evolved, r, "to_schrodinger")
    b1, b2 = picture.mixture_means(final)
    bound = picture.sufficient_bound_on_mixture(final)
    separable = picture.separability_witness(final)
    log_neg = picture.gaussian_log_negativity(picture.mixture_second_moments(final))

    def branch_table(mix):
        return [
            {
                "weight": b.weight,
                "alpha1": [b.alpha1.real, b.alpha1.imag],
                "alpha2": [b.alpha2.real, b.alpha2.imag],
            }
            for b in mix.branches
        ]

    summary = {
        "scenario": "picture",
        "theta": cfg.theta,
        "alpha": [cfg.alpha.real, cfg.alpha.imag],
        "t": cfg.picture_t,
        "rotation_angle": r,
        "transformed": {"omega1_t": pp.omega1_t, "omega2_t": pp.omega2_t, "g2_t": pp.g2_t},
        "validity": {
            "detuning_vs_coupling": validity.detuning_vs_coupling,
            "residual_vs_kappa": validity.residual_vs_kappa,
            "coupling_vs_frequency": validity.coupling_vs_frequency,
            "threshold": validity.threshold,
            "all_satisfied": validity.all_satisfied,
        },
        "branches": {
            "initial": branch_table(mix0),
            "single_leaking": branch_table(rotated),
            "final": branch_table(final),
        },
        "means": {
            "b1": [b1.real, b1.imag],
            "b2": [b2.real, b2.imag],
            "abs_b1": abs(b1),
            "abs_b2": abs(b2),
            "phase_difference": criteria.wrap_angle(np.angle(b1) - np.angle(b2)),
        },
        "sufficient_bound": bound,
        "separable": separable,
        "log_neg": log_neg,
        "epsilon": cfg.epsilon,
        "synchronized": bool(bound <= cfg.epsilon),
        "config": cfg.echo(),
        "ok": True,
    }
    return {"summary": summary}


def _run_fuzz(cfg: ScenarioConfig) -> dict:
    spec = RandomCmSpec(
        seed=cfg.seed,
        mode_count=cfg.mode_count,
        squeeze_max=cfg.squeeze_max,
        correlation_mixing=cfg.layers,
    )
    summary = fuzz_suite(spec, cfg.trials).to_dict()
    ok = sum(summary["violations"].values()) == 0
    summary.update({"scenario": "fuzz", "config": cfg.echo(), "ok": ok})
    return {"summary": summary}


def run_scenario(cfg: ScenarioConfig, outdir=None) -> dict:
    """Execute one scenario; write output files when ``outdir`` is given.

    The returned dict carries the summary (and rows for dynamic scenarios);
    ``summary["ok"]`` is False whenever an internal invariant failed.
    """
    if cfg.scenario in ("fig3", "custom"):
        result = _run_fig3_like(cfg)
    elif cfg.scenario == "fig4":
        result = _run_fig4(cfg)
    elif cfg.scenario == "picture":
        result = _run_picture(cfg)
    elif cfg.scenario == "fuzz":
        result = _run_fuzz(cfg)
    else:
        raise ValueError(
            f"unknown scenario {cfg.scenario!r}; valid: {', '.join(PRESETS)} or custom"
        )
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        if "rows" in result:
            _write_csv(out / "timeseries.csv", TIMESERIES_COLUMNS, result["rows"])
        _write_json(out / "summary.json", result["summary"])
    return result


# --- parameter sweeps ---------------------------------------------------------


def _sweep_cell(args):
    index, cfg, axis_names, values = args
    cell = {"cell": index, **{k: v for k, v in zip(axis_names, values)}}
    try:
        overrides = {k: str(v) for k, v in zip(axis_names, values)}
        cell_cfg = apply_overrides(replace(cfg, sweep={}), overrides)
        result = run_scenario(cell_cfg, outdir=None)
        summary = result["summary"]
        fw = summary.get("final_window", {})
        lock = fw.get("lock", {})
        cell.update(
            {
                "status": "ok" if summary.get("ok") else "invariant-failure",
                "locked": lock.get("locked"),
                "locked_value": lock.get("locked_value", np.nan),
                "lock_slope": lock.get("lock_slope", np.nan),
                "var_minus": fw.get("mean_var_minus", np.nan),
                "l_nec": fw.get("mean_l_nec", np.nan),
                "u_suf": fw.get("mean_u_suf", np.nan),
                "log_neg": fw.get("mean_log_neg", np.nan),
                "sandwich_violations": summary.get("sandwich_violations", 0),
            }
        )
    except Exception as exc:  # cell failures are recorded, the sweep continues
        cell.update(
            {
                "status": f"error: {exc}",
                "locked": None,
                "locked_value": np.nan,
                "lock_slope": np.nan,
                "var_minus": np.nan,
                "l_nec": np.nan,
                "u_suf": np.nan,
                "log_neg": np.nan,
                "sandwich_violations": -1,
            }
        )
    return index, cell


def run_sweep(cfg: ScenarioConfig, outdir=None, max_workers: int | None = None) -> list[dict]:
    """Cartesian-product sweep; one row per cell, ordered by cell index."""
    if not cfg.sweep:
        raise ValueError("sweep requires at least one axis (sweep_<param> = v1,v2,...)")
    axis_names = list(cfg.sweep.keys())
    grids = [cfg.sweep[name] for name in axis_names]
    cells = list(product(*grids))
    jobs = [(i, cfg, axis_names, vals) for i, vals in enumerate(cells)]
    workers = max_workers or min(len(cells), os.cpu_count() or 1)
    results: dict[int, dict] = {}
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, cell in pool.map(_sweep_cell, jobs):
                results[index] = cell
    else:
        for job in jobs:
            index, cell = _sweep_cell(job)
            results[index] = cell
    rows = [results[i] for i in range(len(cells))]
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        columns = ("cell", *axis_names, *SWEEP_COLUMNS[1:])
        _write_csv(out / "sweep.csv", columns, rows)
        _write_json(
            out / "sweep_summary.json",
            {
                "cells": len(rows),
                "axes": {k: list(v) for k, v in cfg.sweep.items()},
                "failures": sum(1 for r in rows if r["status"] != "ok"),
                "config": cfg.echo(),
            },
        )
    return rows
