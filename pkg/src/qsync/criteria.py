"""Phase-frame extraction and the locally-measurable synchronization bounds.

The linearized phase fluctuation of mode j is the quadrature combination

    dphi_j = (-sin(phi_j) dq_j + cos(phi_j) dp_j) / sqrt(2 n_j)

so the variance of the phase difference, the per-mode phase variances, and
the uncertainty-relation bounds are all quadratic forms on the mechanical
covariance block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .state import MeanState, PhaseFrame, mech_submatrix, symmetrize

__all__ = [
    "PhaseUndefinedError",
    "SingularBoundError",
    "InsufficientDataError",
    "SyncReport",
    "LockResult",
    "OBSERVABLE_LABELS",
    "phase_frame",
    "phase_coefficients",
    "phase_diff_variance",
    "necessary_bound",
    "sufficient_bound",
    "unwrap_phase_series",
    "classical_lock",
    "lock_from_series",
    "report",
    "wrap_angle",
]

OBSERVABLE_LABELS = ("q1", "p1", "q2", "p2")

VERDICT_SYNC = "synchronized"
VERDICT_NOT_SYNC = "not-synchronized"
VERDICT_INDETERMINATE = "indeterminate"
VERDICT_GATED = "gated"


class PhaseUndefinedError(ValueError):
    """Phase frame is degenerate: a mode has zero mean amplitude."""


class SingularBoundError(ValueError):
    """A quadrature variance entering a bound is zero."""


class InsufficientDataError(ValueError):
    """Not enough ungated samples in the requested window."""


def wrap_angle(phi: float) -> float:
    """Map an angle to the principal interval ``(-pi, pi]``."""
    return float(np.pi - np.mod(np.pi - phi, 2.0 * np.pi))


def phase_frame(m) -> PhaseFrame:
    """Extract mean phases and excitations from the mechanical means.

    A mode with zero amplitude gets ``phi = 0`` by convention; the returned
    frame then reports itself degenerate.
    """
    if isinstance(m, MeanState):
        q1, p1, q2, p2 = m.q1, m.p1, m.q2, m.p2
    else:
        arr = np.asarray(m, dtype=float)
        if arr.shape not in ((4,), (6,)):
            raise ValueError("mean state must have 4 or 6 entries")
        q1, p1, q2, p2 = arr[:4]
    n1 = 0.5 * (q1 * q1 + p1 * p1)
    n2 = 0.5 * (q2 * q2 + p2 * p2)
    phi1 = float(np.arctan2(p1, q1)) if n1 > 0 else 0.0
    phi2 = float(np.arctan2(p2, q2)) if n2 > 0 else 0.0
    return PhaseFrame(phi1=phi1, phi2=phi2, n1=n1, n2=n2)


def phase_coefficients(frame: PhaseFrame) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient vectors of dphi_1 and dphi_2 over ``(dq1, dp1, dq2, dp2)``."""
    if frame.degenerate:
        raise PhaseUndefinedError("phase undefined for zero mean amplitude")
    c1 = np.array([-np.sin(frame.phi1), np.cos(frame.phi1), 0.0, 0.0])
    c2 = np.array([0.0, 0.0, -np.sin(frame.phi2), np.cos(frame.phi2)])
    return c1 / np.sqrt(2.0 * frame.n1), c2 / np.sqrt(2.0 * frame.n2)


def _mech_cm(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape == (6, 6):
        a = mech_submatrix(a)
    elif a.shape != (4, 4):
        raise ValueError("expected a 4x4 mechanical block or a full 6x6 matrix")
    return symmetrize(a)


def phase_diff_variance(v, frame: PhaseFrame) -> float:
    """Variance of the phase-difference fluctuation operator."""
    c1, c2 = phase_coefficients(frame)
    d = c1 - c2
    vm = _mech_cm(v)
    return float(d @ vm @ d)


def necessary_bound(v, frame: PhaseFrame) -> tuple[float, str]:
    """Largest of the four local uncertainty lower bounds and its label.

    ``L_{q_j} = cos^2(phi_j) / (8 n_j Var q_j)`` and
    ``L_{p_j} = sin^2(phi_j) / (8 n_j Var p_j)``, using ``|<[p, q]>|^2 = 1``.
    """
    if frame.degenerate:
        raise PhaseUndefinedError("phase undefined for zero mean amplitude")
    vm = _mech_cm(v)
    variances = np.diag(vm)
    if np.any(variances <= 0.0):
        raise SingularBoundError("zero quadrature variance in necessary bound")
    numerators = [
        np.cos(frame.phi1) ** 2 / frame.n1,
        np.sin(frame.phi1) ** 2 / frame.n1,
        np.cos(frame.phi2) ** 2 / frame.n2,
        np.sin(frame.phi2) ** 2 / frame.n2,
    ]
    bounds = [num / (8.0 * var) for num, var in zip(numerators, variances)]
    idx = int(np.argmax(bounds))
    return float(bounds[idx]), OBSERVABLE_LABELS[idx]


def sufficient_bound(v, frame: PhaseFrame) -> float:
    """Sum-uncertainty upper bound ``(sqrt(Var phi_1) + sqrt(Var phi_2))^2``."""
    c1, c2 = phase_coefficients(frame)
    vm = _mech_cm(v)
    s1 = np.sqrt(max(0.0, float(c1 @ vm @ c1)))
    s2 = np.sqrt(max(0.0, float(c2 @ vm @ c2)))
    return float((s1 + s2) ** 2)


def unwrap_phase_series(phi: np.ndarray, advance_warn: float = 0.9 * np.pi) -> np.ndarray:
    """Enforce 2pi-continuity on a phase series (NaN entries pass through).

    Emits a warning when consecutive unwrapped increments approach pi, which
    indicates the sampling is too coarse for reliable continuation.
    """
    phi = np.asarray(phi, dtype=float)
    out = np.full_like(phi, np.nan)
    ok = np.isfinite(phi)
    if np.any(ok):
        unwrapped = np.unwrap(phi[ok])
        out[ok] = unwrapped
        if len(unwrapped) > 1 and np.max(np.abs(np.diff(unwrapped))) >= advance_warn:
            warnings.warn(
                "phase advances close to pi per sample; decrease sample_dt",
                RuntimeWarning,
                stacklevel=2,
            )
    return out


@dataclass(frozen=True)
class LockResult:
    locked: bool
    value: float  # mean phase difference over the window, in (-pi, pi]
    slope: float  # fitted drift rate, rad per unit time
    n_used: int


def lock_from_series(
    ts,
    phi_minus,
    window: float,
    slope_tol: float,
    gated=None,
) -> LockResult:
    """Fit the trailing-window drift of an unwrapped phase-difference series.

    Gated samples are excluded; an all-gated (or single-sample) window raises
    :class:`InsufficientDataError`.  Locked means ``|slope| <= slope_tol``.
    """
    ts = np.asarray(ts, dtype=float)
    phi = np.asarray(phi_minus, dtype=float)
    if window <= 0:
        raise ValueError("window must be positive")
    if ts[-1] - ts[0] < window:
        raise InsufficientDataError("trajectory shorter than the requested window")
    sel = ts >= ts[-1] - window
    if gated is not None:
        sel &= ~np.asarray(gated, dtype=bool)
    sel &= np.isfinite(phi)
    if np.count_nonzero(sel) < 2:
        raise InsufficientDataError("fewer than two ungated samples in window")
    tw = ts[sel]
    pw = phi[sel]
    tc = tw - tw.mean()
    slope = float(tc @ (pw - pw.mean()) / (tc @ tc))
    return LockResult(
        locked=bool(abs(slope) <= slope_tol),
        value=wrap_angle(float(pw.mean())),
        slope=slope,
        n_used=int(np.count_nonzero(sel)),
    )


def classical_lock(traj, window: float, slope_tol: float, n_min: float = 1e-2) -> LockResult:
    """Lock verdict for a simulated trajectory's mean-phase difference."""
    phis = np.full(len(traj), np.nan)
    gated = np.ones(len(traj), dtype=bool)
    for i, (_, m, _v) in enumerate(traj):
        fr = phase_frame(m)
        if min(fr.n1, fr.n2) >= n_min:
            gated[i] = False
            phis[i] = wrap_angle(fr.phi1 - fr.phi2)
    unwrapped = unwrap_phase_series(phis)
    return lock_from_series(traj.ts, unwrapped, window, slope_tol, gated=gated)


@dataclass(frozen=True)
class SyncReport:
    """All synchronization quantities evaluated at one time point."""

    t: float
    var_minus: float
    l_nec: float
    l_nec_argmax: str
    u_suf: float
    phi_minus_classical: float
    frame: PhaseFrame
    gated: bool
    verdict: str


def report(v, m, t: float, epsilon: float, n_min: float = 1e-2) -> SyncReport:
    """Evaluate variance, both bounds, and the verdict at one sample.

    Samples whose mean excitation falls below ``n_min`` on either mode are
    gated: the phase frame is unreliable there and no bound is reported.
    """
    frame = phase_frame(m)
    if min(frame.n1, frame.n2) < n_min:
        return SyncReport(
            t=t,
            var_minus=np.nan,
            l_nec=np.nan,
            l_nec_argmax="",
            u_suf=np.nan,
            phi_minus_classical=np.nan,
            frame=frame,
            gated=True,
            verdict=VERDICT_GATED,
        )
    var = phase_diff_variance(v, frame)
    lo, label = necessary_bound(v, frame)
    hi = sufficient_bound(v, frame)
    if hi <= epsilon:
        verdict = VERDICT_SYNC
    elif lo > epsilon:
        verdict = VERDICT_NOT_SYNC
    else:
        verdict = VERDICT_INDETERMINATE
    return SyncReport(
        t=t,
        var_minus=var,
        l_nec=lo,
        l_nec_argmax=label,
        u_suf=hi,
        phi_minus_classical=wrap_angle(frame.phi1 - frame.phi2),
        frame=frame,
        gated=False,
        verdict=verdict,
    )
