"""Mean-field and covariance dynamics of the driven two-membrane cavity.

The mean field obeys the nonlinear classical equations

    d<q_j>/dt = omega_j <p_j>
    d<p_j>/dt = -omega_j <q_j> + sqrt(2) g_j |<a>|^2 - gamma_j <p_j>
    d<a>/dt   = [i (delta + sqrt(2) sum_j g_j <q_j>) - kappa] <a> + eta

and the fluctuation covariance follows the Lyapunov equation
``dV/dt = A V + V A^T + D`` with the drift matrix ``A`` linearized around
the instantaneous mean and ``D = diag(0, gamma1, 0, gamma2, kappa, kappa)``.
Both are advanced jointly by an explicit Runge-Kutta integrator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import (
    MeanState,
    SystemParams,
    symmetrize,
    validate_cm,
)

__all__ = [
    "DriftMatrix",
    "Trajectory",
    "StepRejected",
    "SimulationError",
    "diffusion_matrix",
    "mean_field_rhs",
    "drift_matrix",
    "lyapunov_rhs",
    "integrate_lyapunov",
    "step",
    "simulate",
]

SQRT2 = np.sqrt(2.0)


class StepRejected(RuntimeError):
    """Raised when a trial step exceeds the local error tolerance."""

    def __init__(self, t: float, dt: float, err: float):
        super().__init__(f"step rejected at t={t!r} (dt={dt!r}, error ratio {err:.3g})")
        self.t = t
        self.dt = dt
        self.err = err


class SimulationError(RuntimeError):
    """Integration failure; carries the time at which it occurred."""

    def __init__(self, t: float, message: str):
        super().__init__(f"{message} (at t={t!r})")
        self.t = t


@dataclass(frozen=True)
class DriftMatrix:
    """Linear generator of the fluctuation dynamics at one instant."""

    a: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=float)
        if arr.shape != (6, 6):
            raise ValueError("drift matrix must be 6x6")
        if not np.all(np.isfinite(arr)):
            raise ValueError("drift matrix entries must be finite")


def _mean_array(m) -> np.ndarray:
    if isinstance(m, MeanState):
        return m.as_array()
    a = np.asarray(m, dtype=float)
    if a.shape != (6,):
        raise ValueError("mean state must have 6 entries")
    return a


def diffusion_matrix(params: SystemParams) -> np.ndarray:
    return np.diag([0.0, params.gamma1, 0.0, params.gamma2, params.kappa, params.kappa])


def mean_field_rhs(params: SystemParams, m) -> np.ndarray:
    """Time derivative of the six first moments.

    Fluctuation feedback onto the means is neglected, so the radiation force
    on mode j is ``sqrt(2) g_j |<a>|^2`` with ``|<a>|^2 = (x^2 + y^2)/2``.
    """
    q1, p1, q2, p2, x, y = _mean_array(m)
    photons = 0.5 * (x * x + y * y)
    detuning = params.delta + SQRT2 * (params.g1 * q1 + params.g2 * q2)
    return np.array(
        [
            params.omega1 * p1,
            -params.omega1 * q1 + SQRT2 * params.g1 * photons - params.gamma1 * p1,
            params.omega2 * p2,
            -params.omega2 * q2 + SQRT2 * params.g2 * photons - params.gamma2 * p2,
            -params.kappa * x - detuning * y + SQRT2 * params.eta,
            -params.kappa * y + detuning * x,
        ]
    )


def drift_matrix(params: SystemParams, m) -> np.ndarray:
    """Drift matrix of the fluctuations around the given mean state.

    ``A_j = 2 g_j Re<a>`` and ``B_j = 2 g_j Im<a>`` couple each mechanical
    momentum to the cavity quadratures; ``M = -delta - sqrt(2) sum g_j <q_j>``
    rotates the cavity block.  This is exactly the Jacobian of
    :func:`mean_field_rhs` (without the constant drive term).
    """
    q1, p1, q2, p2, x, y = _mean_array(m)
    a1 = SQRT2 * params.g1 * x
    b1 = SQRT2 * params.g1 * y
    a2 = SQRT2 * params.g2 * x
    b2 = SQRT2 * params.g2 * y
    mm = -params.delta - SQRT2 * (params.g1 * q1 + params.g2 * q2)
    w1, w2 = params.omega1, params.omega2
    return np.array(
        [
            [0.0, w1, 0.0, 0.0, 0.0, 0.0],
            [-w1, -params.gamma1, 0.0, 0.0, a1, b1],
            [0.0, 0.0, 0.0, w2, 0.0, 0.0],
            [0.0, 0.0, -w2, -params.gamma2, a2, b2],
            [-b1, 0.0, -b2, 0.0, -params.kappa, mm],
            [a1, 0.0, a2, 0.0, -mm, -params.kappa],
        ]
    )


def lyapunov_rhs(a, v, params: SystemParams | None = None, d=None) -> np.ndarray:
    """Covariance derivative ``A V + V A^T + D``.

    ``d`` overrides the diffusion matrix; by default it is built from
    ``params``.  The result is exactly symmetric when ``v`` is.
    """
    if isinstance(a, DriftMatrix):
        a = a.a
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    if d is None:
        if params is None:
            raise ValueError("either params or an explicit diffusion matrix is required")
        d = diffusion_matrix(params)
    av = a @ v
    return av + av.T + d


# --- joint integrator -------------------------------------------------------
#
# The joint state (means, covariance) is packed into a flat 42-vector.  The
# covariance block stays exactly symmetric through Runge-Kutta stages because
# the derivative is assembled as AV + (AV)^T + D.


def _pack(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.concatenate([m, v.reshape(-1)])


def _unpack(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return y[:6], y[6:].reshape(6, 6)


def _joint_rhs(params: SystemParams, d: np.ndarray):
    """Right-hand side over the packed 42-vector, tuned for the inner loop.

    The drift-matrix template is owned by the closure and mutated in place;
    a single simulation run is single-threaded by contract.
    """
    w1, w2 = params.omega1, params.omega2
    g1, g2 = params.g1, params.g2
    gam1, gam2 = params.gamma1, params.gamma2
    kappa, delta, eta = params.kappa, params.delta, params.eta
    sq_eta = SQRT2 * eta
    a_t = drift_matrix(params, np.zeros(6))

    def f(t: float, y: np.ndarray) -> np.ndarray:
        q1, p1, q2, p2, x, y_ = y[0], y[1], y[2], y[3], y[4], y[5]
        v = y[6:].reshape(6, 6)
        photons = 0.5 * (x * x + y_ * y_)
        detuning = delta + SQRT2 * (g1 * q1 + g2 * q2)
        a1 = SQRT2 * g1 * x
        b1 = SQRT2 * g1 * y_
        a2 = SQRT2 * g2 * x
        b2 = SQRT2 * g2 * y_
        a_t[1, 4] = a1
        a_t[1, 5] = b1
        a_t[3, 4] = a2
        a_t[3, 5] = b2
        a_t[4, 0] = -b1
        a_t[4, 2] = -b2
        a_t[4, 5] = -detuning
        a_t[5, 0] = a1
        a_t[5, 2] = a2
        a_t[5, 4] = detuning
        out = np.empty(42)
        out[0] = w1 * p1
        out[1] = -w1 * q1 + SQRT2 * g1 * photons - gam1 * p1
        out[2] = w2 * p2
        out[3] = -w2 * q2 + SQRT2 * g2 * photons - gam2 * p2
        out[4] = -kappa * x - detuning * y_ + sq_eta
        out[5] = -kappa * y_ + detuning * x
        av = a_t @ v
        sym = av + av.T  # not in place: av.T aliases av
        sym += d
        out[6:] = sym.reshape(-1)
        return out

    return f


def _rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) embedded pair.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4


def _dp_stages(f, t, y, dt, k1=None):
    """One trial step: returns the 5th-order result, error estimate, and stages."""
    k = np.empty((7, y.size))
    k[0] = k1 if k1 is not None else f(t, y)
    for i in range(1, 7):
        yi = y + dt * (_DP_A[i] @ k[:i])
        k[i] = f(t + _DP_C[i] * dt, yi)
    y5 = y + dt * (_DP_B5 @ k)
    err = dt * (_DP_E @ k)
    return y5, err, k


def _error_ratio(y0, y1, ydiff, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((ydiff / scale) ** 2)))


def _initial_dt(f, t0, y0, rtol, atol):
    f0 = f(t0, y0)
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    dt = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    return min(dt, 1.0)


def _integrate_adaptive(f, t0, y0, t1, rtol, atol, dt0=None, max_steps=50_000_000):
    """Advance y from t0 to exactly t1 with the embedded 5(4) pair.

    Returns ``(y(t1), suggested next dt)``.  Raises :class:`SimulationError`
    when the step size underflows or the step budget is exhausted.
    """
    t, y = t0, y0
    dt = dt0 if dt0 is not None else _initial_dt(f, t0, y0, rtol, atol)
    k1 = None
    for _ in range(max_steps):
        if t >= t1:
            return y, dt
        dt = min(dt, t1 - t)
        if dt <= 1e-14 * max(1.0, abs(t)):
            raise SimulationError(t, "step size underflow")
        y5, err_vec, k = _dp_stages(f, t, y, dt, k1)
        err = _error_ratio(y, y5, err_vec, rtol, atol)
        if err <= 1.0:
            t = t + dt
            y = y5
            k1 = k[6].copy()  # FSAL: last stage equals the first of the next step
            dt *= min(5.0, max(0.2, 0.9 * (err + 1e-16) ** -0.2))
        else:
            k1 = k[0].copy()
            dt *= max(0.2, 0.9 * err**-0.2)
    raise SimulationError(t, "step budget exhausted")


def step(
    params: SystemParams,
    m,
    v,
    t: float,
    dt: float,
    rtol: float | None = None,
    atol: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance means and covariance by one explicit Runge-Kutta step.

    Without tolerances this is a single classical fourth-order step.  With
    ``rtol``/``atol`` given, the embedded 5(4) pair is used and a step whose
    local error estimate exceeds the tolerance raises :class:`StepRejected`.
    The covariance is re-symmetrized after the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    m = _mean_array(m)
    v = np.asarray(v, dtype=float)
    f = _joint_rhs(params, diffusion_matrix(params))
    y0 = _pack(m, v)
    if rtol is None and atol is None:
        y1 = _rk4_step(f, t, y0, dt)
    else:
        rtol = 0.0 if rtol is None else rtol
        atol = 0.0 if atol is None else atol
        y5, err_vec, _ = _dp_stages(f, t, y0, dt)
        err = _error_ratio(y0, y5, err_vec, rtol, atol)
        if err > 1.0:
            raise StepRejected(t, dt, err)
        y1 = y5
    m1, v1 = _unpack(y1)
    return m1, symmetrize(v1)


def integrate_lyapunov(
    a,
    d,
    v0,
    t_end: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> np.ndarray:
    """Integrate ``dV/dt = A V + V A^T + D`` for a constant drift matrix.

    Supports any square dimension; used to compare the time integration
    against the algebraic steady-state solution for stable ``A``.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    v = symmetrize(np.asarray(v0, dtype=float))
    n = a.shape[0]

    def f(t, y):
        av = a @ y.reshape(n, n)
        out = av + av.T
        out += d
        return out.reshape(-1)

    y, _ = _integrate_adaptive(f, 0.0, v.reshape(-1), t_end, rtol, atol)
    return symmetrize(y.reshape(n, n))


@dataclass(frozen=True)
class Trajectory:
    """Samples of the joint moment evolution at uniform spacing."""

    ts: np.ndarray
    means: np.ndarray  # (N, 6)
    covs: np.ndarray  # (N, 6, 6)

    def __post_init__(self):
        if not (len(self.ts) == len(self.means) == len(self.covs)):
            raise ValueError("trajectory arrays must have equal length")
        if len(self.ts) > 1 and not np.all(np.diff(self.ts) > 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.ts)

    def __iter__(self):
        for i in range(len(self.ts)):
            yield self.ts[i], self.means[i], self.covs[i]

    def mean_state(self, i: int) -> MeanState:
        return MeanState.from_array(self.means[i])


def simulate(
    params: SystemParams,
    m0,
    v0,
    t_end: float,
    sample_dt: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    validate: bool = True,
) -> Trajectory:
    """Integrate means and covariance jointly, sampling at multiples of sample_dt.

    Every stored sample is re-symmetrized and, when ``validate`` is on,
    checked for physicality; a failing sample raises
    :class:`SimulationError` carrying the sample time.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if sample_dt <= 0:
        raise ValueError("sample_dt must be positive")
    m = _mean_array(m0)
    v = symmetrize(np.asarray(v0, dtype=float))
    if v.shape != (6, 6):
        raise ValueError("initial covariance must be 6x6")

    n_samples = int(np.floor(t_end / sample_dt + 1e-9))
    ts = [0.0]
    means = [m.copy()]
    covs = [v.copy()]
    f = _joint_rhs(params, diffusion_matrix(params))
    y = _pack(m, v)
    dt = None
    for k in range(1, n_samples + 1):
        t_prev, t_next = (k - 1) * sample_dt, k * sample_dt
        y, dt = _integrate_adaptive(f, t_prev, y, t_next, rtol, atol, dt0=dt)
        mk, vk = _unpack(y)
        vk = symmetrize(vk)
        if validate:
            report = validate_cm(vk)
            if not report.is_physical:
                raise SimulationError(
                    t_next,
                    f"covariance lost physicality (min eig {report.min_eigenvalue:.3g})",
                )
        ts.append(t_next)
        means.append(mk.copy())
        covs.append(vk.copy())
        y = _pack(mk, vk)
    return Trajectory(np.array(ts), np.array(means), np.array(covs))
