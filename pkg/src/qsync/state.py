"""Value types for the three-mode moment description and their validity checks.

Conventions used throughout the package:

* mode ordering ``(q1, p1, q2, p2, X, Y)``; the first two pairs are the
  mechanical oscillators, the last pair the cavity quadratures,
* ``hbar = 1`` with vacuum quadrature variance ``1/2``,
* all rates and frequencies are expressed in units of the first mechanical
  frequency, so ``omega1 = 1`` canonically,
* covariance matrices hold symmetrized second moments
  ``V_ij = <u_i u_j + u_j u_i> / 2`` of the fluctuation operators.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping

import numpy as np

__all__ = [
    "SystemParams",
    "MeanState",
    "PhaseFrame",
    "CmReport",
    "vacuum_cm",
    "symmetrize",
    "validate_cm",
    "mech_submatrix",
    "symplectic_form",
    "symplectic_eigenvalues",
]

SYM_TOL = 1e-9
PSD_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and frequencies of the two-membrane cavity model.

    All values are dimensionless (units of ``omega1``).  ``delta`` is the
    drive-cavity detuning and ``eta`` the (real, nonnegative) drive amplitude.
    """

    omega1: float = 1.0
    omega2: float = 1.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    g1: float = 0.0
    g2: float = 0.0
    kappa: float = 1.0
    delta: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ValueError("mechanical frequencies must be positive")
        if not self.kappa > 0:
            raise ValueError("cavity decay rate kappa must be positive")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("mechanical damping rates must be nonnegative")
        if self.eta < 0:
            raise ValueError("drive amplitude eta must be nonnegative")
        for f in fields(self):
            if not np.isfinite(getattr(self, f.name)):
                raise ValueError(f"parameter {f.name} is not finite")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "SystemParams":
        """Build from a flat key-value mapping, ignoring unknown keys."""
        names = {f.name for f in fields(cls)}
        kwargs = {k: float(v) for k, v in mapping.items() if k in names}
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    def replace(self, **kwargs) -> "SystemParams":
        data = self.to_mapping()
        data.update(kwargs)
        return SystemParams(**data)


@dataclass(frozen=True)
class MeanState:
    """First moments of the three modes.

    ``x = sqrt(2) Re<a>`` and ``y = sqrt(2) Im<a>`` are the cavity
    quadrature means.
    """

    q1: float = 0.0
    p1: float = 0.0
    q2: float = 0.0
    p2: float = 0.0
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("mean-state entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.p1, self.q2, self.p2, self.x, self.y])

    @classmethod
    def from_array(cls, arr) -> "MeanState":
        a = np.asarray(arr, dtype=float)
        if a.shape != (6,):
            raise ValueError("mean state must have 6 entries")
        return cls(*a)

    @classmethod
    def zero(cls) -> "MeanState":
        return cls()

    def cavity_amplitude(self) -> complex:
        """Mean cavity amplitude ``<a> = (x + i y) / sqrt(2)``."""
        return (self.x + 1j * self.y) / np.sqrt(2.0)


@dataclass(frozen=True)
class PhaseFrame:
    """Mean phases and excitations of the two mechanical modes.

    ``phi_j`` is the four-quadrant angle of ``(<q_j>, <p_j>)`` in
    ``(-pi, pi]`` and ``n_j = (<q_j>^2 + <p_j>^2)/2`` the mean excitation.
    """

    phi1: float
    phi2: float
    n1: float
    n2: float

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("mean excitations must be nonnegative")

    @property
    def degenerate(self) -> bool:
        """True when either mode has zero mean amplitude (phase undefined)."""
        return self.n1 <= 0.0 or self.n2 <= 0.0


def vacuum_cm(n_modes: int = 3) -> np.ndarray:
    """Covariance matrix of the n-mode vacuum, ``diag(1/2, ...)``."""
    return 0.5 * np.eye(2 * n_modes)


def symmetrize(v: np.ndarray) -> np.ndarray:
    return 0.5 * (v + v.T)


def _as_square(v, size: int | None = None) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"covariance matrix must be square, got shape {a.shape}")
    if size is not None and a.shape != (size, size):
        raise ValueError(f"covariance matrix must be {size}x{size}, got {a.shape}")
    return a


@dataclass(frozen=True)
class CmReport:
    """Validity report for a covariance matrix."""

    symmetry_defect: float
    min_eigenvalue: float
    is_symmetric: bool
    is_physical: bool


def validate_cm(v, sym_tol: float = SYM_TOL, psd_tol: float = PSD_TOL) -> CmReport:
    """Check symmetry and positive semidefiniteness of a 6x6 covariance matrix.

    Tolerances are applied relative to ``max(1, largest diagonal entry)`` so
    the check stays meaningful when the covariance grows by many orders of
    magnitude (parametrically unstable regimes).  For order-one matrices this
    coincides with the absolute tolerances ``1e-9``.
    """
    a = _as_square(v, 6)
    return _cm_report(a, sym_tol, psd_tol)


def _cm_report(a: np.ndarray, sym_tol: float, psd_tol: float) -> CmReport:
    scale = max(1.0, float(np.max(np.abs(np.diag(a)))) if a.size else 1.0)
    defect = float(np.max(np.abs(a - a.T)))
    sym = 0.5 * (a + a.T)
    # rescale before the eigensolve; intermediate squares overflow above ~1e154
    w = np.linalg.eigvalsh(sym / scale) * scale
    min_eig = float(w[0])
    is_symmetric = defect <= sym_tol * scale
    is_physical = is_symmetric and min_eig >= -psd_tol * scale
    return CmReport(defect, min_eig, is_symmetric, is_physical)


def mech_submatrix(v) -> np.ndarray:
    """Principal 4x4 mechanical block of a 6x6 covariance matrix."""
    a = _as_square(v, 6)
    return a[:4, :4].copy()


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for ``(q, p)`` pairs, ``[q, p] = i``."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


def symplectic_eigenvalues(v) -> np.ndarray:
    """Symplectic eigenvalues of a covariance matrix, ascending.

    Computed as the moduli of the eigenvalues of ``i Omega V``; a physical
    state has all of them ``>= 1/2`` in this convention.
    """
    a = _as_square(v)
    if a.shape[0] % 2:
        raise ValueError("covariance matrix must have even dimension")
    n = a.shape[0] // 2
    scale = max(1.0, float(np.max(np.abs(a))))
    ev = np.linalg.eigvals(symplectic_form(n) @ (a / scale))
    nu = np.sort(np.abs(ev)) * scale
    # eigenvalues come in +/- pairs of equal modulus
    return nu[::2].copy()
