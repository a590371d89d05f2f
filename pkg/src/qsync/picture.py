"""Single-leaking-mode analytics: rotated frame, coherent mixtures, witnesses.

A beam-splitter rotation by ``r = arctan(g1/g2)`` maps the two mechanical
modes onto a collective pair of which only one couples to the cavity.  States
are carried as classical mixtures of product coherent branches; every
quantity needed here (means, second moments, the sum-uncertainty bound,
separability) is computable from branch data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .criteria import sufficient_bound
from .state import PhaseFrame, SystemParams, symplectic_eigenvalues

__all__ = [
    "CoherentBranch",
    "CoherentMixture",
    "PictureParams",
    "LeakingRates",
    "ValidityReport",
    "two_branch_mixture",
    "rotation_angle",
    "transformed_params",
    "validity_margins",
    "beam_splitter",
    "decay_mode2",
    "evolve_free",
    "evolve_leaking",
    "single_leaking_rates",
    "mixture_means",
    "mixture_frame",
    "mixture_second_moments",
    "sufficient_bound_on_mixture",
    "separability_witness",
    "gaussian_log_negativity",
]

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class CoherentBranch:
    """One product-coherent-state branch of a two-mode mixture."""

    weight: float
    alpha1: complex
    alpha2: complex


@dataclass(frozen=True)
class CoherentMixture:
    """Weighted list of product coherent branches of the two mechanical modes."""

    branches: tuple[CoherentBranch, ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("mixture needs at least one branch")
        w = self.weights
        if np.any(w < -WEIGHT_TOL):
            raise ValueError("branch weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise ValueError("branch weights must sum to one")
        amps = np.concatenate([self.alpha1s, self.alpha2s])
        if not np.all(np.isfinite(amps)):
            raise ValueError("branch amplitudes must be finite")

    @property
    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.branches], dtype=float)

    @property
    def alpha1s(self) -> np.ndarray:
        return np.array([b.alpha1 for b in self.branches], dtype=complex)

    @property
    def alpha2s(self) -> np.ndarray:
        return np.array([b.alpha2 for b in self.branches], dtype=complex)


def two_branch_mixture(theta: float, alpha: complex) -> CoherentMixture:
    """Mixture of a conjugate coherent pair and the vacuum.

    Weights are ``sin^2(theta)`` on the ``(alpha, alpha*)`` branch and
    ``cos^2(theta)`` on the vacuum branch.
    """
    return CoherentMixture(
        (
            CoherentBranch(float(np.sin(theta) ** 2), complex(alpha), complex(np.conj(alpha))),
            CoherentBranch(float(np.cos(theta) ** 2), 0.0, 0.0),
        )
    )


def rotation_angle(g1: float, g2: float) -> float:
    """Rotation angle ``r = arctan(g1/g2)`` that decouples collective mode 1."""
    if g2 == 0.0:
        warnings.warn("g2 = 0: rotation angle taken as pi/2 by continuity", RuntimeWarning)
        return np.pi / 2.0
    return float(np.arctan(g1 / g2))


@dataclass(frozen=True)
class PictureParams:
    """Transformed frequencies and coupling in the rotated frame."""

    r: float
    omega1_t: float
    omega2_t: float
    g2_t: float


def transformed_params(params: SystemParams, r: float) -> PictureParams:
    """Collective-mode frequencies and the surviving cavity coupling."""
    c2, s2 = np.cos(r) ** 2, np.sin(r) ** 2
    return PictureParams(
        r=float(r),
        omega1_t=params.omega1 * c2 + params.omega2 * s2,
        omega2_t=params.omega1 * s2 + params.omega2 * c2,
        g2_t=params.g1 * np.sin(r) + params.g2 * np.cos(r),
    )


@dataclass(frozen=True)
class ValidityReport:
    """Left/right ratios of the three rotated-frame validity conditions."""

    detuning_vs_coupling: float
    residual_vs_kappa: float
    coupling_vs_frequency: float
    threshold: float

    @property
    def satisfied(self) -> tuple[bool, bool, bool]:
        t = self.threshold
        return (
            self.detuning_vs_coupling <= t,
            self.residual_vs_kappa <= t,
            self.coupling_vs_frequency <= t,
        )

    @property
    def all_satisfied(self) -> bool:
        return all(self.satisfied)


def validity_margins(params: SystemParams, r: float, threshold: float = 0.1) -> ValidityReport:
    """Ratios of the three conditions under which the rotated frame decouples.

    Each ratio compares the left side of a "much less than" condition with
    its right side; a ratio at or below ``threshold`` counts as satisfied.
    """
    g1, g2 = params.g1, params.g2
    dw = abs(params.omega1 - params.omega2)
    gsq = g1 * g1 + g2 * g2
    if g1 == 0.0 or g2 == 0.0 or gsq == 0.0:
        raise ValueError("validity ratios undefined for vanishing couplings")
    return ValidityReport(
        detuning_vs_coupling=float(dw * abs(g1 * g2) / gsq**1.5),
        residual_vs_kappa=float(abs(dw * np.sin(r) * np.cos(r)) / params.kappa),
        coupling_vs_frequency=float(gsq / (params.omega1**2 + params.omega2**2)),
        threshold=threshold,
    )


def _rotate(mixture: CoherentMixture, c: float, s: float) -> CoherentMixture:
    return CoherentMixture(
        tuple(
            CoherentBranch(b.weight, c * b.alpha1 - s * b.alpha2, s * b.alpha1 + c * b.alpha2)
            for b in mixture.branches
        )
    )


def beam_splitter(mixture: CoherentMixture, r: float, direction: str) -> CoherentMixture:
    """Rotate every branch between the physical and rotated mode pairs.

    ``to_single_leaking`` sends ``(a1, a2)`` to
    ``(a1 cos r - a2 sin r, a1 sin r + a2 cos r)`` so the second output mode
    is the cavity-coupled (decaying) combination; ``to_schrodinger`` is the
    inverse.  Weights are unchanged and the round trip is the identity.
    """
    c, s = float(np.cos(r)), float(np.sin(r))
    if direction == "to_single_leaking":
        return _rotate(mixture, c, s)
    if direction == "to_schrodinger":
        return _rotate(mixture, c, -s)
    raise ValueError("direction must be 'to_single_leaking' or 'to_schrodinger'")


def decay_mode2(mixture: CoherentMixture) -> CoherentMixture:
    """Asymptotic state after the cavity-coupled mode is drained to vacuum."""
    return CoherentMixture(
        tuple(CoherentBranch(b.weight, b.alpha1, 0.0) for b in mixture.branches)
    )


def evolve_free(mixture: CoherentMixture, omega_t: float, t: float) -> CoherentMixture:
    """Free rotation of the surviving mode: ``alpha1 -> alpha1 e^{i omega_t t}``."""
    phase = np.exp(1j * omega_t * t)
    return CoherentMixture(
        tuple(CoherentBranch(b.weight, b.alpha1 * phase, b.alpha2) for b in mixture.branches)
    )


@dataclass(frozen=True)
class LeakingRates:
    """Effective decay rates of the collective modes in the rotated frame.

    ``decay_fast`` is the cavity-induced drain of the coupled mode from
    adiabatic elimination of the cavity, ``g~^2 kappa / (kappa^2 + w~2^2)``.
    ``residual_coupling`` is the frequency-mismatch coupling
    ``(omega1 - omega2) sin(r) cos(r)`` that the rotation leaves between the
    collective modes, and ``decay_slow`` is the decay it induces on the free
    mode: the slower decay rate of the coupled damped pair,
    ``decay_fast/2 - Re sqrt((decay_fast/2)^2 - residual^2)``, which reduces
    to ``residual^2/decay_fast`` for weak residual coupling and saturates at
    ``decay_fast/2``.
    """

    picture: PictureParams
    residual_coupling: float
    decay_fast: float
    decay_slow: float


def single_leaking_rates(params: SystemParams) -> LeakingRates:
    r = rotation_angle(params.g1, params.g2)
    pp = transformed_params(params, r)
    gamma_fast = pp.g2_t**2 * params.kappa / (params.kappa**2 + pp.omega2_t**2)
    eps = (params.omega1 - params.omega2) * np.sin(r) * np.cos(r)
    half = 0.5 * gamma_fast
    gamma_slow = half - np.sqrt(max(0.0, half * half - eps * eps))
    return LeakingRates(
        picture=pp,
        residual_coupling=float(eps),
        decay_fast=float(gamma_fast),
        decay_slow=float(gamma_slow),
    )


def evolve_leaking(mixture: CoherentMixture, rates: LeakingRates, t: float) -> CoherentMixture:
    """Damped rotation of both collective modes in the rotated frame.

    The coupled mode decays at ``decay_fast``, the free mode at the residual
    rate ``decay_slow``; the coherent residual coupling itself is neglected,
    consistent with the regime the rotated frame is built for.
    """
    pp = rates.picture
    f1 = np.exp((1j * pp.omega1_t - rates.decay_slow) * t)
    f2 = np.exp((1j * pp.omega2_t - rates.decay_fast) * t)
    return CoherentMixture(
        tuple(
            CoherentBranch(b.weight, b.alpha1 * f1, b.alpha2 * f2) for b in mixture.branches
        )
    )


def mixture_means(mixture: CoherentMixture) -> tuple[complex, complex]:
    """Weight-averaged mode amplitudes ``(<b1>, <b2>)``."""
    w = mixture.weights
    return complex(w @ mixture.alpha1s), complex(w @ mixture.alpha2s)


def _branch_quadrature_means(mixture: CoherentMixture) -> np.ndarray:
    """Per-branch quadrature means, shape (n_branches, 4), order (q1,p1,q2,p2)."""
    a1, a2 = mixture.alpha1s, mixture.alpha2s
    return np.sqrt(2.0) * np.column_stack([a1.real, a1.imag, a2.real, a2.imag])


def mixture_second_moments(mixture: CoherentMixture) -> np.ndarray:
    """4x4 mechanical covariance matrix of the branch mixture.

    Each coherent branch contributes vacuum noise 1/2 per quadrature; the
    spread of the branch means adds the classical covariance of the means,
    which also carries all cross-mode correlations.
    """
    w = mixture.weights
    m = _branch_quadrature_means(mixture)
    mbar = w @ m
    spread = (m.T * w) @ m - np.outer(mbar, mbar)
    return 0.5 * np.eye(4) + spread


def mixture_frame(mixture: CoherentMixture) -> PhaseFrame:
    """Phase frame built from the mixture means."""
    b1, b2 = mixture_means(mixture)
    return PhaseFrame(
        phi1=float(np.angle(b1)),
        phi2=float(np.angle(b2)),
        n1=float(abs(b1) ** 2),
        n2=float(abs(b2) ** 2),
    )


def sufficient_bound_on_mixture(mixture: CoherentMixture) -> float:
    """Sum-uncertainty upper bound evaluated on the mixture moments."""
    return sufficient_bound(mixture_second_moments(mixture), mixture_frame(mixture))


def separability_witness(mixture: CoherentMixture) -> bool:
    """A convex combination of product states is separable by construction."""
    return True


def gaussian_log_negativity(v_mech) -> float:
    """Logarithmic negativity of a two-mode Gaussian state.

    ``E_N = max(0, -ln(2 nu))`` with ``nu`` the smaller symplectic eigenvalue
    of the partially transposed covariance matrix (momentum sign flip on the
    second mode), in the vacuum-variance-1/2 convention.  ``nu`` is obtained
    from the two-mode invariants in a cancellation-free form, so states at
    the separability boundary come out at exactly zero instead of picking up
    eigensolver noise of order ``eps * norm``.
    """
    v = np.asarray(v_mech, dtype=float)
    if v.shape != (4, 4):
        raise ValueError("expected a 4x4 two-mode covariance matrix")
    scale = max(1.0, float(np.max(np.abs(np.diag(v)))))
    vs = 0.5 * (v + v.T) / scale
    w = np.linalg.eigvalsh(vs)
    if w[0] < -1e-9:
        raise ValueError(
            f"covariance matrix is not positive semidefinite (min eig {w[0] * scale:.3g})"
        )
    a, b, c = vs[:2, :2], vs[2:, 2:], vs[:2, 2:]
    # partial transposition flips the sign of det C in the seralian
    delta = np.linalg.det(a) + np.linalg.det(b) - 2.0 * np.linalg.det(c)
    det_v = float(np.linalg.det(vs))
    disc = np.sqrt(max(delta * delta - 4.0 * det_v, 0.0))
    nu_sq = 2.0 * det_v / (delta + disc) if delta + disc > 0.0 else 0.0
    if nu_sq <= 0.0:
        return np.inf
    # values below 1e-9 sit under the numerical resolution of the invariants
    nu_min = scale * np.sqrt(nu_sq)
    log_neg = -np.log(2.0 * nu_min)
    return float(log_neg) if log_neg > 1e-9 else 0.0
