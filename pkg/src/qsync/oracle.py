"""Randomized validation of the uncertainty inequalities behind the bounds.

Physical covariance matrices are drawn by symplectic conjugation of thermal
diagonals (symplectic eigenvalues >= 1/2), which guarantees physicality by
construction.  Three checks run against each draw and a random phase frame:

* the Cauchy-Schwarz expansion ``Var(dphi_-) - |<do dphi_->|^2 / Var(o) >= 0``,
* its weaker commutator form, whose maximum over the four local observables
  is exactly the necessary bound,
* the sum-uncertainty upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import (
    OBSERVABLE_LABELS,
    phase_coefficients,
    phase_diff_variance,
    sufficient_bound,
)
from .state import PhaseFrame, symplectic_form

__all__ = [
    "RandomCmSpec",
    "FuzzSummary",
    "random_physical_cm",
    "random_frame",
    "check_a4",
    "check_a5",
    "check_mm_dagger",
    "fuzz_suite",
]


@dataclass(frozen=True)
class RandomCmSpec:
    """Sampling recipe for random physical covariance matrices.

    ``squeeze_max`` bounds the squeezing parameter of the active layers and
    ``correlation_mixing`` is the number of passive+active symplectic layers.
    ``nu_max`` bounds the thermal symplectic eigenvalues; setting it to 0.5
    forces pure (vacuum-orbit) states.
    """

    seed: int
    mode_count: int = 2
    squeeze_max: float = 2.0
    correlation_mixing: int = 3
    nu_max: float = 2.0

    def __post_init__(self):
        if self.mode_count not in (2, 3):
            raise ValueError("mode_count must be 2 or 3")
        if self.squeeze_max < 0:
            raise ValueError("squeeze_max must be nonnegative")
        if self.correlation_mixing < 1:
            raise ValueError("at least one mixing layer is required")
        if self.nu_max < 0.5:
            raise ValueError("nu_max must be at least the vacuum value 1/2")


def _rotation(n: int, mode: int, angle: float) -> np.ndarray:
    s = np.eye(2 * n)
    c, sn = np.cos(angle), np.sin(angle)
    i = 2 * mode
    s[i : i + 2, i : i + 2] = [[c, -sn], [sn, c]]
    return s


def _squeezer(n: int, mode: int, r: float) -> np.ndarray:
    s = np.eye(2 * n)
    i = 2 * mode
    s[i, i] = np.exp(r)
    s[i + 1, i + 1] = np.exp(-r)
    return s


def _beam_splitter(n: int, mode_a: int, mode_b: int, angle: float) -> np.ndarray:
    s = np.eye(2 * n)
    c, sn = np.cos(angle), np.sin(angle)
    for off in (0, 1):
        i, j = 2 * mode_a + off, 2 * mode_b + off
        s[i, i] = c
        s[j, j] = c
        s[i, j] = -sn
        s[j, i] = sn
    return s


def _random_symplectic(rng: np.random.Generator, spec: RandomCmSpec) -> np.ndarray:
    n = spec.mode_count
    s = np.eye(2 * n)
    for _ in range(spec.correlation_mixing):
        for mode in range(n):
            s = _rotation(n, mode, rng.uniform(-np.pi, np.pi)) @ s
            s = _squeezer(n, mode, rng.uniform(-spec.squeeze_max, spec.squeeze_max)) @ s
        for mode in range(n - 1):
            s = _beam_splitter(n, mode, mode + 1, rng.uniform(-np.pi, np.pi)) @ s
    return s


def _random_cm(rng: np.random.Generator, spec: RandomCmSpec) -> np.ndarray:
    nu = 0.5 + (spec.nu_max - 0.5) * rng.random(spec.mode_count)
    d = np.repeat(nu, 2)
    s = _random_symplectic(rng, spec)
    return (s * d) @ s.T


def random_physical_cm(spec: RandomCmSpec) -> np.ndarray:
    """Random physical covariance matrix, deterministic per seed."""
    return _random_cm(np.random.default_rng(spec.seed), spec)


def random_frame(
    rng: np.random.Generator, n_range: tuple[float, float] = (1e-1, 1e6)
) -> PhaseFrame:
    """Random phase frame: phases uniform, excitations log-uniform."""
    lo, hi = np.log(n_range[0]), np.log(n_range[1])
    return PhaseFrame(
        phi1=rng.uniform(-np.pi, np.pi),
        phi2=rng.uniform(-np.pi, np.pi),
        n1=float(np.exp(rng.uniform(lo, hi))),
        n2=float(np.exp(rng.uniform(lo, hi))),
    )


_OMEGA4 = symplectic_form(2)


def _difference_vector(frame: PhaseFrame) -> np.ndarray:
    c1, c2 = phase_coefficients(frame)
    return c1 - c2


def check_a4(v, frame: PhaseFrame, observable: str) -> float:
    """Margin of the commutator lower bound for one local observable.

    The bound is ``|<[o, phi_-]>|^2 / (4 Var o)``; since the phase-difference
    fluctuation is linear in the quadratures the commutator is a constant,
    obtained by contracting the coefficient vector with the symplectic form.
    """
    i = OBSERVABLE_LABELS.index(observable)
    d = _difference_vector(frame)
    vm = np.asarray(v, dtype=float)
    var_o = vm[i, i]
    if var_o <= 0.0:
        raise ValueError("zero variance for the chosen observable")
    comm = (_OMEGA4 @ d)[i]
    bound = comm**2 / (4.0 * var_o)
    return phase_diff_variance(vm, frame) - bound


def check_mm_dagger(v, frame: PhaseFrame, observable: str) -> float:
    """Cauchy-Schwarz residual ``Var(dphi_-) - |<do dphi_->|^2 / Var(o)``.

    The full moment ``<do dphi_->`` combines the symmetrized covariance and
    half the commutator; this residual is therefore never larger than the
    commutator-only margin of :func:`check_a4`.
    """
    i = OBSERVABLE_LABELS.index(observable)
    d = _difference_vector(frame)
    vm = np.asarray(v, dtype=float)
    var_o = vm[i, i]
    if var_o <= 0.0:
        raise ValueError("zero variance for the chosen observable")
    cov_sym = float(vm[i] @ d)
    comm = (_OMEGA4 @ d)[i]
    moment_sq = cov_sym**2 + 0.25 * comm**2
    return phase_diff_variance(vm, frame) - moment_sq / var_o


def check_a5(v, frame: PhaseFrame) -> float:
    """Margin of the sum-uncertainty upper bound (expected nonnegative)."""
    return sufficient_bound(v, frame) - phase_diff_variance(v, frame)


@dataclass(frozen=True)
class FuzzSummary:
    """Aggregate of the inequality checks over a random ensemble."""

    trials: int
    tolerance: float
    violations_a2: int
    violations_a4: int
    violations_a5: int
    ordering_violations: int
    worst_a2: float
    worst_a4: float
    worst_a5: float
    worst_a2_seed: int
    worst_a4_seed: int
    worst_a5_seed: int

    @property
    def total_violations(self) -> int:
        return self.violations_a2 + self.violations_a4 + self.violations_a5

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "tolerance": self.tolerance,
            "violations": {
                "a2_expansion": self.violations_a2,
                "a4_commutator": self.violations_a4,
                "a5_sum_uncertainty": self.violations_a5,
                "bound_ordering": self.ordering_violations,
            },
            "worst_margins": {
                "a2_expansion": {"margin": self.worst_a2, "seed": self.worst_a2_seed},
                "a4_commutator": {"margin": self.worst_a4, "seed": self.worst_a4_seed},
                "a5_sum_uncertainty": {"margin": self.worst_a5, "seed": self.worst_a5_seed},
            },
        }


def fuzz_suite(spec: RandomCmSpec, trials: int, tolerance: float = 1e-12) -> FuzzSummary:
    """Run all checks on ``trials`` independent draws.

    Each trial gets a child seed derived from ``spec.seed``, so any
    near-boundary case can be reproduced standalone via
    ``random_physical_cm(replace(spec, seed=child_seed))`` followed by one
    frame draw from the same generator.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    child_seeds = np.random.SeedSequence(spec.seed).generate_state(trials)
    viol_a2 = viol_a4 = viol_a5 = viol_order = 0
    worst = {"a2": (np.inf, -1), "a4": (np.inf, -1), "a5": (np.inf, -1)}

    for k in range(trials):
        seed_k = int(child_seeds[k])
        rng = np.random.default_rng(seed_k)
        vm = _random_cm(rng, spec)
        if spec.mode_count == 3:
            vm = vm[:4, :4]
        frame = random_frame(rng)

        d = _difference_vector(frame)
        var = float(d @ vm @ d)
        comms = _OMEGA4 @ d
        covs = vm @ d
        variances = np.diag(vm)
        a4_bounds = comms**2 / (4.0 * variances)
        a2_bounds = (covs**2 + 0.25 * comms**2) / variances
        m_a4 = float(var - np.max(a4_bounds))
        m_a2 = float(var - np.max(a2_bounds))
        m_a5 = check_a5(vm, frame)

        if m_a2 < -tolerance:
            viol_a2 += 1
        if m_a4 < -tolerance:
            viol_a4 += 1
        if m_a5 < -tolerance:
            viol_a5 += 1
        if np.any(a2_bounds < a4_bounds - tolerance):
            viol_order += 1
        for key, margin in (("a2", m_a2), ("a4", m_a4), ("a5", m_a5)):
            if margin < worst[key][0]:
                worst[key] = (margin, seed_k)

    return FuzzSummary(
        trials=trials,
        tolerance=tolerance,
        violations_a2=viol_a2,
        violations_a4=viol_a4,
        violations_a5=viol_a5,
        ordering_violations=viol_order,
        worst_a2=worst["a2"][0],
        worst_a4=worst["a4"][0],
        worst_a5=worst["a5"][0],
        worst_a2_seed=worst["a2"][1],
        worst_a4_seed=worst["a4"][1],
        worst_a5_seed=worst["a5"][1],
    )
