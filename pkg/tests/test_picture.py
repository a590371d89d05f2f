import numpy as np
import pytest

from qsync.picture import (
    CoherentBranch,
    CoherentMixture,
    beam_splitter,
    decay_mode2,
    evolve_free,
    evolve_leaking,
    gaussian_log_negativity,
    mixture_frame,
    mixture_means,
    mixture_second_moments,
    rotation_angle,
    separability_witness,
    single_leaking_rates,
    sufficient_bound_on_mixture,
    transformed_params,
    two_branch_mixture,
    validity_margins,
)
from qsync.state import SystemParams, symplectic_eigenvalues

SQRT2 = np.sqrt(2.0)
ALPHA = 500 * SQRT2 * (1 + 1j)


def fig4_params():
    return SystemParams(
        omega1=1.0,
        omega2=0.999,
        g1=0.02 / SQRT2,
        g2=0.02 / SQRT2,
        kappa=1.0,
        delta=0.0,
        eta=0.0,
    )


def moment_oracle(mixture):
    """Brute-force moment sum over branches (independent of the implementation)."""
    w = mixture.weights
    means = []
    for b in mixture.branches:
        means.append(
            SQRT2
            * np.array([b.alpha1.real, b.alpha1.imag, b.alpha2.real, b.alpha2.imag])
        )
    means = np.array(means)
    mbar = sum(wk * mk for wk, mk in zip(w, means))
    cov = 0.5 * np.eye(4)
    for wk, mk in zip(w, means):
        dm = mk - mbar
        cov += wk * np.outer(dm, dm)
    return mbar, cov


# --- mixtures ---------------------------------------------------------------------


def test_mixture_validation():
    with pytest.raises(ValueError):
        CoherentMixture(())
    with pytest.raises(ValueError):
        CoherentMixture((CoherentBranch(0.4, 0j, 0j),))
    with pytest.raises(ValueError):
        CoherentMixture(
            (CoherentBranch(0.5, 0j, 0j), CoherentBranch(0.5, complex("inf"), 0j))
        )


def test_two_branch_weights():
    mix = two_branch_mixture(np.pi / 3, ALPHA)
    assert mix.weights == pytest.approx([0.75, 0.25])
    assert mix.branches[0].alpha2 == np.conj(ALPHA)


# --- rotation ---------------------------------------------------------------------


def test_rotation_angle_reference_values():
    assert rotation_angle(1.0, 1.0) == pytest.approx(np.pi / 4)
    assert rotation_angle(0.0, 1.0) == 0.0
    assert rotation_angle(np.sqrt(3.0), 1.0) == pytest.approx(np.pi / 3)
    with pytest.warns(RuntimeWarning):
        assert rotation_angle(1.0, 0.0) == pytest.approx(np.pi / 2)


def test_transformed_params_identity_and_average():
    p = fig4_params()
    pp = transformed_params(p, 0.0)
    assert (pp.omega1_t, pp.omega2_t, pp.g2_t) == (p.omega1, p.omega2, p.g2)
    pp = transformed_params(p, np.pi / 4)
    assert pp.omega1_t == pytest.approx(0.9995)
    assert pp.omega2_t == pytest.approx(0.9995)
    assert pp.g2_t == pytest.approx(0.02)


def test_transformed_frequency_sum_conserved():
    p = SystemParams(omega1=1.3, omega2=0.7, g1=0.1, g2=0.2, kappa=1.0)
    for r in np.linspace(-1.5, 1.5, 17):
        pp = transformed_params(p, r)
        assert pp.omega1_t + pp.omega2_t == pytest.approx(p.omega1 + p.omega2, rel=1e-12)


def test_validity_margins_fig4():
    p = fig4_params()
    rep = validity_margins(p, np.pi / 4)
    assert rep.residual_vs_kappa == pytest.approx(5e-4, rel=1e-9)
    assert rep.coupling_vs_frequency == pytest.approx(4e-4 / (1 + 0.999**2), rel=1e-9)
    assert rep.all_satisfied


def test_validity_margins_degenerate_frequencies():
    p = SystemParams(omega1=1.0, omega2=1.0, g1=0.1, g2=0.1, kappa=1.0)
    rep = validity_margins(p, np.pi / 4)
    assert rep.detuning_vs_coupling == 0.0
    assert rep.residual_vs_kappa == 0.0


def test_validity_margins_violation_flagged():
    p = SystemParams(omega1=1.0, omega2=1.0, g1=1.0, g2=1.0, kappa=1.0)
    rep = validity_margins(p, np.pi / 4)
    assert rep.coupling_vs_frequency >= rep.threshold
    assert not rep.all_satisfied


# --- beam splitter pipeline ---------------------------------------------------------


def test_beam_splitter_identity_at_zero_angle():
    mix = two_branch_mixture(0.9, ALPHA)
    out = beam_splitter(mix, 0.0, "to_single_leaking")
    for a, b in zip(mix.branches, out.branches):
        assert a == b


def test_beam_splitter_moves_decaying_component_to_mode2():
    mix = two_branch_mixture(np.pi / 4, ALPHA)
    out = beam_splitter(mix, np.pi / 4, "to_single_leaking")
    b = out.branches[0]
    assert abs(b.alpha1) == pytest.approx(1000.0)
    assert abs(b.alpha2) == pytest.approx(1000.0)
    vac = out.branches[1]
    assert vac.alpha1 == 0 and vac.alpha2 == 0
    after = decay_mode2(out)
    assert abs(after.branches[0].alpha1) == pytest.approx(1000.0)
    assert after.branches[0].alpha2 == 0


def test_beam_splitter_round_trip_and_norm():
    rng = np.random.default_rng(3)
    branches = tuple(
        CoherentBranch(0.25, complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
        for _ in range(4)
    )
    mix = CoherentMixture(branches)
    r = rng.uniform(-1.2, 1.2)
    fwd = beam_splitter(mix, r, "to_single_leaking")
    back = beam_splitter(fwd, r, "to_schrodinger")
    for a, b, c in zip(mix.branches, back.branches, fwd.branches):
        assert abs(a.alpha1 - b.alpha1) < 1e-12
        assert abs(a.alpha2 - b.alpha2) < 1e-12
        norm0 = abs(a.alpha1) ** 2 + abs(a.alpha2) ** 2
        norm1 = abs(c.alpha1) ** 2 + abs(c.alpha2) ** 2
        assert norm1 == pytest.approx(norm0, rel=1e-12)


def test_beam_splitter_direction_validation():
    with pytest.raises(ValueError):
        beam_splitter(two_branch_mixture(0.1, 1.0), 0.3, "sideways")


def test_decay_idempotent():
    mix = beam_splitter(two_branch_mixture(1.1, ALPHA), 0.7, "to_single_leaking")
    once = decay_mode2(mix)
    twice = decay_mode2(once)
    assert once == twice


def test_evolve_free_periodicity():
    mix = decay_mode2(beam_splitter(two_branch_mixture(1.1, ALPHA), 0.7, "to_single_leaking"))
    w = 0.9995
    assert evolve_free(mix, w, 0.0) == mix
    full = evolve_free(mix, w, 2 * np.pi / w)
    half = evolve_free(mix, w, np.pi / w)
    for a, b, c in zip(mix.branches, full.branches, half.branches):
        assert abs(a.alpha1 - b.alpha1) < 1e-9 * max(1.0, abs(a.alpha1))
        assert abs(a.alpha1 + c.alpha1) < 1e-9 * max(1.0, abs(a.alpha1))


# --- moments and bounds ---------------------------------------------------------


def test_mixture_means_reference():
    # theta = pi/4: each mode mean has modulus sin^2(theta) |alpha| = 250 sqrt(2)
    final = _synchronized_mixture(np.pi / 4)
    b1, b2 = mixture_means(final)
    assert abs(b1) == pytest.approx(250 * SQRT2, rel=1e-12)
    assert abs(b2) == pytest.approx(250 * SQRT2, rel=1e-12)
    diff = np.angle(b1) - np.angle(b2)
    assert np.cos(diff) == pytest.approx(-1.0)


def _synchronized_mixture(theta, t=0.0):
    p = fig4_params()
    r = rotation_angle(p.g1, p.g2)
    pp = transformed_params(p, r)
    rotated = beam_splitter(two_branch_mixture(theta, ALPHA), r, "to_single_leaking")
    evolved = evolve_free(decay_mode2(rotated), pp.omega1_t, t)
    return beam_splitter(evolved, r, "to_schrodinger")


def test_mixture_means_theta_limits():
    b1, b2 = mixture_means(_synchronized_mixture(0.0))
    assert b1 == 0 and b2 == 0
    b1, _ = mixture_means(_synchronized_mixture(np.pi / 2))
    assert abs(b1) == pytest.approx(500 * SQRT2, rel=1e-12)


def test_second_moments_against_oracle():
    rng = np.random.default_rng(11)
    for _ in range(50):
        branches = []
        weights = rng.dirichlet(np.ones(3))
        for w in weights:
            branches.append(
                CoherentBranch(
                    float(w),
                    complex(*rng.normal(scale=3.0, size=2)),
                    complex(*rng.normal(scale=3.0, size=2)),
                )
            )
        mix = CoherentMixture(tuple(branches))
        mbar, cov = moment_oracle(mix)
        assert np.allclose(mixture_second_moments(mix), cov, atol=1e-9)
        b1, b2 = mixture_means(mix)
        assert SQRT2 * np.array([b1.real, b1.imag, b2.real, b2.imag]) == pytest.approx(mbar)


def test_second_moments_single_branch_is_vacuum_noise():
    mix = CoherentMixture((CoherentBranch(1.0, 3 + 4j, -1j),))
    assert np.allclose(mixture_second_moments(mix), 0.5 * np.eye(4))


def test_second_moments_symmetric_pair():
    # equal-and-opposite branches: zero mean, variance 1/2 + m^2 along q
    m = 2.5
    a = m / SQRT2  # quadrature mean m
    mix = CoherentMixture(
        (CoherentBranch(0.5, a, 0j), CoherentBranch(0.5, -a, 0j))
    )
    b1, b2 = mixture_means(mix)
    assert b1 == 0 and b2 == 0
    cov = mixture_second_moments(mix)
    assert cov[0, 0] == pytest.approx(0.5 + m * m)
    assert cov[1, 1] == pytest.approx(0.5)


def test_phase_direction_variance_stays_vacuum():
    # the branch spread is aligned with the mean direction, so the projected
    # phase-quadrature variance is exactly the coherent noise 1/2
    final = _synchronized_mixture(np.pi / 4, t=1.234)
    frame = mixture_frame(final)
    cov = mixture_second_moments(final)
    from qsync.criteria import phase_coefficients

    c1, c2 = phase_coefficients(frame)
    assert float(c1 @ cov @ c1) * 2 * frame.n1 == pytest.approx(0.5, rel=1e-9)


def test_sufficient_bound_reference_value():
    # the synchronized mixture at theta = pi/4 sits at 8e-6 exactly
    assert sufficient_bound_on_mixture(_synchronized_mixture(np.pi / 4)) == pytest.approx(
        8e-6, rel=1e-9
    )


def test_sufficient_bound_single_branch():
    # single branch at excitation n: bound (2 sqrt(1/(4n)))^2 = 1/n = 2e-6
    val = sufficient_bound_on_mixture(_synchronized_mixture(np.pi / 2))
    assert val == pytest.approx(2e-6, rel=1e-9)


def test_sufficient_bound_amplitude_scaling():
    # amplitudes x10 scale the bound by 1/100
    p = fig4_params()
    r = rotation_angle(p.g1, p.g2)

    def bound(alpha):
        rotated = beam_splitter(two_branch_mixture(np.pi / 4, alpha), r, "to_single_leaking")
        return sufficient_bound_on_mixture(
            beam_splitter(decay_mode2(rotated), r, "to_schrodinger")
        )

    assert bound(10 * ALPHA) == pytest.approx(bound(ALPHA) / 100.0, rel=1e-9)


def test_separability_witness():
    assert separability_witness(_synchronized_mixture(np.pi / 4))
    assert separability_witness(CoherentMixture((CoherentBranch(1.0, 1j, 2j),)))


# --- leaking rates and damped evolution ----------------------------------------------


def test_single_leaking_rates_fig4():
    rates = single_leaking_rates(fig4_params())
    assert rates.residual_coupling == pytest.approx(5e-4, rel=1e-9)
    expected_fast = 0.02**2 * 1.0 / (1.0 + 0.9995**2)
    assert rates.decay_fast == pytest.approx(expected_fast, rel=1e-9)
    # residual coupling exceeds half the fast rate: slow decay saturates
    assert rates.decay_slow == pytest.approx(rates.decay_fast / 2, rel=1e-12)


def test_single_leaking_rates_weak_residual_limit():
    p = SystemParams(
        omega1=1.0, omega2=1.0 - 1e-6, g1=0.02 / SQRT2, g2=0.02 / SQRT2, kappa=1.0
    )
    rates = single_leaking_rates(p)
    eps = rates.residual_coupling
    assert rates.decay_slow == pytest.approx(eps**2 / rates.decay_fast, rel=1e-3)


def test_evolve_leaking_drains_mode2_and_keeps_mode1():
    p = fig4_params()
    rates = single_leaking_rates(p)
    mix = beam_splitter(two_branch_mixture(np.pi / 4, ALPHA), rates.picture.r, "to_single_leaking")
    t = 8.0 / rates.decay_fast
    out = evolve_leaking(mix, rates, t)
    b = out.branches[0]
    assert abs(b.alpha2) == pytest.approx(1000 * np.exp(-rates.decay_fast * t), rel=1e-9)
    assert abs(b.alpha1) == pytest.approx(1000 * np.exp(-rates.decay_slow * t), rel=1e-9)
    assert abs(b.alpha2) < abs(b.alpha1)


# --- log negativity -----------------------------------------------------------------


def two_mode_squeezed_cm(s):
    ch, sh = np.cosh(2 * s), np.sinh(2 * s)
    v = 0.5 * np.array(
        [
            [ch, 0, sh, 0],
            [0, ch, 0, -sh],
            [sh, 0, ch, 0],
            [0, -sh, 0, ch],
        ]
    )
    return v


def test_log_negativity_vacuum_zero():
    assert gaussian_log_negativity(0.5 * np.eye(4)) == 0.0


def test_log_negativity_two_mode_squeezed():
    for s in (0.3, 1.0, 2.0):
        v = two_mode_squeezed_cm(s)
        # physical state, entangled: E_N = 2 s
        assert symplectic_eigenvalues(v)[0] == pytest.approx(0.5, rel=1e-9)
        assert gaussian_log_negativity(v) == pytest.approx(2 * s, rel=1e-9)


def test_log_negativity_product_block_diagonal_zero():
    v = np.zeros((4, 4))
    v[:2, :2] = [[1.3, 0.2], [0.2, 0.8]]
    v[2:, 2:] = [[0.6, -0.1], [-0.1, 0.9]]
    assert gaussian_log_negativity(v) == 0.0


def test_log_negativity_local_rotation_invariance():
    rng = np.random.default_rng(13)
    v = two_mode_squeezed_cm(0.8)
    for _ in range(20):
        out = np.zeros((4, 4))
        for k, a in enumerate(rng.uniform(-np.pi, np.pi, size=2)):
            c, s = np.cos(a), np.sin(a)
            out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[c, -s], [s, c]]
        v2 = out @ v @ out.T
        assert gaussian_log_negativity(v2) == pytest.approx(
            gaussian_log_negativity(v), abs=1e-9
        )


def test_log_negativity_rejects_unphysical():
    with pytest.raises(ValueError):
        gaussian_log_negativity(-np.eye(4))
    with pytest.raises(ValueError):
        gaussian_log_negativity(np.eye(6))


def test_log_negativity_symplectic_eigenvalue_cross_check():
    # independent route: moduli of the eigenvalues of i Omega V~ compared with
    # the invariant-based implementation
    from qsync.oracle import RandomCmSpec, random_physical_cm

    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    for k in range(100):
        v = random_physical_cm(RandomCmSpec(seed=7000 + k, squeeze_max=1.0))
        nu = float(symplectic_eigenvalues(flip @ v @ flip)[0])
        expected = max(0.0, -np.log(2 * nu))
        assert gaussian_log_negativity(v) == pytest.approx(expected, abs=1e-8)
