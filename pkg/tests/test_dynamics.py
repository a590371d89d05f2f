import numpy as np
import pytest

from qsync.dynamics import (
    SimulationError,
    StepRejected,
    diffusion_matrix,
    drift_matrix,
    lyapunov_rhs,
    mean_field_rhs,
    simulate,
    step,
)
from qsync.state import SystemParams, vacuum_cm, validate_cm

SQRT2 = np.sqrt(2.0)


def fig3_params():
    return SystemParams(
        omega1=1.0,
        omega2=0.999,
        gamma1=5e-6,
        gamma2=5e-6,
        g1=1e-5 / SQRT2,
        g2=1e-5 / SQRT2,
        kappa=0.05,
        delta=1.0,
        eta=3600.0,
    )


def kron_lyapunov_solve(a, d):
    """Independent steady-state oracle: vectorized (Kronecker) linear solve."""
    n = a.shape[0]
    eye = np.eye(n)
    lhs = np.kron(eye, a) + np.kron(a, eye)
    v = np.linalg.solve(lhs, -d.reshape(-1))
    return v.reshape(n, n)


# --- mean field ---------------------------------------------------------------


def test_mean_rhs_fixed_point_at_origin():
    p = SystemParams(kappa=0.5, delta=0.7, g1=0.1, g2=0.2, eta=0.0)
    assert mean_field_rhs(p, np.zeros(6)) == pytest.approx(np.zeros(6))


def test_mean_rhs_free_oscillator():
    p = SystemParams(omega1=1.0, omega2=1.0, kappa=1.0, delta=0.0)
    d = mean_field_rhs(p, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    assert d[:2] == pytest.approx([0.0, -1.0])
    assert d[2:] == pytest.approx(np.zeros(4))


def test_mean_rhs_fig3_drive_magnitude():
    # direct substitution at zero means: cavity derivative has magnitude eta
    d = mean_field_rhs(fig3_params(), np.zeros(6))
    assert d[:4] == pytest.approx(np.zeros(4))
    da = np.hypot(d[4], d[5]) / SQRT2
    assert da == pytest.approx(3600.0, rel=1e-14)


# --- drift matrix ---------------------------------------------------------------


def test_drift_blocks_at_zero_field():
    p = SystemParams(omega1=1.0, omega2=0.9, gamma1=0.01, gamma2=0.02, kappa=0.3, delta=1.0)
    a = drift_matrix(p, np.zeros(6))
    assert np.allclose(a[:2, :2], [[0.0, 1.0], [-1.0, -0.01]])
    assert np.allclose(a[2:4, 2:4], [[0.0, 0.9], [-0.9, -0.02]])
    assert np.allclose(a[4:, 4:], [[-0.3, -1.0], [1.0, -0.3]])
    coupling = a.copy()
    coupling[:2, :2] = coupling[2:4, 2:4] = coupling[4:, 4:] = 0.0
    assert np.allclose(coupling, 0.0)


def test_drift_position_rows_couple_only_momentum():
    p = fig3_params()
    rng = np.random.default_rng(3)
    a = drift_matrix(p, rng.normal(size=6) * 10)
    expect_row0 = np.zeros(6)
    expect_row0[1] = p.omega1
    assert np.array_equal(a[0], expect_row0)
    expect_row2 = np.zeros(6)
    expect_row2[3] = p.omega2
    assert np.array_equal(a[2], expect_row2)


def test_drift_coupling_value():
    # sqrt(2) g1 = 1e-5 and Re<a> = 10 gives A1 = 2 g1 Re<a> = 1.41421e-4
    p = fig3_params()
    m = np.array([0.0, 0.0, 0.0, 0.0, SQRT2 * 10.0, 0.0])
    a = drift_matrix(p, m)
    assert a[1, 4] == pytest.approx(1.41421e-4, rel=1e-5)
    assert a[5, 0] == a[1, 4]


def test_drift_detuning_entry_coupling_free():
    p = SystemParams(delta=1.0, kappa=0.1)
    a = drift_matrix(p, np.array([np.pi, 0, -7.0, 0, 0, 0]))
    assert a[4, 5] == pytest.approx(-1.0)
    assert a[5, 4] == pytest.approx(1.0)


def test_drift_is_jacobian_of_mean_rhs():
    # the fluctuation generator must linearize the mean flow
    p = fig3_params()
    rng = np.random.default_rng(11)
    m = rng.normal(size=6) * 5
    a = drift_matrix(p, m)
    jac = np.zeros((6, 6))
    eps = 1e-6
    for j in range(6):
        dm = np.zeros(6)
        dm[j] = eps
        jac[:, j] = (mean_field_rhs(p, m + dm) - mean_field_rhs(p, m - dm)) / (2 * eps)
    assert np.allclose(a, jac, atol=1e-6)


# --- Lyapunov rhs ---------------------------------------------------------------


def test_lyapunov_rhs_drift_free():
    p = SystemParams(gamma1=0.1, gamma2=0.2, kappa=0.3)
    v = np.diag(np.arange(1.0, 7.0))
    out = lyapunov_rhs(np.zeros((6, 6)), v, p)
    assert np.allclose(out, diffusion_matrix(p))
    assert np.allclose(np.diag(diffusion_matrix(p)), [0, 0.1, 0, 0.2, 0.3, 0.3])


def test_lyapunov_rhs_symmetry():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(6, 6))
    v = rng.normal(size=(6, 6))
    v = v + v.T
    out = lyapunov_rhs(a, v, SystemParams())
    assert np.array_equal(out, out.T)


def test_lyapunov_steady_state_matches_kronecker_solve():
    rng = np.random.default_rng(17)
    p = SystemParams(gamma1=0.02, gamma2=0.05, kappa=0.4)
    d = diffusion_matrix(p)
    a = rng.normal(size=(6, 6))
    a -= (np.max(np.linalg.eigvals(a).real) + 0.5) * np.eye(6)
    v_inf = kron_lyapunov_solve(a, d)
    assert np.allclose(lyapunov_rhs(a, v_inf, p), 0.0, atol=1e-12)


# --- stepping -------------------------------------------------------------------


def test_step_requires_positive_dt():
    with pytest.raises(ValueError):
        step(SystemParams(), np.zeros(6), vacuum_cm(), 0.0, 0.0)


def test_step_fixed_point_with_vacuum():
    # undriven, undamped mechanics; cavity vacuum is stationary
    p = SystemParams(kappa=0.5)
    m, v = step(p, np.zeros(6), vacuum_cm(), 0.0, 0.05)
    assert m == pytest.approx(np.zeros(6))
    assert np.allclose(v, vacuum_cm(), atol=1e-14)


def test_step_rejection_signal():
    p = fig3_params()
    with pytest.raises(StepRejected):
        step(p, np.zeros(6), vacuum_cm(), 0.0, 10.0, rtol=1e-10, atol=1e-12)
    # a tiny step passes
    m, v = step(p, np.zeros(6), vacuum_cm(), 0.0, 1e-4, rtol=1e-8, atol=1e-10)
    assert np.isfinite(m).all() and np.isfinite(v).all()


def test_step_richardson_order_four():
    # endpoint error ratio ~ 16 per halving for the classical scheme
    p = SystemParams(omega1=1.0, omega2=1.0, kappa=1.0)
    m0 = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    t_end = 2.0

    def endpoint(dt):
        m, v = m0.copy(), vacuum_cm()
        t = 0.0
        while t < t_end - 1e-12:
            m, v = step(p, m, v, t, dt)
            t += dt
        return m

    exact = np.array(
        [np.cos(t_end), -np.sin(t_end), np.sin(t_end), np.cos(t_end), 0.0, 0.0]
    )
    e1 = np.linalg.norm(endpoint(0.1) - exact)
    e2 = np.linalg.norm(endpoint(0.05) - exact)
    order = np.log2(e1 / e2)
    assert order == pytest.approx(4.0, abs=0.2)


def test_free_oscillator_energy_conservation():
    # An order-5 scheme at tolerance 1e-10 dissipates ~ T w^6 dt^5 / 1800 of
    # the energy; over 10^3 periods that is a few 1e-7, and the 1e-8 level
    # needs the tighter tolerance (second check).
    p = SystemParams(omega1=1.0, omega2=1.0, kappa=1.0)
    m0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])

    def drift(n_periods, rtol, sample_dt):
        traj = simulate(
            p, m0, vacuum_cm(), n_periods * 2 * np.pi, sample_dt, rtol=rtol, atol=1e-12
        )
        energy = 0.5 * (traj.means[:, 0] ** 2 + traj.means[:, 1] ** 2)
        return np.max(np.abs(energy - energy[0])) / energy[0]

    assert drift(1000, 1e-10, 100.0) < 3e-6
    assert drift(100, 1e-12, 10.0) < 1e-8


# --- simulate -------------------------------------------------------------------


def test_simulate_zero_horizon_single_sample():
    p = SystemParams()
    traj = simulate(p, np.zeros(6), vacuum_cm(), 0.0, 1.0)
    assert len(traj) == 1
    assert traj.ts[0] == 0.0
    assert np.allclose(traj.covs[0], vacuum_cm())


def test_simulate_validates_and_symmetrizes_every_sample():
    p = fig3_params()
    traj = simulate(p, np.zeros(6), vacuum_cm(), 50.0, 5.0)
    assert len(traj) == 11
    for _, _, v in traj:
        rep = validate_cm(v)
        assert rep.is_physical
        assert rep.symmetry_defect == 0.0


def test_simulate_cavity_mean_converges_to_drive_over_response():
    # with g = 0 the cavity mean relaxes to eta / (kappa - i delta)
    p = SystemParams(omega2=1.0, kappa=0.3, delta=0.8, eta=2.0)
    traj = simulate(p, np.zeros(6), vacuum_cm(), 80.0, 20.0, rtol=1e-10, atol=1e-12)
    a = traj.mean_state(len(traj) - 1).cavity_amplitude()
    expected = p.eta / (p.kappa - 1j * p.delta)
    assert a.real == pytest.approx(expected.real, abs=1e-8)
    assert a.imag == pytest.approx(expected.imag, abs=1e-8)


def test_simulate_frozen_drift_reaches_lyapunov_solution():
    # mechanics decoupled (g = 0): constant drift, V converges to the algebraic solution
    p = SystemParams(
        omega1=1.0, omega2=0.9, gamma1=0.2, gamma2=0.3, kappa=0.5, delta=0.4
    )
    a = drift_matrix(p, np.zeros(6))
    d = diffusion_matrix(p)
    v0 = np.diag([3.0, 0.2, 1.0, 1.0, 0.5, 0.5])
    traj = simulate(p, np.zeros(6), v0, 120.0, 40.0, rtol=1e-10, atol=1e-12)
    v_oracle = kron_lyapunov_solve(a, d)
    err = np.linalg.norm(traj.covs[-1] - v_oracle) / np.linalg.norm(v_oracle)
    assert err < 1e-6


def test_simulate_rejects_bad_arguments():
    p = SystemParams()
    with pytest.raises(ValueError):
        simulate(p, np.zeros(6), vacuum_cm(), -1.0, 1.0)
    with pytest.raises(ValueError):
        simulate(p, np.zeros(6), vacuum_cm(), 1.0, 0.0)
    with pytest.raises(ValueError):
        simulate(p, np.zeros(6), np.eye(4), 1.0, 1.0)


def test_simulation_error_carries_time():
    err = SimulationError(3.25, "boom")
    assert err.t == 3.25
    assert "3.25" in str(err)
