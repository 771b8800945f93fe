import numpy as np
import pytest

from nmqaoa.lindblad import (
    ControlSchedule, MasterIntegrator, SolverConfig, closed_state,
    evolve_piecewise, lindblad_rhs,
)
from nmqaoa.model import LorentzianMode, build_augmented_model
from nmqaoa.operators import expm_propagator, trace_distance
from nmqaoa.rng import trajectory_seed
from nmqaoa.trajectory import (
    StepSizeError, TrajectoryConfig, _PiecewiseEngine, effective_hamiltonian,
    ensemble_average, run_ensemble, run_trajectory, trajectory_step,
)

LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
RAISE = np.array([[0, 0], [1, 0]], dtype=complex)


def toy_model(kappa=1.0, levels=3, n_qubits=1, sparse=False):
    return build_augmented_model(
        n_qubits, [LorentzianMode(10.0, 0.6, kappa, levels=levels)],
        sparse=sparse)


def plus_state(n):
    return np.full(2 ** n, 2.0 ** (-n / 2), dtype=np.complex128)


# ------------------------------------------------------- effective H


def test_effective_hamiltonian_no_jumps():
    h = np.diag([1.0, -1.0]).astype(complex)
    np.testing.assert_array_equal(effective_hamiltonian(h, []), h)


def test_effective_hamiltonian_decay_spectrum():
    model = toy_model(kappa=1.0, levels=4)
    h_p = np.diag([0.5, -0.5]).astype(complex)
    h_e = effective_hamiltonian(model.h_total(h_p), model.jump_ops)
    np.testing.assert_allclose((h_e + h_e.conj().T) / 2, model.h_total(h_p),
                               atol=1e-12)
    anti = (h_e - h_e.conj().T) / (-1j)
    eig = np.sort(np.linalg.eigvalsh(anti))
    expected = np.sort(np.kron(np.ones(2), 0.6 * np.arange(4)))
    np.testing.assert_allclose(eig, expected, atol=1e-10)


def test_engine_diagonal_shortcut_matches_general_form():
    model = toy_model(kappa=0.8, levels=3, n_qubits=2)
    h_p = np.diag([0.4, -0.1, 0.2, -0.5]).astype(complex)
    eng = _PiecewiseEngine(h_p, np.eye(4, dtype=complex), model, 1e-3)
    ref = effective_hamiltonian(model.h_total(h_p), model.jump_ops)
    np.testing.assert_allclose(eng.h_e[0], ref, atol=1e-12)


def test_effective_hamiltonian_sparse_matches_dense():
    dense = toy_model(kappa=0.8, levels=3)
    sparse = toy_model(kappa=0.8, levels=3, sparse=True)
    h_p = np.diag([0.5, -0.5]).astype(complex)
    d = effective_hamiltonian(dense.h_total(h_p), dense.jump_ops)
    s = effective_hamiltonian(sparse.h_total(h_p), sparse.jump_ops)
    np.testing.assert_allclose(s.toarray(), d, atol=1e-12)


# ------------------------------------------------------- single steps


def test_vacuum_never_jumps():
    model = toy_model()
    h_e = effective_hamiltonian(model.h_total(np.diag([0.5, -0.5])),
                                model.jump_ops)
    phi = model.initial_phi(np.array([1.0, 0.0]))
    out = trajectory_step(phi, h_e, model.jump_ops, 1e-3, r1=0.0, r2=0.7)
    ref = expm_propagator(h_e, 1e-3) @ phi
    np.testing.assert_allclose(out, ref / np.linalg.norm(ref), atol=1e-12)


def test_jump_resets_excited_ancilla():
    model = toy_model(levels=2)
    phi = np.zeros(4, dtype=complex)
    phi[1] = 1.0  # qubit |0>, ancilla |1>
    h_e = effective_hamiltonian(model.h_total(np.zeros((2, 2))), model.jump_ops)
    out = trajectory_step(phi, h_e, model.jump_ops, 1e-3, r1=0.0, r2=0.3)
    expected = np.zeros(4, dtype=complex)
    expected[0] = 1.0  # qubit |0>, ancilla |0>
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_channel_selection_prefix_rule():
    # delta_p = (0.02, 0.01): r2=0.5 targets 0.015 -> first channel;
    # r2=0.9 targets 0.027 -> second channel
    phi = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    jumps = [(LOWER, 0.4), (RAISE, 0.2)]
    h_e = np.zeros((2, 2), dtype=complex)
    out = trajectory_step(phi, h_e, jumps, 0.1, r1=0.01, r2=0.5)
    np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-12)
    out = trajectory_step(phi, h_e, jumps, 0.1, r1=0.01, r2=0.9)
    np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-12)


def test_step_size_guard():
    phi = np.array([0.0, 1.0], dtype=complex)
    with pytest.raises(StepSizeError):
        trajectory_step(phi, np.zeros((2, 2)), [(LOWER, 1.0)], 0.5,
                        r1=0.5, r2=0.5)


# ------------------------------------------------------- full trajectories


def test_closed_limit_and_seed_determinism():
    model = toy_model(kappa=0.0, levels=2)
    h = np.diag([0.5, -0.5]).astype(complex)
    h_mix = np.array([[0, 1], [1, 0]], dtype=complex)
    sched = ControlSchedule(((0.4, 0.3),))
    phi0 = model.initial_phi(plus_state(1))
    a = run_trajectory(phi0, sched, h, h_mix, model, 1e-3, seed=9)
    b = run_trajectory(phi0, sched, h, h_mix, model, 1e-3, seed=9)
    np.testing.assert_array_equal(a, b)
    closed = model.initial_phi(closed_state(plus_state(1), sched, h, h_mix))
    np.testing.assert_allclose(a, closed, atol=1e-9)


def test_ensemble_tracks_master_equation():
    model = toy_model(kappa=1.0, levels=3)
    h = np.diag([0.5, -0.5]).astype(complex)
    h_mix = np.array([[0, 1], [1, 0]], dtype=complex)
    sched = ControlSchedule(((0.8, 0.5),))
    phi0 = model.initial_phi(plus_state(1))
    cfg = TrajectoryConfig(n_traj=256, dt=1e-3, base_seed=11)
    res = run_ensemble(phi0, sched, h, h_mix, model, cfg, full_rho=True,
                       record_segments=True)
    rho0 = model.initial_rho(np.outer(plus_state(1), plus_state(1)))
    rho_m, rho_p_m = evolve_piecewise(rho0, sched, h, h_mix, model,
                                      SolverConfig(dt=1e-3))
    bound = 2.5 / np.sqrt(cfg.n_traj) + 10 * cfg.dt
    assert trace_distance(res.rho, rho_m) <= bound
    assert trace_distance(res.rho_p, rho_p_m) <= bound
    assert abs(np.trace(res.rho_p).real - 1.0) < 1e-9
    assert np.abs(res.rho_p - res.rho_p.conj().T).max() < 1e-12
    assert len(res.per_traj) == 256
    assert res.per_traj[5][0] == trajectory_seed(11, 5)
    assert len(res.segment_rho_p) == 2
    for seg in res.segment_rho_p:
        assert abs(np.trace(seg).real - 1.0) < 1e-9


def test_jump_counts_scale_with_coupling_and_duration():
    # near-resonant mode so the ancilla actually populates within a few ns
    h = np.diag([0.5, -0.5]).astype(complex)
    h_mix = np.array([[0, 1], [1, 0]], dtype=complex)

    def mean_jumps(kappa, total):
        model = build_augmented_model(
            1, [LorentzianMode(1.0, 0.6, kappa, levels=4)])
        phi0 = model.initial_phi(plus_state(1))
        sched = ControlSchedule(((total / 2, total / 2),))
        cfg = TrajectoryConfig(n_traj=64, dt=1e-3, base_seed=4)
        res = run_ensemble(phi0, sched, h, h_mix, model, cfg)
        return float(np.mean([j for _, j in res.per_traj]))

    assert mean_jumps(0.0, 4.0) == 0.0
    assert mean_jumps(4.0, 4.0) > mean_jumps(1.0, 4.0)
    assert mean_jumps(4.0, 4.0) > mean_jumps(4.0, 1.0)


def test_worker_count_does_not_change_result():
    model = toy_model(kappa=1.0, levels=3)
    h = np.diag([0.5, -0.5]).astype(complex)
    h_mix = np.array([[0, 1], [1, 0]], dtype=complex)
    sched = ControlSchedule(((0.3, 0.2),))
    phi0 = model.initial_phi(plus_state(1))
    cfg = TrajectoryConfig(n_traj=130, dt=1e-3, base_seed=3)
    one = run_ensemble(phi0, sched, h, h_mix, model, cfg, workers=1,
                       energy_h=h)
    two = run_ensemble(phi0, sched, h, h_mix, model, cfg, workers=2,
                       energy_h=h)
    np.testing.assert_array_equal(one.rho_p, two.rho_p)
    assert one.std_err_estimate == two.std_err_estimate
    assert one.per_traj == two.per_traj


def test_sparse_engine_matches_dense_engine():
    h = np.diag([0.5, -0.5]).astype(complex)
    h_mix = np.array([[0, 1], [1, 0]], dtype=complex)
    sched = ControlSchedule(((0.4, 0.3),))
    cfg = TrajectoryConfig(n_traj=64, dt=1e-3, base_seed=8)
    dense = toy_model(kappa=1.0, levels=3)
    sparse = toy_model(kappa=1.0, levels=3, sparse=True)
    rd = run_ensemble(dense.initial_phi(plus_state(1)), sched, h, h_mix,
                      dense, cfg)
    rs = run_ensemble(sparse.initial_phi(plus_state(1)), sched, h, h_mix,
                      sparse, cfg)
    np.testing.assert_allclose(rs.rho_p, rd.rho_p, atol=1e-6)
    assert [j for _, j in rs.per_traj] == [j for _, j in rd.per_traj]


# ------------------------------------------------------- averaging


def test_ensemble_average_basics():
    e0, e1 = np.eye(2, dtype=complex)
    res = ensemble_average([e0, e1])
    np.testing.assert_allclose(res.rho, np.eye(2) / 2, atol=1e-15)
    res = ensemble_average([e0] * 5)
    np.testing.assert_allclose(res.rho, np.outer(e0, e0), atol=1e-15)
    with pytest.raises(ValueError):
        ensemble_average([])


def test_ensemble_average_std_err():
    e0, e1 = np.eye(2, dtype=complex)
    res = ensemble_average([e0, e1], h=np.diag([1.0, -1.0]))
    # energies {1, -1}: sample std sqrt(2), over sqrt(2) trajectories
    assert res.std_err_estimate == pytest.approx(1.0)


def test_one_step_mean_matches_generator_to_second_order():
    model = toy_model(kappa=1.0, levels=2)
    h_p = np.diag([0.5, -0.5]).astype(complex)
    h_tot = model.h_total(h_p)
    h_e = effective_hamiltonian(h_tot, model.jump_ops)
    qubit = np.array([0.8, 0.6], dtype=complex)
    anc = np.array([0.6, 0.8], dtype=complex)
    phi = np.kron(qubit, anc)
    rho = np.outer(phi, phi.conj())

    def one_step_error(dt):
        dp = dt * model.jump_ops[0][1] * 0.64  # gamma <n> with |c1|^2 = 0.64
        no_jump = trajectory_step(phi, h_e, model.jump_ops, dt, r1=0.999, r2=0.0)
        jump = trajectory_step(phi, h_e, model.jump_ops, dt, r1=0.0, r2=0.0)
        mean = ((1 - dp) * np.outer(no_jump, no_jump.conj())
                + dp * np.outer(jump, jump.conj()))
        first_order = rho + dt * lindblad_rhs(rho, h_tot, model.jump_ops)
        return np.abs(mean - first_order).max()

    ratio = one_step_error(1e-3) / one_step_error(1e-4)
    assert 50 < ratio < 200


def test_trajectory_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(n_traj=0)
    with pytest.raises(ValueError):
        TrajectoryConfig(n_traj=10, dt=0.0)
