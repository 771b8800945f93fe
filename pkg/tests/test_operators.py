import numpy as np
import pytest

from nmqaoa.operators import (
    SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z,
    annihilation, embed_qubit_op, expm_propagator, kron, kron_all,
    partial_trace_ancilla, trace_distance,
)


def random_state(rng, dim):
    """Random density matrix (positive, unit trace)."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_kron_identities():
    np.testing.assert_array_equal(kron(SIGMA_I, SIGMA_I), np.eye(4))
    np.testing.assert_array_equal(kron(SIGMA_Z, SIGMA_I),
                                  np.diag([1, 1, -1, -1]).astype(complex))


def test_kron_sigma_x_sigma_y_entrywise():
    # hand expansion: [[0, -i], [i, 0]] blocks on the anti-diagonal
    expected = np.array([
        [0, 0, 0, -1j],
        [0, 0, 1j, 0],
        [0, -1j, 0, 0],
        [1j, 0, 0, 0],
    ])
    np.testing.assert_array_equal(kron(SIGMA_X, SIGMA_Y), expected)


def test_kron_associativity_random():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        np.testing.assert_allclose(kron(kron(a, b), c), kron(a, kron(b, c)),
                                   atol=1e-12)


def test_kron_all_matches_nested():
    rng = np.random.default_rng(3)
    ms = [rng.standard_normal((2, 2)) for _ in range(3)]
    np.testing.assert_allclose(kron_all(ms), kron(kron(ms[0], ms[1]), ms[2]))


def test_embed_qubit_op_shapes_and_placement():
    m = embed_qubit_op(SIGMA_X, 2, 3)
    assert m.shape == (8, 8)
    np.testing.assert_array_equal(m, kron_all([SIGMA_I, SIGMA_X, SIGMA_I]))
    np.testing.assert_array_equal(embed_qubit_op(SIGMA_Z, 1, 1), SIGMA_Z)


def test_embed_qubit_op_rightmost_acts_on_fast_index():
    # (sigma_y at qubit 3 of 3) |000> = i |001>
    psi = np.zeros(8, dtype=complex)
    psi[0] = 1.0
    out = embed_qubit_op(SIGMA_Y, 3, 3) @ psi
    expected = np.zeros(8, dtype=complex)
    expected[0b001] = 1j
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_embed_qubit_op_index_range():
    with pytest.raises(ValueError):
        embed_qubit_op(SIGMA_X, 0, 2)
    with pytest.raises(ValueError):
        embed_qubit_op(SIGMA_X, 3, 2)


def test_annihilation_small_truncations():
    np.testing.assert_array_equal(annihilation(2), np.array([[0, 1], [0, 0]]))
    np.testing.assert_allclose(annihilation(3),
                               np.array([[0, 1, 0], [0, 0, np.sqrt(2)], [0, 0, 0]]))
    a = annihilation(8)
    np.testing.assert_allclose(a.conj().T @ a, np.diag(np.arange(8.0)), atol=1e-14)
    with pytest.raises(ValueError):
        annihilation(1)


def test_partial_trace_product_state():
    rng = np.random.default_rng(11)
    rho_p = random_state(rng, 4)
    rho_a = random_state(rng, 3)
    np.testing.assert_allclose(partial_trace_ancilla(kron(rho_p, rho_a), 4, 3),
                               rho_p, atol=1e-12)


def test_partial_trace_bell_state():
    # (|0>|0> + |1>|1>)/sqrt(2) on qubit (x) 2-level ancilla -> I/2
    psi = np.zeros(4, dtype=complex)
    psi[0b00] = psi[0b11] = 1 / np.sqrt(2)
    rho = np.outer(psi, psi.conj())
    np.testing.assert_allclose(partial_trace_ancilla(rho, 2, 2), np.eye(2) / 2,
                               atol=1e-14)


def test_partial_trace_preserves_trace_and_positivity():
    rng = np.random.default_rng(5)
    for _ in range(10):
        rho = random_state(rng, 8)
        out = partial_trace_ancilla(rho, 4, 2)
        assert abs(np.trace(out) - 1) < 1e-10
        assert np.linalg.eigvalsh(out).min() >= -1e-9


def test_partial_trace_linear():
    rng = np.random.default_rng(6)
    r1, r2 = random_state(rng, 6), random_state(rng, 6)
    lhs = partial_trace_ancilla(0.3 * r1 + 0.7 * r2, 2, 3)
    rhs = 0.3 * partial_trace_ancilla(r1, 2, 3) + 0.7 * partial_trace_ancilla(r2, 2, 3)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValueError):
        partial_trace_ancilla(np.eye(6), 4, 2)


def test_trace_distance_reference_values():
    zero = np.diag([1.0, 0.0]).astype(complex)
    one = np.diag([0.0, 1.0]).astype(complex)
    plus = np.full((2, 2), 0.5, dtype=complex)
    assert trace_distance(zero, zero) == 0.0
    assert abs(trace_distance(zero, one) - 1.0) < 1e-12
    assert abs(trace_distance(plus, zero) - 1 / np.sqrt(2)) < 1e-10


def test_trace_distance_symmetry_and_triangle():
    rng = np.random.default_rng(9)
    for _ in range(10):
        a, b, c = (random_state(rng, 4) for _ in range(3))
        dab, dba = trace_distance(a, b), trace_distance(b, a)
        assert abs(dab - dba) < 1e-9
        assert trace_distance(a, c) <= dab + trace_distance(b, c) + 1e-9


def test_trace_distance_rejects_non_hermitian():
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(ValueError):
        trace_distance(bad, np.eye(2) / 2)


def test_expm_propagator_closed_forms():
    np.testing.assert_allclose(expm_propagator(np.zeros((3, 3)), 0.7), np.eye(3),
                               atol=1e-12)
    np.testing.assert_allclose(expm_propagator(SIGMA_X, np.pi), -np.eye(2),
                               atol=1e-8)
    np.testing.assert_allclose(expm_propagator(SIGMA_Z, 0.5),
                               np.diag([np.exp(-0.5j), np.exp(0.5j)]), atol=1e-12)


def test_expm_propagator_unitary_and_composes():
    rng = np.random.default_rng(21)
    h = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    h = h + h.conj().T
    u1, u2 = expm_propagator(h, 0.3), expm_propagator(h, 0.45)
    np.testing.assert_allclose(u1 @ u1.conj().T, np.eye(6), atol=1e-8)
    np.testing.assert_allclose(u1 @ u2, expm_propagator(h, 0.75), atol=1e-8)
