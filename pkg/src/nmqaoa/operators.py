"""Dense operator primitives shared by all solver modules.

Conventions used package-wide: tensor factors are ordered principal system
first, ancilla last; qubit 1 is the leftmost (slowest) Kronecker factor;
frequencies are in GHz and durations in ns with hbar = 1, so phase =
frequency * time (1 GHz * 1 ns = 1 rad).
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm as _expm

SIGMA_I = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

HERMITIAN_ATOL = 1e-10


def kron(a, b) -> np.ndarray:
    """Kronecker product; the left factor carries the slow index."""
    return np.kron(np.asarray(a, dtype=np.complex128),
                   np.asarray(b, dtype=np.complex128))


def kron_all(ops) -> np.ndarray:
    """Left-to-right Kronecker chain."""
    out = np.asarray(ops[0], dtype=np.complex128)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def embed_qubit_op(op, index: int, n_qubits: int) -> np.ndarray:
    """I ⊗ ... ⊗ op ⊗ ... ⊗ I with the 2x2 `op` at 1-based qubit `index`."""
    if not 1 <= index <= n_qubits:
        raise ValueError(f"qubit index {index} out of range 1..{n_qubits}")
    factors = [SIGMA_I] * n_qubits
    factors[index - 1] = np.asarray(op, dtype=np.complex128)
    return kron_all(factors)


def annihilation(levels: int) -> np.ndarray:
    """Truncated bosonic lowering operator, a|n> = sqrt(n)|n-1>."""
    if levels < 2:
        raise ValueError("Fock truncation needs at least 2 levels")
    return np.diag(np.sqrt(np.arange(1.0, levels)), k=1).astype(np.complex128)


def partial_trace_ancilla(rho, dim_p: int, dim_a: int) -> np.ndarray:
    """Trace out the trailing dim_a-dimensional ancilla factor."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (dim_p * dim_a, dim_p * dim_a):
        raise ValueError(
            f"density matrix shape {rho.shape} incompatible with "
            f"dim_p={dim_p}, dim_a={dim_a}")
    return np.einsum("imjm->ij", rho.reshape(dim_p, dim_a, dim_p, dim_a))


def trace_distance(rho1, rho2, herm_atol: float = 1e-8) -> float:
    """T = (1/2) sum |eig(rho1 - rho2)|, valid for Hermitian inputs."""
    delta = np.asarray(rho1) - np.asarray(rho2)
    defect = np.abs(delta - delta.conj().T).max()
    if defect > herm_atol:
        raise ValueError(f"inputs non-Hermitian beyond tolerance ({defect:.3e})")
    # difference of Hermitian matrices: eigendecomposition is exact here,
    # no need for singular values
    return 0.5 * float(np.abs(np.linalg.eigvalsh(delta)).sum())


def expm_propagator(h, dt: float) -> np.ndarray:
    """e^{-i h dt} by scaling-and-squaring Pade (scipy); h may be non-Hermitian."""
    return _expm(-1j * dt * np.asarray(h, dtype=np.complex128))
