"""Augmented system: qubits + damped oscillator modes as a colored bath.

Each mode f realizes one Lorentzian S_f(w) = kappa_f (gamma_f^2/4) /
(gamma_f^2/4 + (w - omega_af)^2) through a damped oscillator (jump a_f at
rate gamma_f, fictitious output c_af = -(sqrt(gamma_f)/2) a_f) coupled to the
collective qubit operator Z_f = sqrt(kappa_f) sum_theta sigma^y_theta via
H_pa = sum_f i(c_af^dag Z_f - Z_f^dag c_af).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .operators import SIGMA_Y, annihilation, embed_qubit_op, kron_all

DIM_LIMIT = 2 ** 16


@dataclass(frozen=True)
class LorentzianMode:
    omega_a: float  # center frequency, GHz
    gamma: float    # linewidth / oscillator damping, GHz
    kappa: float    # coupling strength (peak spectral height), GHz
    levels: int = 8

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.levels < 2:
            raise ValueError("levels must be >= 2")

    def to_dict(self) -> dict:
        return {"omega_a": self.omega_a, "gamma": self.gamma,
                "kappa": self.kappa, "levels": self.levels}

    @classmethod
    def from_dict(cls, doc: dict) -> "LorentzianMode":
        return cls(omega_a=float(doc["omega_a"]), gamma=float(doc["gamma"]),
                   kappa=float(doc["kappa"]), levels=int(doc.get("levels", 8)))


@dataclass
class AugmentedModel:
    n_qubits: int
    modes: tuple
    dim_p: int
    dim_a: int
    h_a: object            # ancilla Hamiltonian, embedded in the full space
    h_pa: object           # qubit-ancilla interaction, full space
    jump_ops: list         # [(L_f embedded, gamma_f)]
    sparse: bool = False
    # per-mode (pre, levels, post) factorization of the ancilla space and the
    # embedded number-operator diagonals; these let the solvers apply the
    # dissipator with O(dim^2) index shifts instead of matmuls
    mode_layout: list = field(default_factory=list)
    number_diags: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.dim_p * self.dim_a

    def h_total(self, h_p):
        """(h_p ⊗ I_a) + H_a + H_pa for the current control segment."""
        if self.sparse:
            hp = sp.kron(sp.csr_matrix(h_p), sp.identity(self.dim_a, format="csr"),
                         format="csr")
            return (hp + self.h_a + self.h_pa).tocsr()
        return np.kron(np.asarray(h_p), np.eye(self.dim_a)) + self.h_a + self.h_pa

    def decay_diagonal(self) -> np.ndarray:
        """diag(sum_f gamma_f L_f^dag L_f), a real vector on the full space."""
        out = np.zeros(self.dim)
        for (_, gamma), nvec in zip(self.jump_ops, self.number_diags):
            out = out + gamma * nvec
        return out

    def vacuum_ancilla_rho(self) -> np.ndarray:
        rho_a = np.zeros((self.dim_a, self.dim_a), dtype=np.complex128)
        rho_a[0, 0] = 1.0
        return rho_a

    def initial_rho(self, rho_p: np.ndarray) -> np.ndarray:
        """rho_p ⊗ |vac><vac| on the full space."""
        return np.kron(np.asarray(rho_p, dtype=np.complex128),
                       self.vacuum_ancilla_rho())

    def initial_phi(self, phi_p: np.ndarray) -> np.ndarray:
        vac = np.zeros(self.dim_a, dtype=np.complex128)
        vac[0] = 1.0
        return np.kron(np.asarray(phi_p, dtype=np.complex128), vac)


def _embed_ancilla(op, mode_index: int, levels_list, dim_p: int, sparse: bool):
    """dim_p identity ⊗ (I_pre ⊗ op ⊗ I_post) over the ancilla mode factors."""
    pre = int(np.prod(levels_list[:mode_index], initial=1))
    post = int(np.prod(levels_list[mode_index + 1:], initial=1))
    if sparse:
        out = sp.kron(sp.identity(dim_p * pre, format="csr"), sp.csr_matrix(op),
                      format="csr")
        return sp.kron(out, sp.identity(post, format="csr"), format="csr")
    return kron_all([np.eye(dim_p * pre), op, np.eye(post)])


def build_augmented_model(n_qubits: int, modes, sparse: bool = False) -> AugmentedModel:
    """Assemble H_a, H_pa and the jump operators on the full tensor space."""
    modes = tuple(modes)
    if not 1 <= n_qubits <= 12:
        raise ValueError("n_qubits must be in 1..12")
    if len(modes) < 1:
        raise ValueError("need at least one mode")
    levels_list = [m.levels for m in modes]
    dim_p = 2 ** n_qubits
    dim_a = int(np.prod(levels_list))
    dim = dim_p * dim_a
    if dim > DIM_LIMIT:
        raise ValueError(f"augmented dimension {dim} exceeds limit {DIM_LIMIT}")

    sigma_y_sum = sum(embed_qubit_op(SIGMA_Y, q, n_qubits)
                      for q in range(1, n_qubits + 1))
    eye_a = sp.identity(dim_a, format="csr") if sparse else np.eye(dim_a)

    h_a = None
    h_pa = None
    jump_ops = []
    mode_layout = []
    number_diags = []
    for f, mode in enumerate(modes):
        a = annihilation(mode.levels)
        a_emb = _embed_ancilla(a, f, levels_list, dim_p, sparse)
        num_local = np.arange(mode.levels, dtype=float)
        pre = int(np.prod(levels_list[:f], initial=1))
        post = int(np.prod(levels_list[f + 1:], initial=1))
        nvec = np.kron(np.ones(dim_p * pre), np.kron(num_local, np.ones(post)))

        # H_a term: omega_a * a^dag a, diagonal on the mode factor
        ha_local = mode.omega_a * np.diag(num_local)
        ha_emb = _embed_ancilla(ha_local, f, levels_list, dim_p, sparse)
        h_a = ha_emb if h_a is None else h_a + ha_emb

        # H_pa term: i(c^dag z - z^dag c) with c = -(sqrt(gamma)/2) a and
        # z = sqrt(kappa) sum sigma^y; z Hermitian, so this collapses to
        # sqrt(kappa gamma)/2 * z ⊗ [-i(a^dag - a)]
        z_p = np.sqrt(mode.kappa) * sigma_y_sum
        p_quad = -1j * (a.conj().T - a) * (np.sqrt(mode.gamma) / 2.0)
        p_emb_a = _embed_ancilla(
            p_quad, f, levels_list, 1, sparse)  # ancilla-only embedding
        if sparse:
            hpa_f = sp.kron(sp.csr_matrix(z_p), p_emb_a, format="csr")
        else:
            hpa_f = np.kron(z_p, p_emb_a)
        h_pa = hpa_f if h_pa is None else h_pa + hpa_f

        jump_ops.append((a_emb, mode.gamma))
        mode_layout.append((dim_p * pre, mode.levels, post))
        number_diags.append(nvec)

    if sparse:
        h_a = h_a.tocsr()
        h_pa = h_pa.tocsr()
    return AugmentedModel(n_qubits=n_qubits, modes=modes, dim_p=dim_p,
                          dim_a=dim_a, h_a=h_a, h_pa=h_pa, jump_ops=jump_ops,
                          sparse=sparse, mode_layout=mode_layout,
                          number_diags=number_diags)


def spectrum_value(modes, omega: float) -> float:
    """S(w) = sum_f kappa_f (gamma_f^2/4) / (gamma_f^2/4 + (w - omega_af)^2)."""
    total = 0.0
    for m in modes:
        hw = m.gamma ** 2 / 4.0
        total += m.kappa * hw / (hw + (omega - m.omega_a) ** 2)
    return total


def transfer_function_gain(mode: LorentzianMode, omega: float) -> float:
    """|Gamma(-i w)|^2 for one mode: Lorentzian of unit peak height."""
    hw = mode.gamma ** 2 / 4.0
    return hw / (hw + (omega - mode.omega_a) ** 2)
