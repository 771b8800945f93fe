"""Master-equation integration under piecewise-constant Hamiltonian control.

The evolution alternates the cost Hamiltonian (duration zeta_j) and the mixer
(duration beta_j) while the dissipative part stays fixed.  Integration is
fixed-step RK4 in the lab frame; the last step of each segment is shortened so
the trajectory lands exactly on the segment boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import expm_propagator, partial_trace_ancilla


@dataclass(frozen=True)
class ControlSchedule:
    """Interleaved control durations ((zeta_1, beta_1), ..., (zeta_P, beta_P)), ns."""
    pairs: tuple

    def __post_init__(self):
        pairs = tuple((float(z), float(b)) for z, b in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        flat = [d for pair in pairs for d in pair]
        if not all(np.isfinite(flat)):
            raise ValueError("durations must be finite")
        if any(d < 0 for d in flat):
            raise ValueError("durations must be >= 0")

    @property
    def depth(self) -> int:
        return len(self.pairs)

    @property
    def effective_depth(self) -> int:
        return sum(1 for z, b in self.pairs if z + b > 0)

    def to_flat(self) -> np.ndarray:
        return np.array([d for pair in self.pairs for d in pair], dtype=float)

    @classmethod
    def from_flat(cls, values) -> "ControlSchedule":
        values = list(values)
        if len(values) % 2 != 0 or not values:
            raise ValueError("flat schedule must have positive even length")
        return cls(tuple(zip(values[0::2], values[1::2])))

    def l1(self) -> float:
        return float(self.to_flat().sum())


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3  # ns; fixed-step RK4

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be > 0")


def _dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def segment_steps(duration: float, dt: float):
    """(n_full, rem): full dt steps plus one shortened step landing on duration."""
    n_full = int(np.floor(duration / dt + 1e-9))
    rem = duration - n_full * dt
    if rem <= dt * 1e-6:
        rem = 0.0
    return n_full, rem


def lindblad_rhs(rho: np.ndarray, h_total: np.ndarray, jumps) -> np.ndarray:
    """-i[H, rho] + sum_f gamma_f (L rho L^dag - {L^dag L, rho}/2).

    Literal form, used as the reference generator in tests and small studies;
    the production stepper below applies the same map with fewer products.
    """
    out = -1j * (h_total @ rho - rho @ h_total)
    for L, gamma in jumps:
        Ld = L.conj().T
        LdL = Ld @ L
        out = out + gamma * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
    return out


class MasterIntegrator:
    """RK4 stepper for one fixed Lindblad generator.

    The Hamiltonian and decay parts are folded into a single effective
    operator h_e = H - (i/2) sum gamma L^dag L, so each stage costs one
    matrix product: for Hermitian rho, rho h_e^dag = (h_e rho)^dag.  Lowering
    operators of oscillator modes enter the refilling term through index
    shifts on the Fock axes (O(dim^2)); any other channel falls back to the
    explicit L rho L^dag products.

    Accepts batched states of shape (..., dim, dim).
    """

    def __init__(self, h_total, jumps=(), fock_modes=(), decay_diag=None):
        h_e = np.array(h_total, dtype=np.complex128)
        self._jumps = []
        for L, gamma in jumps:
            L = np.asarray(L, dtype=np.complex128)
            h_e = h_e - 0.5j * gamma * (L.conj().T @ L)
            self._jumps.append((L, L.conj().T, float(gamma)))
        if decay_diag is not None:
            idx = np.diag_indices(h_e.shape[0])
            h_e[idx] = h_e[idx] - 0.5j * np.asarray(decay_diag)
        self.h_e = h_e
        self.dim = h_e.shape[0]
        self._fock = []
        for pre, lev, post, gamma in fock_modes:
            sq = np.sqrt(np.arange(1, lev))
            w = gamma * sq[:, None, None, None, None] * sq[None, None, None, :, None]
            self._fock.append((pre, lev, post, w))

    @classmethod
    def for_model(cls, model, h_p) -> "MasterIntegrator":
        """Generator of the qubits+modes system for one control Hamiltonian."""
        fock = [(pre, lev, post, gamma)
                for (pre, lev, post), (_, gamma)
                in zip(model.mode_layout, model.jump_ops)]
        return cls(model.h_total(h_p), fock_modes=fock,
                   decay_diag=model.decay_diagonal())

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        a = self.h_e @ rho
        out = -1j * (a - _dag(a))
        for L, Ld, gamma in self._jumps:
            out += gamma * (L @ rho @ Ld)
        if self._fock:
            batch = rho.shape[:-2]
            for pre, lev, post, w in self._fock:
                shape6 = batch + (pre, lev, post, pre, lev, post)
                r6 = np.ascontiguousarray(rho).reshape(shape6)
                o6 = out.reshape(shape6)
                o6[..., :, :-1, :, :, :-1, :] += w * r6[..., :, 1:, :, :, 1:, :]
        return out

    def step(self, rho: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs(rho)
        k2 = self.rhs(rho + (0.5 * dt) * k1)
        k3 = self.rhs(rho + (0.5 * dt) * k2)
        k4 = self.rhs(rho + dt * k3)
        return rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

    def evolve(self, rho: np.ndarray, duration: float, dt: float) -> np.ndarray:
        if duration <= 0:
            return rho
        n_full, rem = segment_steps(duration, dt)
        for _ in range(n_full):
            rho = self.step(rho, dt)
        if rem:
            rho = self.step(rho, rem)
        return rho


def build_piecewise_integrators(model, h, h_mix):
    """(cost, mixer) integrators; reusable across segments and evaluations."""
    return (MasterIntegrator.for_model(model, h),
            MasterIntegrator.for_model(model, h_mix))


def evolve_segment(rho, h_p, model, duration: float, cfg: SolverConfig):
    """One constant-Hamiltonian stretch of the augmented master equation."""
    if duration <= 0:
        return rho
    return MasterIntegrator.for_model(model, h_p).evolve(rho, duration, cfg.dt)


def evolve_piecewise(rho0, schedule: ControlSchedule, h, h_mix, model,
                     cfg: SolverConfig, integrators=None):
    """Alternate cost/mixer segments; return (final rho, reduced rho_p)."""
    if schedule.depth == 0:
        raise ValueError("schedule is empty")
    if integrators is None:
        integrators = build_piecewise_integrators(model, h, h_mix)
    cost, mix = integrators
    rho = np.array(rho0, dtype=np.complex128)
    for zeta, beta in schedule.pairs:
        rho = cost.evolve(rho, zeta, cfg.dt)
        rho = mix.evolve(rho, beta, cfg.dt)
    return rho, partial_trace_ancilla(rho, model.dim_p, model.dim_a)


def evolve_markovian(rho_p0, schedule: ControlSchedule, h, h_mix, rates,
                     cfg: SolverConfig, integrators=None):
    """Same alternation with memoryless channels acting on the qubits only."""
    if schedule.depth == 0:
        raise ValueError("schedule is empty")
    if integrators is None:
        integrators = (MasterIntegrator(h, jumps=rates),
                       MasterIntegrator(h_mix, jumps=rates))
    cost, mix = integrators
    rho = np.array(rho_p0, dtype=np.complex128)
    for zeta, beta in schedule.pairs:
        rho = cost.evolve(rho, zeta, cfg.dt)
        rho = mix.evolve(rho, beta, cfg.dt)
    return rho


def closed_state(phi0: np.ndarray, schedule: ControlSchedule, h,
                 h_mix) -> np.ndarray:
    """Dissipation-free product of segment propagators applied to phi0."""
    phi = np.asarray(phi0, dtype=np.complex128)
    for zeta, beta in schedule.pairs:
        if zeta > 0:
            phi = expm_propagator(h, zeta) @ phi
        if beta > 0:
            phi = expm_propagator(h_mix, beta) @ phi
    return phi
