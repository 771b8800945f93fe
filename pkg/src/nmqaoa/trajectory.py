"""Monte Carlo wave-function unraveling of the augmented master equation.

Between jumps a trajectory follows the non-Hermitian generator
H_e = H_total - (i/2) sum_f gamma_f L_f^dag L_f; at each step dt two uniforms
(r1, r2) decide no-jump versus jump and, on a jump, which channel fires.
Jump probabilities use the first-order formula delta_p_f = dt gamma_f
<phi|L_f^dag L_f|phi>, guarded by delta_p <= 0.1.

Averaged over trajectories the normalized projectors reproduce the master
equation to O(dt^2) per step and O(1/sqrt(N)) statistically.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import parallel
from .lindblad import segment_steps
from .operators import expm_propagator
from .rng import pair_generator, trajectory_seed

CHUNK = 64  # trajectories per work unit; fixed so results don't depend on workers


class StepSizeError(RuntimeError):
    """First-order jump probability left its validity range; dt is too large."""


@dataclass(frozen=True)
class TrajectoryConfig:
    n_traj: int
    dt: float = 1e-3
    base_seed: int = 0

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be > 0")


@dataclass
class TrajectoryEnsembleResult:
    rho: object                      # full-space average, when accumulated
    rho_p: np.ndarray                # reduced principal average
    per_traj: list                   # [(seed, jump_count)]
    std_err_estimate: float
    segment_rho_p: list = field(default=None, repr=False)


def effective_hamiltonian(h_total, jumps):
    """H_e = H_total - (i/2) sum_f gamma_f L_f^dag L_f (dense or sparse)."""
    if sp.issparse(h_total):
        h_e = h_total.astype(np.complex128)
        for L, gamma in jumps:
            h_e = h_e - 0.5j * gamma * (L.conj().T @ L)
        return h_e.tocsr()
    h_e = np.array(h_total, dtype=np.complex128)
    for L, gamma in jumps:
        L = np.asarray(L)
        h_e -= 0.5j * gamma * (L.conj().T @ L)
    return h_e


def _select_channel(dp_f: np.ndarray, dp_total: float, r2: float) -> int:
    """Inverse-CDF over channels sorted by descending probability.

    Stable sort keeps channel order on ties; the winner is the last channel
    of the smallest prefix whose cumulative weight reaches r2 * dp_total.
    """
    order = np.argsort(-dp_f, kind="stable")
    cum = np.cumsum(dp_f[order])
    pos = int(np.searchsorted(cum, r2 * dp_total, side="left"))
    return int(order[min(pos, len(order) - 1)])


def trajectory_step(phi, h_e, jumps, dt, r1, r2, propagator=None):
    """One stochastic step: renormalized no-jump propagation or one jump."""
    dp_f = np.array([dt * gamma * np.real(np.vdot(L @ phi, L @ phi))
                     for L, gamma in jumps])
    dp = float(dp_f.sum())
    if dp > 0.1:
        raise StepSizeError(f"jump probability {dp:.4f} exceeds 0.1; reduce dt")
    if r1 > dp or dp == 0.0:
        prop = propagator if propagator is not None else expm_propagator(h_e, dt)
        out = prop @ phi
    else:
        L, _ = jumps[_select_channel(dp_f, dp, r2)]
        out = L @ phi
    return out / np.linalg.norm(out)


class _PiecewiseEngine:
    """Everything fixed across trajectories for one (h, h_mix, model, dt).

    Dense models advance no-jump stretches with a precomputed propagator per
    control Hamiltonian (plus cached shortened-step variants); sparse models
    integrate the non-Hermitian Schrödinger equation with RK4 instead, which
    avoids any dim^2 dense object.  Jump bookkeeping is identical in both.
    """

    def __init__(self, h, h_mix, model, dt):
        self.model = model
        self.dt = float(dt)
        self.dim = model.dim
        self.sparse = bool(model.sparse)
        self.gammas = [gamma for _, gamma in model.jump_ops]
        self.nvecs = [np.asarray(v, dtype=float) for v in model.number_diags]
        self.layouts = list(model.mode_layout)
        self.sqrts = [np.sqrt(np.arange(1, lev)) for _, lev, _ in self.layouts]
        decay = model.decay_diagonal()
        h_es = []
        for h_p in (h, h_mix):
            ht = model.h_total(h_p)
            if self.sparse:
                h_es.append((ht - 0.5j * sp.diags(decay)).tocsr())
            else:
                he = np.array(ht, dtype=np.complex128)
                idx = np.diag_indices(self.dim)
                he[idx] -= 0.5j * decay
                h_es.append(he)
        self.h_e = h_es
        self.props = None if self.sparse else [expm_propagator(m, self.dt)
                                               for m in h_es]
        self._rem_props = {}

    @staticmethod
    def segments(schedule):
        segs = []
        for zeta, beta in schedule.pairs:
            segs.append((0, zeta))
            segs.append((1, beta))
        return segs

    def _propagator(self, kind, step_dt):
        if step_dt == self.dt:
            return self.props[kind]
        key = (kind, step_dt)
        if key not in self._rem_props:
            self._rem_props[key] = expm_propagator(self.h_e[kind], step_dt)
        return self._rem_props[key]

    def advance(self, phis, kind, step_dt):
        """Unnormalized no-jump propagation of stacked rows (B, dim)."""
        if not self.sparse:
            return phis @ self._propagator(kind, step_dt).T
        h_e = self.h_e[kind]

        def deriv(x):
            return -1j * (h_e @ x.T).T

        k1 = deriv(phis)
        k2 = deriv(phis + (0.5 * step_dt) * k1)
        k3 = deriv(phis + (0.5 * step_dt) * k2)
        k4 = deriv(phis + step_dt * k3)
        return phis + (step_dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

    def delta_ps(self, phis, step_dt):
        """(channels, B) first-order jump probabilities."""
        abs2 = phis.real ** 2 + phis.imag ** 2
        return np.stack([step_dt * g * (abs2 @ nvec)
                         for g, nvec in zip(self.gammas, self.nvecs)])

    def apply_jump(self, row, f):
        pre, lev, post = self.layouts[f]
        r3 = row.reshape(pre, lev, post)
        out = np.zeros_like(r3)
        out[:, :lev - 1, :] = self.sqrts[f][None, :, None] * r3[:, 1:, :]
        out = out.reshape(-1)
        return out / np.linalg.norm(out)

    def reduced_sum(self, phis):
        r = phis.reshape(phis.shape[0], self.model.dim_p, self.model.dim_a)
        return np.einsum("bpa,bqa->pq", r, r.conj())


def _step_block(engine, phis, kind, step_dt, r1, r2, jump_counts):
    dps = engine.delta_ps(phis, step_dt)
    dp = dps.sum(axis=0)
    worst = float(dp.max())
    if worst > 0.1:
        raise StepSizeError(f"jump probability {worst:.4f} exceeds 0.1; reduce dt")
    # zero-probability rows can't jump even when r1 == 0
    jump_rows = np.nonzero((r1 <= dp) & (dp > 0.0))[0]
    new = engine.advance(phis, kind, step_dt)
    new /= np.linalg.norm(new, axis=1, keepdims=True)
    for b in jump_rows:
        f = _select_channel(dps[:, b], float(dp[b]), float(r2[b]))
        new[b] = engine.apply_jump(phis[b], f)
        jump_counts[b] += 1
    return new


def _run_chunk(engine, phi0, segments, seeds, energy_h=None,
               record_segments=False, full_rho=False, return_states=False):
    B = len(seeds)
    phis = np.tile(np.asarray(phi0, dtype=np.complex128), (B, 1))
    gens = [pair_generator(s) for s in seeds]
    jump_counts = np.zeros(B, dtype=np.int64)
    seg_sums = [] if record_segments else None
    for kind, duration in segments:
        n_full, rem = segment_steps(duration, engine.dt)
        plan = [engine.dt] * n_full + ([rem] if rem else [])
        if plan:
            blocks = np.stack([g.random((len(plan), 2)) for g in gens])
            for si, step_dt in enumerate(plan):
                phis = _step_block(engine, phis, kind, step_dt,
                                   blocks[:, si, 0], blocks[:, si, 1],
                                   jump_counts)
        if record_segments:
            seg_sums.append(engine.reduced_sum(phis))
    out = {"sum_rho_p": engine.reduced_sum(phis), "jumps": jump_counts}
    if energy_h is not None:
        r = phis.reshape(B, engine.model.dim_p, engine.model.dim_a)
        hr = np.einsum("ij,bja->bia", energy_h, r)
        out["energies"] = np.real(np.einsum("bia,bia->b", r.conj(), hr))
    if record_segments:
        out["segment_sums"] = seg_sums
    if full_rho:
        out["sum_full"] = np.einsum("bi,bj->ij", phis, phis.conj())
    if return_states:
        out["phis"] = phis
    return out


def _chunk_task(task):
    start, size = task
    p = parallel.get_payload()
    seeds = [trajectory_seed(p["base_seed"], start + k) for k in range(size)]
    return _run_chunk(p["engine"], p["phi0"], p["segments"], seeds,
                      energy_h=p["energy_h"],
                      record_segments=p["record_segments"],
                      full_rho=p["full_rho"])


def _pairwise_sum(items):
    items = list(items)
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def run_trajectory(phi0, schedule, h, h_mix, model, dt, seed, engine=None):
    """One unraveled realization; identical seed gives identical amplitudes."""
    if engine is None:
        engine = _PiecewiseEngine(h, h_mix, model, dt)
    res = _run_chunk(engine, phi0, engine.segments(schedule), [seed],
                     return_states=True)
    return res["phis"][0]


def run_ensemble(phi0, schedule, h, h_mix, model, cfg: TrajectoryConfig,
                 workers: int = 1, energy_h=None, full_rho: bool = False,
                 record_segments: bool = False, engine=None):
    """Average cfg.n_traj trajectories; pure function of (cfg, inputs).

    Trajectories are processed in fixed-size chunks combined in index order
    with pairwise summation, so the result is bit-identical for any worker
    count.  energy_h (principal-space observable) enables the standard-error
    estimate of its ensemble mean.
    """
    if engine is None:
        engine = _PiecewiseEngine(h, h_mix, model, cfg.dt)
    payload = {
        "engine": engine,
        "phi0": np.asarray(phi0, dtype=np.complex128),
        "segments": engine.segments(schedule),
        "base_seed": cfg.base_seed,
        "energy_h": None if energy_h is None else np.asarray(energy_h),
        "record_segments": record_segments,
        "full_rho": full_rho,
    }
    tasks = [(s, min(CHUNK, cfg.n_traj - s)) for s in range(0, cfg.n_traj, CHUNK)]
    parts = parallel.run_indexed(_chunk_task, payload, tasks, workers)
    n = float(cfg.n_traj)
    rho_p = _pairwise_sum([p["sum_rho_p"] for p in parts]) / n
    jumps = np.concatenate([p["jumps"] for p in parts])
    per_traj = [(trajectory_seed(cfg.base_seed, k), int(jumps[k]))
                for k in range(cfg.n_traj)]
    std_err = 0.0
    if energy_h is not None and cfg.n_traj > 1:
        energies = np.concatenate([p["energies"] for p in parts])
        std_err = float(np.std(energies, ddof=1) / np.sqrt(n))
    rho = None
    if full_rho:
        rho = _pairwise_sum([p["sum_full"] for p in parts]) / n
    segment_rho_p = None
    if record_segments:
        n_seg = len(payload["segments"])
        segment_rho_p = [
            _pairwise_sum([p["segment_sums"][s] for p in parts]) / n
            for s in range(n_seg)
        ]
    return TrajectoryEnsembleResult(rho=rho, rho_p=rho_p, per_traj=per_traj,
                                    std_err_estimate=std_err,
                                    segment_rho_p=segment_rho_p)


def ensemble_average(phis, h=None, seeds=None, jump_counts=None):
    """Mean projector of explicit state vectors (chunked pairwise reduction)."""
    phis = np.asarray(list(phis), dtype=np.complex128)
    if phis.ndim != 2 or phis.shape[0] == 0:
        raise ValueError("need a non-empty list of equal-length state vectors")
    n = phis.shape[0]
    sums = [np.einsum("bi,bj->ij", phis[s:s + CHUNK], phis[s:s + CHUNK].conj())
            for s in range(0, n, CHUNK)]
    rho = _pairwise_sum(sums) / n
    std_err = 0.0
    if h is not None and n > 1:
        h = np.asarray(h)
        energies = np.real(np.einsum("bi,ij,bj->b", phis.conj(), h, phis))
        std_err = float(np.std(energies, ddof=1) / np.sqrt(n))
    if seeds is None:
        seeds = range(n)
    if jump_counts is None:
        jump_counts = [0] * n
    per_traj = [(int(s), int(j)) for s, j in zip(seeds, jump_counts)]
    return TrajectoryEnsembleResult(rho=rho, rho_p=rho, per_traj=per_traj,
                                    std_err_estimate=std_err)
