"""Batch experiment layer: JSON configs, backends, and the five commands.

A config names a graph and a noise environment, picks a backend, and the
commands turn that into JSON (single solves) or CSV (parameter sweeps,
schedule scatters, solver benchmarks, multi-node studies).  Floating-point
cells print at 12 significant digits and every command with a fixed seed is
byte-reproducible for any worker count.
"""
from __future__ import annotations

import dataclasses
import json
import time
import tracemalloc
from dataclasses import dataclass

import numpy as np

from . import parallel, presets
from .lindblad import (ControlSchedule, SolverConfig,
                       build_piecewise_integrators, closed_state,
                       evolve_markovian, evolve_piecewise)
from .maxcut import (WeightedGraph, approximation_ratio, brute_force_extrema,
                     build_cost_hamiltonian, build_mixer,
                     optimal_group_probability, solution_probabilities)
from .metrics import exploration_rate, joint_trace
from .model import LorentzianMode, build_augmented_model
from .operators import SIGMA_Y, embed_qubit_op
from .optimizer import OptimizerConfig, OptimizerError, objective, optimize
from .trajectory import (StepSizeError, TrajectoryConfig, _PiecewiseEngine,
                         run_ensemble)


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class SolverError(RuntimeError):
    """Numerical failure surfaced from a backend, with context."""


BACKENDS = ("closed", "master", "markovian", "trajectory")

# Working-set preflight for the dense master backend: the integrator touches
# about 17 dim x dim complex matrices at peak (state, 4 RK4 slopes, stage
# temporaries, effective Hamiltonians and scratch).
MASTER_MATRICES = 17
MEMORY_CAP_BYTES = 4 * 2 ** 30

# Above this dimension the trajectory engine switches from cached dense
# propagators to sparse matrix-vector integration.
DENSE_STATE_LIMIT = 2048

BENCH_SCHEDULE = ControlSchedule(((0.05, 0.05),))

# RK4 absolute-stability margin: per-step eigenvalue magnitude lambda*dt is
# kept under 2.5 (the boundary is ~2.79 on the real axis, ~2.83 imaginary).
RK4_STABILITY = 2.5


@dataclass(frozen=True)
class ExperimentConfig:
    graph: WeightedGraph
    modes: tuple                      # of LorentzianMode
    backend: str
    solver: object                    # SolverConfig | TrajectoryConfig
    optimizer: OptimizerConfig
    init: ControlSchedule
    grid_dt: float = 0.01
    optimize: bool = True
    count_flat_as_half: bool = False
    seed: int = 0
    preset: str = ""
    extras: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        is_traj = isinstance(self.solver, TrajectoryConfig)
        if (self.backend == "trajectory") != is_traj:
            raise ConfigError("backend 'trajectory' requires solver type "
                              "'trajectory', and vice versa")
        if self.grid_dt <= 0:
            raise ConfigError("grid_dt must be > 0")
        if not self.modes and self.backend in ("master", "markovian",
                                               "trajectory"):
            raise ConfigError(f"backend {self.backend!r} needs >= 1 mode")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        doc = dict(doc)
        preset = doc.pop("preset", "")
        if preset:
            try:
                base = presets.preset_document(preset)
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
            base.update(doc)
            doc = base
        try:
            graph = WeightedGraph.from_dict(doc["graph"])
            modes = tuple(LorentzianMode.from_dict(m)
                          for m in doc.get("modes", []))
            backend = doc.get("backend", "master")
            solver = _solver_from_dict(doc.get("solver",
                                               {"type": "master"}))
            opt_doc = dict(doc.get("optimizer", {}))
            init = ControlSchedule.from_flat(opt_doc.pop("init",
                                                         [3.0, 3.0, 3.0, 3.0]))
            opt = OptimizerConfig.from_dict(opt_doc)
            return cls(graph=graph, modes=modes, backend=backend,
                       solver=solver, optimizer=opt, init=init,
                       grid_dt=float(doc.get("grid_dt", 0.01)),
                       optimize=bool(doc.get("optimize", True)),
                       count_flat_as_half=bool(doc.get("count_flat_as_half",
                                                       False)),
                       seed=int(doc.get("seed", 0)), preset=preset,
                       extras=dict(doc.get("extras", {})))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    def to_dict(self) -> dict:
        opt = self.optimizer.to_dict()
        opt["init"] = [float(x) for x in self.init.to_flat()]
        doc = {
            "graph": self.graph.to_dict(),
            "modes": [m.to_dict() for m in self.modes],
            "backend": self.backend,
            "solver": _solver_to_dict(self.solver),
            "optimizer": opt,
            "grid_dt": self.grid_dt,
            "optimize": self.optimize,
            "count_flat_as_half": self.count_flat_as_half,
            "seed": self.seed,
            "extras": dict(self.extras),
        }
        if self.preset:
            doc["preset"] = self.preset
        return doc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as f:
                doc = json.load(f)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def _solver_from_dict(doc: dict):
    kind = doc.get("type", "master")
    if kind == "master":
        return SolverConfig(dt=float(doc.get("dt", 1e-3)))
    if kind == "trajectory":
        return TrajectoryConfig(n_traj=int(doc.get("n_traj", 1000)),
                                dt=float(doc.get("dt", 1e-3)),
                                base_seed=int(doc.get("seed", 0)))
    raise ConfigError(f"unknown solver type {kind!r}")


def _solver_to_dict(solver) -> dict:
    if isinstance(solver, TrajectoryConfig):
        return {"type": "trajectory", "n_traj": solver.n_traj,
                "dt": solver.dt, "seed": solver.base_seed}
    return {"type": "master", "dt": solver.dt}


def markovian_rates(n_qubits: int, modes):
    """Per-qubit sigma^y channels at the flat-spectrum height kappa_1."""
    kappa = modes[0].kappa if modes else 1.0
    return [(embed_qubit_op(SIGMA_Y, q, n_qubits), kappa)
            for q in range(1, n_qubits + 1)]


def plus_state(n_qubits: int) -> np.ndarray:
    dim = 2 ** n_qubits
    return np.full(dim, dim ** -0.5, dtype=np.complex128)


def stable_dt(modes, dt: float) -> float:
    """Clamp the integration step so mode decay cannot destabilize RK4."""
    rate = max(((m.gamma + abs(m.omega_a)) * (m.levels - 1) for m in modes),
               default=0.0)
    if rate <= 0:
        return dt
    return min(dt, RK4_STABILITY / rate)


class MasterEvaluator:
    """Density-matrix backend; integrators are cached across evaluations."""

    def __init__(self, graph: WeightedGraph, modes, cfg: SolverConfig):
        self.h_cost = build_cost_hamiltonian(graph)
        self.h_mix = build_mixer(graph.n_nodes)
        self.model = build_augmented_model(graph.n_nodes, list(modes))
        self.cfg = cfg
        self._integrators = build_piecewise_integrators(
            self.model, self.h_cost, self.h_mix)
        phi = plus_state(graph.n_nodes)
        self._rho0 = self.model.initial_rho(np.outer(phi, phi.conj()))

    def reduced_state(self, schedule: ControlSchedule) -> np.ndarray:
        _, rho_p = evolve_piecewise(self._rho0, schedule, self.h_cost,
                                    self.h_mix, self.model, self.cfg,
                                    integrators=self._integrators)
        return rho_p


class TrajectoryEvaluator:
    """Ensemble backend with common random numbers.

    Every evaluation reuses the same base seed, so the sampling noise is
    identical across schedules and finite differences stay smooth.
    """

    def __init__(self, graph: WeightedGraph, modes, cfg: TrajectoryConfig,
                 workers: int = 1):
        self.h_cost = build_cost_hamiltonian(graph)
        self.h_mix = build_mixer(graph.n_nodes)
        dim = 2 ** graph.n_nodes * int(np.prod([m.levels for m in modes]))
        self.model = build_augmented_model(graph.n_nodes, list(modes),
                                           sparse=dim > DENSE_STATE_LIMIT)
        self.cfg = cfg
        self.workers = workers
        self._engine = _PiecewiseEngine(self.h_cost, self.h_mix, self.model,
                                        cfg.dt)
        self._phi0 = self.model.initial_phi(plus_state(graph.n_nodes))

    def reduced_state(self, schedule: ControlSchedule) -> np.ndarray:
        res = run_ensemble(self._phi0, schedule, self.h_cost, self.h_mix,
                           self.model, self.cfg, workers=self.workers,
                           engine=self._engine)
        return res.rho_p


class MarkovianEvaluator:
    """Memoryless channels acting on the qubits directly."""

    def __init__(self, graph: WeightedGraph, modes, cfg: SolverConfig):
        self.h_cost = build_cost_hamiltonian(graph)
        self.h_mix = build_mixer(graph.n_nodes)
        self.cfg = cfg
        rates = markovian_rates(graph.n_nodes, modes)
        from .lindblad import MasterIntegrator
        self._integrators = (MasterIntegrator(self.h_cost, jumps=rates),
                             MasterIntegrator(self.h_mix, jumps=rates))
        phi = plus_state(graph.n_nodes)
        self._rho0 = np.outer(phi, phi.conj())

    def reduced_state(self, schedule: ControlSchedule) -> np.ndarray:
        return evolve_markovian(self._rho0, schedule, self.h_cost,
                                self.h_mix, [], self.cfg,
                                integrators=self._integrators)


class ClosedEvaluator:
    """Dissipation-free unitary backend (exact segment propagators)."""

    def __init__(self, graph: WeightedGraph):
        self.h_cost = build_cost_hamiltonian(graph)
        self.h_mix = build_mixer(graph.n_nodes)
        self._phi0 = plus_state(graph.n_nodes)

    def reduced_state(self, schedule: ControlSchedule) -> np.ndarray:
        phi = closed_state(self._phi0, schedule, self.h_cost, self.h_mix)
        return np.outer(phi, phi.conj())


def make_evaluator(config: ExperimentConfig, workers: int = 1):
    if config.backend == "master":
        return MasterEvaluator(config.graph, config.modes, config.solver)
    if config.backend == "trajectory":
        return TrajectoryEvaluator(config.graph, config.modes, config.solver,
                                   workers=workers)
    if config.backend == "markovian":
        return MarkovianEvaluator(config.graph, config.modes, config.solver)
    return ClosedEvaluator(config.graph)


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def format_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def format_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_solve(config: ExperimentConfig, workers: int = 1) -> dict:
    """Optimize (or evaluate) one instance; JSON-shaped result."""
    evaluator = make_evaluator(config, workers)
    ext = brute_force_extrema(config.graph)
    trace_doc = []
    stop_reason = "not-optimized"
    try:
        if config.optimize:
            best, trace, rho_p = optimize(config.init, config.optimizer,
                                          evaluator)
            stop_reason = trace.stop_reason
            trace_doc = [{"iteration": rec.iteration,
                          "schedule": [float(v) for v in
                                       rec.schedule.to_flat()],
                          "h": rec.h, "y": rec.y,
                          "effective_depth": rec.effective_depth}
                         for rec in trace.records]
        else:
            best = config.init
            rho_p = evaluator.reduced_state(best)
    except (OptimizerError, StepSizeError) as exc:
        raise SolverError(f"{config.backend} backend failed: {exc}") from exc
    h_val, y_val = objective(best, evaluator, config.optimizer.xi)
    probs = solution_probabilities(rho_p)
    return {
        "preset": config.preset,
        "backend": config.backend,
        "optimized": config.optimize,
        "schedule": [float(v) for v in best.to_flat()],
        "effective_depth": best.effective_depth,
        "h": h_val,
        "y": y_val,
        "l1_norm": best.l1(),
        "r": approximation_ratio(evaluator.h_cost, rho_p, ext),
        "optimal_group_probability": optimal_group_probability(rho_p, ext),
        "c_max": ext.c_max,
        "c_min": ext.c_min,
        "probabilities": {b: p for b, p in probs},
        "stop_reason": stop_reason,
        "trace": trace_doc,
    }


SWEEP_HEADER = ("param_value", "n_phi_initial", "n_phi_optimized",
                "r_initial", "r_optimized", "sigma_bar")
SWEEP_PARAMS = ("omega_a", "kappa", "gamma")


def _sweep_point(value):
    config, param = parallel.get_payload()
    mode = dataclasses.replace(config.modes[0], **{param: float(value)})
    modes = (mode,) + tuple(config.modes[1:])
    dt = stable_dt(modes, config.solver.dt)
    cfg = SolverConfig(dt=dt)
    model = build_augmented_model(config.graph.n_nodes, list(modes))
    h = build_cost_hamiltonian(config.graph)
    h_mix = build_mixer(config.graph.n_nodes)
    ext = brute_force_extrema(config.graph)
    trace, rho_p = joint_trace(model, config.init, h, h_mix,
                               config.grid_dt, cfg)
    rep = exploration_rate(trace, config.count_flat_as_half)
    n_phi_opt, r_opt = None, None
    if config.optimize:
        evaluator = MasterEvaluator(config.graph, modes, cfg)
        best, _, _ = optimize(config.init, config.optimizer, evaluator)
        trace_o, rho_o = joint_trace(model, best, h, h_mix,
                                     config.grid_dt, cfg)
        n_phi_opt = exploration_rate(trace_o,
                                     config.count_flat_as_half).n_phi
        r_opt = approximation_ratio(h, rho_o, ext)
    return (float(value), rep.n_phi, n_phi_opt,
            approximation_ratio(h, rho_p, ext), r_opt, rep.sigma_bar)


def sweep_parameter(config: ExperimentConfig, param: str, values,
                    workers: int = 1):
    """One mode parameter, many values; per value the backflow and ratio.

    The first mode's `param` is replaced per value and the model rebuilt;
    the reported n_phi/sigma_bar/r come from the fixed initial schedule,
    with the optimized columns filled only when config.optimize is set.
    The integration step is clamped per point so strongly-damped modes
    stay inside the RK4 stability region.
    """
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep param must be one of {SWEEP_PARAMS}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    if not config.modes:
        raise ConfigError("sweep needs a mode to vary")
    return parallel.run_indexed(_sweep_point, (config, param), values,
                                workers)


def cmd_sweep(config: ExperimentConfig, param: str, values,
              workers: int = 1):
    rows = sweep_parameter(config, param, values, workers)
    return SWEEP_HEADER, rows


EXPLORE_HEADER = ("sigma_bar", "r")


def _explore_point(tau):
    config = parallel.get_payload()
    schedule = ControlSchedule.from_flat(tau)
    dt = stable_dt(config.modes, config.solver.dt)
    model = build_augmented_model(config.graph.n_nodes, list(config.modes))
    h = build_cost_hamiltonian(config.graph)
    h_mix = build_mixer(config.graph.n_nodes)
    trace, rho_p = joint_trace(model, schedule, h, h_mix, config.grid_dt,
                               SolverConfig(dt=dt))
    rep = exploration_rate(trace, config.count_flat_as_half)
    ext = brute_force_extrema(config.graph)
    return (rep.sigma_bar, approximation_ratio(h, rho_p, ext))


def cmd_explore_scatter(config: ExperimentConfig, n_samples: int,
                        tau_range=(0.5, 4.0), workers: int = 1):
    """Random fixed-depth schedules -> (exploration rate, ratio) pairs."""
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    lo, hi = float(tau_range[0]), float(tau_range[1])
    if not (0 <= lo < hi):
        raise ConfigError("tau_range must satisfy 0 <= lo < hi")
    rng = np.random.default_rng(config.seed)
    draws = rng.uniform(lo, hi, size=(n_samples, 2 * config.init.depth))
    rows = parallel.run_indexed(_explore_point, config,
                                [tuple(t) for t in draws], workers)
    return EXPLORE_HEADER, rows


@dataclass(frozen=True)
class BenchmarkRecord:
    n_nodes: int
    backend: str          # "master" or "trajectory(N)"
    wall_time: float      # seconds, > 0
    peak_memory: int      # allocator-reported bytes (projected when capped)
    result_distance: object   # float | None
    status: str           # "ok" | "memory-limit"


BENCH_HEADER = ("n_nodes", "backend", "wall_time_s", "peak_memory_bytes",
                "result_distance", "time_ratio", "memory_ratio")


def _timed(fn):
    tracemalloc.start()
    t0 = time.perf_counter()
    out = fn()
    wall = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    return out, max(wall, 1e-9), peak


def cmd_benchmark(config: ExperimentConfig, node_counts, traj_counts,
                  workers: int = 1):
    """Master vs trajectory wall time and peak memory on a short workload.

    The master backend preflights its dense working set against the 4 GiB
    cap and reports "memory-limit" instead of attempting the solve; the
    trajectory backend always runs (sparse path, no dim^2 objects).
    """
    node_counts = list(node_counts)
    traj_counts = list(traj_counts)
    if not node_counts or not traj_counts:
        raise ConfigError("benchmark needs node counts and trajectory counts")
    if not config.modes:
        raise ConfigError("benchmark needs at least one mode")
    sched = BENCH_SCHEDULE
    dt = config.solver.dt
    records, rows = [], []
    for n in node_counts:
        graph = presets.multinode_graph(n)
        h = build_cost_hamiltonian(graph)
        h_mix = build_mixer(graph.n_nodes)
        dim = 2 ** n * int(np.prod([m.levels for m in config.modes]))
        need = MASTER_MATRICES * dim * dim * 16
        master_rho = None
        if need > MEMORY_CAP_BYTES:
            t0 = time.perf_counter()
            wall = max(time.perf_counter() - t0, 1e-9)
            rec = BenchmarkRecord(n, "master", wall, need, None,
                                  "memory-limit")
        else:
            model = build_augmented_model(n, list(config.modes))

            def run_master():
                phi = plus_state(n)
                rho0 = model.initial_rho(np.outer(phi, phi.conj()))
                _, rho_p = evolve_piecewise(rho0, sched, h, h_mix, model,
                                            SolverConfig(dt=dt))
                return rho_p

            master_rho, wall, peak = _timed(run_master)
            rec = BenchmarkRecord(n, "master", wall, peak, None, "ok")
        records.append(rec)
        rows.append([n, rec.backend, rec.wall_time, rec.peak_memory,
                     None, None, None])
        master_rec = rec

        sparse_model = build_augmented_model(n, list(config.modes),
                                             sparse=True)
        phi0 = sparse_model.initial_phi(plus_state(n))
        for n_traj in traj_counts:
            cfg = TrajectoryConfig(n_traj=n_traj, dt=dt,
                                   base_seed=config.seed)

            def run_traj():
                return run_ensemble(phi0, sched, h, h_mix, sparse_model,
                                    cfg, workers=workers).rho_p

            rho_p, wall, peak = _timed(run_traj)
            dist = None
            if master_rho is not None:
                from .operators import trace_distance
                dist = trace_distance(master_rho, rho_p)
            rec = BenchmarkRecord(n, f"trajectory({n_traj})", wall, peak,
                                  dist, "ok")
            records.append(rec)
            ratios = [None, None]
            if master_rec.status == "ok":
                ratios = [rec.wall_time / master_rec.wall_time,
                          rec.peak_memory / master_rec.peak_memory]
            rows.append([n, rec.backend, rec.wall_time, rec.peak_memory,
                         dist, ratios[0], ratios[1]])
    return records, (BENCH_HEADER, rows)


MULTINODE_HEADER = ("n_nodes", "r", "l1_norm", "depth")


def cmd_multinode(config: ExperimentConfig, nodes, workers: int = 1):
    """Trajectory-backend optimization across induced prefix graphs."""
    if config.backend != "trajectory":
        raise ConfigError("multinode requires the trajectory backend")
    nodes = list(nodes)
    if not nodes:
        raise ConfigError("multinode needs at least one node count")
    if any(not 2 <= n <= presets.MULTINODE_MAX for n in nodes):
        raise ConfigError(f"node counts must lie in 2..{presets.MULTINODE_MAX}")
    rows = []
    for n in nodes:
        graph = presets.multinode_graph(n)
        evaluator = TrajectoryEvaluator(graph, config.modes, config.solver,
                                        workers=workers)
        ext = brute_force_extrema(graph)
        try:
            if config.optimize:
                best, _, rho_p = optimize(config.init, config.optimizer,
                                          evaluator)
            else:
                best = config.init
                rho_p = evaluator.reduced_state(best)
        except (OptimizerError, StepSizeError) as exc:
            raise SolverError(f"trajectory backend failed at {n} nodes: "
                              f"{exc}") from exc
        rows.append((n, approximation_ratio(evaluator.h_cost, rho_p, ext),
                     best.l1(), best.effective_depth))
    return MULTINODE_HEADER, rows
