"""QAOA on structured (non-Markovian) noise.

Simulates QAOA Max-Cut on an augmented system (qubits + damped ancilla
oscillator modes realizing a Lorentzian noise spectrum), with a dense
master-equation solver, a Monte Carlo wave-function trajectory solver, an
l1-regularized proximal-gradient schedule optimizer, and BLP-style
non-Markovianity diagnostics.
"""

__version__ = "0.1.0"

from .experiments import (BenchmarkRecord, ConfigError, ExperimentConfig,
                          SolverError, cmd_benchmark, cmd_explore_scatter,
                          cmd_multinode, cmd_solve, cmd_sweep,
                          sweep_parameter)
from .lindblad import (ControlSchedule, MasterIntegrator, SolverConfig,
                       closed_state, evolve_markovian, evolve_piecewise,
                       evolve_segment, lindblad_rhs)
from .maxcut import (CutExtrema, DegenerateGraphError, FOUR_NODE_GRAPH,
                     WeightedGraph, approximation_ratio, brute_force_extrema,
                     build_cost_hamiltonian, build_mixer,
                     optimal_group_probability, solution_probabilities)
from .metrics import (DistanceTrace, NonMarkovReport, blp_measure,
                      distance_trace, exploration_rate, joint_trace,
                      markovian_distance_trace)
from .model import (AugmentedModel, LorentzianMode, build_augmented_model,
                    spectrum_value, transfer_function_gain)
from .operators import (expm_propagator, partial_trace_ancilla,
                        trace_distance)
from .optimizer import (IterationRecord, OptimizationTrace, OptimizerConfig,
                        OptimizerError, finite_diff_gradient, objective,
                        optimize, soft_threshold)
from .presets import (PRESET_NAMES, multinode_graph, preset_document)
from .trajectory import (StepSizeError, TrajectoryConfig,
                         TrajectoryEnsembleResult, ensemble_average,
                         run_ensemble, run_trajectory, trajectory_step)
