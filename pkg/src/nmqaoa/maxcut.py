"""Max-Cut instances as Ising cost Hamiltonians, brute-force oracle, scoring.

Bit convention: bit 0 <-> spin +1 <-> |0>, and qubit 1 is the leftmost
character of a bitstring (slowest tensor factor).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .operators import SIGMA_X, embed_qubit_op


class DegenerateGraphError(ValueError):
    """All cuts score identically; approximation ratio undefined."""


@dataclass(frozen=True)
class WeightedGraph:
    n_nodes: int
    edges: tuple  # of (i, j, w) with 1 <= i < j <= n_nodes

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(
            (int(i), int(j), float(w)) for i, j, w in self.edges))
        seen = set()
        for i, j, w in self.edges:
            if not (1 <= i < j <= self.n_nodes):
                raise ValueError(f"bad edge ({i},{j}): need 1 <= i < j <= n_nodes")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            if not np.isfinite(w):
                raise ValueError(f"non-finite weight on edge ({i},{j})")
            seen.add((i, j))

    @classmethod
    def from_json(cls, path) -> "WeightedGraph":
        with open(path) as f:
            doc = json.load(f)
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "WeightedGraph":
        return cls(n_nodes=int(doc["n_nodes"]),
                   edges=tuple((e[0], e[1], e[2]) for e in doc["edges"]))

    def to_dict(self) -> dict:
        return {"n_nodes": self.n_nodes,
                "edges": [[i, j, w] for i, j, w in self.edges]}


@dataclass(frozen=True)
class CutExtrema:
    c_max: float
    c_min: float
    argmin_bitstrings: tuple


def _spin_table(n_nodes: int) -> np.ndarray:
    """spins[k, idx] = +1/-1 for node k+1 in computational basis state idx."""
    idx = np.arange(2 ** n_nodes)
    return np.array([1 - 2 * ((idx >> (n_nodes - 1 - k)) & 1)
                     for k in range(n_nodes)])


def cost_diagonal(g: WeightedGraph) -> np.ndarray:
    """Diagonal of the Ising cost Hamiltonian H = sum_ij w_ij s_i s_j."""
    spins = _spin_table(g.n_nodes)
    diag = np.zeros(2 ** g.n_nodes)
    for i, j, w in g.edges:
        diag += w * spins[i - 1] * spins[j - 1]
    return diag


def build_cost_hamiltonian(g: WeightedGraph) -> np.ndarray:
    if g.n_nodes < 2:
        raise ValueError("need at least 2 nodes")
    return np.diag(cost_diagonal(g)).astype(np.complex128)


def build_mixer(n_qubits: int) -> np.ndarray:
    """Mixing Hamiltonian H' = sum_theta sigma^x_theta."""
    if n_qubits < 1:
        raise ValueError("need at least 1 qubit")
    out = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=np.complex128)
    for q in range(1, n_qubits + 1):
        out += embed_qubit_op(SIGMA_X, q, n_qubits)
    return out


def brute_force_extrema(g: WeightedGraph) -> CutExtrema:
    """Exact extrema over all 2^n assignments, in rational arithmetic."""
    if g.n_nodes > 24:
        raise ValueError("brute force capped at 24 nodes")
    n = g.n_nodes
    weights = [(i - 1, j - 1, Fraction(w).limit_denominator(10 ** 6))
               for i, j, w in g.edges]
    best_min, best_max = None, None
    argmin = []
    for idx in range(2 ** n):
        spins = [1 - 2 * ((idx >> (n - 1 - k)) & 1) for k in range(n)]
        c = sum(w * spins[i] * spins[j] for i, j, w in weights)
        if best_max is None or c > best_max:
            best_max = c
        if best_min is None or c < best_min:
            best_min = c
            argmin = [idx]
        elif c == best_min:
            argmin.append(idx)
    bits = tuple(format(i, f"0{n}b") for i in argmin)
    return CutExtrema(c_max=float(best_max), c_min=float(best_min),
                      argmin_bitstrings=bits)


def approximation_ratio(h: np.ndarray, rho_p: np.ndarray, ext: CutExtrema) -> float:
    """r = (C_max - tr(H rho_p)) / (C_max - C_min), in [0, 1]."""
    spread = ext.c_max - ext.c_min
    if spread == 0:
        raise DegenerateGraphError("degenerate graph: C_max = C_min")
    expect = float(np.trace(h @ rho_p).real)
    r = (ext.c_max - expect) / spread
    if r < -1e-9 or r > 1 + 1e-9:
        raise ValueError(f"approximation ratio {r} outside [0,1] beyond tolerance")
    return min(max(r, 0.0), 1.0)


def solution_probabilities(rho_p: np.ndarray, group_flips: bool = False):
    """Diagonal of rho_p paired with bitstrings.

    With group_flips=True, global-flip partners (|0011> with |1100>) are
    merged under the lexicographically smaller bitstring.
    """
    dim = rho_p.shape[0]
    n = dim.bit_length() - 1
    probs = np.diag(rho_p).real
    if not group_flips:
        return [(format(i, f"0{n}b"), float(p)) for i, p in enumerate(probs)]
    mask = dim - 1
    grouped = {}
    for i, p in enumerate(probs):
        key = min(i, i ^ mask)
        grouped[key] = grouped.get(key, 0.0) + float(p)
    return [(format(k, f"0{n}b"), grouped[k]) for k in sorted(grouped)]


def optimal_group_probability(rho_p: np.ndarray, ext: CutExtrema) -> float:
    """Total population on the minimizing bitstrings (both flip partners)."""
    probs = np.diag(rho_p).real
    return float(sum(probs[int(b, 2)] for b in ext.argmin_bitstrings))


# 4-node reference instance used by the bundled presets. Crossing edges
# {13,14,23,24} carry {0.57,0.39,0.66,0.79}; the optimal cut is {1,2}|{3,4}.
FOUR_NODE_GRAPH = WeightedGraph(n_nodes=4, edges=(
    (1, 2, 0.23), (3, 4, 0.04),
    (1, 3, 0.57), (1, 4, 0.39), (2, 3, 0.66), (2, 4, 0.79),
))
