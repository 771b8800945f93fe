"""Named experiment setups and the shared multi-node weight table.

The four-node presets differ only in how the environment is treated: closed
(no coupling), the single-mode Lorentzian environment, its memoryless
white-noise limit, and a two-mode double-Lorentzian variant.  Larger graphs
are induced prefixes of one fixed randomly-weighted 11-node instance so that
every node count refers to the same underlying weights.
"""
from __future__ import annotations

from .maxcut import FOUR_NODE_GRAPH, WeightedGraph
from .model import LorentzianMode

SINGLE_MODE = LorentzianMode(omega_a=10.0, gamma=0.6, kappa=1.0, levels=8)
SECOND_MODE = LorentzianMode(omega_a=5.0, gamma=1.0, kappa=0.8, levels=8)

# Upper-triangle edge weights of the fixed 11-node instance; row k holds the
# weights from node k+1 to nodes k+2..11 (1-based).
_WEIGHT_ROWS = (
    (0.60, 0.79, 0.71, 0.40, 0.66, 0.33, 0.50, 0.27, 0.88, 0.47),
    (0.03, 0.21, 0.56, 0.72, 0.82, 0.81, 0.66, 0.73, 0.53),
    (0.65, 0.75, 0.46, 0.86, 0.38, 0.66, 0.32, 0.85),
    (0.54, 0.09, 0.77, 0.96, 0.99, 0.35, 0.66),
    (0.41, 0.16, 0.79, 0.56, 0.63, 0.85),
    (0.22, 0.36, 0.34, 0.33, 0.44),
    (0.76, 0.01, 0.62, 0.42),
    (0.57, 0.13, 0.79),
    (0.93, 0.17),
    (0.73,),
)

MULTINODE_MAX = len(_WEIGHT_ROWS) + 1


def multinode_graph(n_nodes: int) -> WeightedGraph:
    """Complete graph on the first n_nodes nodes of the 11-node instance."""
    if not 2 <= n_nodes <= MULTINODE_MAX:
        raise ValueError(f"n_nodes must be in 2..{MULTINODE_MAX}")
    edges = tuple((i, j, _WEIGHT_ROWS[i - 1][j - i - 1])
                  for i in range(1, n_nodes)
                  for j in range(i + 1, n_nodes + 1))
    return WeightedGraph(n_nodes=n_nodes, edges=edges)


def _mode_doc(mode: LorentzianMode) -> dict:
    return mode.to_dict()


_FOUR_NODE = FOUR_NODE_GRAPH.to_dict()
_INIT = [3.0, 3.0, 3.0, 3.0]

_PRESETS = {
    "paper-4node-closed": {
        "graph": _FOUR_NODE,
        "modes": [_mode_doc(LorentzianMode(10.0, 0.6, 0.0, 8))],
        "backend": "closed",
        "solver": {"type": "master", "dt": 1e-3},
        "optimizer": {"init": list(_INIT)},
    },
    "paper-4node-nonmarkovian": {
        "graph": _FOUR_NODE,
        "modes": [_mode_doc(SINGLE_MODE)],
        "backend": "master",
        "solver": {"type": "master", "dt": 1e-3},
        "optimizer": {"init": list(_INIT)},
    },
    "paper-4node-markovian": {
        "graph": _FOUR_NODE,
        "modes": [_mode_doc(SINGLE_MODE)],
        "backend": "markovian",
        "solver": {"type": "master", "dt": 1e-3},
        "optimizer": {"init": list(_INIT)},
    },
    "paper-4node-double": {
        "graph": _FOUR_NODE,
        "modes": [_mode_doc(SINGLE_MODE), _mode_doc(SECOND_MODE)],
        "backend": "master",
        "solver": {"type": "master", "dt": 1e-3},
        "optimizer": {"init": list(_INIT)},
    },
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset_document(name: str) -> dict:
    """JSON-shaped config document for a named setup (deep copy)."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    import copy
    return copy.deepcopy(_PRESETS[name])
