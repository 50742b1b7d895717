"""The one-step evolution ``U = CZ . SW . MV . CO`` and its dense matrix.

Each gate exists twice: as an array operation on the padded amplitudes of a
:class:`~iqwalk.state.PureState` (fast stepping) and as a sparse factor over
the packed basis (for :func:`build_unitary`). The two routes are checked
against each other in the tests.

Two conventions are available for the spin-spin phase ``CZ``:

``"edge_list"`` (default)
    Loop over the undirected edges ``(x, y)``, ``x < y``; a walker sitting on
    ``x`` picks up a ``-1`` if ``s_x = s_y = 1`` for at least one such edge.
    This is how the simulations of the original model were run.
``"incident"``
    A walker on ``x`` picks up ``(-1)**k``, ``k`` counting the neighbours
    ``y`` of ``x`` with ``s_x = s_y = 1``, i.e. every edge touching ``x``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .state import LIMITS, GuardError, PureState, padding_mask, spin_bits

__all__ = [
    "COINS",
    "CZ_MODES",
    "EvolutionOperator",
    "apply_coin",
    "apply_cz",
    "apply_move",
    "apply_swap",
    "build_unitary",
    "sparse_unitary",
    "coin_matrix",
    "coin_tensor",
    "cz_phases",
    "evolve",
    "exchange_matrix",
    "fourier_coin",
    "grover_coin",
    "move_matrix",
    "spin_matrix",
    "step",
]

CZ_MODES = ("edge_list", "incident")


def grover_coin(d: int) -> np.ndarray:
    """Grover diffusion ``2/d - delta``, real symmetric and involutive."""
    if d < 1:
        raise ValueError(f"coin dimension must be >= 1, got {d}")
    return np.full((d, d), 2.0 / d) - np.eye(d)


def fourier_coin(d: int) -> np.ndarray:
    """Discrete Fourier transform ``exp(2i pi c c'/d) / sqrt(d)``."""
    if d < 1:
        raise ValueError(f"coin dimension must be >= 1, got {d}")
    c = np.arange(d)
    return np.exp(2j * np.pi * np.outer(c, c) / d) / np.sqrt(d)


COINS = {"grover": grover_coin, "fourier": fourier_coin}


def _coin_fn(coin):
    if callable(coin):
        return coin
    try:
        return COINS[coin]
    except KeyError:
        raise ValueError(f"unknown coin {coin!r}; choose from {sorted(COINS)}") from None


def _check_mode(mode: str) -> None:
    if mode not in CZ_MODES:
        raise ValueError(f"unknown cz mode {mode!r}; choose from {CZ_MODES}")


def coin_tensor(graph: Graph, coin="grover") -> np.ndarray:
    """``(N, d, d)`` stack of node coins, padded with an identity block."""
    make = _coin_fn(coin)
    d = graph.max_degree
    out = np.zeros((graph.n_nodes, d, d), dtype=complex)
    for x, dx in enumerate(graph.degrees):
        out[x] = np.eye(d)
        out[x, :dx, :dx] = make(dx)
    return out


# ---------------------------------------------------------------------------
# structured gates on padded states
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _move_indices(graph: Graph):
    src_x, src_c, dst_x, dst_c = [], [], [], []
    for x in range(graph.n_nodes):
        for i, y in enumerate(graph.adjacency[x]):
            src_x.append(x)
            src_c.append(i)
            dst_x.append(y)
            dst_c.append(graph.subnodes[x][i])
    return tuple(np.array(v) for v in (src_x, src_c, dst_x, dst_c))


@lru_cache(maxsize=64)
def cz_phases(graph: Graph, mode: str = "edge_list") -> np.ndarray:
    """Diagonal of CZ as an ``(N, 2**N)`` array indexed by walker position and spins."""
    _check_mode(mode)
    bits = spin_bits(graph.n_nodes)
    if mode == "edge_list":
        hit = np.zeros(bits.shape, dtype=bool)
        for x, y in graph.edges:
            hit[x] |= (bits[x] & bits[y]).astype(bool)
        phases = np.where(hit, -1.0, 1.0)
    else:
        count = np.zeros(bits.shape, dtype=np.int64)
        for x in range(graph.n_nodes):
            for y in graph.adjacency[x]:
                count[x] += bits[x] & bits[y]
        phases = 1.0 - 2.0 * (count % 2)
    phases.setflags(write=False)
    return phases


def apply_coin(state: PureState, coin="grover") -> PureState:
    """Mix the colors at every node with the node's coin block."""
    coins = _cached_coin_tensor(state.graph, coin)
    return PureState(state.graph, np.einsum("xij,xjs->xis", coins, state.amplitudes))


@lru_cache(maxsize=64)
def _cached_coin_tensor(graph: Graph, coin) -> np.ndarray:
    return coin_tensor(graph, coin)


def apply_move(state: PureState) -> PureState:
    """Send the amplitude at ``(x, i, s)`` to ``(adjacency[x][i], subnodes[x][i], s)``."""
    src_x, src_c, dst_x, dst_c = _move_indices(state.graph)
    out = np.zeros_like(state.amplitudes)
    out[dst_x, dst_c] = state.amplitudes[src_x, src_c]
    return PureState(state.graph, out)


def apply_swap(state: PureState) -> PureState:
    """Swap color 0/1 with the local spin at every node of degree > 1.

    ``|x, 0, s_x=1> <-> |x, 1, s_x=0>`` with the rest of ``s`` unchanged.
    """
    g = state.graph
    out = state.amplitudes.copy()
    s = np.arange(g.n_spin_configs)
    for x in range(g.n_nodes):
        if g.degrees[x] < 2:
            continue
        down = s[(s >> x) & 1 == 1]
        up = down - (1 << x)
        out[x, 0, down] = state.amplitudes[x, 1, up]
        out[x, 1, up] = state.amplitudes[x, 0, down]
    return PureState(g, out)


def apply_cz(state: PureState, mode: str = "edge_list") -> PureState:
    """Apply the spin-spin controlled phase (see the module docstring for ``mode``)."""
    phases = cz_phases(state.graph, mode)
    return PureState(state.graph, state.amplitudes * phases[:, None, :])


def step(state: PureState, coin="grover", cz_mode: str = "edge_list") -> PureState:
    """One application of ``U``."""
    return apply_cz(apply_swap(apply_move(apply_coin(state, coin))), cz_mode)


def evolve(state: PureState, steps: int, coin="grover", cz_mode: str = "edge_list"):
    """Yield ``psi(0), psi(1), ..., psi(steps)``."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    yield state
    for _ in range(steps):
        state = step(state, coin, cz_mode)
        yield state


# ---------------------------------------------------------------------------
# sparse factors over the packed basis
# ---------------------------------------------------------------------------

def coin_matrix(graph: Graph, coin="grover") -> sp.csr_matrix:
    make = _coin_fn(coin)
    blocks = sp.block_diag([make(d) for d in graph.degrees], format="csr", dtype=complex)
    return sp.kron(blocks, sp.identity(graph.n_spin_configs), format="csr")


def move_matrix(graph: Graph) -> sp.csr_matrix:
    dim = graph.total_degree
    rows, cols = [], []
    ix = 0
    for x in range(graph.n_nodes):
        for i, y in enumerate(graph.adjacency[x]):
            rows.append(ix)
            cols.append(graph.offsets[y] + graph.subnodes[x][i])
            ix += 1
    a = sp.csr_matrix((np.ones(dim), (rows, cols)), shape=(dim, dim))
    return sp.kron(a, sp.identity(graph.n_spin_configs), format="csr")


def exchange_matrix(graph: Graph) -> sp.csr_matrix:
    ns = graph.n_spin_configs
    dim = graph.packed_dim
    perm = np.arange(dim)
    s = np.arange(ns)
    for x in range(graph.n_nodes):
        if graph.degrees[x] < 2:
            continue
        base = graph.offsets[x] * ns
        down = s[(s >> x) & 1 == 1]
        up = s[(s >> x) & 1 == 0]
        # row |x,0,s_x=1> reads |x,1,s-2^x>; row |x,1,s_x=0> reads |x,0,s+2^x>
        perm[base + down] = base + ns + down - (1 << x)
        perm[base + ns + up] = base + up + (1 << x)
    return sp.csr_matrix((np.ones(dim), (np.arange(dim), perm)), shape=(dim, dim))


def spin_matrix(graph: Graph, mode: str = "edge_list") -> sp.csr_matrix:
    phases = cz_phases(graph, mode)
    diag = np.concatenate([np.tile(phases[x], graph.degrees[x]) for x in range(graph.n_nodes)])
    return sp.diags(diag, format="csr")


@dataclass
class EvolutionOperator:
    """Dense ``U`` over the packed basis plus the recipe it was built from."""

    matrix: np.ndarray
    graph: Graph
    coin: str
    cz_mode: str

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def unitarity_error(self) -> float:
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.dim))))

    def metadata(self) -> dict:
        return {
            "graph": self.graph.name,
            "n_nodes": self.graph.n_nodes,
            "edges": [list(e) for e in self.graph.edges],
            "coin": self.coin,
            "cz_mode": self.cz_mode,
            "dim": self.dim,
            "layout": "row-major complex128, little-endian (re, im) float64 pairs",
        }

    def dump(self, path: str | Path) -> tuple[Path, Path]:
        """Write ``<path>.bin`` and ``<path>.json``; returns both paths."""
        path = Path(path)
        bin_path, json_path = path.with_suffix(".bin"), path.with_suffix(".json")
        np.ascontiguousarray(self.matrix, dtype="<c16").tofile(bin_path)
        json_path.write_text(json.dumps(self.metadata(), indent=2))
        return bin_path, json_path

    @classmethod
    def load(cls, path: str | Path) -> "EvolutionOperator":
        from .graph import build_graph

        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        graph = build_graph(meta["edges"], meta["n_nodes"], name=meta["graph"])
        dim = meta["dim"]
        matrix = np.fromfile(path.with_suffix(".bin"), dtype="<c16").reshape(dim, dim)
        return cls(matrix, graph, meta["coin"], meta["cz_mode"])


def sparse_unitary(graph: Graph, coin: str = "grover", cz_mode: str = "edge_list") -> sp.csr_matrix:
    """Sparse ``U = spin . exchange . move . coin`` over the packed basis."""
    _check_mode(cz_mode)
    _coin_fn(coin)
    u = spin_matrix(graph, cz_mode) @ (
        exchange_matrix(graph) @ (move_matrix(graph) @ coin_matrix(graph, coin))
    )
    return sp.csr_matrix(u)


def build_unitary(graph: Graph, coin: str = "grover", cz_mode: str = "edge_list") -> EvolutionOperator:
    """Dense ``U = spin . exchange . move . coin`` over the packed basis."""
    _check_mode(cz_mode)
    _coin_fn(coin)
    if graph.packed_dim > LIMITS.max_unitary_dim:
        raise GuardError(
            f"packed dimension {graph.packed_dim} exceeds the limit of {LIMITS.max_unitary_dim}"
        )
    return EvolutionOperator(sparse_unitary(graph, coin, cz_mode).toarray(), graph, coin, cz_mode)

