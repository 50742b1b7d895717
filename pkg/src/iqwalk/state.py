"""Pure states over the basis |x c s> and their reduced density matrices.

Amplitudes live in a padded ``(N, d, 2**N)`` array, ``d`` being the maximum
degree; colors ``c >= d_x`` are padding and always hold zero. The packed
vector drops the padding and orders kets as ``(offsets[x] + c) * 2**N + s``.
The spin of node ``x`` in configuration ``s`` is bit ``x`` of ``s``
(0 = up, 1 = down).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph

__all__ = [
    "LIMITS",
    "GuardError",
    "Limits",
    "PureState",
    "basis_index",
    "complement_density",
    "initial_state",
    "padding_mask",
    "reduced_density",
    "spin_bits",
    "unpack_index",
]


class GuardError(MemoryError):
    """Raised when a requested allocation is above the configured limit."""


@dataclass
class Limits:
    """Memory guards; mutate the module-level ``LIMITS`` to change them."""

    max_state_nodes: int = 16
    max_spin_density_nodes: int = 12
    max_unitary_dim: int = 20000


LIMITS = Limits()


def spin_bits(n_nodes: int) -> np.ndarray:
    """Array ``b[x, s]`` with bit ``x`` of ``s``, shape ``(N, 2**N)``."""
    s = np.arange(1 << n_nodes)
    return (s[None, :] >> np.arange(n_nodes)[:, None]) & 1


def padding_mask(graph: Graph) -> np.ndarray:
    """Boolean ``(N, d)`` array, True on valid colors ``c < d_x``."""
    return np.arange(graph.max_degree)[None, :] < graph.degree_array[:, None]


def basis_index(x: int, c: int, s: int, graph: Graph) -> int:
    """Packed index of the ket |x c s>."""
    if not 0 <= x < graph.n_nodes:
        raise ValueError(f"node {x} outside [0, {graph.n_nodes})")
    if not 0 <= c < graph.degrees[x]:
        raise ValueError(f"color {c} invalid at node {x} of degree {graph.degrees[x]}")
    if not 0 <= s < graph.n_spin_configs:
        raise ValueError(f"spin configuration {s} outside [0, {graph.n_spin_configs})")
    return (graph.offsets[x] + c) * graph.n_spin_configs + s


def unpack_index(index: int, graph: Graph) -> tuple[int, int, int]:
    """Inverse of :func:`basis_index`."""
    if not 0 <= index < graph.packed_dim:
        raise ValueError(f"index {index} outside [0, {graph.packed_dim})")
    slot, s = divmod(int(index), graph.n_spin_configs)
    x = int(np.searchsorted(graph.offsets, slot, side="right")) - 1
    return x, slot - graph.offsets[x], s


@dataclass
class PureState:
    """A normalized pure state of the walker and the spins."""

    graph: Graph
    amplitudes: np.ndarray

    def __post_init__(self):
        g = self.graph
        shape = (g.n_nodes, g.max_degree, g.n_spin_configs)
        if self.amplitudes.shape != shape:
            raise ValueError(f"amplitudes have shape {self.amplitudes.shape}, expected {shape}")

    @classmethod
    def zeros(cls, graph: Graph) -> "PureState":
        if graph.n_nodes > LIMITS.max_state_nodes:
            raise GuardError(
                f"a state on {graph.n_nodes} nodes exceeds the limit of "
                f"{LIMITS.max_state_nodes} nodes"
            )
        shape = (graph.n_nodes, graph.max_degree, graph.n_spin_configs)
        return cls(graph, np.zeros(shape, dtype=complex))

    @classmethod
    def from_packed(cls, graph: Graph, vector: np.ndarray) -> "PureState":
        vector = np.asarray(vector)
        if vector.shape != (graph.packed_dim,):
            raise ValueError(f"packed vector must have length {graph.packed_dim}")
        state = cls.zeros(graph)
        state.amplitudes[padding_mask(graph)] = vector.reshape(-1, graph.n_spin_configs)
        return state

    def packed(self) -> np.ndarray:
        return self.amplitudes[padding_mask(self.graph)].ravel()

    def copy(self) -> "PureState":
        return PureState(self.graph, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def padding_weight(self) -> float:
        """Total probability on padding colors; zero for every valid state."""
        return float(np.sum(np.abs(self.amplitudes[~padding_mask(self.graph)]) ** 2))

    def to_records(self, cutoff: float = 0.0) -> list[tuple[int, int, int, float, float]]:
        """``(x, c, s, re, im)`` for every amplitude with modulus above ``cutoff``."""
        xs, cs, ss = np.nonzero(np.abs(self.amplitudes) > cutoff)
        values = self.amplitudes[xs, cs, ss]
        return [
            (int(x), int(c), int(s), float(v.real), float(v.imag))
            for x, c, s, v in zip(xs, cs, ss, values)
        ]

    @classmethod
    def from_records(cls, graph: Graph, records: Iterable[Sequence]) -> "PureState":
        state = cls.zeros(graph)
        for x, c, s, re, im in records:
            basis_index(x, c, s, graph)
            state.amplitudes[x, c, s] = complex(re, im)
        return state

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({"records": self.to_records()}))

    def save_binary(self, path: str | Path) -> None:
        """Packed amplitudes as little-endian (re, im) float64 pairs."""
        self.packed().astype("<c16").tofile(path)


def initial_state(graph: Graph, kets: Sequence[Sequence[int]]) -> PureState:
    """Equal-weight superposition of the listed ``(x, c, s)`` kets."""
    kets = [tuple(int(v) for v in k) for k in kets]
    if not kets:
        raise ValueError("initial ket list is empty")
    if len(set(kets)) != len(kets):
        raise ValueError(f"duplicate kets in {kets}")
    state = PureState.zeros(graph)
    for x, c, s in kets:
        basis_index(x, c, s, graph)
        state.amplitudes[x, c, s] = 1.0
    state.amplitudes /= np.sqrt(len(kets))
    return state


def _check_part(part: str) -> None:
    if part not in ("x", "c", "s"):
        raise ValueError(f"part must be one of 'x', 'c', 's', got {part!r}")


def reduced_density(state: PureState, part: str) -> np.ndarray:
    """Reduced density matrix of position ``'x'``, color ``'c'`` or spins ``'s'``.

    The spin matrix is ``2**N`` square and refused above
    ``LIMITS.max_spin_density_nodes`` nodes.
    """
    _check_part(part)
    a = state.amplitudes
    if part == "x":
        m = a.reshape(a.shape[0], -1)
        return m @ m.conj().T
    if part == "c":
        return np.einsum("xcs,xks->ck", a, a.conj())
    n = state.graph.n_nodes
    if n > LIMITS.max_spin_density_nodes:
        raise GuardError(
            f"spin density matrix on {n} nodes is 2**{n} square, above the limit of "
            f"{LIMITS.max_spin_density_nodes} nodes"
        )
    m = a.reshape(-1, a.shape[2])
    return m.T @ m.conj()


def complement_density(state: PureState, part: str) -> np.ndarray:
    """Reduced density matrix of everything except ``part``, flattened.

    Its nonzero spectrum equals the one of ``reduced_density(state, part)``.
    """
    _check_part(part)
    a = state.amplitudes
    n, d, ns = a.shape
    if part == "x":
        m = a.reshape(n, d * ns)
    elif part == "c":
        m = a.transpose(1, 0, 2).reshape(d, n * ns)
    else:
        m = a.reshape(n * d, ns).T
    return m.T @ m.conj()
