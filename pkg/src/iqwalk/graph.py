"""Graphs carrying the walker: adjacency, subnode (color) labels and generators.

Every node ``x`` keeps its neighbours sorted increasingly in ``adjacency[x]``.
The color ``i`` at ``x`` points along the edge to ``y = adjacency[x][i]``, and
``subnodes[x][i]`` is the color of the same edge seen from ``y``, i.e. the
position of ``x`` inside ``adjacency[y]``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

__all__ = [
    "FAMILIES",
    "Graph",
    "GraphError",
    "build_graph",
    "export_dot",
    "generate",
    "load_graph",
    "save_graph",
]


class GraphError(ValueError):
    """Raised for malformed edge lists, graph files or generator parameters."""


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph with the walker's labeling convention.

    Build instances with :func:`build_graph` or :func:`generate`; the derived
    fields are filled there and never change afterwards.
    """

    n_nodes: int
    adjacency: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]
    degrees: tuple[int, ...]
    subnodes: tuple[tuple[int, ...], ...]
    offsets: tuple[int, ...]
    max_degree: int
    name: str = field(default="", compare=False)

    @property
    def total_degree(self) -> int:
        """Sum of degrees, the number of (node, color) pairs in the packed basis."""
        return self.offsets[-1] + self.degrees[-1]

    @property
    def n_spin_configs(self) -> int:
        return 1 << self.n_nodes

    @property
    def packed_dim(self) -> int:
        return self.total_degree * self.n_spin_configs

    @property
    def padded_dim(self) -> int:
        return self.n_nodes * self.max_degree * self.n_spin_configs

    @cached_property
    def degree_array(self) -> np.ndarray:
        return np.asarray(self.degrees, dtype=np.int64)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph(name=self.name)
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from(self.edges)
        return g

    def __repr__(self) -> str:
        label = f"{self.name!r}, " if self.name else ""
        return f"Graph({label}n_nodes={self.n_nodes}, n_edges={len(self.edges)})"


def build_graph(edge_list: Iterable[Sequence[int]], n_nodes: int, name: str = "") -> Graph:
    """Build a :class:`Graph` from undirected edges on nodes ``0..n_nodes-1``.

    Duplicate edges (in either orientation), self-loops, out-of-range labels
    and isolated nodes are rejected.
    """
    n_nodes = int(n_nodes)
    if n_nodes < 2:
        raise GraphError(f"need at least 2 nodes, got {n_nodes}")
    neighbours: list[set[int]] = [set() for _ in range(n_nodes)]
    edges = []
    for pair in edge_list:
        if len(pair) != 2:
            raise GraphError(f"edge {pair!r} is not a pair")
        x, y = (int(v) for v in pair)
        if not (0 <= x < n_nodes and 0 <= y < n_nodes):
            raise GraphError(f"edge ({x}, {y}) has a node outside [0, {n_nodes})")
        if x == y:
            raise GraphError(f"self-loop at node {x}")
        if y in neighbours[x]:
            raise GraphError(f"duplicate edge ({x}, {y})")
        neighbours[x].add(y)
        neighbours[y].add(x)
        edges.append((min(x, y), max(x, y)))

    isolated = [x for x in range(n_nodes) if not neighbours[x]]
    if isolated:
        raise GraphError(f"isolated nodes {isolated}: the walker cannot move there")

    adjacency = tuple(tuple(sorted(nb)) for nb in neighbours)
    degrees = tuple(len(nb) for nb in adjacency)
    subnodes = tuple(
        tuple(adjacency[y].index(x) for y in adjacency[x]) for x in range(n_nodes)
    )
    offsets = tuple(int(v) for v in np.concatenate([[0], np.cumsum(degrees)[:-1]]))
    return Graph(
        n_nodes=n_nodes,
        adjacency=adjacency,
        edges=tuple(sorted(edges)),
        degrees=degrees,
        subnodes=subnodes,
        offsets=offsets,
        max_degree=max(degrees),
        name=name,
    )


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _cycle(n: int) -> list[tuple[int, int]]:
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    return [(i, (i + 1) % n) for i in range(n)]


def _path(n: int) -> list[tuple[int, int]]:
    if n < 2:
        raise GraphError("path needs n >= 2")
    return [(i, i + 1) for i in range(n - 1)]


def _ladder(k: int) -> list[tuple[int, int]]:
    # rails 0..k-1 and k..2k-1, rungs i -- i+k (networkx ladder_graph labeling)
    if k < 2:
        raise GraphError("ladder needs k >= 2 rungs")
    rails = [(i, i + 1) for i in range(k - 1)] + [(k + i, k + i + 1) for i in range(k - 1)]
    return rails + [(i, i + k) for i in range(k)]


def _circular_ladder(k: int) -> list[tuple[int, int]]:
    if k < 3:
        raise GraphError("circular ladder needs k >= 3 rungs")
    rails = [(i, (i + 1) % k) for i in range(k)] + [(k + i, k + (i + 1) % k) for i in range(k)]
    return rails + [(i, i + k) for i in range(k)]


def _moebius_ladder(n: int) -> list[tuple[int, int]]:
    # cycle 0..n-1 plus the n/2 long diagonals
    if n < 6 or n % 2:
        raise GraphError("moebius ladder needs an even n >= 6")
    return [(i, (i + 1) % n) for i in range(n)] + [(i, i + n // 2) for i in range(n // 2)]


def _complete(n: int) -> list[tuple[int, int]]:
    if n < 2:
        raise GraphError("complete graph needs n >= 2")
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _bull() -> list[tuple[int, int]]:
    return [(0, 1), (0, 3), (0, 4), (2, 4), (3, 4)]


def _kite() -> list[tuple[int, int]]:
    # K5 on 0..4, K3 on 5..7, bridge 4 -- 5
    k5 = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    k3 = [(5, 6), (5, 7), (6, 7)]
    return k5 + k3 + [(4, 5)]


def _connected_sample(make, seed: int | None, max_tries: int = 1000) -> nx.Graph:
    rng = random.Random(seed)
    for _ in range(max_tries):
        g = make(rng.randrange(2**32))
        if nx.is_connected(g):
            return g
    raise GraphError(f"no connected sample found in {max_tries} tries")


def _random_regular(d: int, n: int, seed: int | None = None) -> list[tuple[int, int]]:
    if d < 1 or d >= n or (d * n) % 2:
        raise GraphError(f"no simple {d}-regular graph on {n} nodes")
    g = _connected_sample(lambda s: nx.random_regular_graph(d, n, seed=s), seed)
    return list(g.edges())


def _erdos_renyi(n: int, m: int, seed: int | None = None) -> list[tuple[int, int]]:
    if m < n - 1 or m > n * (n - 1) // 2:
        raise GraphError(f"G({n}, m={m}) cannot be connected and simple")
    g = _connected_sample(lambda s: nx.gnm_random_graph(n, m, seed=s), seed)
    return list(g.edges())


FAMILIES = {
    "cycle": (_cycle, lambda n: n),
    "path": (_path, lambda n: n),
    "ladder": (_ladder, lambda k: 2 * k),
    "circular_ladder": (_circular_ladder, lambda k: 2 * k),
    "moebius_ladder": (_moebius_ladder, lambda n: n),
    "complete": (_complete, lambda n: n),
    "bull": (_bull, lambda: 5),
    "kite": (_kite, lambda: 8),
    "random_regular": (_random_regular, lambda d, n, seed=None: n),
    "erdos_renyi": (_erdos_renyi, lambda n, m, seed=None: n),
}
# short names used for the 8-node ladders
_ALIASES = {"cube": ("circular_ladder", (4,)), "moebius": ("moebius_ladder", (8,))}


def generate(family: str, *params, **kwargs) -> Graph:
    """Generate a named graph family.

    >>> generate("circular_ladder", 4).packed_dim
    6144
    >>> generate("random_regular", 3, 8, seed=1).degrees
    (3, 3, 3, 3, 3, 3, 3, 3)
    """
    if family in _ALIASES and not params and not kwargs:
        family, params = _ALIASES[family]
    try:
        make_edges, count = FAMILIES[family]
    except KeyError:
        raise GraphError(
            f"unknown family {family!r}; choose from {sorted(FAMILIES) + sorted(_ALIASES)}"
        ) from None
    try:
        edges = make_edges(*params, **kwargs)
        n = count(*params, **kwargs)
    except TypeError as exc:
        raise GraphError(f"bad parameters for {family}: {exc}") from None
    label = family + ("(" + ",".join(str(p) for p in params) + ")" if params else "")
    if kwargs.get("seed") is not None:
        label += f"[seed={kwargs['seed']}]"
    return build_graph(edges, n, name=label)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def save_graph(graph: Graph, path: str | Path) -> None:
    """Write the edge-list format: ``N <count>`` then one ``x y`` per line."""
    lines = [f"N {graph.n_nodes}"] + [f"{x} {y}" for x, y in graph.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path: str | Path) -> Graph:
    """Read a graph written by :func:`save_graph`.

    Blank lines and ``#`` comments are skipped. Errors carry the line number.
    """
    path = Path(path)
    n_nodes = None
    edges = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n_nodes is None:
            if len(fields) != 2 or fields[0] != "N" or not fields[1].isdigit():
                raise GraphError(f"{path}:{lineno}: expected 'N <count>', got {raw!r}")
            n_nodes = int(fields[1])
            continue
        if len(fields) != 2 or not all(f.isdigit() for f in fields):
            raise GraphError(f"{path}:{lineno}: expected 'x y', got {raw!r}")
        x, y = int(fields[0]), int(fields[1])
        if x >= n_nodes or y >= n_nodes:
            raise GraphError(f"{path}:{lineno}: edge ({x}, {y}) outside [0, {n_nodes})")
        edges.append((x, y))
    if n_nodes is None:
        raise GraphError(f"{path}: missing 'N <count>' header")
    try:
        return build_graph(edges, n_nodes, name=path.stem)
    except GraphError as exc:
        raise GraphError(f"{path}: {exc}") from None


def export_dot(graph: Graph, path: str | Path | None = None) -> str:
    """Render the graph as an undirected DOT document; write it if ``path`` is given."""
    name = (graph.name or "G").replace('"', "'")
    lines = [f'graph "{name}" {{']
    lines += [f"  {x};" for x in range(graph.n_nodes)]
    lines += [f"  {x} -- {y};" for x, y in graph.edges]
    lines.append("}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
