"""Exact diagonalization of U and the statistics built on its spectrum.

Quasienergies follow ``U|n> = exp(-i E_n)|n>`` with ``E_n`` in ``(-pi, pi]``.

The default solver diagonalizes the Hermitian part ``(U + U^dagger)/2``, whose
eigenvalues are ``cos E_n`` with the same eigenvectors, and then resolves every
cluster of (nearly) equal cosines, which holds ``+-E`` pairs and true
degeneracies, by diagonalizing ``U`` restricted to that cluster's subspace.
This is several times faster than a non-Hermitian solver and uses real
arithmetic when ``U`` is real. ``method="schur"`` uses a complex Schur
decomposition instead; for a normal matrix the Schur factor is diagonal and the
Schur basis is an orthonormal eigenbasis.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np
import scipy.linalg as sl
import scipy.sparse as sparse
from scipy.special import erf

from .graph import Graph
from .ops import EvolutionOperator, sparse_unitary
from .state import LIMITS, GuardError, PureState
from .stats import FLOAT_FMT, Histogram, exponential_mle, histogram, ks_statistic

__all__ = [
    "BranchCutWarning",
    "SpectralData",
    "ThermalizationReport",
    "UNetwork",
    "basis_permutation",
    "degeneracy_classes",
    "diagonalize",
    "effective_hamiltonian",
    "eigenvector_statistics",
    "ks_distance",
    "level_spacings",
    "microcanonical_distribution",
    "node_distribution",
    "poisson_cdf",
    "poisson_pdf",
    "quasienergy_histogram",
    "shannon_entropy",
    "thermalization_report",
    "u_network",
    "walk_symmetries",
    "wigner_surmise_cdf",
    "wigner_surmise_pdf",
]

DEGENERACY_TOL = 1e-8
UNITARY_TOL = 1e-6
CLUSTER_TOL = 1e-6
METHODS = ("hermitian", "schur")


class BranchCutWarning(RuntimeWarning):
    """A degenerate class straddles the quasienergy branch cut at +-pi."""


def _to_quasienergy(eigenvalues: np.ndarray) -> np.ndarray:
    energies = -np.angle(eigenvalues)
    energies[energies <= -np.pi] = np.pi
    return energies


def degeneracy_classes(energies, tol: float = DEGENERACY_TOL) -> list[np.ndarray]:
    """Group indices of sorted quasienergies whose consecutive gaps are ``<= tol``.

    The first and last groups are merged when they touch across ``+-pi``.
    """
    energies = np.asarray(energies)
    if energies.size == 0:
        return []
    breaks = np.nonzero(np.diff(energies) > tol)[0] + 1
    classes = np.split(np.arange(energies.size), breaks)
    if len(classes) > 1 and energies[0] + 2 * np.pi - energies[-1] <= tol:
        classes[0] = np.concatenate([classes[-1], classes[0]])
        classes.pop()
    return classes


def shannon_entropy(vector) -> float:
    """``-sum |v|**2 log2 |v|**2`` of a normalized vector."""
    p = np.abs(np.asarray(vector)) ** 2
    if not np.any(p > 0):
        raise ValueError("Shannon entropy of a zero vector")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _column_entropies(vectors: np.ndarray, chunk: int = 512) -> np.ndarray:
    out = np.empty(vectors.shape[1])
    for start in range(0, vectors.shape[1], chunk):
        p = np.abs(vectors[:, start:start + chunk]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            out[start:start + chunk] = -np.sum(np.where(p > 0, p * np.log2(p), 0.0), axis=0)
    return out


@dataclass(frozen=True)
class SpectralData:
    """Sorted quasienergies, optional eigenvectors (columns) and derived data."""

    quasienergies: np.ndarray
    vectors: np.ndarray | None = None
    entropies: np.ndarray | None = None
    tol: float = DEGENERACY_TOL
    graph: Graph | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.quasienergies.size

    @property
    def classes(self) -> list[np.ndarray]:
        return degeneracy_classes(self.quasienergies, self.tol)

    def class_labels(self) -> np.ndarray:
        labels = np.empty(self.dim, dtype=int)
        for k, idx in enumerate(self.classes):
            labels[idx] = k
        return labels

    def reconstruct(self) -> np.ndarray:
        """``V exp(-iE) V^dagger``."""
        if self.vectors is None:
            raise ValueError("eigenvectors were not computed")
        v = self.vectors
        return (v * np.exp(-1j * self.quasienergies)) @ v.conj().T

    def typical_index(self) -> int:
        """Index of the maximum-entropy eigenvector (lowest index on ties)."""
        if self.entropies is None:
            raise ValueError("eigenvectors were not computed")
        return int(np.argmax(self.entropies))

    def to_csv(self, path: str | Path) -> None:
        labels = self.class_labels()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "E", "shannon", "degeneracy_class"])
            for n, e in enumerate(self.quasienergies):
                ent = "" if self.entropies is None else FLOAT_FMT.format(self.entropies[n])
                w.writerow([n, FLOAT_FMT.format(e), ent, labels[n]])


def _hermitian_eig(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = u.shape[0]
    us = sparse.csr_matrix(u) if np.count_nonzero(u) < n * n // 10 else u
    if not np.any(u.imag):
        us = us.real
    a = us + us.conj().T
    a = (a.toarray() if sparse.issparse(a) else a) / 2
    driver = "evd" if np.isrealobj(a) else "evr"
    cosines, v = sl.eigh(a, check_finite=False, overwrite_a=True, driver=driver)
    del a
    if np.isrealobj(v):
        v = v.astype(complex)
    lam = np.empty(n, dtype=complex)
    breaks = np.nonzero(np.diff(cosines) > CLUSTER_TOL)[0] + 1
    for idx in np.split(np.arange(n), breaks):
        w = v[:, idx]
        uw = us @ w
        if idx.size == 1:
            lam[idx] = np.vdot(w[:, 0], uw[:, 0])
            continue
        t, q = sl.schur(w.conj().T @ uw, output="complex")
        lam[idx] = np.diag(t)
        v[:, idx] = w @ q
    residual = np.max(np.abs(us @ v - v * lam)) if n else 0.0
    if residual > UNITARY_TOL:
        raise ValueError(f"not normal: eigenpair residual {residual:.3g}")
    return lam, v


def diagonalize(
    u,
    vectors: bool = True,
    tol: float = DEGENERACY_TOL,
    graph: Graph | None = None,
    method: str = "hermitian",
) -> SpectralData:
    """Diagonalize a unitary matrix (or :class:`EvolutionOperator`).

    Parameters
    ----------
    u : array_like or EvolutionOperator
    vectors : bool
        Keep the eigenvectors and their Shannon entropies.
    tol : float
        Gap below which quasienergies count as degenerate.
    graph : Graph, optional
        Attached to the result; taken from ``u`` when it is an operator.
    method : {"hermitian", "schur"}

    Raises ``ValueError`` when an eigenvalue modulus differs from one by more
    than ``1e-6`` or when the eigen decomposition does not reproduce ``U`` to
    that accuracy (non-normal input).
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if isinstance(u, EvolutionOperator):
        graph = graph or u.graph
        u = u.matrix
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    if u.shape[0] > LIMITS.max_unitary_dim:
        raise GuardError(f"dimension {u.shape[0]} exceeds the limit of {LIMITS.max_unitary_dim}")
    off = 0.0
    if method == "hermitian":
        lam, z = _hermitian_eig(u)
    elif vectors:
        t, z = sl.schur(u, output="complex", check_finite=False)
        lam = np.diag(t).copy()
        off = np.max(np.abs(np.triu(t, 1))) if t.shape[0] > 1 else 0.0
        del t
    else:
        lam, z = sl.eigvals(u, check_finite=False), None
    drift = np.max(np.abs(np.abs(lam) - 1.0)) if lam.size else 0.0
    if drift > UNITARY_TOL:
        raise ValueError(f"not unitary: eigenvalue modulus off by {drift:.3g}")
    if off > UNITARY_TOL:
        raise ValueError(f"not normal: Schur factor has off-diagonal entries up to {off:.3g}")
    if not vectors:
        z = None
    energies = _to_quasienergy(lam)
    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    entropies = None
    if z is not None:
        z = z[:, order]
        entropies = _column_entropies(z)
    return SpectralData(energies, z, entropies, tol, graph)


# ---------------------------------------------------------------------------
# level statistics
# ---------------------------------------------------------------------------

def level_spacings(spectral, filter_degeneracy: bool = False, tol: float | None = None) -> np.ndarray:
    """Consecutive quasienergy gaps divided by their mean (no wrap at ``+-pi``).

    With ``filter_degeneracy`` every run of levels closer than ``tol`` is
    replaced by its first member before the gaps are taken.
    """
    if isinstance(spectral, SpectralData):
        energies = spectral.quasienergies
        tol = spectral.tol if tol is None else tol
    else:
        energies = np.sort(np.asarray(spectral, dtype=float))
        tol = DEGENERACY_TOL if tol is None else tol
    if filter_degeneracy and energies.size:
        keep = np.concatenate([[True], np.diff(energies) > tol])
        energies = energies[keep]
    if energies.size < 3:
        raise ValueError(f"need at least 3 levels, got {energies.size}")
    gaps = np.diff(energies)
    return gaps / gaps.mean()


def _check_nonnegative(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("spacings must be >= 0")
    return s


def wigner_surmise_pdf(s):
    """Unitary-ensemble surmise ``(32 s**2/pi**2) exp(-4 s**2/pi)``."""
    s = _check_nonnegative(s)
    return 32.0 * s**2 / np.pi**2 * np.exp(-4.0 * s**2 / np.pi)


def wigner_surmise_cdf(s):
    s = _check_nonnegative(s)
    return erf(2.0 * s / np.sqrt(np.pi)) - 4.0 * s / np.pi * np.exp(-4.0 * s**2 / np.pi)


def poisson_pdf(s):
    return np.exp(-_check_nonnegative(s))


def poisson_cdf(s):
    return -np.expm1(-_check_nonnegative(s))


def ks_distance(samples, cdf) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``cdf``."""
    return ks_statistic(samples, cdf)


def quasienergy_histogram(spectral: SpectralData, bins: int = 50) -> Histogram:
    return histogram(spectral.quasienergies, bins=bins, range=(-np.pi, np.pi))


# ---------------------------------------------------------------------------
# eigenvectors and thermalization
# ---------------------------------------------------------------------------

def microcanonical_distribution(graph: Graph) -> np.ndarray:
    """Degree-weighted node distribution ``d_x / sum d``."""
    d = graph.degree_array.astype(float)
    return d / d.sum()


def node_distribution(graph: Graph, vector) -> np.ndarray:
    """Position distribution of a packed vector, summing over colors and spins."""
    weights = np.abs(np.asarray(vector).reshape(graph.total_degree, -1)) ** 2
    return np.add.reduceat(weights.sum(axis=1), np.asarray(graph.offsets))


def eigenvector_statistics(vector, bins: int = 20) -> dict:
    """Porter-Thomas style checks on one eigenvector.

    ``scaled = dim * |v|**2`` is compared with ``Exp(1)`` and with the
    maximum-likelihood exponential; phases are histogrammed in ``bins`` bins.
    """
    v = np.asarray(vector)
    scaled = v.size * np.abs(v) ** 2
    nonzero = scaled[scaled > 0]
    rate = exponential_mle(nonzero)
    phases = histogram(np.angle(v[np.abs(v) > 0]), bins=bins, range=(-np.pi, np.pi))
    expected = phases.n_samples / bins
    return {
        "dim": int(v.size),
        "rate": rate,
        "ks_exp1": ks_statistic(scaled, lambda x: -np.expm1(-x)),
        "ks_fit": ks_statistic(nonzero, lambda x: -np.expm1(-rate * x)),
        "phase_counts": phases.counts.tolist(),
        "phase_max_rel_dev": float(np.max(np.abs(phases.counts - expected)) / expected),
    }


@dataclass
class ThermalizationReport:
    p_eig: np.ndarray
    p_time: np.ndarray
    p_micro: np.ndarray
    distances: dict
    spin_eig: float
    spin_time: float
    spin_micro: float
    typical_index: int
    typical_quasienergy: float
    window: tuple[int, int]
    overlaps: np.ndarray | None = None
    tol: float = 0.05

    @property
    def thermal(self) -> bool:
        """True when every pair of distributions agrees within ``tol`` per node."""
        return all(d["max"] < self.tol for d in self.distances.values())

    def to_dict(self) -> dict:
        out = {}
        for key, value in asdict(self).items():
            out[key] = value.tolist() if isinstance(value, np.ndarray) else value
        out["window"] = list(self.window)
        out["thermal"] = self.thermal
        return out

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text


def _distance(a: np.ndarray, b: np.ndarray) -> dict:
    diff = np.abs(a - b)
    return {"l1": float(diff.sum()), "max": float(diff.max())}


def thermalization_report(
    spectral: SpectralData,
    trajectory,
    graph: Graph,
    t0: int | None = None,
    t_end: int | None = None,
    initial: PureState | None = None,
    tol: float = 0.05,
) -> ThermalizationReport:
    """Compare the typical eigenvector, the time average and the microcanonical law.

    ``trajectory`` is a :class:`~iqwalk.observables.TrajectoryRecord`; the
    window defaults to its second half.
    """
    from .observables import magnetization, time_average

    if spectral.vectors is None or spectral.entropies is None:
        raise ValueError("thermalization report needs eigenvectors")
    if spectral.graph is not None and spectral.graph != graph:
        raise ValueError("spectral data belongs to a different graph")
    if spectral.dim != graph.packed_dim:
        raise ValueError(f"spectral dimension {spectral.dim} != packed dimension {graph.packed_dim}")
    if trajectory.n_nodes != graph.n_nodes:
        raise ValueError("trajectory was recorded on a different graph")
    if t_end is None:
        t_end = trajectory.steps
    if t0 is None:
        t0 = t_end // 2

    k = spectral.typical_index()
    v = spectral.vectors[:, k]
    p_eig = node_distribution(graph, v)
    p_time, _ = time_average(trajectory.p, t0, t_end)
    p_micro = microcanonical_distribution(graph)
    distances = {
        "eig-time": _distance(p_eig, p_time),
        "eig-micro": _distance(p_eig, p_micro),
        "time-micro": _distance(p_time, p_micro),
    }
    overlaps = None
    if initial is not None:
        overlaps = np.abs(spectral.vectors.conj().T @ initial.packed()) ** 2
    return ThermalizationReport(
        p_eig=p_eig,
        p_time=p_time,
        p_micro=p_micro,
        distances=distances,
        spin_eig=float(np.mean(magnetization(PureState.from_packed(graph, v)))),
        spin_time=time_average(trajectory.s, t0, t_end)[1],
        spin_micro=0.0,
        typical_index=k,
        typical_quasienergy=float(spectral.quasienergies[k]),
        window=(t0, t_end),
        overlaps=overlaps,
        tol=tol,
    )


def effective_hamiltonian(spectral: SpectralData) -> np.ndarray:
    """``H = sum_n E_n |n><n|`` on the principal branch, so ``exp(-iH) = U``."""
    if spectral.vectors is None:
        raise ValueError("eigenvectors were not computed")
    e = spectral.quasienergies
    cut = 1e-10
    for idx in spectral.classes:
        if np.any(e[idx] >= np.pi - cut) and np.any(e[idx] <= -np.pi + cut):
            warnings.warn(
                "a degenerate class straddles the branch cut at +-pi; H is not unique there",
                BranchCutWarning,
                stacklevel=2,
            )
            break
    v = spectral.vectors
    h = (v * e) @ v.conj().T
    return 0.5 * (h + h.conj().T)


# ---------------------------------------------------------------------------
# U as a network
# ---------------------------------------------------------------------------

DOT_PALETTE = ("black", "red", "blue", "green", "yellow", "cyan", "magenta", "orange", "gray")


@dataclass(frozen=True)
class UNetwork:
    """Undirected network of basis kets linked by nonzero entries of U."""

    n_vertices: int
    edges: np.ndarray
    degrees: np.ndarray

    @property
    def degree_set(self) -> list[int]:
        return sorted({int(d) for d in self.degrees})

    def to_dot(self, path: str | Path | None = None) -> str:
        """DOT text with vertices colored by degree (lowest degree first in the palette)."""
        colors = {d: DOT_PALETTE[i % len(DOT_PALETTE)] for i, d in enumerate(self.degree_set)}
        lines = ["graph U {", "  node [shape=point];"]
        lines += [f'  {i} [color={colors[int(d)]}];' for i, d in enumerate(self.degrees)]
        lines += [f"  {i} -- {j};" for i, j in self.edges]
        lines.append("}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def u_network(u, threshold: float = 1e-12) -> UNetwork:
    """Link kets ``i != j`` whenever ``|U_ij|`` or ``|U_ji|`` exceeds ``threshold``."""
    if isinstance(u, EvolutionOperator):
        u = u.matrix
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    a = np.abs(np.asarray(u)) > threshold
    a |= a.T
    np.fill_diagonal(a, False)
    i, j = np.nonzero(np.triu(a, 1))
    return UNetwork(a.shape[0], np.column_stack([i, j]), a.sum(axis=1))


def basis_permutation(graph: Graph, sigma) -> np.ndarray:
    """Packed-basis image of every ket under the node relabeling ``x -> sigma[x]``.

    Colors follow their edges: ``|x c s>`` goes to ``|sigma(x) c' sigma(s)>``
    where color ``c'`` of ``sigma(x)`` points to ``sigma(G[x][c])``.
    """
    sigma = [int(v) for v in sigma]
    n = graph.n_nodes
    if sorted(sigma) != list(range(n)):
        raise ValueError("sigma is not a permutation of the nodes")
    s = np.arange(1 << n)
    s_img = np.zeros_like(s)
    for x in range(n):
        s_img |= ((s >> x) & 1) << sigma[x]
    out = np.empty(graph.packed_dim, dtype=np.int64)
    for x in range(n):
        targets = list(graph.adjacency[sigma[x]])
        for c, y in enumerate(graph.adjacency[x]):
            try:
                c_img = targets.index(sigma[y])
            except ValueError:
                raise ValueError(f"sigma does not preserve the edge ({x}, {y})") from None
            src = (graph.offsets[x] + c) << n
            dst = (graph.offsets[sigma[x]] + c_img) << n
            out[src + s] = dst + s_img
    return out


def walk_symmetries(
    graph: Graph, coin: str = "grover", cz_mode: str = "edge_list", tol: float = 1e-12
) -> list[tuple[int, ...]]:
    """Non-trivial graph automorphisms whose basis permutation commutes with ``U``.

    A symmetry splits the spectrum into independent sectors, so level
    statistics of the full spectrum then mix uncorrelated sequences.
    """
    if graph.n_nodes > LIMITS.max_state_nodes:
        raise GuardError(f"{graph.n_nodes} nodes is above the limit of {LIMITS.max_state_nodes}")
    u = sparse_unitary(graph, coin, cz_mode).tocoo()
    g = graph.to_networkx()
    found = []
    for iso in nx.algorithms.isomorphism.GraphMatcher(g, g).isomorphisms_iter():
        sigma = tuple(iso[x] for x in range(graph.n_nodes))
        if sigma == tuple(range(graph.n_nodes)):
            continue
        p = basis_permutation(graph, sigma)
        moved = sparse.csr_matrix((u.data, (p[u.row], p[u.col])), shape=u.shape)
        diff = moved - u
        if diff.nnz == 0 or np.max(np.abs(diff.data)) <= tol:
            found.append(sigma)
    return found
