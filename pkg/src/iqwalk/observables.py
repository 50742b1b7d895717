"""Observables along a trajectory: density, magnetization and entanglement."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ops import evolve
from .state import LIMITS, GuardError, PureState, complement_density, reduced_density, spin_bits
from .stats import FLOAT_FMT

__all__ = [
    "TrajectoryRecord",
    "entanglement_entropy",
    "magnetization",
    "mean_spin",
    "position_distribution",
    "run_trajectory",
    "spin_fluctuation",
    "time_average",
    "von_neumann_entropy",
]

EIGEN_FLOOR = 1e-12
PARTS = ("x", "c", "s")


def position_distribution(state: PureState) -> np.ndarray:
    """``p(x) = sum_{c,s} |psi_xcs|**2``."""
    return np.sum(np.abs(state.amplitudes) ** 2, axis=(1, 2))


def magnetization(state: PureState) -> np.ndarray:
    """``<sigma_z(x)>`` for every node, up = +1."""
    weights = np.sum(np.abs(state.amplitudes) ** 2, axis=(0, 1))
    sign = 1 - 2 * spin_bits(state.graph.n_nodes)
    return sign @ weights


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits; eigenvalues under ``1e-12`` are dropped."""
    w = np.linalg.eigvalsh(rho)
    w = w[w > EIGEN_FLOOR]
    return float(-np.sum(w * np.log2(w)))


def entanglement_entropy(state: PureState, part: str) -> float:
    """Von Neumann entropy (bits) of position, color or spins against the rest.

    The smaller of ``rho(part)`` and the complementary reduced matrix is
    diagonalized; both have the same nonzero spectrum.
    """
    if part not in PARTS:
        raise ValueError(f"part must be one of {PARTS}, got {part!r}")
    g = state.graph
    if part == "s" and g.n_nodes > LIMITS.max_spin_density_nodes:
        raise GuardError(
            f"spin entropy on {g.n_nodes} nodes is above the limit of "
            f"{LIMITS.max_spin_density_nodes} nodes"
        )
    n, d, ns = state.amplitudes.shape
    size = {"x": n, "c": d, "s": ns}[part]
    if size <= n * d * ns // size:
        return von_neumann_entropy(reduced_density(state, part))
    return von_neumann_entropy(complement_density(state, part))


@dataclass
class TrajectoryRecord:
    """Observables at steps ``0..T``; rows are steps."""

    p: np.ndarray
    s: np.ndarray
    entropy: np.ndarray | None = None

    @property
    def steps(self) -> int:
        """Index ``T`` of the last recorded step."""
        return self.p.shape[0] - 1

    @property
    def n_nodes(self) -> int:
        return self.p.shape[1]

    def columns(self) -> list[str]:
        cols = ["t"] + [f"p{x}" for x in range(self.n_nodes)] + [f"s{x}" for x in range(self.n_nodes)]
        if self.entropy is not None:
            cols += ["S_x", "S_c", "S_s"]
        return cols

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for t in range(self.steps + 1):
                row = [str(t)] + [FLOAT_FMT.format(v) for v in self.p[t]]
                row += [FLOAT_FMT.format(v) for v in self.s[t]]
                if self.entropy is not None:
                    row += [FLOAT_FMT.format(v) for v in self.entropy[t]]
                w.writerow(row)

    @classmethod
    def from_csv(cls, path: str | Path) -> "TrajectoryRecord":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=float)
        n = sum(1 for h in header if h.startswith("p"))
        entropy = data[:, 1 + 2 * n:] if "S_x" in header else None
        return cls(p=data[:, 1:1 + n], s=data[:, 1 + n:1 + 2 * n], entropy=entropy)


def run_trajectory(
    state: PureState,
    steps: int,
    coin: str = "grover",
    cz_mode: str = "edge_list",
    entropies: bool = True,
) -> tuple[TrajectoryRecord, PureState]:
    """Evolve ``steps`` times and record observables at every step.

    Returns the record and the final state.
    """
    p, s, ent = [], [], []
    for psi in evolve(state, steps, coin, cz_mode):
        p.append(position_distribution(psi))
        s.append(magnetization(psi))
        if entropies:
            ent.append([entanglement_entropy(psi, part) for part in PARTS])
    record = TrajectoryRecord(np.array(p), np.array(s), np.array(ent) if entropies else None)
    return record, psi


def _window(series, t0: int, t_end: int | None) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    last = series.shape[0] - 1
    if t_end is None:
        t_end = last
    if not 0 <= t0 <= t_end <= last:
        raise ValueError(f"window [{t0}, {t_end}] is empty or outside the recorded steps 0..{last}")
    return series[t0:t_end + 1]


def time_average(series, t0: int, t_end: int | None = None) -> tuple[np.ndarray, float]:
    """Per-node mean over steps ``t0..t_end`` (inclusive) and its site mean."""
    per_node = _window(series, t0, t_end).mean(axis=0)
    return per_node, float(np.mean(per_node))


def mean_spin(series, t0: int, t_end: int | None = None, mode: str = "average") -> float:
    """Scalar magnetization: time and site average, or the site mean at ``t_end``."""
    if mode == "average":
        return time_average(series, t0, t_end)[1]
    if mode == "snapshot":
        return float(np.mean(_window(series, t0, t_end)[-1]))
    raise ValueError(f"mode must be 'average' or 'snapshot', got {mode!r}")


def spin_fluctuation(series, t0: int, t_end: int | None = None) -> np.ndarray:
    """Spin standard deviation per node around the overall mean ``s_bar``."""
    window = _window(series, t0, t_end)
    if window.shape[0] < 2:
        raise ValueError("spin fluctuation needs at least two steps")
    s_bar = float(np.mean(window.mean(axis=0)))
    return np.sqrt(np.mean((window - s_bar) ** 2, axis=0))
