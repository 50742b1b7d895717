"""Histograms, empirical CDFs and the small fits used on spectra and eigenvectors."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "Histogram",
    "ecdf",
    "exponential_mle",
    "histogram",
    "ks_statistic",
]

FLOAT_FMT = "{:.17g}"


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    n_samples: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        """Counts normalized to unit integral over the binned range."""
        return self.counts / (self.counts.sum() * self.widths)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["left", "right", "count", "density"])
            for lo, hi, n, rho in zip(self.edges[:-1], self.edges[1:], self.counts, self.density):
                w.writerow([FLOAT_FMT.format(lo), FLOAT_FMT.format(hi), int(n), FLOAT_FMT.format(rho)])


def histogram(samples, bins: int = 50, range: tuple[float, float] | None = None) -> Histogram:
    """Fixed-width histogram; bins are half-open except the last one.

    Samples outside ``range`` are not counted.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("cannot histogram an empty sample")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if range is not None and not range[0] < range[1]:
        raise ValueError(f"empty histogram range {range}")
    counts, edges = np.histogram(samples, bins=bins, range=range)
    return Histogram(edges=edges, counts=counts, n_samples=samples.size)


def ecdf(samples) -> tuple[np.ndarray, np.ndarray]:
    """Sorted samples and the empirical CDF value just after each of them."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("empty sample")
    return x, np.arange(1, x.size + 1) / x.size


def ks_statistic(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_n - F|`` against a model CDF."""
    x, f_hi = ecdf(samples)
    f_lo = f_hi - 1.0 / x.size
    model = np.asarray(cdf(x), dtype=float)
    return float(max(np.max(f_hi - model), np.max(model - f_lo), 0.0))


def exponential_mle(samples) -> float:
    """Maximum-likelihood rate of an exponential law, ``1 / mean``."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("empty sample")
    if np.any(samples <= 0):
        raise ValueError("exponential fit needs strictly positive samples")
    return float(1.0 / samples.mean())
