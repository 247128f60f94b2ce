"""Evaluation: error CDFs, link accounting, analytic complexity, CER."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError
from .particles import ParticleBelief, gaussian_entropy
from .seeding import derive_rng
from .traffic import TrafficLog

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CdfCurve:
    """Empirical CDF of positioning error over a threshold grid."""

    thresholds: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if list(self.thresholds) != sorted(self.thresholds):
            raise ConfigurationError("thresholds must be ascending")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ConfigurationError("CDF values must be nondecreasing")
        if self.values and not 0.0 <= self.values[-1] <= 1.0:
            raise ConfigurationError("CDF values must lie in [0, 1]")

    def value_at(self, threshold: float) -> float:
        for t, v in zip(self.thresholds, self.values):
            if math.isclose(t, threshold):
                return v
        raise ConfigurationError(f"threshold {threshold} not on the curve grid")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold_m", "cdf"])
            for t, v in zip(self.thresholds, self.values):
                writer.writerow([f"{t:.9g}", f"{v:.9g}"])


def errors_to_cdf(errors: Sequence[float], thresholds: Sequence[float]) -> CdfCurve:
    """Pooled CDF: fraction of errors strictly below each threshold."""
    thresholds = tuple(float(t) for t in thresholds)
    if list(thresholds) != sorted(thresholds):
        raise ConfigurationError("thresholds must be ascending")
    err = np.asarray(errors, dtype=float)
    if err.size == 0:
        values = tuple(0.0 for _ in thresholds)
    else:
        values = tuple(float(np.mean(err < t)) for t in thresholds)
    return CdfCurve(thresholds, values)


def error_cdf(
    estimates: Mapping[int, Sequence[float]],
    truth: Mapping[int, Sequence[float]],
    thresholds: Sequence[float],
) -> CdfCurve:
    """CDF over the scored nodes (the keys of `truth`)."""
    errors = []
    for node, true_pos in truth.items():
        if node not in estimates:
            raise ConfigurationError(f"no estimate for scored node {node}")
        errors.append(float(np.hypot(*(np.asarray(estimates[node]) - np.asarray(true_pos)))))
    return errors_to_cdf(errors, thresholds)


def analytic_complexity(algo: str, N: int, p: float | None = None, L: int | None = None) -> float:
    """Average active links per iteration: pi*N^2*p^2, 2(N-1), or /L^2."""
    if N < 1:
        raise ConfigurationError("N must be at least 1")
    if algo == "bfs":
        return 2.0 * (N - 1)
    if p is None or p <= 0:
        raise ConfigurationError("p must be positive for density-based formulas")
    if algo == "nbp":
        return math.pi * N**2 * p**2
    if algo == "hierarchical":
        if L is None or L < 1:
            raise ConfigurationError("hierarchical complexity needs L >= 1")
        return math.pi * N**2 * p**2 / L**2
    raise ConfigurationError(f"unknown algorithm tag: {algo!r}")


@dataclass(frozen=True)
class ComplexityReport:
    algorithm: str
    N: int
    p: float
    L: int
    analytic_value: float
    measured_links: float

    def to_row(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "N": self.N,
            "p": self.p,
            "L": self.L,
            "analytic_value": self.analytic_value,
            "measured_links": self.measured_links,
        }


def measured_links(log_: TrafficLog, mode: str, kind: str | None = None) -> float:
    """Observed traffic: mean distinct directed pairs per iteration, or total."""
    if mode not in ("per-iteration-mean", "total"):
        raise ConfigurationError(f"unknown measurement mode: {mode!r}")
    keep = [
        (it, s, r)
        for it, s, r, k in zip(log_.iterations, log_.senders, log_.receivers, log_.kinds)
        if kind is None or k == kind
    ]
    if mode == "total":
        return float(len(keep))
    iters: dict[int, set[tuple[int, int]]] = {}
    for it, s, r in keep:
        iters.setdefault(it, set()).add((s, r))
    if not iters:
        return 0.0
    return float(np.mean([len(pairs) for pairs in iters.values()]))


def _is_degenerate(belief: ParticleBelief) -> bool:
    return bool(np.all(belief.samples == belief.samples[0]))


def cer(est_belief: ParticleBelief, ref_belief: ParticleBelief) -> float:
    """Complementary entropy-ratio 1 - H(ref)/H(est) between two beliefs.

    Zero for matching anchor Diracs by convention.  Returns NaN when the
    estimated entropy is non-positive, where the ratio is not meaningful.
    """
    if _is_degenerate(est_belief) and _is_degenerate(ref_belief):
        return 0.0
    h_est = gaussian_entropy(est_belief)
    if h_est <= 0.0:
        log.warning("CER undefined: estimated entropy %.3f <= 0", h_est)
        return float("nan")
    return 1.0 - gaussian_entropy(ref_belief) / h_est


def reference_belief(true_pos, sigma0: float, K: int, seed: int) -> ParticleBelief:
    """Diagnostic CER reference: a Gaussian cloud of width sigma0 at truth."""
    rng = derive_rng(seed)
    pos = np.asarray(true_pos, dtype=float)
    samples = pos + rng.normal(0.0, sigma0, size=(K, 2)) if sigma0 > 0 else np.tile(pos, (K, 1))
    return ParticleBelief(samples, np.full(K, 1.0 / K))
