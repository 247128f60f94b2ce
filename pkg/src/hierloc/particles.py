"""Nonparametric position representations.

Beliefs are K weighted planar samples; messages are K-component isotropic
Gaussian mixtures with a shared scalar bandwidth.  Density evaluation is
the hot path of the whole toolkit, so it is backed by a numba kernel with
a pure-numpy fallback (identical results up to floating-point library
rounding of exp).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegenerateWeightsError, IntegrityError
from .scenario import Scenario
from .seeding import BELIEF_INIT, derive_rng

log = logging.getLogger(__name__)

# Densities below this clamp to it so weight ratios stay finite.
DENSITY_FLOOR = 1e-300
# Covariance regularizer for the entropy diagnostic, in m^2.
ENTROPY_EPS = 1e-6
WEIGHT_TOL = 1e-9


def _stacked_logpdf_numpy(points, means, weights, offsets, bandwidths, chunk=4096):
    n_msgs = len(bandwidths)
    out = np.empty((n_msgs, len(points)))
    for m in range(n_msgs):
        mu = means[offsets[m] : offsets[m + 1]]
        w = weights[offsets[m] : offsets[m + 1]]
        lam = bandwidths[m]
        norm = 1.0 / (2.0 * math.pi * lam)
        for i in range(0, len(points), chunk):
            block = points[i : i + chunk]
            d2 = ((block[:, None, :] - mu[None, :, :]) ** 2).sum(axis=-1)
            dens = norm * (np.exp(-d2 / (2.0 * lam)) @ w)
            out[m, i : i + chunk] = np.log(np.maximum(dens, DENSITY_FLOOR))
    return out


try:  # pragma: no cover - exercised indirectly through the dispatcher
    import numba

    @numba.njit(cache=True, parallel=True)
    def _stacked_logpdf_numba(points, means, weights, offsets, bandwidths):
        n_msgs = len(bandwidths)
        n_pts = points.shape[0]
        out = np.empty((n_msgs, n_pts))
        for p in numba.prange(n_pts):
            x = points[p, 0]
            y = points[p, 1]
            for m in range(n_msgs):
                lam = bandwidths[m]
                inv2l = 1.0 / (2.0 * lam)
                s = 0.0
                for k in range(offsets[m], offsets[m + 1]):
                    dx = x - means[k, 0]
                    dy = y - means[k, 1]
                    s += weights[k] * np.exp(-(dx * dx + dy * dy) * inv2l)
                s /= 2.0 * np.pi * lam
                if s < DENSITY_FLOOR:
                    s = DENSITY_FLOOR
                out[m, p] = np.log(s)
        return out

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def _stacked_logpdf(points, means, weights, offsets, bandwidths):
    """Log-density of several mixtures at the same points, clamped at the floor.

    points (P,2); means/weights concatenated per message with offsets
    (n_msgs+1,); bandwidths (n_msgs,).  Returns (n_msgs, P).
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    means = np.ascontiguousarray(means, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    bandwidths = np.ascontiguousarray(bandwidths, dtype=np.float64)
    if _HAVE_NUMBA:
        return _stacked_logpdf_numba(points, means, weights, offsets, bandwidths)
    return _stacked_logpdf_numpy(points, means, weights, offsets, bandwidths)


def _check_weights(weights: np.ndarray) -> None:
    if abs(float(weights.sum()) - 1.0) > WEIGHT_TOL:
        raise IntegrityError("weights must sum to 1 within 1e-9")
    if np.any(weights < 0):
        raise IntegrityError("weights must be non-negative")


@dataclass(frozen=True)
class ParticleBelief:
    """K weighted planar samples approximating one node's position posterior."""

    samples: np.ndarray  # (K, 2) meters
    weights: np.ndarray  # (K,) summing to 1

    def __post_init__(self) -> None:
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "weights", weights)
        if samples.ndim != 2 or samples.shape[1] != 2 or len(samples) != len(weights):
            raise IntegrityError("belief needs (K,2) samples and (K,) weights")
        _check_weights(weights)
        samples.setflags(write=False)
        weights.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class MixtureMessage:
    """Isotropic Gaussian mixture carried on one directed edge."""

    means: np.ndarray  # (K, 2) meters
    weights: np.ndarray  # (K,) summing to 1
    bandwidth: float  # shared isotropic covariance scale, m^2

    def __post_init__(self) -> None:
        means = np.ascontiguousarray(self.means, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)
        if means.ndim != 2 or means.shape[1] != 2 or len(means) != len(weights):
            raise IntegrityError("message needs (K,2) means and (K,) weights")
        _check_weights(weights)
        if not self.bandwidth > 0:
            raise IntegrityError("message bandwidth must be positive")
        means.setflags(write=False)
        weights.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.means)


def init_belief(node: int, scenario: Scenario, K: int, seed: int) -> ParticleBelief:
    """Prior belief: uniform over the area for agents, Dirac for anchors."""
    if K < 1:
        raise IntegrityError("K must be at least 1")
    if node not in scenario.node_ids:
        raise IntegrityError(f"unknown node id {node}")
    weights = np.full(K, 1.0 / K)
    if scenario.is_anchor(node):
        samples = np.tile(scenario.position(node), (K, 1))
    else:
        rng = derive_rng(seed, BELIEF_INIT, node)
        samples = rng.uniform(0.0, scenario.area_side, size=(K, 2))
    return ParticleBelief(samples, weights)


def mixture_logdensity(msg: MixtureMessage, points: np.ndarray) -> np.ndarray:
    """Clamped log-density of the mixture at each of (P,2) points."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    offsets = np.array([0, msg.k], dtype=np.int64)
    return _stacked_logpdf(points, msg.means, msg.weights, offsets, np.array([msg.bandwidth]))[0]


def mixture_density(msg: MixtureMessage, x) -> float:
    """Mixture density at one point (floored at 1e-300)."""
    return float(np.exp(mixture_logdensity(msg, np.asarray(x, dtype=float).reshape(1, 2))[0]))


def sample_mixture(msg: MixtureMessage, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points: pick components by weight, then add isotropic noise."""
    cum = np.cumsum(msg.weights)
    cum[-1] = 1.0
    comps = np.searchsorted(cum, rng.random(n), side="right")
    return msg.means[comps] + rng.normal(0.0, math.sqrt(msg.bandwidth), size=(n, 2))


def systematic_indices(weights: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """Systematic (low-variance) resampling indices for the given weights."""
    total = float(weights.sum())
    if not total > 0 or not np.isfinite(total):
        raise DegenerateWeightsError("all resampling weights are zero")
    cum = np.cumsum(weights) / total
    cum[-1] = 1.0
    positions = (rng.random() + np.arange(K)) / K
    return np.searchsorted(cum, positions, side="right")


def resample(points: np.ndarray, weights: np.ndarray, K: int, seed_or_rng) -> ParticleBelief:
    """K equal-weight samples drawn systematically, proportional to weight."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64)
    if len(points) == 0:
        raise IntegrityError("cannot resample an empty pool")
    if np.any(weights < 0):
        raise IntegrityError("pool weights must be non-negative")
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else derive_rng(seed_or_rng)
    idx = systematic_indices(weights, K, rng)
    return ParticleBelief(points[idx], np.full(K, 1.0 / K))


def mmse_estimate(belief: ParticleBelief) -> np.ndarray:
    """Weighted sample mean, the reported point estimate."""
    return belief.weights @ belief.samples


def weighted_covariance(samples: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mu = weights @ samples
    centered = samples - mu
    return (centered * weights[:, None]).T @ centered


def gaussian_entropy(belief: ParticleBelief) -> float:
    """Entropy (nats) of the moment-matched bivariate Gaussian.

    The weighted sample covariance is regularized by +eps*I; a fully
    degenerate belief (all samples identical) returns the eps floor.
    """
    cov = weighted_covariance(belief.samples, belief.weights)
    if np.all(cov == 0.0):
        log.debug("degenerate belief in gaussian_entropy; returning floor")
    cov = cov + ENTROPY_EPS * np.eye(2)
    det = float(np.linalg.det(cov))
    return 0.5 * math.log((2.0 * math.pi * math.e) ** 2 * det)


def dump_beliefs_csv(path, beliefs: Mapping[int, ParticleBelief]) -> None:
    """Belief dump for offline plotting: node_id, sample_index, x, y, weight."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "sample_index", "x", "y", "weight"])
        for node in sorted(beliefs):
            belief = beliefs[node]
            for k, ((x, y), w) in enumerate(zip(belief.samples, belief.weights)):
                writer.writerow([node, k, f"{x:.9g}", f"{y:.9g}", f"{w:.9g}"])
