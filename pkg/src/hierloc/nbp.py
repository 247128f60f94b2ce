"""The particle-based message-passing engine.

One engine drives every variant in the toolkit: standard NBP over the
full graph, NBP restricted to a spanning tree, and the layered
hierarchical scheme.  A variant is expressed as a sequence of stages,
each naming the agents that update and, per agent, the senders it fuses.

Updates are synchronous: all messages of an iteration are computed from
the beliefs left by the previous iteration, then all receivers fuse.
Every random draw comes from a stream derived from
(seed, purpose, stage, iteration, node ids), so results are bit-identical
regardless of evaluation order or worker count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    ConfigurationError,
    DegenerateWeightsError,
    IntegrityError,
    InvalidMeasurementError,
)
from .graph import ConnectivityGraph, TreeGraph
from .particles import (
    DENSITY_FLOOR,
    MixtureMessage,
    ParticleBelief,
    init_belief,
    mixture_logdensity,
    resample,
    sample_mixture,
    weighted_covariance,
    _stacked_logpdf,
)
from .scenario import MeasurementSet, NoiseModel, Scenario
from .seeding import FUSION, MESSAGE, derive_rng
from .traffic import TrafficLog


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by all run variants."""

    K: int = 200
    T: int = 10
    h: float = 2.0
    seed: int = 0
    early_stop: bool = False
    min_shift: float = 0.01  # meters of mean estimate motion per iteration

    def __post_init__(self) -> None:
        if self.K < 1 or self.T < 1 or self.h < 1:
            raise ConfigurationError("RunConfig requires K >= 1, T >= 1, h >= 1")


@dataclass(frozen=True)
class LayerStats:
    layer: int
    threshold: int
    n_agents: int
    iterations_run: int
    mul_messages: int
    msl_messages: int


@dataclass(frozen=True)
class RunResult:
    """Beliefs per node plus the audited traffic of the run."""

    beliefs: dict[int, ParticleBelief]
    traffic: TrafficLog
    unlocalized: tuple[int, ...]
    layer_stats: tuple[LayerStats, ...]
    runtime_s: float


@dataclass(frozen=True)
class Stage:
    """One scheduling stage: receivers and the senders each one fuses."""

    index: int
    agents: tuple[int, ...]
    refs: Mapping[int, tuple[int, ...]]
    threshold: int = 0


def _rng_of(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return derive_rng(int(seed_or_rng))


def compute_message(
    sender_belief: ParticleBelief,
    reverse_msg_prev: MixtureMessage | None,
    d_meas: float,
    noise: NoiseModel,
    K: int,
    seed_or_rng,
) -> MixtureMessage:
    """Gaussian-mixture message implied by a sender belief and one range.

    For each of K particles, a direction is drawn uniformly and a noisy
    radius (d_meas + n) places the mean on a circle around the particle.
    Weights divide the sender weights by the previous reverse-direction
    message density (uniform reverse => weights proportional to sender's).
    The bandwidth is K^(-1/3) times the scalarized covariance of the means,
    floored at sigma(d_meas)^2 * K^(-1/3) so anchor-originated messages
    keep their ranging uncertainty.
    """
    if d_meas <= 0:
        raise InvalidMeasurementError(f"measured distance must be positive, got {d_meas}")
    rng = _rng_of(seed_or_rng)
    K = int(K)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=K)
    radius = d_meas + rng.normal(0.0, noise.sigma(d_meas), size=K)
    take = rng.integers(0, sender_belief.k, size=K) if sender_belief.k != K else np.arange(K)
    base = sender_belief.samples[take]
    means = base + radius[:, None] * np.column_stack([np.sin(theta), np.cos(theta)])

    w = sender_belief.weights[take].astype(float)
    if reverse_msg_prev is not None:
        rev_dens = np.exp(mixture_logdensity(reverse_msg_prev, base))
        w = w / np.maximum(rev_dens, DENSITY_FLOOR)
    total = float(w.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateWeightsError("message weights collapsed")
    w = w / total

    cov = weighted_covariance(means, w)
    scale = 0.5 * float(np.trace(cov))
    lam = max(scale, noise.sigma(d_meas) ** 2) * K ** (-1.0 / 3.0)
    return MixtureMessage(means, w, lam)


def fuse_marginal(
    messages: Sequence[MixtureMessage], K: int, h: float, seed_or_rng
) -> ParticleBelief:
    """Fuse incoming mixtures into a K-sample belief.

    Draws floor(h*K/n) candidates from each of the n messages, weights each
    candidate x by prod_u m_u(x) / sum_u m_u(x), and resamples the pool
    down to K equal-weight particles.
    """
    if not messages:
        raise ConfigurationError("fuse_marginal needs at least one message")
    n_each = int(h * K) // len(messages)
    if n_each < 1:
        raise ConfigurationError("h*K must be at least the number of fused messages")
    rng = _rng_of(seed_or_rng)
    pool = np.vstack([sample_mixture(msg, n_each, rng) for msg in messages])

    means = np.vstack([msg.means for msg in messages])
    weights = np.concatenate([msg.weights for msg in messages])
    offsets = np.cumsum([0] + [msg.k for msg in messages])
    bandwidths = np.array([msg.bandwidth for msg in messages])
    logdens = _stacked_logpdf(pool, means, weights, offsets, bandwidths)

    if np.all(logdens <= math.log(DENSITY_FLOOR) * 0.999):
        raise DegenerateWeightsError("every candidate is outside all message supports")
    log_w = logdens.sum(axis=0) - logsumexp(logdens, axis=0)
    log_w -= log_w.max()
    return resample(pool, np.exp(log_w), K, rng)


def _run_stages(
    scenario: Scenario,
    measurements: MeasurementSet,
    stages: Sequence[Stage],
    node_layer: Mapping[int, int],
    cfg: RunConfig,
) -> RunResult:
    start = time.perf_counter()
    beliefs: dict[int, ParticleBelief] = {
        node: init_belief(node, scenario, cfg.K, cfg.seed) for node in scenario.node_ids
    }
    traffic = TrafficLog()
    stats: list[LayerStats] = []
    fused_once: set[int] = set()
    global_iter = 0

    for stage in stages:
        prev_msgs: dict[tuple[int, int], MixtureMessage] = {}
        mul = msl = 0
        iterations_run = 0
        for t in range(1, cfg.T + 1):
            global_iter += 1
            iterations_run = t
            cur_msgs: dict[tuple[int, int], MixtureMessage] = {}
            for i in stage.agents:
                for u in stage.refs[i]:
                    rng = derive_rng(cfg.seed, MESSAGE, stage.index, t, u, i)
                    cur_msgs[(u, i)] = compute_message(
                        beliefs[u],
                        prev_msgs.get((i, u)),
                        measurements.get(u, i),
                        scenario.noise,
                        cfg.K,
                        rng,
                    )
                    traffic.append(global_iter, u, i, node_layer[u], node_layer[i])
                    if node_layer[u] < node_layer[i]:
                        mul += 1
                    else:
                        msl += 1
            shift_total = 0.0
            for i in stage.agents:
                refs = stage.refs[i]
                if not refs:
                    continue
                rng = derive_rng(cfg.seed, FUSION, stage.index, t, i)
                new_belief = fuse_marginal([cur_msgs[(u, i)] for u in refs], cfg.K, cfg.h, rng)
                if cfg.early_stop:
                    old = beliefs[i].weights @ beliefs[i].samples
                    new = new_belief.weights @ new_belief.samples
                    shift_total += float(np.hypot(*(new - old)))
                beliefs[i] = new_belief
                fused_once.add(i)
            prev_msgs = cur_msgs
            if cfg.early_stop and stage.agents and t > 1:
                if shift_total / len(stage.agents) < cfg.min_shift:
                    break
        stats.append(
            LayerStats(stage.index, stage.threshold, len(stage.agents), iterations_run, mul, msl)
        )

    scheduled = {i for stage in stages for i in stage.agents}
    unlocalized = tuple(
        i for i in scenario.agent_ids if i not in scheduled or i not in fused_once
    )
    runtime = time.perf_counter() - start
    return RunResult(beliefs, traffic, unlocalized, tuple(stats), runtime)


def _flat_stage_layers(scenario: Scenario) -> dict[int, int]:
    layers = {i: 1 for i in scenario.agent_ids}
    layers.update({j: 0 for j in scenario.anchor_ids})
    return layers


def run_standard_nbp(
    scenario: Scenario,
    graph: ConnectivityGraph,
    measurements: MeasurementSet,
    cfg: RunConfig,
) -> RunResult:
    """Standard NBP: every agent fuses all neighbors, T synchronous rounds."""
    refs = {i: graph.neighbors[i] for i in scenario.agent_ids}
    stage = Stage(index=1, agents=tuple(scenario.agent_ids), refs=refs)
    return _run_stages(scenario, measurements, [stage], _flat_stage_layers(scenario), cfg)


def run_tree_nbp(
    scenario: Scenario,
    tree: TreeGraph,
    measurements: MeasurementSet,
    cfg: RunConfig,
) -> RunResult:
    """Same engine as standard NBP, restricted to retained tree edges."""
    adjacency = tree.neighbors_map()
    for a, b in tree.retained_edges:
        if (a, b) not in measurements:
            raise IntegrityError(f"tree edge ({a},{b}) has no measurement")
    refs = {i: adjacency.get(i, ()) for i in scenario.agent_ids}
    stage = Stage(index=1, agents=tuple(scenario.agent_ids), refs=refs)
    return _run_stages(scenario, measurements, [stage], _flat_stage_layers(scenario), cfg)
