"""Network scenario generation.

A scenario is a square deployment area with M anchors at fixed positions
and N agents placed uniformly at random.  Agents carry ids 1..N and
anchors N+1..N+M.  Connectivity follows the unit-disk rule with radius R,
and each connected pair shares one symmetric noisy range measurement
with sigma(d) = sigma0 + k_sigma * d.

Generation is a pure function of (config, seed): replaying the same pair
reproduces the scenario bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, IntegrityError
from .seeding import MEASUREMENT, PLACEMENT, derive_rng

ANCHOR_PRESETS = ("net1", "net2", "net3")


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian ranging noise with distance-proportional spread."""

    sigma0: float = 0.2
    k_sigma: float = 0.01

    def __post_init__(self) -> None:
        if self.sigma0 < 0 or self.k_sigma < 0:
            raise ConfigurationError("noise parameters must be non-negative")

    def sigma(self, d: float) -> float:
        return self.sigma0 + self.k_sigma * d


def anchor_layout(layout: str | Sequence[Sequence[float]], area_side: float) -> np.ndarray:
    """Anchor positions for a named preset, or an explicit list passed through.

    net1/net2: 12 points evenly spaced on a ring of radius 0.4*a around the
    area center, plus the center itself (13 anchors).  net3: regular 3x3
    grid with margin a/6 (9 anchors).  Layouts are deterministic; the ring
    starts on the +x axis.
    """
    a = float(area_side)
    if isinstance(layout, str):
        if layout in ("net1", "net2"):
            angles = 2.0 * math.pi * np.arange(12) / 12.0
            ring = 0.5 * a + 0.4 * a * np.column_stack([np.cos(angles), np.sin(angles)])
            pts = np.vstack([ring, [[0.5 * a, 0.5 * a]]])
        elif layout == "net3":
            line = np.array([a / 6.0, a / 2.0, 5.0 * a / 6.0])
            xx, yy = np.meshgrid(line, line, indexing="xy")
            pts = np.column_stack([xx.ravel(), yy.ravel()])
        else:
            raise ConfigurationError(f"unknown anchor layout preset: {layout!r}")
    else:
        pts = np.asarray(layout, dtype=float).reshape(-1, 2)
    if pts.size == 0:
        raise ConfigurationError("anchor layout is empty")
    if np.any(pts < 0) or np.any(pts > a):
        raise ConfigurationError("anchor positions must lie inside the area")
    return pts


@dataclass(frozen=True)
class ScenarioConfig:
    """Inputs for scenario generation."""

    area_side: float
    radio_range: float
    n_agents: int
    anchors: str | tuple = "net1"
    noise: NoiseModel = field(default_factory=NoiseModel)
    torus: bool = False

    def __post_init__(self) -> None:
        if self.area_side <= 0:
            raise ConfigurationError("area_side must be positive")
        if self.radio_range <= 0:
            raise ConfigurationError("radio_range must be positive")
        if self.n_agents < 0:
            raise ConfigurationError("n_agents must be non-negative")

    def anchor_positions(self) -> np.ndarray:
        return anchor_layout(self.anchors, self.area_side)

    def to_dict(self) -> dict:
        anchors = self.anchors if isinstance(self.anchors, str) else [list(p) for p in self.anchors]
        return {
            "area_side": self.area_side,
            "radio_range": self.radio_range,
            "n_agents": self.n_agents,
            "anchors": anchors,
            "noise": {"sigma0": self.noise.sigma0, "k_sigma": self.noise.k_sigma},
            "torus": self.torus,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioConfig":
        anchors = d.get("anchors", "net1")
        if not isinstance(anchors, str):
            anchors = tuple(tuple(float(c) for c in p) for p in anchors)
        noise = d.get("noise", {})
        return cls(
            area_side=float(d["area_side"]),
            radio_range=float(d["radio_range"]),
            n_agents=int(d["n_agents"]),
            anchors=anchors,
            noise=NoiseModel(float(noise.get("sigma0", 0.2)), float(noise.get("k_sigma", 0.01))),
            torus=bool(d.get("torus", False)),
        )


def _delta(u: np.ndarray, v: np.ndarray, area_side: float | None) -> np.ndarray:
    d = np.abs(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))
    if area_side is not None:
        d = np.minimum(d, area_side - d)
    return d


def distance(u, v, *, area_side: float | None = None) -> float:
    """Euclidean distance, optionally wrapped on a torus of the given side."""
    return float(np.hypot(*_delta(u, v, area_side)))


def detect(x_v, x_i, radio_range: float, *, area_side: float | None = None) -> bool:
    """Unit-disk detection: true iff the pair distance is at most R (inclusive).

    Passing area_side wraps distances on a torus; this is the validation mode
    used by the link-count metrics, not the default deployment model.
    """
    if radio_range <= 0:
        raise ConfigurationError("radio_range must be positive")
    return distance(x_v, x_i, area_side=area_side) <= radio_range


@dataclass(frozen=True)
class Scenario:
    """An immutable deployment: anchors, agents, noise model, seed."""

    area_side: float
    radio_range: float
    anchor_positions_arr: np.ndarray
    agent_positions_arr: np.ndarray
    noise: NoiseModel
    seed: int
    torus: bool = False

    def __post_init__(self) -> None:
        for arr in (self.anchor_positions_arr, self.agent_positions_arr):
            arr.setflags(write=False)
        if len(self.anchor_positions_arr) == 0:
            raise ConfigurationError("a scenario needs at least one anchor")

    # -- id scheme: agents 1..N, anchors N+1..N+M ------------------------
    @property
    def n_agents(self) -> int:
        return len(self.agent_positions_arr)

    @property
    def n_anchors(self) -> int:
        return len(self.anchor_positions_arr)

    @property
    def agent_ids(self) -> range:
        return range(1, self.n_agents + 1)

    @property
    def anchor_ids(self) -> range:
        return range(self.n_agents + 1, self.n_agents + self.n_anchors + 1)

    @property
    def node_ids(self) -> range:
        return range(1, self.n_agents + self.n_anchors + 1)

    def is_anchor(self, node: int) -> bool:
        return node > self.n_agents

    def position(self, node: int) -> np.ndarray:
        """True position of a node (hidden for agents during inference)."""
        if node < 1 or node > self.n_agents + self.n_anchors:
            raise IntegrityError(f"unknown node id {node}")
        if node <= self.n_agents:
            return self.agent_positions_arr[node - 1]
        return self.anchor_positions_arr[node - self.n_agents - 1]

    def pair_distance(self, v: int, i: int) -> float:
        side = self.area_side if self.torus else None
        return distance(self.position(v), self.position(i), area_side=side)

    @property
    def wrap_side(self) -> float | None:
        return self.area_side if self.torus else None

    @classmethod
    def from_points(
        cls,
        area_side: float,
        radio_range: float,
        anchor_positions: Iterable,
        agent_positions: Iterable,
        noise: NoiseModel | None = None,
        seed: int = 0,
        torus: bool = False,
    ) -> "Scenario":
        """Build a scenario from explicit coordinates (worked examples, tests)."""
        anchors = np.asarray(list(anchor_positions), dtype=float).reshape(-1, 2)
        agents = np.asarray(list(agent_positions), dtype=float).reshape(-1, 2)
        scen = cls(area_side, radio_range, anchors, agents, noise or NoiseModel(), seed, torus)
        _check_bounds(scen)
        return scen

    # -- JSON replay format ----------------------------------------------
    def to_dict(self) -> dict:
        return {
            "area_side": self.area_side,
            "radio_range": self.radio_range,
            "anchors": [list(p) for p in self.anchor_positions_arr],
            "agents": [list(p) for p in self.agent_positions_arr],
            "noise": {"sigma0": self.noise.sigma0, "k_sigma": self.noise.k_sigma},
            "seed": self.seed,
            "torus": self.torus,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scenario":
        noise = d.get("noise", {})
        return cls(
            area_side=float(d["area_side"]),
            radio_range=float(d["radio_range"]),
            anchor_positions_arr=np.asarray(d["anchors"], dtype=float).reshape(-1, 2),
            agent_positions_arr=np.asarray(d["agents"], dtype=float).reshape(-1, 2),
            noise=NoiseModel(float(noise.get("sigma0", 0.2)), float(noise.get("k_sigma", 0.01))),
            seed=int(d.get("seed", 0)),
            torus=bool(d.get("torus", False)),
        )

    @classmethod
    def from_json(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _check_bounds(scen: Scenario) -> None:
    for arr in (scen.anchor_positions_arr, scen.agent_positions_arr):
        if arr.size and (arr.min() < 0 or arr.max() > scen.area_side):
            raise ConfigurationError("positions must lie inside the deployment square")


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Place anchors per config and agents uniformly over the square."""
    anchors = config.anchor_positions()
    rng = derive_rng(seed, PLACEMENT)
    agents = rng.uniform(0.0, config.area_side, size=(config.n_agents, 2))
    return Scenario(
        area_side=config.area_side,
        radio_range=config.radio_range,
        anchor_positions_arr=anchors,
        agent_positions_arr=agents,
        noise=config.noise,
        seed=int(seed),
        torus=config.torus,
    )


class MeasurementSet:
    """One symmetric noisy distance per connected pair."""

    def __init__(self, entries: Mapping[tuple[int, int], float]):
        self._entries = {self._key(v, i): float(d) for (v, i), d in entries.items()}

    @staticmethod
    def _key(v: int, i: int) -> tuple[int, int]:
        return (v, i) if v < i else (i, v)

    def get(self, v: int, i: int) -> float:
        key = self._key(v, i)
        if key not in self._entries:
            raise IntegrityError(f"no measurement for pair {key}")
        return self._entries[key]

    def __contains__(self, pair) -> bool:
        return self._key(*pair) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()


def measure_distances(scenario: Scenario, graph, seed: int) -> MeasurementSet:
    """Draw d_tilde = d + n, n ~ Normal(0, sigma(d)^2), once per edge.

    Edges are visited in sorted order so the draw sequence is reproducible.
    Non-positive draws are redrawn (they are vanishingly rare at the noise
    levels of interest but would break the distance semantics).
    """
    rng = derive_rng(seed, MEASUREMENT)
    valid = set(scenario.node_ids)
    entries: dict[tuple[int, int], float] = {}
    for v, i in sorted(graph.edges):
        if v not in valid or i not in valid:
            raise IntegrityError(f"edge ({v},{i}) references an unknown node")
        d = scenario.pair_distance(v, i)
        sigma = scenario.noise.sigma(d)
        if sigma == 0.0:
            if d <= 0.0:
                raise IntegrityError(f"coincident pair {(v, i)} with zero noise")
            entries[(v, i)] = d
            continue
        meas = d + rng.normal(0.0, sigma)
        while meas <= 0.0:
            meas = d + rng.normal(0.0, sigma)
        entries[(v, i)] = meas
    return MeasurementSet(entries)
