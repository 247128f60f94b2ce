"""Bootstrap-percolation layering and the layer-by-layer scheduler.

Agents are activated in waves: anchors form the root layer, and an
inactive agent joins a layer once enough of its neighbors are active.
The connection-degree threshold c sets how many active references an
agent needs.  The threshold is soft: when no remaining agent reaches c,
the wave falls back to the highest confidence present so percolation can
continue (agents with no active neighbor at all stay unassignable).

Within a layer, members fuse messages from their activated upper-layer
neighbors; members with fewer than three of those also exchange messages
with same-layer neighbors.  Messages never flow from a lower layer to an
upper one, which is enforced by the traffic log.

threshold_init = 0 disables layering: one layer holds every agent with
all neighbors as references, which is exactly standard NBP.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ConfigurationError, IntegrityError
from .graph import ConnectivityGraph
from .nbp import RunConfig, RunResult, Stage, _run_stages
from .scenario import MeasurementSet, Scenario


def confidence(n_refs: int) -> int:
    """Coarse confidence class from the active-reference count.

    1, 2, or 3 for one, two, or at-least-three references; 0 extends the
    scale to agents with no active neighbor, which can never activate.
    """
    if n_refs < 0:
        raise ConfigurationError("reference count cannot be negative")
    return min(int(n_refs), 3)


class ActivationState:
    """Tracks the active flag per node; activation is irreversible."""

    def __init__(self, anchors: Iterable[int]):
        self._layer: dict[int, int] = {j: 0 for j in anchors}

    def activate(self, node: int, layer: int) -> None:
        if node in self._layer:
            raise IntegrityError(f"node {node} is already active")
        self._layer[node] = layer

    def is_active(self, node: int) -> bool:
        return node in self._layer

    def activation_layer(self, node: int) -> int | None:
        return self._layer.get(node)

    @property
    def active_nodes(self) -> set[int]:
        return set(self._layer)


@dataclass(frozen=True)
class LayerAssignment:
    """Partition of agents into ordered activation layers.

    layers[0] is the anchor set; layers[1..L] are agent layers.
    thresholds[l-1] is the confidence that activated layer l.  upper_refs
    holds each agent's activated upper-layer neighbors at activation time,
    and intra_neighbors its neighbors within its own layer.
    """

    layers: tuple[tuple[int, ...], ...]
    thresholds: tuple[int, ...]
    reference_sets: tuple[frozenset[int], ...]
    upper_refs: dict[int, tuple[int, ...]]
    intra_neighbors: dict[int, tuple[int, ...]]
    unassignable: tuple[int, ...]
    threshold_init: int
    hard_threshold: bool = False
    layer_of: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.layer_of:
            mapping = {}
            for l, members in enumerate(self.layers):
                for node in members:
                    mapping[node] = l
            object.__setattr__(self, "layer_of", mapping)

    @property
    def n_layers(self) -> int:
        """Number of agent layers (the L of the complexity analysis)."""
        return len(self.layers) - 1

    def to_json(self, path) -> None:
        doc = {
            "threshold_init": self.threshold_init,
            "hard_threshold": self.hard_threshold,
            "layers": [list(members) for members in self.layers],
            "thresholds": list(self.thresholds),
            "unassignable": list(self.unassignable),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)


def assign_layers(
    graph: ConnectivityGraph,
    anchors: Iterable[int],
    threshold_init: int,
    *,
    hard_threshold: bool = False,
) -> LayerAssignment:
    """Percolate activation from the anchors under a connection threshold.

    Wave l activates every unassigned agent with confidence >= the
    threshold; if none qualifies but some agents do have active neighbors,
    the wave adaptively falls back to the best confidence available
    (hard_threshold=True disables the fallback).  threshold_init=0 returns
    the degenerate single-layer assignment equal to standard NBP.
    """
    anchor_set = frozenset(anchors)
    if not anchor_set:
        raise ConfigurationError("percolation needs a nonempty anchor set")
    if not anchor_set <= set(graph.nodes):
        raise IntegrityError("anchors must be graph nodes")
    if threshold_init not in (0, 1, 2, 3):
        raise ConfigurationError("threshold_init must be in {0, 1, 2, 3}")
    agents = sorted(set(graph.nodes) - anchor_set)
    anchor_layer = tuple(sorted(anchor_set))

    if threshold_init == 0:
        members = tuple(agents)
        agent_set = set(agents)
        return LayerAssignment(
            layers=(anchor_layer, members),
            thresholds=(0,),
            reference_sets=(frozenset(anchor_set),),
            upper_refs={i: graph.neighbors[i] for i in agents},
            intra_neighbors={
                i: tuple(v for v in graph.neighbors[i] if v in agent_set) for i in agents
            },
            unassignable=(),
            threshold_init=0,
        )

    state = ActivationState(anchor_set)
    layers: list[tuple[int, ...]] = [anchor_layer]
    thresholds: list[int] = []
    reference_sets: list[frozenset[int]] = []
    upper_refs: dict[int, tuple[int, ...]] = {}
    intra_neighbors: dict[int, tuple[int, ...]] = {}
    remaining = list(agents)

    while remaining:
        active = state.active_nodes
        refs = {i: tuple(v for v in graph.neighbors[i] if v in active) for i in remaining}
        conf = {i: confidence(len(refs[i])) for i in remaining}
        best = max(conf.values())
        if best == 0:
            break
        if best >= threshold_init:
            cut = threshold_init
        elif hard_threshold:
            break
        else:
            cut = best
        members = tuple(i for i in remaining if conf[i] >= cut)
        layer_index = len(layers)
        reference_sets.append(frozenset(active))
        for i in members:
            state.activate(i, layer_index)
            upper_refs[i] = refs[i]
        member_set = set(members)
        for i in members:
            intra_neighbors[i] = tuple(v for v in graph.neighbors[i] if v in member_set)
        layers.append(members)
        thresholds.append(cut)
        remaining = [i for i in remaining if i not in member_set]

    return LayerAssignment(
        layers=tuple(layers),
        thresholds=tuple(thresholds),
        reference_sets=tuple(reference_sets),
        upper_refs=upper_refs,
        intra_neighbors=intra_neighbors,
        unassignable=tuple(remaining),
        threshold_init=threshold_init,
        hard_threshold=hard_threshold,
    )


def candidate_refs(i: int, l: int, assignment: LayerAssignment) -> tuple[int, ...]:
    """Reference set fused by agent i on its layer l.

    With at least three activated upper-layer neighbors those are used
    alone; otherwise same-layer neighbors are added as assistants.
    """
    if l < 1 or l >= len(assignment.layers) or i not in assignment.layers[l]:
        raise IntegrityError(f"node {i} is not a member of layer {l}")
    upper = assignment.upper_refs[i]
    if len(upper) >= 3:
        return upper
    return tuple(sorted(set(upper) | set(assignment.intra_neighbors[i])))


def run_hierarchical_nbp(
    scenario: Scenario,
    graph: ConnectivityGraph,
    measurements: MeasurementSet,
    assignment: LayerAssignment,
    cfg: RunConfig,
) -> RunResult:
    """Execute the layered schedule: one NBP phase per layer, then freeze.

    Layer l runs T iterations in which its members fuse messages from
    their candidate references; finished layers keep their beliefs and
    serve as references for the layers below.  Unassignable agents never
    participate and keep their prior.
    """
    if set(assignment.layers[0]) != set(scenario.anchor_ids):
        raise IntegrityError("assignment root layer must equal the scenario anchors")
    stages = []
    for l, members in enumerate(assignment.layers[1:], start=1):
        refs = {i: candidate_refs(i, l, assignment) for i in members}
        for i, senders in refs.items():
            if not set(senders) <= set(graph.neighbors[i]):
                raise IntegrityError(f"references of node {i} are not neighbors")
        threshold = assignment.thresholds[l - 1]
        stages.append(Stage(index=l, agents=members, refs=refs, threshold=threshold))
    node_layer = dict(assignment.layer_of)
    for i in assignment.unassignable:
        node_layer.setdefault(i, len(assignment.layers))
    return _run_stages(scenario, measurements, stages, node_layer, cfg)
