"""Audited record of every directed message sent during a run.

Besides link counting, the log is the enforcement point for the
propagation rule: a message whose sender sits below its receiver in the
layer hierarchy (MLL) is rejected at append time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator

from .errors import IntegrityError

MUL = "MUL"  # message from an upper layer
MSL = "MSL"  # message within the same layer


@dataclass(frozen=True)
class TrafficRecord:
    iteration: int
    sender: int
    receiver: int
    sender_layer: int
    receiver_layer: int
    kind: str


class TrafficLog:
    """Append-only columnar log of directed messages."""

    def __init__(self) -> None:
        self.iterations: list[int] = []
        self.senders: list[int] = []
        self.receivers: list[int] = []
        self.sender_layers: list[int] = []
        self.receiver_layers: list[int] = []
        self.kinds: list[str] = []

    def append(
        self,
        iteration: int,
        sender: int,
        receiver: int,
        sender_layer: int,
        receiver_layer: int,
    ) -> None:
        if sender_layer > receiver_layer:
            raise IntegrityError(
                f"MLL message {sender}->{receiver} "
                f"(layer {sender_layer}->{receiver_layer}) is censored"
            )
        self.iterations.append(iteration)
        self.senders.append(sender)
        self.receivers.append(receiver)
        self.sender_layers.append(sender_layer)
        self.receiver_layers.append(receiver_layer)
        self.kinds.append(MUL if sender_layer < receiver_layer else MSL)

    def __len__(self) -> int:
        return len(self.iterations)

    def records(self) -> Iterator[TrafficRecord]:
        for i in range(len(self)):
            yield TrafficRecord(
                self.iterations[i],
                self.senders[i],
                self.receivers[i],
                self.sender_layers[i],
                self.receiver_layers[i],
                self.kinds[i],
            )

    def count_kind(self, kind: str) -> int:
        return sum(1 for k in self.kinds if k == kind)

    def iteration_ids(self) -> list[int]:
        return sorted(set(self.iterations))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "sender", "receiver", "sender_layer", "receiver_layer", "kind"]
            )
            for rec in self.records():
                writer.writerow(
                    [
                        rec.iteration,
                        rec.sender,
                        rec.receiver,
                        rec.sender_layer,
                        rec.receiver_layer,
                        rec.kind,
                    ]
                )
