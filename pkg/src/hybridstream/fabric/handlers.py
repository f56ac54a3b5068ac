"""Serverless-style back-end handlers: speed training plus the two
archiving sinks.

Each handler is a small object bound to the fabric pieces it needs, so it
can be driven directly in tests or wired into a deployed session. The
training handler honors node availability: while its compute node is down,
incoming window events wait in a FIFO queue and are drained in window order
on recovery.
"""

from __future__ import annotations

import json
import logging
from typing import Callable

from ..artifact import ModelArtifact, serialize
from ..lstm import ModelParams
from ..series import TimeWindow
from . import codecs
from .bus import Message, TopicBus
from .clock import LatencyLedger, Simulator
from .store import ObjectStore, StoreError
from .topology import CostModel, Topology

logger = logging.getLogger(__name__)

MODEL_TOPIC = "model/speed"
TOKEN_TTL_S = 600.0


class SpeedTrainingHandler:
    """Train on every window payload, archive the artifact and publish a
    one-time download token for the edge's model synchronization."""

    def __init__(
        self,
        *,
        sim: Simulator,
        bus: TopicBus,
        store: ObjectStore,
        topology: Topology,
        ledger: LatencyLedger,
        cost_model: CostModel,
        node_id: str,
        train_fn: Callable[[TimeWindow], ModelParams],
        token_ttl_s: float = TOKEN_TTL_S,
    ):
        self.sim = sim
        self.bus = bus
        self.store = store
        self.topology = topology
        self.ledger = ledger
        self.cost_model = cost_model
        self.node_id = node_id
        self.train_fn = train_fn
        self.token_ttl_s = token_ttl_s
        self.waiting: list[Message] = []
        self._version = 0

    def on_window(self, message: Message) -> None:
        if not self.topology.nodes[self.node_id].available:
            self.waiting.append(message)
            return
        self._process(message)

    def recover(self) -> None:
        """Drain the waiting queue in arrival (window) order."""
        pending, self.waiting = self.waiting, []
        for message in pending:
            self.on_window(message)

    def _process(self, message: Message) -> None:
        window_index = message.meta["window"]
        comp = self.cost_model.cost("speed_train", self.topology.nodes[self.node_id])
        self.ledger.add_computation(window_index, "speed_training", comp)
        self.sim.schedule(comp, lambda m=message: self._finish(m))

    def _finish(self, message: Message) -> None:
        window_index = message.meta["window"]
        window = codecs.window_from_bytes(message.payload, message.meta)
        try:
            params = self.train_fn(window)
        except Exception as exc:  # training failures are archived with the event
            logger.warning("speed training failed for window %s: %s", window_index, exc)
            self.store.put(
                f"errors/speed_training/{window_index:05d}.json",
                json.dumps({"window": window_index, "error": str(exc)}, sort_keys=True).encode(),
            )
            return
        self._version += 1
        artifact = ModelArtifact(params=params, version=self._version, trained_on_window=window_index)
        data = serialize(artifact)
        key = f"models/{artifact.version:05d}.bin"
        upload = self.topology.transfer_time(self.node_id, self.store.node_id, len(data), bulk=True)
        self.ledger.add_communication(window_index, "speed_training", upload)

        def archive_and_reply() -> None:
            self.store.put(key, data)
            token = self.store.presign(key, self.token_ttl_s)
            payload = codecs.token_to_bytes(token, artifact.version, artifact.trained_on_window)
            self.bus.publish(
                self.node_id,
                Message(
                    topic=MODEL_TOPIC,
                    payload=payload,
                    published_at=self.sim.now,
                    meta={"window": window_index, "phase": "speed_training", "kind": "model_token"},
                ),
            )

        self.sim.schedule(upload, archive_and_reply)


class DataArchivingHandler:
    """Persist raw window payloads under deterministic keys; idempotent."""

    def __init__(self, store: ObjectStore):
        self.store = store
        self.pending: list[Message] = []

    def on_window(self, message: Message) -> None:
        try:
            self.store.put(self.key(message.meta["window"]), message.payload)
        except StoreError:
            self.pending.append(message)

    def retry(self) -> None:
        pending, self.pending = self.pending, []
        for message in pending:
            self.on_window(message)

    @staticmethod
    def key(window_index: int) -> str:
        return f"data/{window_index:05d}.csv"


class PredictionArchivingHandler:
    """Persist inference results under deterministic per-phase keys."""

    def __init__(self, store: ObjectStore):
        self.store = store

    def on_result(self, message: Message) -> None:
        phase = message.meta.get("phase", "unknown")
        self.store.put(self.key(phase, message.meta["window"]), message.payload)

    @staticmethod
    def key(phase: str, window_index: int) -> str:
        return f"results/{phase}/{window_index:05d}.json"
