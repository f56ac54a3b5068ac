"""Topic-based publish/subscribe bus over the simulated topology.

Delivery semantics: at-least-once to every matching subscriber, ordered per
(publisher, subscriber, topic). Each cross-node delivery is charged the
link latency plus size/bandwidth to the latency ledger, attributed to the
subscriber's phase (or the message's own phase tag when the subscriber has
none). Messages crossing a partitioned link are queued and re-delivered in
publication order after the link heals.

Topic contracts used by the pipeline: ``stream/window``, ``model/speed``,
``results/inference``, ``archive/data``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .clock import LatencyLedger, Simulator
from .topology import Topology


@dataclass(frozen=True)
class Message:
    topic: str
    payload: bytes
    published_at: float
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.payload)


@dataclass
class _Subscription:
    node_id: str
    topic: str
    handler: Callable[[Message], None]
    phase: str | None = None

    def matches(self, topic: str) -> bool:
        if self.topic.endswith("/#"):
            return topic.startswith(self.topic[:-1]) or topic == self.topic[:-2]
        return topic == self.topic


class TopicBus:
    def __init__(self, sim: Simulator, topology: Topology, ledger: LatencyLedger | None = None):
        self.sim = sim
        self.topology = topology
        self.ledger = ledger
        self._subs: list[_Subscription] = []
        self._pending: dict[frozenset, list[tuple[str, Message, _Subscription]]] = {}
        self._chan_clock: dict[tuple[str, int, str], float] = {}
        self._publish_count = 0
        self.delivery_log: list[tuple[int, str, str, float]] = []  # (msg seq, topic, node, at)
        self._msg_seq: dict[int, int] = {}

    def subscribe(
        self,
        node_id: str,
        topic: str,
        handler: Callable[[Message], None],
        phase: str | None = None,
    ) -> None:
        if node_id not in self.topology.nodes:
            raise ValueError(f"unknown node {node_id!r}")
        if not topic:
            raise ValueError("topic must be non-empty")
        self._subs.append(_Subscription(node_id=node_id, topic=topic, handler=handler, phase=phase))

    def publish(self, node_id: str, message: Message) -> int:
        """Schedule delivery to all matching subscribers; returns how many
        deliveries were scheduled (queued ones count on release)."""
        if node_id not in self.topology.nodes:
            raise ValueError(f"unknown node {node_id!r}")
        self._publish_count += 1
        seq = self._publish_count
        self._msg_seq[id(message)] = seq
        delivered = 0
        for sub in self._subs:
            if not sub.matches(message.topic):
                continue
            if self.topology.is_partitioned(node_id, sub.node_id):
                key = frozenset((node_id, sub.node_id))
                self._pending.setdefault(key, []).append((node_id, message, sub))
                continue
            self._deliver(node_id, message, sub, seq)
            delivered += 1
        return delivered

    def _deliver(self, from_node: str, message: Message, sub: _Subscription, seq: int) -> None:
        delay = self.topology.transfer_time(from_node, sub.node_id, message.size)
        at = self.sim.now + delay
        chan = (from_node, self._subs.index(sub), message.topic)
        at = max(at, self._chan_clock.get(chan, 0.0))  # per-channel FIFO
        self._chan_clock[chan] = at
        phase = sub.phase or message.meta.get("phase")
        window = message.meta.get("window")
        if self.ledger is not None and phase is not None and window is not None and delay > 0:
            self.ledger.add_communication(window, phase, delay)
        self.delivery_log.append((seq, message.topic, sub.node_id, at))
        self.sim.schedule_at(at, lambda m=message, s=sub: s.handler(m))

    def partition(self, a: str, b: str) -> None:
        self.topology.partition(a, b)

    def heal(self, a: str, b: str) -> None:
        """Reconnect a link and flush its queued messages in publish order."""
        self.topology.heal(a, b)
        for from_node, message, sub in self._pending.pop(frozenset((a, b)), []):
            self._deliver(from_node, message, sub, self._msg_seq[id(message)])

    @property
    def published(self) -> int:
        return self._publish_count
