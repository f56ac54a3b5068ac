"""Simulated edge-cloud substrate: clock, topology, bus, store, handlers."""

from .bus import Message, TopicBus
from .clock import LatencyLedger, Simulator, PHASES, REPORT_PHASES
from .runtime import DeployedSession, SessionReport
from .store import (
    MissingObjectError,
    ObjectStore,
    SignedToken,
    StoreError,
    TokenConsumedError,
    TokenExpiredError,
)
from .topology import (
    CostModel,
    DeploymentPlan,
    LinkSpec,
    NodeSpec,
    PlacementError,
    PROFILES,
    PRESETS,
    MODULES,
    Topology,
    load_topology_config,
    local_plan,
    place,
)

__all__ = [
    "Message",
    "TopicBus",
    "LatencyLedger",
    "Simulator",
    "PHASES",
    "REPORT_PHASES",
    "DeployedSession",
    "SessionReport",
    "ObjectStore",
    "SignedToken",
    "StoreError",
    "MissingObjectError",
    "TokenConsumedError",
    "TokenExpiredError",
    "CostModel",
    "DeploymentPlan",
    "LinkSpec",
    "NodeSpec",
    "PlacementError",
    "PROFILES",
    "PRESETS",
    "MODULES",
    "Topology",
    "load_topology_config",
    "local_plan",
    "place",
]
