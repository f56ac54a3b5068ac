"""Simulated edge/cloud substrate: nodes, links, placement and cost model.

A topology configuration is one structured mapping with five documented
keys:

    nodes       - [{"id", "role", "compute_factor"}]              (role: edge|cloud)
    capacities  - {node_id: memory bytes}
    links       - [{"a", "b", "latency_s", "bandwidth_bps", "bulk_bandwidth_bps"}]
    costs       - {operation: base seconds on a factor-1.0 node}
    footprints  - {module: resident memory bytes}

Message transfers use ``bandwidth_bps``; object-store transfers (model
artifacts, archives) use ``bulk_bandwidth_bps``. Computation charged on a
node is ``costs[op] * node.compute_factor``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

GIB = 1024**3
MIB = 1024**2

MODULES = (
    "data_injection",
    "batch_inference",
    "speed_inference",
    "hybrid_inference",
    "model_sync",
    "data_sync",
    "speed_training",
    "data_archiving",
    "prediction_archiving",
)

PRESETS = ("edge_centric", "cloud_centric", "edge_cloud")

# Which modules live edge-side under each preset; the rest go to the cloud
# node. Cloud-centric keeps only sensing and its uplink on the edge.
_EDGE_SIDE = {
    "edge_centric": {
        "data_injection",
        "batch_inference",
        "speed_inference",
        "hybrid_inference",
        "model_sync",
        "data_sync",
        "speed_training",
    },
    "cloud_centric": {"data_injection", "data_sync"},
    "edge_cloud": {
        "data_injection",
        "batch_inference",
        "speed_inference",
        "hybrid_inference",
        "model_sync",
        "data_sync",
    },
}


class PlacementError(RuntimeError):
    """A module does not fit on its assigned node (out of memory)."""

    def __init__(self, module: str, node: str, needed: int, remaining: int):
        super().__init__(
            f"out of memory placing '{module}' on node '{node}': "
            f"needs {needed} bytes, {remaining} remaining"
        )
        self.module = module
        self.node = node


@dataclass
class NodeSpec:
    id: str
    role: str  # "edge" | "cloud"
    compute_factor: float
    memory_capacity: int
    available: bool = True

    def __post_init__(self) -> None:
        if self.role not in ("edge", "cloud"):
            raise ValueError(f"node role must be edge or cloud, got {self.role!r}")
        if self.compute_factor <= 0:
            raise ValueError("compute_factor must be positive")
        if self.memory_capacity <= 0:
            raise ValueError("memory_capacity must be positive")


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    latency_s: float
    bandwidth_bps: float | None = None  # None = unmetered
    bulk_bandwidth_bps: float | None = None

    def __post_init__(self) -> None:
        if self.latency_s < 0:
            raise ValueError("latency must be >= 0")


class Topology:
    def __init__(self, store_node: str | None = None):
        self.nodes: dict[str, NodeSpec] = {}
        self.links: dict[frozenset, LinkSpec] = {}
        self._partitioned: set[frozenset] = set()
        self.store_node = store_node

    def add_node(self, node: NodeSpec) -> None:
        self.nodes[node.id] = node
        if self.store_node is None and node.role == "cloud":
            self.store_node = node.id

    def add_link(self, link: LinkSpec) -> None:
        for end in (link.a, link.b):
            if end not in self.nodes:
                raise ValueError(f"link endpoint {end!r} is not a registered node")
        self.links[frozenset((link.a, link.b))] = link

    def link(self, a: str, b: str) -> LinkSpec | None:
        """The link between two nodes; None means same-node (zero latency)."""
        if a == b:
            return None
        key = frozenset((a, b))
        if key not in self.links:
            raise ValueError(f"no link between {a!r} and {b!r}")
        return self.links[key]

    def partition(self, a: str, b: str) -> None:
        self.links[frozenset((a, b))]  # raises on unknown link
        self._partitioned.add(frozenset((a, b)))

    def heal(self, a: str, b: str) -> None:
        self._partitioned.discard(frozenset((a, b)))

    def is_partitioned(self, a: str, b: str) -> bool:
        if a == b:
            return False
        return frozenset((a, b)) in self._partitioned

    def set_down(self, node_id: str) -> None:
        self.nodes[node_id].available = False

    def set_up(self, node_id: str) -> None:
        self.nodes[node_id].available = True

    def transfer_time(self, a: str, b: str, nbytes: int, bulk: bool = False) -> float:
        """One-way delivery time for ``nbytes`` from node a to node b;
        zero for same-node transfers."""
        link = self.link(a, b)
        if link is None:
            return 0.0
        bandwidth = link.bulk_bandwidth_bps if bulk else link.bandwidth_bps
        transfer = 0.0 if bandwidth is None else nbytes / bandwidth
        return link.latency_s + transfer

    def first_node(self, role: str) -> str:
        candidates = sorted(nid for nid, n in self.nodes.items() if n.role == role)
        if not candidates:
            raise ValueError(f"topology has no {role} node")
        return candidates[0]


@dataclass(frozen=True)
class DeploymentPlan:
    placement: dict[str, str]  # module -> node id
    preset: str

    def node_of(self, module: str) -> str:
        return self.placement[module]


@dataclass(frozen=True)
class CostModel:
    base_costs: dict[str, float]
    footprints: dict[str, int]

    def cost(self, op: str, node: NodeSpec) -> float:
        return self.base_costs[op] * node.compute_factor

    def footprint(self, module: str) -> int:
        return int(self.footprints.get(module, 0))


def place(preset: str, topology: Topology, cost_model: CostModel) -> DeploymentPlan:
    """Assign every pipeline module to a node under the preset and validate
    memory: allocation walks the module list in order and fails with an
    out-of-memory error naming the first module that does not fit."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose one of {PRESETS}")
    edge = topology.first_node("edge")
    cloud = topology.first_node("cloud")

    placement = {
        module: (edge if module in _EDGE_SIDE[preset] else cloud) for module in MODULES
    }
    remaining = {nid: topology.nodes[nid].memory_capacity for nid in topology.nodes}
    for module in MODULES:
        node = placement[module]
        needed = cost_model.footprint(module)
        if needed > remaining[node]:
            raise PlacementError(module=module, node=node, needed=needed, remaining=remaining[node])
        remaining[node] -= needed
    return DeploymentPlan(placement=placement, preset=preset)


def local_plan(node_id: str = "local-0") -> DeploymentPlan:
    """Everything on one node; used for pure-accuracy sessions."""
    return DeploymentPlan(placement={m: node_id for m in MODULES}, preset="local")


DESK_COSTS = {
    "batch_infer": 8.5,
    "speed_infer": 8.8,
    "hybrid_combine": 15.8,
    "dwa_fit": 2.53,
    "static_fit": 0.0,
    "speed_train": 14.2,
}

DESK_FOOTPRINTS = {
    "data_injection": 64 * MIB,
    "batch_inference": 256 * MIB,
    "speed_inference": 256 * MIB,
    "hybrid_inference": 256 * MIB,
    "model_sync": 64 * MIB,
    "data_sync": 64 * MIB,
    "speed_training": 1536 * MIB,
    "data_archiving": 128 * MIB,
    "prediction_archiving": 128 * MIB,
}

PROFILES: dict[str, dict] = {
    # Calibrated so the cloud round trip dominates communication and the
    # training chain completes inside one 30 s window.
    "desk": {
        "nodes": [
            {"id": "edge-0", "role": "edge", "compute_factor": 1.16},
            {"id": "cloud-0", "role": "cloud", "compute_factor": 1.0},
        ],
        "capacities": {"edge-0": 4 * GIB, "cloud-0": 32 * GIB},
        "links": [
            {
                "a": "edge-0",
                "b": "cloud-0",
                "latency_s": 0.05,
                "bandwidth_bps": 1500.0,
                "bulk_bandwidth_bps": 100_000.0,
            }
        ],
        "costs": DESK_COSTS,
        "footprints": DESK_FOOTPRINTS,
    },
    # A 4 GiB edge device whose training footprint cannot fit next to the
    # inference modules: edge-centric placement fails with OOM.
    "pi-lab": {
        "nodes": [
            {"id": "edge-0", "role": "edge", "compute_factor": 1.16},
            {"id": "cloud-0", "role": "cloud", "compute_factor": 1.0},
        ],
        "capacities": {"edge-0": 4 * GIB, "cloud-0": 32 * GIB},
        "links": [
            {
                "a": "edge-0",
                "b": "cloud-0",
                "latency_s": 0.05,
                "bandwidth_bps": 1500.0,
                "bulk_bandwidth_bps": 100_000.0,
            }
        ],
        "costs": DESK_COSTS,
        "footprints": {**DESK_FOOTPRINTS, "speed_training": int(3.8 * GIB)},
    },
    # Single free node: zero link costs, zero op costs. Accuracy work only.
    "local": {
        "nodes": [{"id": "local-0", "role": "cloud", "compute_factor": 1.0}],
        "capacities": {"local-0": 64 * GIB},
        "links": [],
        "costs": {op: 0.0 for op in DESK_COSTS},
        "footprints": {},
    },
}


def load_topology_config(source: str | Path | dict) -> tuple[Topology, CostModel]:
    """Build a Topology and CostModel from a profile name, a JSON file path
    or an already-parsed mapping."""
    if isinstance(source, str) and source in PROFILES:
        config = PROFILES[source]
    elif isinstance(source, dict):
        config = source
    else:
        config = json.loads(Path(source).read_text())

    for key in ("nodes", "capacities", "links", "costs", "footprints"):
        if key not in config:
            raise ValueError(f"topology config missing key {key!r}")

    topo = Topology()
    for spec in config["nodes"]:
        capacity = config["capacities"][spec["id"]]
        topo.add_node(
            NodeSpec(
                id=spec["id"],
                role=spec["role"],
                compute_factor=float(spec["compute_factor"]),
                memory_capacity=int(capacity),
            )
        )
    for spec in config["links"]:
        topo.add_link(
            LinkSpec(
                a=spec["a"],
                b=spec["b"],
                latency_s=float(spec["latency_s"]),
                bandwidth_bps=spec.get("bandwidth_bps"),
                bulk_bandwidth_bps=spec.get("bulk_bandwidth_bps"),
            )
        )
    cost_model = CostModel(
        base_costs={k: float(v) for k, v in config["costs"].items()},
        footprints={k: int(v) for k, v in config["footprints"].items()},
    )
    return topo, cost_model
