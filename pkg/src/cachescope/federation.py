"""Deterministic discrete-event simulator of the cache federation.

Each file request is routed through a redirector lookup: if any node
holds the file the request is a hit on that node; otherwise it is a miss,
placed on the newest-joined node that can take it (ties spread by
rendezvous hashing), evicting least-recently-accessed files as needed.
Nodes can join mid-run; new nodes then absorb misses first while they
have free space.
"""

from __future__ import annotations

import hashlib
import json
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import (
    DuplicateNodeId,
    EmptyFederation,
    FileTooLarge,
    InvalidConfig,
    NoEligibleNode,
)
from .records import AccessKind, AccessRecord, FileRequest

TB = 10**12


@dataclass(frozen=True)
class NodeSpec:
    """Static description of one cache node."""

    node_id: str
    site: str
    capacity: int
    join_time: int = 0
    namespace_filter: Optional[str] = None
    rtt_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.capacity <= 0:
            raise InvalidConfig(f"node {self.node_id}: capacity must be positive")

    def accepts(self, namespace: str) -> bool:
        return self.namespace_filter is None or namespace.startswith(self.namespace_filter)


@dataclass
class ResidentFile:
    size: int
    last_access: int


@dataclass
class NodeState:
    """One node's live cache contents, in least-recently-accessed order."""

    spec: NodeSpec
    used: int = 0
    resident: "OrderedDict[str, ResidentFile]" = field(default_factory=OrderedDict)

    @property
    def free(self) -> int:
        return self.spec.capacity - self.used


@dataclass
class FederationState:
    """All node states plus the redirector's file location map."""

    nodes: "dict[str, NodeState]"
    location: "dict[str, str]"
    clock: int


@dataclass(frozen=True)
class FederationEvent:
    """A mid-run topology change: nodes added at a point in time."""

    time: int
    add_nodes: tuple[NodeSpec, ...]


def build_federation(specs: Iterable[NodeSpec]) -> FederationState:
    """Construct an empty federation; clock starts at the earliest join."""
    specs = list(specs)
    if not specs:
        raise EmptyFederation("federation needs at least one node")
    nodes: dict[str, NodeState] = {}
    for spec in specs:
        if spec.node_id in nodes:
            raise DuplicateNodeId(spec.node_id)
        nodes[spec.node_id] = NodeState(spec=spec)
    return FederationState(nodes=nodes, location={}, clock=min(s.join_time for s in specs))


def locate(fed: FederationState, file_id: str, namespace: str = "") -> Optional[str]:
    """Redirector lookup: the node holding the file, or None."""
    return fed.location.get(file_id)


def _placement_hash(file_id: str, node_id: str) -> int:
    digest = hashlib.blake2b(
        f"{file_id}\x00{node_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def select_miss_target(
    fed: FederationState, file_id: str, file_size: int, namespace: str, time: int
) -> str:
    """Pick the node that will cache a missed file.

    Among joined, namespace-eligible nodes with free space for the file,
    the newest-joined wins; equal join times are spread evenly by a
    rendezvous hash of (file_id, node_id). With no free space anywhere,
    the newest-joined node large enough to ever hold the file is chosen
    and eviction follows.
    """
    eligible = [
        ns
        for ns in fed.nodes.values()
        if ns.spec.join_time <= time and ns.spec.accepts(namespace)
    ]
    if not eligible:
        raise NoEligibleNode(f"no joined node accepts namespace {namespace!r}")
    pool = [ns for ns in eligible if ns.free >= file_size]
    if not pool:
        pool = [ns for ns in eligible if ns.spec.capacity >= file_size]
        if not pool:
            raise FileTooLarge(
                f"file {file_id} ({file_size} bytes) exceeds every eligible node's capacity"
            )
    newest = max(ns.spec.join_time for ns in pool)
    winners = [ns for ns in pool if ns.spec.join_time == newest]
    best = max(winners, key=lambda ns: _placement_hash(file_id, ns.spec.node_id))
    return best.spec.node_id


def evict_lru(fed: FederationState, node_id: str, bytes_needed: int) -> list[str]:
    """Evict least-recently-accessed files until the node can take bytes_needed."""
    node = fed.nodes[node_id]
    if bytes_needed > node.spec.capacity:
        raise FileTooLarge(
            f"{bytes_needed} bytes exceed node {node_id} capacity {node.spec.capacity}"
        )
    evicted: list[str] = []
    while node.free < bytes_needed:
        file_id, entry = node.resident.popitem(last=False)
        node.used -= entry.size
        del fed.location[file_id]
        evicted.append(file_id)
    return evicted


def handle_request(fed: FederationState, req: FileRequest) -> AccessRecord:
    """Route one request, mutate the federation, and emit its access record."""
    if req.time < fed.clock:
        raise ValueError(
            f"request at {req.time} precedes federation clock {fed.clock}; "
            "requests must be time-ordered"
        )
    fed.clock = req.time
    holder = fed.location.get(req.file_id)
    if holder is not None:
        node = fed.nodes[holder]
        entry = node.resident[req.file_id]
        entry.last_access = req.time
        node.resident.move_to_end(req.file_id)
        kind, node_id, transfer = AccessKind.HIT, holder, req.request_size
    else:
        node_id = select_miss_target(fed, req.file_id, req.file_size, req.namespace, req.time)
        evict_lru(fed, node_id, req.file_size)
        node = fed.nodes[node_id]
        node.resident[req.file_id] = ResidentFile(size=req.file_size, last_access=req.time)
        node.used += req.file_size
        fed.location[req.file_id] = node_id
        kind, transfer = AccessKind.MISS, req.file_size
    return AccessRecord(
        ts_start=req.time,
        ts_end=req.time,
        user_id=req.user_id,
        file_id=req.file_id,
        file_path=f"/store/{req.namespace}/{req.file_id}",
        file_size=req.file_size,
        transfer_size=transfer,
        kind=kind,
        node_id=node_id,
        success=True,
    )


def add_nodes(fed: FederationState, specs: Iterable[NodeSpec], time: int) -> FederationState:
    """Join new empty nodes at ``time``; subsequent misses will prefer them."""
    if time < fed.clock:
        raise ValueError(f"add_nodes at {time} precedes federation clock {fed.clock}")
    specs = list(specs)
    for spec in specs:
        if spec.node_id in fed.nodes:
            raise DuplicateNodeId(spec.node_id)
    for spec in specs:
        fed.nodes[spec.node_id] = NodeState(spec=replace(spec, join_time=time))
    fed.clock = time
    return fed


def run_simulation(
    specs: Iterable[NodeSpec],
    events: Iterable[FederationEvent],
    requests: Iterable[FileRequest],
) -> list[AccessRecord]:
    """Drive a fresh federation through events and requests, emitting the trace."""
    fed = build_federation(specs)
    events = sorted(events, key=lambda e: e.time)
    trace: list[AccessRecord] = []
    event_idx = 0
    prev_time = None
    for req_idx, req in enumerate(requests):
        if prev_time is not None and req.time < prev_time:
            raise ValueError(f"request {req_idx}: out of order ({req.time} < {prev_time})")
        prev_time = req.time
        while event_idx < len(events) and events[event_idx].time <= req.time:
            ev = events[event_idx]
            add_nodes(fed, ev.add_nodes, ev.time)
            event_idx += 1
        try:
            trace.append(handle_request(fed, req))
        except (NoEligibleNode, FileTooLarge) as exc:
            raise type(exc)(f"request {req_idx}: {exc}") from exc
    return trace


def check_invariants(fed: FederationState) -> None:
    """Assert federation state consistency; raises AssertionError on breach."""
    seen: dict[str, str] = {}
    for node_id, node in fed.nodes.items():
        total = sum(e.size for e in node.resident.values())
        assert node.used == total, f"{node_id}: used {node.used} != sum {total}"
        assert node.used <= node.spec.capacity, f"{node_id}: over capacity"
        for file_id in node.resident:
            assert file_id not in seen, f"{file_id} resident on {seen[file_id]} and {node_id}"
            seen[file_id] = node_id
            assert fed.location.get(file_id) == node_id, f"{file_id}: location map disagrees"
    assert set(seen) == set(fed.location), "location map has stale entries"


def _spec_from_dict(obj: dict) -> NodeSpec:
    try:
        return NodeSpec(
            node_id=str(obj["node_id"]),
            site=str(obj.get("site", "")),
            capacity=int(obj["capacity_bytes"]),
            join_time=int(obj.get("join_time", 0)),
            namespace_filter=obj.get("namespace_filter"),
            rtt_ms=float(obj.get("rtt_ms", 0.0)),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidConfig(f"bad node spec: {exc}") from exc


def load_federation_config(path: Path | str) -> tuple[list[NodeSpec], list[FederationEvent]]:
    """Read a federation config JSON file: node list plus add-node events."""
    with Path(path).open("r", encoding="utf-8") as f:
        obj = json.load(f)
    return parse_federation_config(obj)


def parse_federation_config(obj: dict) -> tuple[list[NodeSpec], list[FederationEvent]]:
    specs = [_spec_from_dict(n) for n in obj.get("nodes", [])]
    events = [
        FederationEvent(
            time=int(ev["time"]),
            add_nodes=tuple(_spec_from_dict(n) for n in ev.get("add_nodes", [])),
        )
        for ev in obj.get("events", [])
    ]
    return specs, events


def socal_preset() -> tuple[list[NodeSpec], list[FederationEvent]]:
    """The bundled 24-node SoCal topology (11 Caltech + 12 UCSD + 1 ESnet, 2.5 PB)."""
    data = resources.files("cachescope.data").joinpath("socal.json").read_text("utf-8")
    return parse_federation_config(json.loads(data))
