"""Network snapshot model: typed nodes, links with secret-key pools.

A :class:`QkdGraph` is an immutable snapshot of the QKD network for one
time window.  Ground stations exchange keys; GEO/LEO satellites only
relay.  Every undirected link carries a secret-key generation rate and a
key pool that grows while the network is up and is consumed by relaying.
Pools are undirected: the shared secret on a link is symmetric between
its two holders, so flow in either direction draws from the same pool.

Also provides the trusted-relay hop-by-hop XOR forwarding demo and the
scenario JSON loader used by the CLI.
"""
from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Sequence, Union

from . import linkbudget
from .decoy import DEFAULT_PROTOCOL

__all__ = [
    "NodeKind",
    "Node",
    "Link",
    "QkdGraph",
    "Request",
    "Scenario",
    "ScenarioError",
    "InsufficientKeysError",
    "RelayTrace",
    "accumulate_pools",
    "consume",
    "relay_chain_demo",
    "load_scenario",
]

_ID_PATTERN = re.compile(r"^[A-Za-z0-9_\-]+$")


class ScenarioError(ValueError):
    """A scenario file violates the schema; the message names the field."""


class InsufficientKeysError(ValueError):
    """A consume operation would overdraw a link's key pool."""


class NodeKind(str, Enum):
    GROUND_STATION = "gs"
    GEO_SATELLITE = "geo"
    LEO_SATELLITE = "leo"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind


@dataclass(frozen=True)
class Link:
    """Undirected link between two nodes; endpoints are kept sorted."""

    a: str
    b: str
    rate_bps: float
    pool_bits: int = 0

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError(f"link endpoints must be distinct, got {self.a!r} twice")
        if self.a > self.b:
            first, second = self.b, self.a
            object.__setattr__(self, "a", first)
            object.__setattr__(self, "b", second)
        if self.rate_bps < 0.0:
            raise ValueError(f"link rate must be >= 0, got {self.rate_bps}")
        if self.pool_bits < 0 or self.pool_bits != int(self.pool_bits):
            raise ValueError(f"pool must be a nonnegative integer bit count, got {self.pool_bits}")

    @property
    def endpoints(self) -> tuple[str, str]:
        return (self.a, self.b)


def _canonical_pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class QkdGraph:
    """Snapshot of the network: nodes, links, and accumulated window time."""

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    elapsed_seconds: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        links = tuple(sorted(self.links, key=lambda l: l.endpoints))
        object.__setattr__(self, "links", links)
        by_id = {}
        for node in self.nodes:
            if node.id in by_id:
                raise ValueError(f"duplicate node id {node.id!r}")
            by_id[node.id] = node
        seen = set()
        for link in links:
            for end in link.endpoints:
                if end not in by_id:
                    raise ValueError(f"link {link.endpoints} references unknown node {end!r}")
            if link.endpoints in seen:
                raise ValueError(f"duplicate link between {link.a!r} and {link.b!r}")
            seen.add(link.endpoints)
            if (
                by_id[link.a].kind == NodeKind.GROUND_STATION
                and by_id[link.b].kind == NodeKind.GROUND_STATION
            ):
                raise ValueError(
                    f"ground stations {link.a!r} and {link.b!r} cannot share a direct link"
                )
        object.__setattr__(self, "_nodes_by_id", by_id)
        object.__setattr__(self, "_links_by_pair", {l.endpoints: l for l in links})
        self._warn_degree_limits()

    def _warn_degree_limits(self) -> None:
        # Transceiver counts: a GS carries one GEO- and two LEO-capable
        # terminals; a LEO carries two inter-satellite and two ground links.
        counts: dict[str, dict[NodeKind, int]] = {n.id: {} for n in self.nodes}
        for link in self.links:
            ka = self.node(link.a).kind
            kb = self.node(link.b).kind
            counts[link.a][kb] = counts[link.a].get(kb, 0) + 1
            counts[link.b][ka] = counts[link.b].get(ka, 0) + 1
        for node in self.nodes:
            c = counts[node.id]
            if node.kind == NodeKind.GROUND_STATION:
                if c.get(NodeKind.GEO_SATELLITE, 0) > 1:
                    warnings.warn(
                        f"ground station {node.id!r} has {c[NodeKind.GEO_SATELLITE]} GEO links "
                        "(1 transceiver expected)",
                        stacklevel=3,
                    )
                if c.get(NodeKind.LEO_SATELLITE, 0) > 2:
                    warnings.warn(
                        f"ground station {node.id!r} has {c[NodeKind.LEO_SATELLITE]} LEO links "
                        "(2 transceivers expected)",
                        stacklevel=3,
                    )
            elif node.kind == NodeKind.LEO_SATELLITE:
                if c.get(NodeKind.LEO_SATELLITE, 0) + c.get(NodeKind.GEO_SATELLITE, 0) > 2:
                    warnings.warn(
                        f"LEO {node.id!r} has more than 2 inter-satellite links", stacklevel=3
                    )
                if c.get(NodeKind.GROUND_STATION, 0) > 2:
                    warnings.warn(
                        f"LEO {node.id!r} has more than 2 ground links", stacklevel=3
                    )

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes_by_id[node_id]
        except KeyError:
            raise KeyError(f"unknown node {node_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes_by_id

    def link_between(self, a: str, b: str) -> Link:
        pair = _canonical_pair(a, b)
        try:
            return self._links_by_pair[pair]
        except KeyError:
            raise KeyError(f"no link between {a!r} and {b!r}") from None

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        out = [l.b if l.a == node_id else l.a for l in self.links if node_id in l.endpoints]
        return tuple(sorted(out))

    def ground_stations(self) -> tuple[str, ...]:
        return tuple(
            sorted(n.id for n in self.nodes if n.kind == NodeKind.GROUND_STATION)
        )


def accumulate_pools(graph: QkdGraph, duration_s: float) -> QkdGraph:
    """Grow every pool by floor(rate * duration); returns a new snapshot."""
    if duration_s < 0.0:
        raise ValueError(f"duration must be >= 0, got {duration_s}")
    new_links = tuple(
        replace(link, pool_bits=link.pool_bits + math.floor(link.rate_bps * duration_s))
        for link in graph.links
    )
    return replace(graph, links=new_links, elapsed_seconds=graph.elapsed_seconds + duration_s)


def consume(graph: QkdGraph, endpoints: tuple[str, str], bits: int) -> QkdGraph:
    """Draw ``bits`` from one link's pool; overdraw raises, naming the link."""
    if bits < 0 or bits != int(bits):
        raise ValueError(f"consumed bits must be a nonnegative integer, got {bits}")
    target = graph.link_between(*endpoints)
    if bits > target.pool_bits:
        raise InsufficientKeysError(
            f"link {target.a}-{target.b} holds {target.pool_bits} bits, "
            f"cannot consume {bits}"
        )
    new_links = tuple(
        replace(l, pool_bits=l.pool_bits - int(bits)) if l.endpoints == target.endpoints else l
        for l in graph.links
    )
    return replace(graph, links=new_links)


class RelayTrace(NamedTuple):
    transmitted: tuple[str, ...]
    recovered: str
    consumed_bits: int


def _xor_bits(x: str, y: str) -> str:
    return "".join("1" if cx != cy else "0" for cx, cy in zip(x, y))


def relay_chain_demo(
    key: str, path: Sequence[str], link_keys: Sequence[str]
) -> RelayTrace:
    """Forward a key along a trusted-relay chain with hop-by-hop XOR.

    Each hop transmits key XOR link_key over the classical channel and the
    next node recovers the key with a second XOR, consuming one pool bit
    per key bit per hop.  Returns the per-hop transmitted strings, the key
    recovered at the destination, and the total pool consumption.
    """
    if not key or any(c not in "01" for c in key):
        raise ValueError(f"key must be a nonempty bit string, got {key!r}")
    hops = len(path) - 1
    if hops < 1:
        raise ValueError("path must contain at least two nodes")
    if len(link_keys) != hops:
        raise ValueError(f"path has {hops} hops but {len(link_keys)} link keys were given")
    for i, lk in enumerate(link_keys):
        if len(lk) != len(key) or any(c not in "01" for c in lk):
            raise ValueError(f"link key {i} must be a bit string of length {len(key)}")
    transmitted = []
    carried = key
    for lk in link_keys:
        sent = _xor_bits(carried, lk)
        transmitted.append(sent)
        carried = _xor_bits(sent, lk)  # receiving node recovers the key
    return RelayTrace(tuple(transmitted), carried, len(key) * hops)


class Request(NamedTuple):
    src: str
    dst: str
    demand_bits: int


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: graph (pools empty), window length, requests, options."""

    graph: QkdGraph
    window_seconds: float
    requests: tuple[Request, ...]
    gs_relay: bool = True


def _require(condition: bool, where: str, message: str) -> None:
    if not condition:
        raise ScenarioError(f"{where}: {message}")


def _check_id(value, where: str) -> str:
    _require(isinstance(value, str), where, f"expected a string id, got {value!r}")
    _require(bool(_ID_PATTERN.match(value)), where, f"id {value!r} must match [A-Za-z0-9_-]+")
    return value


def _parse_link(entry: dict, where: str, protocol) -> Link:
    _require(isinstance(entry, dict), where, "expected an object")
    for field in ("a", "b"):
        _require(field in entry, where, f"missing field {field!r}")
    a = _check_id(entry["a"], f"{where}.a")
    b = _check_id(entry["b"], f"{where}.b")
    known = {"a", "b", "rate_bps", "preset", "distance_m"}
    extra = set(entry) - known
    _require(not extra, where, f"unknown fields {sorted(extra)}")
    if "rate_bps" in entry:
        _require(
            "preset" not in entry and "distance_m" not in entry,
            where,
            "give either rate_bps or preset+distance_m, not both",
        )
        rate = entry["rate_bps"]
        _require(
            isinstance(rate, (int, float)) and rate >= 0, f"{where}.rate_bps",
            f"expected a number >= 0, got {rate!r}",
        )
        return Link(a=a, b=b, rate_bps=float(rate))
    _require("preset" in entry, where, "link needs rate_bps or preset+distance_m")
    preset = entry["preset"]
    _require(
        isinstance(preset, str) and preset in linkbudget.PRESETS,
        f"{where}.preset",
        f"unknown preset {preset!r}; known: {sorted(linkbudget.PRESETS)}",
    )
    distance = entry.get("distance_m")
    _require(
        distance is None or (isinstance(distance, (int, float)) and distance > 0),
        f"{where}.distance_m",
        f"expected a positive number, got {distance!r}",
    )
    params = linkbudget.preset_link(preset, distance_m=distance)
    try:
        rate = linkbudget.link_performance(params, protocol).rate_bps
    except linkbudget.NearFieldError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    return Link(a=a, b=b, rate_bps=rate)


def load_scenario(
    source: Union[str, Path, dict], protocol=DEFAULT_PROTOCOL
) -> Scenario:
    """Load and validate a scenario from a JSON file or an equivalent dict.

    Schema::

        {"nodes": [{"id": ..., "kind": "gs"|"geo"|"leo"}, ...],
         "links": [{"a":..., "b":..., "rate_bps":...}
                   | {"a":..., "b":..., "preset":..., "distance_m":...}, ...],
         "elapsed_seconds": N,
         "requests": [{"src":..., "dst":..., "demand_bits":...}, ...],
         "options": {"gs_relay": true|false}}

    Preset links get their rate from the link budget and rate model.
    Raises :class:`ScenarioError` naming the offending field.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    else:
        raw = source
    _require(isinstance(raw, dict), "scenario", "top level must be an object")
    extra = set(raw) - {"nodes", "links", "elapsed_seconds", "requests", "options"}
    _require(not extra, "scenario", f"unknown fields {sorted(extra)}")
    _require("nodes" in raw and isinstance(raw["nodes"], list), "scenario.nodes", "expected a list")
    _require("links" in raw and isinstance(raw["links"], list), "scenario.links", "expected a list")

    kinds = {k.value: k for k in NodeKind}
    nodes = []
    for i, entry in enumerate(raw["nodes"]):
        where = f"nodes[{i}]"
        _require(isinstance(entry, dict), where, "expected an object")
        _require(set(entry) == {"id", "kind"}, where, "expected exactly the fields id, kind")
        node_id = _check_id(entry["id"], f"{where}.id")
        _require(
            entry["kind"] in kinds, f"{where}.kind",
            f"expected one of {sorted(kinds)}, got {entry['kind']!r}",
        )
        nodes.append(Node(id=node_id, kind=kinds[entry["kind"]]))

    links = [
        _parse_link(entry, f"links[{i}]", protocol) for i, entry in enumerate(raw["links"])
    ]

    elapsed = raw.get("elapsed_seconds", 0)
    _require(
        isinstance(elapsed, (int, float)) and elapsed >= 0,
        "scenario.elapsed_seconds",
        f"expected a number >= 0, got {elapsed!r}",
    )

    requests = []
    for i, entry in enumerate(raw.get("requests", [])):
        where = f"requests[{i}]"
        _require(isinstance(entry, dict), where, "expected an object")
        _require(
            set(entry) == {"src", "dst", "demand_bits"},
            where,
            "expected exactly the fields src, dst, demand_bits",
        )
        src = _check_id(entry["src"], f"{where}.src")
        dst = _check_id(entry["dst"], f"{where}.dst")
        demand = entry["demand_bits"]
        _require(
            isinstance(demand, int) and not isinstance(demand, bool) and demand >= 0,
            f"{where}.demand_bits",
            f"expected an integer >= 0, got {demand!r}",
        )
        requests.append(Request(src=src, dst=dst, demand_bits=demand))

    options = raw.get("options", {})
    _require(isinstance(options, dict), "scenario.options", "expected an object")
    extra = set(options) - {"gs_relay"}
    _require(not extra, "scenario.options", f"unknown fields {sorted(extra)}")
    gs_relay = options.get("gs_relay", True)
    _require(isinstance(gs_relay, bool), "scenario.options.gs_relay", "expected a boolean")

    try:
        graph = QkdGraph(nodes=tuple(nodes), links=tuple(links))
    except ValueError as exc:
        raise ScenarioError(f"scenario graph: {exc}") from exc

    node_kinds = {n.id: n.kind for n in nodes}
    for i, req in enumerate(requests):
        where = f"requests[{i}]"
        for role, node_id in (("src", req.src), ("dst", req.dst)):
            _require(node_id in node_kinds, f"{where}.{role}", f"unknown node {node_id!r}")
            _require(
                node_kinds[node_id] == NodeKind.GROUND_STATION,
                f"{where}.{role}",
                f"node {node_id!r} is not a ground station",
            )
        _require(req.src != req.dst, where, "src and dst must differ")

    return Scenario(
        graph=graph,
        window_seconds=float(elapsed),
        requests=tuple(requests),
        gs_relay=gs_relay,
    )
