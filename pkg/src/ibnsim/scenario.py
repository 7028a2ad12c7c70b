"""Scenario documents: parsing, validation, rendering, and world-building.

A scenario is a single JSON document (schema version 1) describing domains
with their nodes and fiber links, border links, shared configuration (grid
size, candidate path count, transceiver mode table, recovery policy), and
either synthetic traffic parameters or an explicit event list.  See
docs/schema.md for the field-by-field reference.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import ScenarioParseError, ScenarioValidationError
from .intents import ConnectivityIntent
from .multidomain import DomainConfig, DomainController
from .network import DEFAULT_MODE_TABLE, DEFAULT_SLOT_COUNT, NodeId, TransmissionMode
from .simulation import Event, EventKind, TrafficConfig, generate_traffic

SCHEMA_VERSION = 1

DEFAULT_K_PATHS = 3
DEFAULT_RECOVERY = "auto-recompile"
RECOVERY_POLICIES = ("auto-recompile", "none")


@dataclass(frozen=True)
class NodeSpec:
    local: int
    ports: int
    port_rate: int
    add_drop: int


@dataclass(frozen=True)
class LinkSpec:
    a: int
    b: int
    length: float


@dataclass(frozen=True)
class DomainSpec:
    id: int
    nodes: tuple
    links: tuple


@dataclass(frozen=True)
class BorderSpec:
    a: NodeId
    b: NodeId
    length: float


@dataclass
class Scenario:
    domains: tuple
    border_links: tuple = ()
    grid_size: int = DEFAULT_SLOT_COUNT
    k_paths: int = DEFAULT_K_PATHS
    mode_table: tuple = DEFAULT_MODE_TABLE
    recovery: str = DEFAULT_RECOVERY
    seed: int = 0
    traffic: Optional[TrafficConfig] = None
    events: tuple = ()

    # -- world building ------------------------------------------------------

    def build_domains(self) -> dict:
        """Instantiate one controller per domain, sharing a global registry."""
        registry: dict = {}
        controllers: dict = {}
        for dspec in sorted(self.domains, key=lambda d: d.id):
            ctrl = DomainController(
                id=dspec.id,
                config=DomainConfig(k_paths=self.k_paths, mode_table=self.mode_table),
                registry=registry,
            )
            ctrl.graph.slot_count = self.grid_size
            for node in dspec.nodes:
                ctrl.add_node(node.local, node.ports, node.port_rate, node.add_drop)
            controllers[dspec.id] = ctrl
        for dspec in sorted(self.domains, key=lambda d: d.id):
            ctrl = controllers[dspec.id]
            for link in dspec.links:
                ctrl.graph.add_fiber_link(
                    NodeId(dspec.id, link.a), NodeId(dspec.id, link.b), link.length
                )
        for border in self.border_links:
            controllers[border.a.domain].add_border_link(border.a, border.b, border.length)
            controllers[border.b.domain].add_border_link(border.b, border.a, border.length)

        hops = self._domain_hops()
        for did, ctrl in controllers.items():
            ctrl.neighbor_hops = {
                neighbor: dict(hops.get(neighbor, {})) for neighbor in ctrl.neighbors()
            }
        return controllers

    def _domain_hops(self) -> dict:
        """All-pairs inter-domain hop counts over the border-link adjacency."""
        adjacency: dict = {d.id: set() for d in self.domains}
        for border in self.border_links:
            adjacency[border.a.domain].add(border.b.domain)
            adjacency[border.b.domain].add(border.a.domain)
        hops: dict = {}
        for start in adjacency:
            dist = {start: 0}
            frontier = [start]
            while frontier:
                nxt = []
                for node in frontier:
                    for neighbor in sorted(adjacency[node]):
                        if neighbor not in dist:
                            dist[neighbor] = dist[node] + 1
                            nxt.append(neighbor)
                frontier = nxt
            hops[start] = dist
        return hops

    def build_events(self) -> list:
        if self.traffic is not None:
            return generate_traffic(self.traffic, self.seed)
        out = []
        for i, spec in enumerate(self.events):
            kind = EventKind(spec["kind"])
            if kind is EventKind.ARRIVAL:
                out.append(
                    Event(
                        time=spec["time"],
                        seq=i,
                        kind=kind,
                        intent=ConnectivityIntent(
                            spec["src"], spec["dst"], spec["rate"]
                        ),
                        holding=spec["holding"],
                    )
                )
            else:
                out.append(
                    Event(time=spec["time"], seq=i, kind=kind, link=spec["link"])
                )
        return out

    # -- canonical rendering ---------------------------------------------------

    def to_document(self) -> dict:
        doc = {
            "schema": SCHEMA_VERSION,
            "grid_size": self.grid_size,
            "k_paths": self.k_paths,
            "recovery": self.recovery,
            "seed": self.seed,
            "mode_table": [
                {"rate": m.rate, "reach": m.reach, "slots": m.slots_needed}
                for m in self.mode_table
            ],
            "domains": [
                {
                    "id": d.id,
                    "nodes": [
                        {
                            "local": n.local,
                            "ports": n.ports,
                            "port_rate": n.port_rate,
                            "add_drop": n.add_drop,
                        }
                        for n in d.nodes
                    ],
                    "links": [
                        {"a": l.a, "b": l.b, "length": l.length} for l in d.links
                    ],
                }
                for d in sorted(self.domains, key=lambda d: d.id)
            ],
            "border_links": [
                {"a": list(b.a), "b": list(b.b), "length": b.length}
                for b in self.border_links
            ],
        }
        if self.traffic is not None:
            doc["traffic"] = {
                "arrivals": self.traffic.arrivals,
                "arrival_rate": self.traffic.arrival_rate,
                "mean_holding": self.traffic.mean_holding,
                "pairs": [
                    {"src": list(src), "dst": list(dst), "weight": w}
                    for src, dst, w in self.traffic.pairs
                ],
                "rates": [
                    {"gbps": r, "weight": w} for r, w in self.traffic.rates
                ],
            }
        if self.events:
            rendered = []
            for spec in self.events:
                if spec["kind"] == "arrival":
                    rendered.append(
                        {
                            "time": spec["time"],
                            "kind": "arrival",
                            "src": list(spec["src"]),
                            "dst": list(spec["dst"]),
                            "rate": spec["rate"],
                            "holding": spec["holding"],
                        }
                    )
                else:
                    rendered.append(
                        {
                            "time": spec["time"],
                            "kind": spec["kind"],
                            "a": list(spec["link"][0]),
                            "b": list(spec["link"][1]),
                        }
                    )
            doc["events"] = rendered
        return doc


def render_scenario(scenario: Scenario) -> str:
    """Canonical JSON text; parse(render(parse(d))) == parse(d)."""
    return json.dumps(scenario.to_document(), indent=2, sort_keys=True) + "\n"


# -- parsing -----------------------------------------------------------------


def parse_scenario(document) -> Scenario:
    """Parse and validate a scenario document (JSON text or dict).

    Raises ScenarioParseError for malformed documents and
    ScenarioValidationError when cross-references or invariants are broken.
    """
    if isinstance(document, str):
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioParseError(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
    elif isinstance(document, dict):
        raw = document
    else:
        raise ScenarioParseError(f"expected JSON text or dict, got {type(document)}")

    schema = _require(raw, "schema", int)
    if schema != SCHEMA_VERSION:
        raise ScenarioParseError(f"unsupported schema version {schema}")

    grid_size = _optional(raw, "grid_size", int, DEFAULT_SLOT_COUNT)
    k_paths = _optional(raw, "k_paths", int, DEFAULT_K_PATHS)
    recovery = _optional(raw, "recovery", str, DEFAULT_RECOVERY)
    seed = _optional(raw, "seed", int, 0)
    if grid_size < 1:
        raise ScenarioValidationError("grid_size must be >= 1")
    if k_paths < 1:
        raise ScenarioValidationError("k_paths must be >= 1")
    if recovery not in RECOVERY_POLICIES:
        raise ScenarioValidationError(
            f"recovery must be one of {RECOVERY_POLICIES}, got {recovery!r}"
        )

    mode_table = _parse_mode_table(raw.get("mode_table"))
    domains = _parse_domains(_require(raw, "domains", list))
    owners = _owner_map(domains)
    border_links = _parse_borders(raw.get("border_links", []), owners, domains)

    traffic = None
    events: tuple = ()
    if "traffic" in raw and "events" in raw:
        raise ScenarioValidationError("give either traffic or events, not both")
    if "traffic" in raw:
        traffic = _parse_traffic(raw["traffic"], owners, domains)
    elif "events" in raw:
        events = _parse_events(raw["events"], owners)

    return Scenario(
        domains=domains,
        border_links=border_links,
        grid_size=grid_size,
        k_paths=k_paths,
        mode_table=mode_table,
        recovery=recovery,
        seed=seed,
        traffic=traffic,
        events=events,
    )


def _require(mapping, key, kind):
    if key not in mapping:
        raise ScenarioParseError(f"missing required field {key!r}")
    value = mapping[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioParseError(f"field {key!r} must be a number")
        return float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ScenarioParseError(f"field {key!r} must be {kind.__name__}")
    return value


def _optional(mapping, key, kind, default):
    if key not in mapping:
        return default
    return _require(mapping, key, kind)


def _parse_node_ref(value, context: str) -> NodeId:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(x, int) and not isinstance(x, bool) for x in value)
    ):
        raise ScenarioParseError(
            f"{context}: node reference must be [domain, local], got {value!r}"
        )
    return NodeId(value[0], value[1])


def _parse_mode_table(raw) -> tuple:
    if raw is None:
        return DEFAULT_MODE_TABLE
    if not isinstance(raw, list) or not raw:
        raise ScenarioParseError("mode_table must be a non-empty list")
    modes = []
    for entry in raw:
        rate = _require(entry, "rate", int)
        reach = _require(entry, "reach", float)
        slots = _require(entry, "slots", int)
        if rate <= 0 or reach <= 0 or slots <= 0:
            raise ScenarioValidationError(
                f"mode table entries must be positive, got {entry!r}"
            )
        modes.append(TransmissionMode(rate, reach, slots))
    return tuple(modes)


def _parse_domains(raw) -> tuple:
    if not raw:
        raise ScenarioValidationError("scenario needs at least one domain")
    domains = []
    seen_ids = set()
    for dentry in raw:
        did = _require(dentry, "id", int)
        if did in seen_ids:
            raise ScenarioValidationError(f"duplicate domain id {did}")
        seen_ids.add(did)
        nodes = []
        seen_local = set()
        for nentry in _require(dentry, "nodes", list):
            local = _require(nentry, "local", int)
            if local in seen_local:
                raise ScenarioValidationError(
                    f"duplicate node {local} in domain {did}"
                )
            seen_local.add(local)
            nodes.append(
                NodeSpec(
                    local=local,
                    ports=_require(nentry, "ports", int),
                    port_rate=_require(nentry, "port_rate", int),
                    add_drop=_require(nentry, "add_drop", int),
                )
            )
        links = []
        for lentry in dentry.get("links", []):
            a = _require(lentry, "a", int)
            b = _require(lentry, "b", int)
            length = _require(lentry, "length", float)
            for end in (a, b):
                if end not in seen_local:
                    raise ScenarioValidationError(
                        f"link {a}-{b} in domain {did} references unknown node {end}"
                    )
            if length <= 0:
                raise ScenarioValidationError(
                    f"link {a}-{b} in domain {did} must have positive length"
                )
            links.append(LinkSpec(a, b, length))
        domains.append(DomainSpec(id=did, nodes=tuple(nodes), links=tuple(links)))
    return tuple(domains)


def _owner_map(domains) -> dict:
    owners = {}
    for d in domains:
        for n in d.nodes:
            node = NodeId(d.id, n.local)
            if node in owners:
                raise ScenarioValidationError(f"node {node} owned by two domains")
            owners[node] = d.id
    return owners


def _parse_borders(raw, owners, domains) -> tuple:
    borders = []
    seen = set()
    for entry in raw:
        a = _parse_node_ref(_require(entry, "a", list), "border link")
        b = _parse_node_ref(_require(entry, "b", list), "border link")
        length = _require(entry, "length", float)
        for end in (a, b):
            if end not in owners:
                raise ScenarioValidationError(
                    f"border link references unknown node {end}"
                )
        if a.domain == b.domain:
            raise ScenarioValidationError(
                f"border link {a}-{b} must join two different domains"
            )
        if length <= 0:
            raise ScenarioValidationError(
                f"border link {a}-{b} must have positive length"
            )
        key = (a, b) if a <= b else (b, a)
        if key in seen:
            raise ScenarioValidationError(f"duplicate border link {a}-{b}")
        seen.add(key)
        borders.append(BorderSpec(a, b, length))
    return tuple(borders)


def _parse_traffic(raw, owners, domains) -> TrafficConfig:
    arrivals = _require(raw, "arrivals", int)
    rate = _require(raw, "arrival_rate", float)
    holding = _require(raw, "mean_holding", float)

    pairs_raw = raw.get("pairs", "all")
    if pairs_raw == "all":
        nodes = sorted(owners)
        pairs = tuple(
            (src, dst, 1.0) for src in nodes for dst in nodes if src != dst
        )
    else:
        pairs = []
        for entry in pairs_raw:
            src = _parse_node_ref(_require(entry, "src", list), "traffic pair")
            dst = _parse_node_ref(_require(entry, "dst", list), "traffic pair")
            weight = _optional(entry, "weight", float, 1.0)
            for end in (src, dst):
                if end not in owners:
                    raise ScenarioValidationError(
                        f"traffic pair references unknown node {end}"
                    )
            if src == dst:
                raise ScenarioValidationError(f"traffic pair {src}->{dst} is a loop")
            pairs.append((src, dst, weight))
        pairs = tuple(pairs)

    rates_raw = raw.get("rates")
    if rates_raw is None:
        rates = ((100, 1.0),)
    else:
        rates = tuple(
            (_require(entry, "gbps", int), _optional(entry, "weight", float, 1.0))
            for entry in rates_raw
        )
    return TrafficConfig(
        arrivals=arrivals,
        arrival_rate=rate,
        mean_holding=holding,
        pairs=pairs,
        rates=rates,
    )


def _parse_events(raw, owners) -> tuple:
    events = []
    for entry in raw:
        time = _require(entry, "time", float)
        kind = _require(entry, "kind", str)
        if time < 0:
            raise ScenarioValidationError("event times must be >= 0")
        if kind == "arrival":
            src = _parse_node_ref(_require(entry, "src", list), "arrival event")
            dst = _parse_node_ref(_require(entry, "dst", list), "arrival event")
            for end in (src, dst):
                if end not in owners:
                    raise ScenarioValidationError(
                        f"arrival references unknown node {end}"
                    )
            if src == dst:
                raise ScenarioValidationError("arrival src and dst must differ")
            rate = _require(entry, "rate", int)
            holding = _require(entry, "holding", float)
            if rate <= 0 or holding <= 0:
                raise ScenarioValidationError("arrival rate/holding must be positive")
            events.append(
                {
                    "time": time,
                    "kind": "arrival",
                    "src": src,
                    "dst": dst,
                    "rate": rate,
                    "holding": holding,
                }
            )
        elif kind in ("link_down", "link_up"):
            a = _parse_node_ref(_require(entry, "a", list), "link event")
            b = _parse_node_ref(_require(entry, "b", list), "link event")
            events.append({"time": time, "kind": kind, "link": (a, b)})
        else:
            raise ScenarioParseError(f"unknown event kind {kind!r}")
    if any(e1["time"] > e2["time"] for e1, e2 in zip(events, events[1:])):
        raise ScenarioValidationError("explicit events must be time-ordered")
    return tuple(events)
