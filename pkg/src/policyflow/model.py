"""The modeled network: terminals, switches, links, and installed flow tables.

Two executable semantics live here as well: single-rule matching
(`match_rule`) and the full packet walk (`simulate`), plus the
deterministic shortest-path search the compiler routes along.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Union

import yaml

from . import netaddr
from .errors import (
    DisconnectedTopology,
    DocumentSyntaxError,
    InvariantViolation,
    UnknownSwitch,
    UnknownTerminal,
)

PRIORITY_MAX = 65535
MISS_PRIORITY = 0
MISS_PROVENANCE = "default"

HEADER_FIELDS = ("eth_src", "eth_dst", "ip_src", "ip_dst", "ip_proto", "tp_dst", "vlan")
MATCH_FIELDS = ("in_port",) + HEADER_FIELDS

# Upper bound per field, used for validation and document parsing.
_FIELD_MAX = {
    "eth_src": netaddr.MAC_MAX,
    "eth_dst": netaddr.MAC_MAX,
    "ip_src": netaddr.IPV4_MAX,
    "ip_dst": netaddr.IPV4_MAX,
    "ip_proto": netaddr.PROTO_MAX,
    "tp_dst": netaddr.PORT_MAX,
    "vlan": netaddr.VLAN_MAX,
}
_MAC_FIELDS = ("eth_src", "eth_dst")
_IP_FIELDS = ("ip_src", "ip_dst")


@dataclass(frozen=True)
class Forward:
    """Send the packet out of one port of the current switch."""

    port: int

    def render(self) -> str:
        return f"output:{self.port}"


@dataclass(frozen=True)
class Drop:
    def render(self) -> str:
        return "drop"


Action = Union[Forward, Drop]


def _check_range(name: str, value: int, upper: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= upper:
        raise InvariantViolation(f"{name} in [0, {upper}]", value)


@dataclass(frozen=True)
class PacketHeader:
    """One concrete packet. Wildcards live only in `Match`."""

    eth_src: int
    eth_dst: int
    ip_src: int
    ip_dst: int
    ip_proto: int
    tp_dst: int
    vlan: Optional[int] = None

    def __post_init__(self):
        for field in HEADER_FIELDS:
            value = getattr(self, field)
            if field == "vlan" and value is None:
                continue
            _check_range(field, value, _FIELD_MAX[field])

    def to_document(self) -> dict:
        doc = {
            "eth_src": netaddr.format_mac(self.eth_src),
            "eth_dst": netaddr.format_mac(self.eth_dst),
            "ip_src": netaddr.format_ipv4(self.ip_src),
            "ip_dst": netaddr.format_ipv4(self.ip_dst),
            "ip_proto": self.ip_proto,
            "tp_dst": self.tp_dst,
        }
        if self.vlan is not None:
            doc["vlan"] = self.vlan
        return doc


def _format_field(field: str, value: int) -> str:
    if field in _MAC_FIELDS:
        return netaddr.format_mac(value)
    if field in _IP_FIELDS:
        return netaddr.format_ipv4(value)
    return str(value)


@dataclass(frozen=True)
class Match:
    """Per-field equality pattern; None means wildcard on that field.

    An all-wildcard Match is legal: it is the table-miss pattern.
    """

    in_port: Optional[int] = None
    eth_src: Optional[int] = None
    eth_dst: Optional[int] = None
    ip_src: Optional[int] = None
    ip_dst: Optional[int] = None
    ip_proto: Optional[int] = None
    tp_dst: Optional[int] = None
    vlan: Optional[int] = None

    def __post_init__(self):
        if self.in_port is not None:
            if not isinstance(self.in_port, int) or self.in_port < 1:
                raise InvariantViolation("in_port is a positive port number", self.in_port)
        for field in HEADER_FIELDS:
            value = getattr(self, field)
            if value is not None:
                _check_range(field, value, _FIELD_MAX[field])

    def covers(self, header: PacketHeader, in_port: int) -> bool:
        """True when every non-wildcard field equals the packet's value."""
        if self.in_port is not None and self.in_port != in_port:
            return False
        for field in HEADER_FIELDS:
            want = getattr(self, field)
            if want is not None and want != getattr(header, field):
                return False
        return True

    @property
    def specificity(self) -> int:
        return sum(1 for f in MATCH_FIELDS if getattr(self, f) is not None)

    @cached_property
    def serial(self) -> str:
        """Canonical full rendering, the deterministic tie-break key."""
        parts = []
        for field in sorted(MATCH_FIELDS):
            value = getattr(self, field)
            if value is None:
                parts.append(f"{field}=*")
            elif field == "in_port":
                parts.append(f"{field}={value}")
            else:
                parts.append(f"{field}={_format_field(field, value)}")
        return ",".join(parts)

    def to_document(self) -> dict:
        """Sparse mapping of the concrete fields only."""
        doc = {}
        if self.in_port is not None:
            doc["in_port"] = self.in_port
        for field in HEADER_FIELDS:
            value = getattr(self, field)
            if value is None:
                continue
            if field in _MAC_FIELDS:
                doc[field] = netaddr.format_mac(value)
            elif field in _IP_FIELDS:
                doc[field] = netaddr.format_ipv4(value)
            else:
                doc[field] = value
        return doc


@dataclass(frozen=True)
class FlowRule:
    match: Match
    priority: int
    action: Action
    provenance: str = MISS_PROVENANCE

    def __post_init__(self):
        if not isinstance(self.priority, int) or not 0 <= self.priority <= PRIORITY_MAX:
            raise InvariantViolation(f"priority in [0, {PRIORITY_MAX}]", self.priority)
        if self.priority == MISS_PRIORITY and self.match.specificity != 0:
            raise InvariantViolation("priority 0 is reserved for the table-miss rule", self.match.serial)
        if not isinstance(self.action, (Forward, Drop)):
            raise InvariantViolation("action is Forward or Drop", self.action)

    @cached_property
    def preference(self) -> tuple:
        # Highest priority wins, then the more concrete match, then the
        # lexicographically smallest serialized match.
        return (-self.priority, -self.match.specificity, self.match.serial)

    def to_document(self) -> dict:
        action: object
        if isinstance(self.action, Forward):
            action = {"forward": self.action.port}
        else:
            action = "drop"
        return {
            "priority": self.priority,
            "match": self.match.to_document(),
            "action": action,
            "provenance": self.provenance,
        }


MISS_RULE = FlowRule(match=Match(), priority=MISS_PRIORITY, action=Drop())


@dataclass(frozen=True)
class Switch:
    id: str
    dpid: int
    ports: frozenset
    table: tuple

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise InvariantViolation("switch id is a nonempty string", self.id)
        if not isinstance(self.dpid, int) or not 0 <= self.dpid < (1 << 64):
            raise InvariantViolation("dpid is a 64-bit integer", self.dpid)
        if not self.ports:
            raise InvariantViolation("switch has at least one port", self.id)
        for port in self.ports:
            if not isinstance(port, int) or isinstance(port, bool) or port < 1:
                raise InvariantViolation("port numbers are positive integers", (self.id, port))
        seen = set()
        for rule in self.table:
            key = (rule.priority, rule.match.serial)
            if key in seen:
                raise InvariantViolation(
                    "no two rules share (priority, match)", (self.id,) + key
                )
            seen.add(key)
            if isinstance(rule.action, Forward) and rule.action.port not in self.ports:
                raise InvariantViolation(
                    "forward port exists on the owning switch",
                    (self.id, rule.action.port),
                )

    @cached_property
    def match_order(self) -> tuple:
        """Rules sorted so the first covering rule is the match winner."""
        return tuple(sorted(self.table, key=lambda r: r.preference))


@dataclass(frozen=True)
class Terminal:
    id: str
    mac: int
    ip: int
    attachment: tuple  # (switch id, port number)
    vlan: Optional[int] = None

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise InvariantViolation("terminal id is a nonempty string", self.id)
        _check_range("mac", self.mac, netaddr.MAC_MAX)
        _check_range("ip", self.ip, netaddr.IPV4_MAX)
        if self.vlan is not None:
            _check_range("vlan", self.vlan, netaddr.VLAN_MAX)
        if (
            not isinstance(self.attachment, tuple)
            or len(self.attachment) != 2
            or not isinstance(self.attachment[0], str)
            or not isinstance(self.attachment[1], int)
        ):
            raise InvariantViolation("attachment is (switch id, port)", self.attachment)


@dataclass(frozen=True)
class Link:
    """One bidirectional link; a single object serves both directions."""

    endpoint_a: tuple
    endpoint_b: tuple
    cost: float = 1.0

    def __post_init__(self):
        for endpoint in (self.endpoint_a, self.endpoint_b):
            if (
                not isinstance(endpoint, tuple)
                or len(endpoint) != 2
                or not isinstance(endpoint[0], str)
                or not isinstance(endpoint[1], int)
            ):
                raise InvariantViolation("link endpoint is (switch id, port)", endpoint)
        if self.endpoint_a == self.endpoint_b:
            raise InvariantViolation("link endpoints differ", self.endpoint_a)
        if self.endpoint_a[0] == self.endpoint_b[0]:
            raise InvariantViolation("no self-loop links", self.endpoint_a[0])
        if not isinstance(self.cost, (int, float)) or not math.isfinite(self.cost) or self.cost <= 0:
            raise InvariantViolation("link cost is a positive finite number", self.cost)


@dataclass(frozen=True)
class TraceHop:
    """One applied rule along a packet walk."""

    switch: str
    in_port: int
    priority: int
    action: str

    def to_document(self) -> dict:
        return {
            "switch": self.switch,
            "in_port": self.in_port,
            "priority": self.priority,
            "action": self.action,
        }


@dataclass(frozen=True)
class Delivered:
    terminal: str
    trace: tuple


@dataclass(frozen=True)
class Dropped:
    switch: str
    provenance: str
    trace: tuple


@dataclass(frozen=True)
class Loop:
    trace: tuple


SimOutcome = Union[Delivered, Dropped, Loop]


def outcome_to_document(outcome: SimOutcome) -> dict:
    doc: dict = {"trace": [hop.to_document() for hop in outcome.trace]}
    if isinstance(outcome, Delivered):
        doc["kind"] = "delivered"
        doc["terminal"] = outcome.terminal
    elif isinstance(outcome, Dropped):
        doc["kind"] = "dropped"
        doc["switch"] = outcome.switch
        doc["provenance"] = outcome.provenance
    else:
        doc["kind"] = "loop"
    return doc


@dataclass(frozen=True)
class SdnModel:
    """The verification substrate: terminals, switches, links, flow tables.

    Construction validates every structural invariant; instances are
    immutable afterwards, so all queries are safe for concurrent use.
    """

    terminals: tuple
    switches: tuple
    links: tuple

    def __post_init__(self):
        switches_by_id: dict = {}
        dpids: dict = {}
        for switch in self.switches:
            if switch.id in switches_by_id:
                raise InvariantViolation("switch id uniqueness", switch.id)
            switches_by_id[switch.id] = switch
            if switch.dpid in dpids:
                raise InvariantViolation("switch dpid uniqueness", switch.dpid)
            dpids[switch.dpid] = switch.id
        if not switches_by_id:
            raise InvariantViolation("model contains at least one switch")

        link_peers: dict = {}
        adjacency: dict = {sw: [] for sw in switches_by_id}
        for link in self.links:
            for end in (link.endpoint_a, link.endpoint_b):
                sw, port = end
                if sw not in switches_by_id:
                    raise InvariantViolation("link endpoint switch exists", sw)
                if port not in switches_by_id[sw].ports:
                    raise InvariantViolation("link endpoint port exists", end)
                if end in link_peers:
                    raise InvariantViolation("a (switch, port) appears in at most one link", end)
            a, b = link.endpoint_a, link.endpoint_b
            link_peers[a] = b
            link_peers[b] = a
            adjacency[a[0]].append((b[0], float(link.cost), a[1], b[1]))
            adjacency[b[0]].append((a[0], float(link.cost), b[1], a[1]))

        terminals_by_id: dict = {}
        terminals_at: dict = {}
        macs: set = set()
        ips: set = set()
        for terminal in self.terminals:
            if terminal.id in terminals_by_id:
                raise InvariantViolation("terminal id uniqueness", terminal.id)
            terminals_by_id[terminal.id] = terminal
            if terminal.mac in macs:
                raise InvariantViolation("terminal mac uniqueness", netaddr.format_mac(terminal.mac))
            macs.add(terminal.mac)
            if terminal.ip in ips:
                raise InvariantViolation("terminal ip uniqueness", netaddr.format_ipv4(terminal.ip))
            ips.add(terminal.ip)
            sw, port = terminal.attachment
            if sw not in switches_by_id:
                raise InvariantViolation("attachment switch exists", terminal.attachment)
            if port not in switches_by_id[sw].ports:
                raise InvariantViolation("attachment port exists", terminal.attachment)
            if (sw, port) in link_peers:
                raise InvariantViolation(
                    "a port is either a terminal port or a link port, never both",
                    terminal.attachment,
                )
            terminals_at.setdefault((sw, port), []).append(terminal)

        for switch in self.switches:
            miss_count = sum(1 for r in switch.table if r.priority == MISS_PRIORITY)
            if miss_count != 1:
                raise InvariantViolation(
                    "every switch table contains exactly one table-miss rule",
                    (switch.id, miss_count),
                )

        # Connectivity over the switch-link graph (single component).
        seen = set()
        stack = [next(iter(switches_by_id))]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            for neighbor, _, _, _ in adjacency[node]:
                if neighbor not in seen:
                    stack.append(neighbor)
        if len(seen) != len(switches_by_id):
            components = _components(switches_by_id, adjacency)
            raise DisconnectedTopology(components)

        object.__setattr__(self, "switches_by_id", switches_by_id)
        object.__setattr__(self, "terminals_by_id", terminals_by_id)
        object.__setattr__(self, "link_peers", link_peers)
        object.__setattr__(
            self,
            "terminals_at",
            {key: tuple(sorted(value, key=lambda t: t.id)) for key, value in terminals_at.items()},
        )
        object.__setattr__(
            self,
            "adjacency",
            {sw: tuple(sorted(entries)) for sw, entries in adjacency.items()},
        )


def _components(switches_by_id: Mapping, adjacency: Mapping) -> list:
    remaining = set(switches_by_id)
    components = []
    while remaining:
        start = min(remaining)
        group = set()
        stack = [start]
        while stack:
            node = stack.pop()
            if node in group:
                continue
            group.add(node)
            for neighbor, _, _, _ in adjacency[node]:
                if neighbor not in group:
                    stack.append(neighbor)
        components.append(sorted(group))
        remaining -= group
    return sorted(components)


# ---------------------------------------------------------------------------
# Document loading
# ---------------------------------------------------------------------------


def parse_document_text(text: str, kind: str) -> object:
    """Parse a structured text document (YAML; JSON is a subset)."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        location = kind
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            location = f"{kind}:{mark.line + 1}:{mark.column + 1}"
        raise DocumentSyntaxError(location, f"cannot parse document: {exc}") from exc


def _as_mapping(value: object, location: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise DocumentSyntaxError(location, f"expected a key/value map, got {type(value).__name__}")
    return value


def _as_list(value: object, location: str) -> list:
    if not isinstance(value, list):
        raise DocumentSyntaxError(location, f"expected a list, got {type(value).__name__}")
    return value


def _get_str(mapping: Mapping, key: str, location: str) -> str:
    if key not in mapping:
        raise DocumentSyntaxError(location, f"missing required key {key!r}")
    value = mapping[key]
    if not isinstance(value, str) or not value:
        raise DocumentSyntaxError(f"{location}.{key}", "expected a nonempty string")
    return value


def _get_int(mapping: Mapping, key: str, location: str) -> int:
    if key not in mapping:
        raise DocumentSyntaxError(location, f"missing required key {key!r}")
    value = mapping[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise DocumentSyntaxError(f"{location}.{key}", "expected an integer")
    return value


def _reject_unknown(mapping: Mapping, allowed: set, location: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise DocumentSyntaxError(location, f"unknown keys: {sorted(unknown)}")


def _parse_match(doc: object, location: str) -> Match:
    mapping = _as_mapping(doc, location)
    _reject_unknown(mapping, set(MATCH_FIELDS), location)
    kwargs = {}
    for field, raw in mapping.items():
        if raw is None:
            continue  # explicit wildcard
        try:
            if field in _MAC_FIELDS:
                kwargs[field] = netaddr.parse_mac(raw)
            elif field in _IP_FIELDS:
                kwargs[field] = netaddr.parse_ipv4(raw)
            else:
                if not isinstance(raw, int) or isinstance(raw, bool):
                    raise ValueError(f"expected an integer, got {raw!r}")
                kwargs[field] = raw
        except ValueError as exc:
            raise DocumentSyntaxError(f"{location}.{field}", str(exc)) from exc
    try:
        return Match(**kwargs)
    except InvariantViolation as exc:
        raise DocumentSyntaxError(location, str(exc)) from exc


def _parse_action(doc: object, location: str) -> Action:
    if doc == "drop":
        return Drop()
    if isinstance(doc, Mapping) and set(doc) == {"forward"}:
        port = doc["forward"]
        if not isinstance(port, int) or isinstance(port, bool):
            raise DocumentSyntaxError(location, "forward port must be an integer")
        return Forward(port)
    raise DocumentSyntaxError(location, f"expected \"drop\" or {{forward: port}}, got {doc!r}")


def _parse_rule(doc: object, location: str) -> FlowRule:
    mapping = _as_mapping(doc, location)
    _reject_unknown(mapping, {"priority", "match", "action", "provenance"}, location)
    priority = _get_int(mapping, "priority", location)
    match = _parse_match(mapping.get("match", {}), f"{location}.match")
    if "action" not in mapping:
        raise DocumentSyntaxError(location, "missing required key 'action'")
    action = _parse_action(mapping["action"], f"{location}.action")
    provenance = mapping.get("provenance", MISS_PROVENANCE)
    if not isinstance(provenance, str) or not provenance:
        raise DocumentSyntaxError(f"{location}.provenance", "expected a nonempty string")
    try:
        return FlowRule(match=match, priority=priority, action=action, provenance=provenance)
    except InvariantViolation as exc:
        raise DocumentSyntaxError(location, str(exc)) from exc


def _parse_endpoint(doc: object, location: str) -> tuple:
    if (
        not isinstance(doc, list)
        or len(doc) != 2
        or not isinstance(doc[0], str)
        or not isinstance(doc[1], int)
        or isinstance(doc[1], bool)
    ):
        raise DocumentSyntaxError(location, f"expected [switch id, port], got {doc!r}")
    return (doc[0], doc[1])


def load_model(document: Union[str, Mapping]) -> SdnModel:
    """Build a validated model from a document (text or parsed mapping).

    Switch tables are initialized with the default table-miss Drop rule;
    supplied rules are kept as-is, gaining the miss rule only when they
    do not already include one.
    """
    if isinstance(document, str):
        document = parse_document_text(document, "model")
    data = _as_mapping(document, "model")
    _reject_unknown(data, {"switches", "links", "terminals", "registry"}, "model")

    switches = []
    for index, sw_doc in enumerate(_as_list(data.get("switches", []), "model.switches")):
        location = f"model.switches[{index}]"
        mapping = _as_mapping(sw_doc, location)
        _reject_unknown(mapping, {"id", "dpid", "ports", "rules"}, location)
        sw_id = _get_str(mapping, "id", location)
        dpid = _get_int(mapping, "dpid", location) if "dpid" in mapping else index + 1
        ports = []
        for port in _as_list(mapping.get("ports"), f"{location}.ports"):
            if not isinstance(port, int) or isinstance(port, bool):
                raise DocumentSyntaxError(f"{location}.ports", f"expected integers, got {port!r}")
            ports.append(port)
        rules = []
        for rule_index, rule_doc in enumerate(_as_list(mapping.get("rules", []), f"{location}.rules")):
            rules.append(_parse_rule(rule_doc, f"{location}.rules[{rule_index}]"))
        if not any(rule.priority == MISS_PRIORITY for rule in rules):
            rules.append(MISS_RULE)
        try:
            switches.append(Switch(id=sw_id, dpid=dpid, ports=frozenset(ports), table=tuple(rules)))
        except InvariantViolation as exc:
            raise DocumentSyntaxError(location, str(exc)) from exc

    links = []
    for index, link_doc in enumerate(_as_list(data.get("links", []), "model.links")):
        location = f"model.links[{index}]"
        mapping = _as_mapping(link_doc, location)
        _reject_unknown(mapping, {"a", "b", "cost"}, location)
        a = _parse_endpoint(mapping.get("a"), f"{location}.a")
        b = _parse_endpoint(mapping.get("b"), f"{location}.b")
        cost = mapping.get("cost", 1)
        if not isinstance(cost, (int, float)) or isinstance(cost, bool):
            raise DocumentSyntaxError(f"{location}.cost", f"expected a number, got {cost!r}")
        try:
            links.append(Link(endpoint_a=a, endpoint_b=b, cost=float(cost)))
        except InvariantViolation as exc:
            raise DocumentSyntaxError(location, str(exc)) from exc

    terminals = []
    for index, term_doc in enumerate(_as_list(data.get("terminals", []), "model.terminals")):
        location = f"model.terminals[{index}]"
        mapping = _as_mapping(term_doc, location)
        _reject_unknown(mapping, {"id", "mac", "ip", "vlan", "attach"}, location)
        term_id = _get_str(mapping, "id", location)
        try:
            mac = netaddr.parse_mac(_get_str(mapping, "mac", location))
        except ValueError as exc:
            raise DocumentSyntaxError(f"{location}.mac", str(exc)) from exc
        try:
            ip = netaddr.parse_ipv4(_get_str(mapping, "ip", location))
        except ValueError as exc:
            raise DocumentSyntaxError(f"{location}.ip", str(exc)) from exc
        vlan = mapping.get("vlan")
        if vlan is not None and (not isinstance(vlan, int) or isinstance(vlan, bool)):
            raise DocumentSyntaxError(f"{location}.vlan", f"expected an integer, got {vlan!r}")
        attach = _parse_endpoint(mapping.get("attach"), f"{location}.attach")
        try:
            terminals.append(Terminal(id=term_id, mac=mac, ip=ip, attachment=attach, vlan=vlan))
        except InvariantViolation as exc:
            raise DocumentSyntaxError(location, str(exc)) from exc

    return SdnModel(terminals=tuple(terminals), switches=tuple(switches), links=tuple(links))


# ---------------------------------------------------------------------------
# Canonical serialization and hashing
# ---------------------------------------------------------------------------


def _canonical_cost(cost: float) -> object:
    return int(cost) if float(cost).is_integer() else cost


def model_to_document(model: SdnModel) -> dict:
    """Canonical document form; equal models serialize identically."""
    switches = []
    for switch in sorted(model.switches, key=lambda s: s.id):
        switches.append(
            {
                "id": switch.id,
                "dpid": switch.dpid,
                "ports": sorted(switch.ports),
                "rules": [
                    rule.to_document()
                    for rule in sorted(switch.table, key=lambda r: (-r.priority, r.match.serial))
                ],
            }
        )
    links = []
    for link in model.links:
        a, b = sorted([list(link.endpoint_a), list(link.endpoint_b)])
        links.append({"a": a, "b": b, "cost": _canonical_cost(link.cost)})
    links.sort(key=lambda entry: (entry["a"], entry["b"]))
    terminals = []
    for terminal in sorted(model.terminals, key=lambda t: t.id):
        doc = {
            "id": terminal.id,
            "mac": netaddr.format_mac(terminal.mac),
            "ip": netaddr.format_ipv4(terminal.ip),
            "attach": list(terminal.attachment),
        }
        if terminal.vlan is not None:
            doc["vlan"] = terminal.vlan
        terminals.append(doc)
    return {"switches": switches, "links": links, "terminals": terminals}


def canonical_json(document: object) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def model_hash(model: SdnModel) -> str:
    digest = hashlib.sha256(canonical_json(model_to_document(model)).encode("utf-8"))
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Route search
# ---------------------------------------------------------------------------


def shortest_path(model: SdnModel, src_switch: str, dst_switch: str) -> list:
    """Minimum-cost simple path as [(switch, ingress, egress), ...].

    The first hop has ingress None and the last egress None. Equal-cost
    frontiers settle the lexicographically smaller switch id first, so
    repeated calls return identical paths.
    """
    if src_switch not in model.switches_by_id:
        raise UnknownSwitch(src_switch)
    if dst_switch not in model.switches_by_id:
        raise UnknownSwitch(dst_switch)
    if src_switch == dst_switch:
        return [(src_switch, None, None)]

    dist = {src_switch: 0.0}
    prev: dict = {}
    settled: set = set()
    heap = [(0.0, src_switch)]
    while heap:
        cost, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == dst_switch:
            break
        for neighbor, weight, egress, ingress in model.adjacency[node]:
            if neighbor in settled:
                continue
            candidate = cost + weight
            if neighbor not in dist or candidate < dist[neighbor]:
                dist[neighbor] = candidate
                prev[neighbor] = (node, egress, ingress)
                heapq.heappush(heap, (candidate, neighbor))

    # Connectivity invariant guarantees dst was settled.
    nodes = [dst_switch]
    hops_rev = []
    cursor = dst_switch
    while cursor != src_switch:
        node, egress, ingress = prev[cursor]
        hops_rev.append((egress, ingress))
        nodes.append(node)
        cursor = node
    nodes.reverse()
    hop_links = list(reversed(hops_rev))

    path = []
    for index, node in enumerate(nodes):
        ingress = hop_links[index - 1][1] if index > 0 else None
        egress = hop_links[index][0] if index < len(hop_links) else None
        path.append((node, ingress, egress))
    return path


# ---------------------------------------------------------------------------
# Matching and simulation
# ---------------------------------------------------------------------------


def match_rule(switch: Switch, header: PacketHeader, in_port: int) -> FlowRule:
    """The winning rule for this packet at this switch.

    Highest priority wins; equal-priority candidates prefer the more
    concrete match, then the smallest serialized match. Total on any
    table holding its miss rule.
    """
    if in_port not in switch.ports:
        raise ValueError(f"port {in_port} does not exist on switch {switch.id}")
    for rule in switch.match_order:
        if rule.match.covers(header, in_port):
            return rule
    raise InvariantViolation("table-miss rule present", switch.id)


def simulate(model: SdnModel, src_terminal: str, header: PacketHeader) -> SimOutcome:
    """Walk one concrete packet from its source terminal to an outcome.

    Revisiting a (switch, in_port) state ends the walk as a Loop, which
    bounds the hop count by the number of switch ports plus one.
    """
    terminal = model.terminals_by_id.get(src_terminal)
    if terminal is None:
        raise UnknownTerminal(src_terminal)
    if header.eth_src != terminal.mac or header.ip_src != terminal.ip:
        raise ValueError(
            f"header source addresses do not belong to terminal {src_terminal}"
        )

    switch_id, in_port = terminal.attachment
    visited: set = set()
    trace: list = []
    while True:
        state = (switch_id, in_port)
        if state in visited:
            return Loop(tuple(trace))
        visited.add(state)
        rule = match_rule(model.switches_by_id[switch_id], header, in_port)
        trace.append(TraceHop(switch_id, in_port, rule.priority, rule.action.render()))
        if isinstance(rule.action, Drop):
            return Dropped(switch_id, rule.provenance, tuple(trace))
        out_port = rule.action.port
        attached = model.terminals_at.get((switch_id, out_port), ())
        if attached:
            for candidate in attached:
                if candidate.mac == header.eth_dst and candidate.ip == header.ip_dst:
                    return Delivered(candidate.id, tuple(trace))
            return Dropped(switch_id, "address-mismatch", tuple(trace))
        peer = model.link_peers.get((switch_id, out_port))
        if peer is None:
            return Dropped(switch_id, "unconnected-port", tuple(trace))
        switch_id, in_port = peer
