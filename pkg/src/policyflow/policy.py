"""Symbolic security policies and the bindings that ground them.

Policies speak only in symbolic names (who may reach what, over which
service); the binding registry maps those names onto concrete terminals
and service endpoints so they can be compiled against a model.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

from . import netaddr
from .errors import (
    DanglingTerminal,
    DocumentSyntaxError,
    InvariantViolation,
    UnderlyingLeak,
    UnknownSymbol,
)
from .model import SdnModel, canonical_json, parse_document_text

ANY_SERVICE = "any"
_ANY_SPELLINGS = {"any", "*"}


class PolicyAction(str, Enum):
    PERMIT = "permit"
    DENY = "deny"


@dataclass(frozen=True)
class SecurityPolicy:
    """One symbolic entry: may `subject` use `service` on `object`?"""

    id: str
    subject: str
    object: str
    service: str
    action: PolicyAction


@dataclass(frozen=True)
class BindingRegistry:
    """Mapping rules: symbolic names to terminal sets and service endpoints."""

    principals: Mapping  # name -> frozenset of terminal ids
    services: Mapping  # name -> (ip_proto, tp_dst)

    def __post_init__(self):
        for name, members in self.principals.items():
            if not members:
                raise InvariantViolation("principal binding is nonempty", name)
        for name, endpoint in self.services.items():
            proto, tp_dst = endpoint
            if not 0 <= proto <= netaddr.PROTO_MAX:
                raise InvariantViolation("service protocol is 8-bit", (name, proto))
            if not 0 <= tp_dst <= netaddr.PORT_MAX:
                raise InvariantViolation("service port is 16-bit", (name, tp_dst))


@dataclass(frozen=True)
class ConcretePair:
    """One grounded policy atom: a directed terminal pair plus service."""

    src: str
    dst: str
    proto: Optional[int]
    tp_dst: Optional[int]
    action: PolicyAction
    policy_id: str

    def __post_init__(self):
        if self.src == self.dst:
            raise InvariantViolation("no self-pairs", self.src)

    def to_document(self) -> dict:
        return {
            "src": self.src,
            "dst": self.dst,
            "proto": self.proto,
            "tp_dst": self.tp_dst,
            "action": self.action.value,
            "policy": self.policy_id,
        }


@dataclass(frozen=True)
class Conflict:
    """A directed pair claimed Permit by one policy and Deny by another."""

    src: str
    dst: str
    permit_policy: str
    deny_policy: str

    def render(self) -> str:
        return (
            f"conflict on {self.src}->{self.dst}: "
            f"permit {self.permit_policy} vs deny {self.deny_policy}"
        )

    def to_document(self) -> dict:
        return {
            "src": self.src,
            "dst": self.dst,
            "permit": self.permit_policy,
            "deny": self.deny_policy,
        }


def _leak_check(policy_id: str, token: str) -> None:
    if netaddr.is_network_literal(token):
        raise UnderlyingLeak(policy_id, token)


def parse_policies(document: Union[str, Mapping, list]) -> list:
    """Parse a policy document into an ordered list of SecurityPolicy.

    Subjects, objects, and services are checked lexically: any token
    that spells an IP, MAC, VLAN, or port literal is rejected.
    """
    if isinstance(document, str):
        document = parse_document_text(document, "policies")
    if document is None:
        document = []
    if isinstance(document, Mapping):
        _ = set(document) - {"policies"}
        if _:
            raise DocumentSyntaxError("policies", f"unknown keys: {sorted(_)}")
        document = document.get("policies", [])
    if not isinstance(document, list):
        raise DocumentSyntaxError("policies", "expected a list of policy entries")

    policies = []
    seen_ids = set()
    for index, entry in enumerate(document):
        location = f"policies[{index}]"
        if not isinstance(entry, Mapping):
            raise DocumentSyntaxError(location, "expected a key/value map")
        unknown = set(entry) - {"id", "subject", "object", "service", "action"}
        if unknown:
            raise DocumentSyntaxError(location, f"unknown keys: {sorted(unknown)}")
        fields = {}
        for key in ("id", "subject", "object", "service", "action"):
            value = entry.get(key)
            if not isinstance(value, str) or not value:
                raise DocumentSyntaxError(f"{location}.{key}", "expected a nonempty string")
            fields[key] = value
        if fields["id"] in seen_ids:
            raise InvariantViolation("policy id uniqueness", fields["id"])
        seen_ids.add(fields["id"])
        for key in ("subject", "object", "service"):
            _leak_check(fields["id"], fields[key])
        action_raw = fields["action"].lower()
        try:
            action = PolicyAction(action_raw)
        except ValueError:
            raise DocumentSyntaxError(
                f"{location}.action", f"expected permit or deny, got {fields['action']!r}"
            ) from None
        service = fields["service"]
        if service.lower() in _ANY_SPELLINGS:
            service = ANY_SERVICE
        policies.append(
            SecurityPolicy(
                id=fields["id"],
                subject=fields["subject"],
                object=fields["object"],
                service=service,
                action=action,
            )
        )
    return policies


def parse_registry(document: Union[str, Mapping]) -> BindingRegistry:
    """Parse a binding registry document (standalone or embedded section)."""
    if isinstance(document, str):
        document = parse_document_text(document, "registry")
    if document is None:
        raise DocumentSyntaxError("registry", "empty registry document")
    mapping = document
    if not isinstance(mapping, Mapping):
        raise DocumentSyntaxError("registry", "expected a key/value map")
    unknown = set(mapping) - {"principals", "services"}
    if unknown:
        raise DocumentSyntaxError("registry", f"unknown keys: {sorted(unknown)}")

    principals = {}
    raw_principals = mapping.get("principals", {})
    if not isinstance(raw_principals, Mapping):
        raise DocumentSyntaxError("registry.principals", "expected a key/value map")
    for name, members in raw_principals.items():
        location = f"registry.principals.{name}"
        if not isinstance(members, list) or not members:
            raise DocumentSyntaxError(location, "expected a nonempty list of terminal ids")
        for member in members:
            if not isinstance(member, str) or not member:
                raise DocumentSyntaxError(location, f"expected terminal id strings, got {member!r}")
        principals[name] = frozenset(members)

    services = {}
    raw_services = mapping.get("services", {})
    if not isinstance(raw_services, Mapping):
        raise DocumentSyntaxError("registry.services", "expected a key/value map")
    for name, endpoint in raw_services.items():
        location = f"registry.services.{name}"
        if not isinstance(endpoint, Mapping) or set(endpoint) != {"proto", "tp_dst"}:
            raise DocumentSyntaxError(location, "expected {proto: .., tp_dst: ..}")
        proto = endpoint["proto"]
        tp_dst = endpoint["tp_dst"]
        for label, value in (("proto", proto), ("tp_dst", tp_dst)):
            if not isinstance(value, int) or isinstance(value, bool):
                raise DocumentSyntaxError(f"{location}.{label}", "expected an integer")
        services[name] = (proto, tp_dst)

    try:
        return BindingRegistry(principals=principals, services=services)
    except InvariantViolation as exc:
        raise DocumentSyntaxError("registry", str(exc)) from exc


def resolve(
    policies: Sequence,
    registry: BindingRegistry,
    model: SdnModel,
) -> list:
    """Ground every policy into concrete terminal pairs.

    Output order is policy order, then lexicographic (src, dst); pairs
    with src == dst are discarded.
    """
    pairs = []
    for policy in policies:
        subjects = registry.principals.get(policy.subject)
        if subjects is None:
            raise UnknownSymbol(policy.id, policy.subject)
        objects = registry.principals.get(policy.object)
        if objects is None:
            raise UnknownSymbol(policy.id, policy.object)
        if policy.service == ANY_SERVICE:
            proto, tp_dst = None, None
        else:
            endpoint = registry.services.get(policy.service)
            if endpoint is None:
                raise UnknownSymbol(policy.id, policy.service)
            proto, tp_dst = endpoint
        for name, members in ((policy.subject, subjects), (policy.object, objects)):
            for terminal_id in members:
                if terminal_id not in model.terminals_by_id:
                    raise DanglingTerminal(name, terminal_id)
        for src in sorted(subjects):
            for dst in sorted(objects):
                if src == dst:
                    continue
                pairs.append(
                    ConcretePair(
                        src=src,
                        dst=dst,
                        proto=proto,
                        tp_dst=tp_dst,
                        action=policy.action,
                        policy_id=policy.id,
                    )
                )
    return pairs


def _fields_overlap(a: Optional[int], b: Optional[int]) -> bool:
    return a is None or b is None or a == b


def service_overlap(a: ConcretePair, b: ConcretePair) -> bool:
    """True when some concrete (proto, port) satisfies both pairs."""
    return _fields_overlap(a.proto, b.proto) and _fields_overlap(a.tp_dst, b.tp_dst)


def check_conflicts(pairs: Sequence) -> list:
    """Directed pairs claimed both Permit and Deny on overlapping services.

    Conflicts are data for the operator, not failures: the compiler
    resolves them by giving Deny strictly higher priority.
    """
    conflicts = []
    seen = set()
    for i, a in enumerate(pairs):
        for b in pairs[i + 1 :]:
            if a.src != b.src or a.dst != b.dst or a.action == b.action:
                continue
            if not service_overlap(a, b):
                continue
            permit, deny = (a, b) if a.action is PolicyAction.PERMIT else (b, a)
            key = (a.src, a.dst, permit.policy_id, deny.policy_id)
            if key in seen:
                continue
            seen.add(key)
            conflicts.append(
                Conflict(
                    src=a.src,
                    dst=a.dst,
                    permit_policy=permit.policy_id,
                    deny_policy=deny.policy_id,
                )
            )
    return conflicts


def pairs_hash(pairs: Sequence) -> str:
    payload = canonical_json([pair.to_document() for pair in pairs])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
