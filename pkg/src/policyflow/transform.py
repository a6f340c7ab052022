"""Compile grounded policy pairs into per-switch flow-rule deltas.

Permit pairs become forward rules along the shortest route between the
two attachment switches plus mirror-image reverse rules so replies can
flow back over a default-drop network; Deny pairs become a single Drop
rule at the source attachment switch. Deny sits in a strictly higher
priority band, so conflicting policies fail safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import (
    DocumentSyntaxError,
    DuplicateRule,
    InvariantViolation,
    StaleDelta,
    UnknownAttachment,
)
from .model import (
    Drop,
    FlowRule,
    Forward,
    Match,
    SdnModel,
    Switch,
    _parse_rule,
    model_hash,
    parse_document_text,
    shortest_path,
)
from .policy import ConcretePair, PolicyAction, pairs_hash

P_PERMIT = 1000
P_DENY = 2000


@dataclass(frozen=True)
class FlowTableDelta:
    """Rule additions grouped per switch, tied to the model they target."""

    rules: Mapping  # switch id -> tuple of FlowRule
    model_hash: str
    pairs_hash: str

    def rule_count(self) -> int:
        return sum(len(rules) for rules in self.rules.values())


def _mirror(path: list) -> list:
    """The same physical route walked in the opposite direction."""
    return [(switch, egress, ingress) for switch, ingress, egress in reversed(path)]


def _route(model: SdnModel, from_switch: str, to_switch: str) -> list:
    # Route each unordered switch pair once and mirror it for the other
    # direction, so opposite-direction permits share one physical route
    # and their generated rules can never disagree on the next hop.
    if from_switch <= to_switch:
        return shortest_path(model, from_switch, to_switch)
    return _mirror(shortest_path(model, to_switch, from_switch))


def transform(pairs: Sequence, model: SdnModel) -> FlowTableDelta:
    """Generate the delta installing every pair's rules.

    Identical (switch, priority, match) rules produced by several pairs
    are emitted once, carrying the lexicographically smallest policy id.
    """
    emitted: dict = {}  # (switch, priority, match) -> [action, policy id]
    for pair in pairs:
        src = model.terminals_by_id.get(pair.src)
        dst = model.terminals_by_id.get(pair.dst)
        if src is None:
            raise UnknownAttachment(pair.src)
        if dst is None:
            raise UnknownAttachment(pair.dst)
        src_switch, src_port = src.attachment
        dst_switch, dst_port = dst.attachment

        if pair.action is PolicyAction.DENY:
            match = Match(
                in_port=src_port,
                ip_src=src.ip,
                ip_dst=dst.ip,
                ip_proto=pair.proto,
                tp_dst=pair.tp_dst,
            )
            _emit(emitted, src_switch, P_DENY, match, Drop(), pair.policy_id)
            continue

        path = _route(model, src_switch, dst_switch)
        last = len(path) - 1
        for index, (switch, ingress, egress) in enumerate(path):
            in_port = src_port if index == 0 else ingress
            out_port = dst_port if index == last else egress
            match = Match(
                in_port=in_port,
                ip_src=src.ip,
                ip_dst=dst.ip,
                ip_proto=pair.proto,
                tp_dst=pair.tp_dst,
            )
            _emit(emitted, switch, P_PERMIT, match, Forward(out_port), pair.policy_id)
        # Reverse leg: swap the endpoints and wildcard the reply port.
        reverse = _mirror(path)
        for index, (switch, ingress, egress) in enumerate(reverse):
            in_port = dst_port if index == 0 else ingress
            out_port = src_port if index == last else egress
            match = Match(
                in_port=in_port,
                ip_src=dst.ip,
                ip_dst=src.ip,
                ip_proto=pair.proto,
                tp_dst=None,
            )
            _emit(emitted, switch, P_PERMIT, match, Forward(out_port), pair.policy_id)

    per_switch: dict = {}
    for (switch, priority, match), (action, policy_id) in emitted.items():
        rule = FlowRule(match=match, priority=priority, action=action, provenance=policy_id)
        per_switch.setdefault(switch, []).append(rule)
    rules = {
        switch: tuple(sorted(per_switch[switch], key=lambda r: (-r.priority, r.match.serial)))
        for switch in sorted(per_switch)
    }
    return FlowTableDelta(rules=rules, model_hash=model_hash(model), pairs_hash=pairs_hash(pairs))


def _emit(emitted: dict, switch: str, priority: int, match: Match, action, policy_id: str) -> None:
    key = (switch, priority, match)
    existing = emitted.get(key)
    if existing is None:
        emitted[key] = [action, policy_id]
        return
    if existing[0] != action:
        raise InvariantViolation(
            "rules sharing (switch, priority, match) agree on the action",
            (switch, priority, match.serial),
        )
    if policy_id < existing[1]:
        existing[1] = policy_id


def apply_delta(model: SdnModel, delta: FlowTableDelta) -> SdnModel:
    """A new model whose tables are the old tables plus the delta rules."""
    actual = model_hash(model)
    if delta.model_hash != actual:
        raise StaleDelta(delta.model_hash, actual)
    unknown = set(delta.rules) - set(model.switches_by_id)
    if unknown:
        raise InvariantViolation("delta references switches of the target model", sorted(unknown))
    switches = []
    for switch in model.switches:
        additions = delta.rules.get(switch.id, ())
        if not additions:
            switches.append(switch)
            continue
        existing = {(rule.priority, rule.match) for rule in switch.table}
        for rule in additions:
            if (rule.priority, rule.match) in existing:
                raise DuplicateRule(switch.id, rule.priority, rule.match.serial)
        switches.append(
            Switch(
                id=switch.id,
                dpid=switch.dpid,
                ports=switch.ports,
                table=switch.table + tuple(additions),
            )
        )
    return SdnModel(terminals=model.terminals, switches=tuple(switches), links=model.links)


# ---------------------------------------------------------------------------
# Delta documents
# ---------------------------------------------------------------------------


def delta_to_document(delta: FlowTableDelta) -> dict:
    return {
        "model_hash": delta.model_hash,
        "pairs_hash": delta.pairs_hash,
        "switches": {
            switch: [rule.to_document() for rule in rules]
            for switch, rules in delta.rules.items()
        },
    }


def export_delta(delta: FlowTableDelta, fmt: str = "machine") -> str:
    """Render a delta; machine output is byte-stable under re-export."""
    if fmt == "machine":
        return json.dumps(delta_to_document(delta), sort_keys=True, indent=2) + "\n"
    if fmt == "human":
        lines = []
        for switch in sorted(delta.rules):
            for rule in delta.rules[switch]:
                fields = [f"priority={rule.priority}"]
                fields.extend(
                    f"{name}={value}" for name, value in rule.match.to_document().items()
                )
                fields.append(f"actions={rule.action.render()}")
                fields.append(f"provenance={rule.provenance}")
                lines.append(f"{switch}: " + ",".join(fields))
        return "\n".join(lines) + ("\n" if lines else "")
    raise ValueError(f"unknown export format: {fmt!r}")


def parse_delta(document: Union[str, Mapping]) -> FlowTableDelta:
    """Parse a machine-format delta document back into a FlowTableDelta."""
    if isinstance(document, str):
        document = parse_document_text(document, "ftm")
    if not isinstance(document, Mapping):
        raise DocumentSyntaxError("ftm", "expected a key/value map")
    unknown = set(document) - {"model_hash", "pairs_hash", "switches"}
    if unknown:
        raise DocumentSyntaxError("ftm", f"unknown keys: {sorted(unknown)}")
    for key in ("model_hash", "pairs_hash"):
        if not isinstance(document.get(key), str):
            raise DocumentSyntaxError(f"ftm.{key}", "expected a hash string")
    raw_switches = document.get("switches")
    if not isinstance(raw_switches, Mapping):
        raise DocumentSyntaxError("ftm.switches", "expected a map of switch id to rule list")
    rules = {}
    seen = set()
    for switch, rule_docs in raw_switches.items():
        location = f"ftm.switches.{switch}"
        if not isinstance(rule_docs, list):
            raise DocumentSyntaxError(location, "expected a rule list")
        parsed = []
        for index, rule_doc in enumerate(rule_docs):
            rule = _parse_rule(rule_doc, f"{location}[{index}]")
            key = (switch, rule.priority, rule.match.serial)
            if key in seen:
                raise DocumentSyntaxError(
                    f"{location}[{index}]", "duplicate (switch, priority, match) in delta"
                )
            seen.add(key)
            parsed.append(rule)
        rules[switch] = tuple(parsed)
    return FlowTableDelta(
        rules=rules,
        model_hash=document["model_hash"],
        pairs_hash=document["pairs_hash"],
    )
