"""Check that an updated model satisfies every grounded policy.

Every policy pair becomes a reachability or unreachability condition.
The checker explores header-equivalence classes with an explicit-state
walk over (class, switch, ingress port) states; the oracle brute-forces
the same question by enumerating concrete packets through `simulate`.
The two must always agree; the test suite enforces it.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

from . import netaddr
from .errors import StateBudgetExceeded, UniverseTooLarge, UnknownTerminal
from .model import (
    Delivered,
    Drop,
    PacketHeader,
    SdnModel,
    SimOutcome,
    match_rule,
    outcome_to_document,
    simulate,
)
from .policy import Conflict, PolicyAction

DEFAULT_STATE_BUDGET = 10**6
DEFAULT_ENUM_CAP = 100_000

_SPACE_FIELD_MAX = {
    "eth_src": netaddr.MAC_MAX,
    "eth_dst": netaddr.MAC_MAX,
    "ip_src": netaddr.IPV4_MAX,
    "ip_dst": netaddr.IPV4_MAX,
    "ip_proto": netaddr.PROTO_MAX,
    "tp_dst": netaddr.PORT_MAX,
    "vlan": netaddr.VLAN_MAX,
}

OTHER = "other"
UNTAGGED = None


class Expectation(str, Enum):
    REACHABLE = "reachable"
    UNREACHABLE = "unreachable"


class CheckResult(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ValidationCondition:
    """A grounded property: src must (or must not) reach dst over a service."""

    id: str
    src: str
    dst: str
    proto: Optional[int]
    tp_dst: Optional[int]
    expected: Expectation
    provenance: str

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("validation condition endpoints must differ")

    def to_document(self) -> dict:
        return {
            "vc": self.id,
            "src": self.src,
            "dst": self.dst,
            "proto": self.proto,
            "tp_dst": self.tp_dst,
            "expected": self.expected.value,
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class Counterexample:
    """A concrete packet violating an unreachability condition."""

    header: PacketHeader
    outcome: SimOutcome

    def to_document(self) -> dict:
        return {
            "header": self.header.to_document(),
            "outcome": outcome_to_document(self.outcome),
        }


Witness = Union[str, Counterexample]


@dataclass(frozen=True)
class Verdict:
    vc_id: str
    result: CheckResult
    witness: Optional[Witness] = None
    reason: Optional[str] = None


@dataclass(frozen=True)
class HeaderClassSpace:
    """Finite atoms per header field: every value some installed match or
    terminal mentions, plus one designated "other" atom per field."""

    known: dict  # field -> tuple of mentioned values (vlan includes None)
    other_rep: dict  # field -> concrete representative of the "other" atom

    def values(self, field_name: str) -> tuple:
        """Concrete representatives covering every atom of the field."""
        return self.known[field_name] + (self.other_rep[field_name],)

    def classify(self, header: PacketHeader) -> tuple:
        """The unique class of a concrete header."""
        atoms = []
        for field_name in sorted(self.known):
            value = getattr(header, field_name)
            atoms.append(value if value in self.known[field_name] else OTHER)
        return tuple(atoms)

    @property
    def class_count(self) -> int:
        count = 1
        for values in self.known.values():
            count *= len(values) + 1
        return count


def build_class_space(model: SdnModel) -> HeaderClassSpace:
    mentioned = {field_name: set() for field_name in _SPACE_FIELD_MAX}
    for switch in model.switches:
        for rule in switch.table:
            for field_name in _SPACE_FIELD_MAX:
                value = getattr(rule.match, field_name)
                if value is not None:
                    mentioned[field_name].add(value)
    for terminal in model.terminals:
        mentioned["eth_src"].add(terminal.mac)
        mentioned["eth_dst"].add(terminal.mac)
        mentioned["ip_src"].add(terminal.ip)
        mentioned["ip_dst"].add(terminal.ip)
        if terminal.vlan is not None:
            mentioned["vlan"].add(terminal.vlan)

    known = {}
    other_rep = {}
    for field_name, values in mentioned.items():
        ordered = tuple(sorted(values))
        if field_name == "vlan":
            # Untagged packets are their own atom, distinct from "other".
            ordered = (UNTAGGED,) + ordered
        known[field_name] = ordered
        rep = 0
        while rep in values:
            rep += 1
        if rep > _SPACE_FIELD_MAX[field_name]:
            raise UniverseTooLarge(len(values), _SPACE_FIELD_MAX[field_name])
        other_rep[field_name] = rep
    return HeaderClassSpace(known=known, other_rep=other_rep)


def compile_conditions(pairs: Sequence) -> list:
    """One condition per pair: Permit expects Reachable, Deny Unreachable."""
    conditions = []
    for ordinal, pair in enumerate(pairs, start=1):
        expected = (
            Expectation.REACHABLE
            if pair.action is PolicyAction.PERMIT
            else Expectation.UNREACHABLE
        )
        conditions.append(
            ValidationCondition(
                id=f"vc-{ordinal}",
                src=pair.src,
                dst=pair.dst,
                proto=pair.proto,
                tp_dst=pair.tp_dst,
                expected=expected,
                provenance=pair.policy_id,
            )
        )
    return conditions


def _candidate_classes(space: HeaderClassSpace, vc: ValidationCondition) -> list:
    protos = (vc.proto,) if vc.proto is not None else space.values("ip_proto")
    ports = (vc.tp_dst,) if vc.tp_dst is not None else space.values("tp_dst")
    vlans = space.values("vlan")
    return list(itertools.product(protos, ports, vlans))


def _endpoints(rsdn: SdnModel, vc: ValidationCondition):
    src = rsdn.terminals_by_id.get(vc.src)
    if src is None:
        raise UnknownTerminal(vc.src)
    dst = rsdn.terminals_by_id.get(vc.dst)
    if dst is None:
        raise UnknownTerminal(vc.dst)
    return src, dst


def _class_header(src, dst, combo) -> PacketHeader:
    proto, tp_dst, vlan = combo
    return PacketHeader(
        eth_src=src.mac,
        eth_dst=dst.mac,
        ip_src=src.ip,
        ip_dst=dst.ip,
        ip_proto=proto,
        tp_dst=tp_dst,
        vlan=vlan,
    )


def model_check(
    rsdn: SdnModel,
    vc: ValidationCondition,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Verdict:
    """Explicit-state exploration of the condition's header classes.

    Each state (header class, switch, in_port) is visited at most once;
    exceeding the budget raises rather than silently truncating.
    """
    src, dst = _endpoints(rsdn, vc)
    space = build_class_space(rsdn)
    visited_total = 0
    delivering: Optional[PacketHeader] = None

    for combo in _candidate_classes(space, vc):
        header = _class_header(src, dst, combo)
        switch_id, in_port = src.attachment
        seen = set()
        while True:
            state = (switch_id, in_port)
            if state in seen:
                break  # forwarding loop: this class never delivers
            seen.add(state)
            visited_total += 1
            if visited_total > state_budget:
                raise StateBudgetExceeded(state_budget)
            rule = match_rule(rsdn.switches_by_id[switch_id], header, in_port)
            if isinstance(rule.action, Drop):
                break
            out_port = rule.action.port
            attached = rsdn.terminals_at.get((switch_id, out_port), ())
            if attached:
                if any(
                    t.id == vc.dst and t.mac == header.eth_dst and t.ip == header.ip_dst
                    for t in attached
                ):
                    delivering = header
                break
            peer = rsdn.link_peers.get((switch_id, out_port))
            if peer is None:
                break
            switch_id, in_port = peer
        if delivering is not None:
            break

    if vc.expected is Expectation.REACHABLE:
        if delivering is not None:
            return Verdict(vc.id, CheckResult.HOLDS)
        return Verdict(vc.id, CheckResult.VIOLATED, witness="no delivering header class exists")
    if delivering is None:
        return Verdict(vc.id, CheckResult.HOLDS)
    outcome = simulate(rsdn, vc.src, delivering)
    return Verdict(
        vc.id,
        CheckResult.VIOLATED,
        witness=Counterexample(header=delivering, outcome=outcome),
    )


def oracle_check(
    rsdn: SdnModel,
    vc: ValidationCondition,
    enum_cap: int = DEFAULT_ENUM_CAP,
) -> Verdict:
    """Brute force: enumerate every concrete header and simulate each one."""
    src, dst = _endpoints(rsdn, vc)
    space = build_class_space(rsdn)
    combos = _candidate_classes(space, vc)
    if len(combos) > enum_cap:
        raise UniverseTooLarge(len(combos), enum_cap)

    delivering: Optional[Counterexample] = None
    for combo in combos:
        header = _class_header(src, dst, combo)
        outcome = simulate(rsdn, vc.src, header)
        if isinstance(outcome, Delivered) and outcome.terminal == vc.dst:
            delivering = Counterexample(header=header, outcome=outcome)
            break

    if vc.expected is Expectation.REACHABLE:
        if delivering is not None:
            return Verdict(vc.id, CheckResult.HOLDS)
        return Verdict(vc.id, CheckResult.VIOLATED, witness="no delivering header class exists")
    if delivering is None:
        return Verdict(vc.id, CheckResult.HOLDS)
    return Verdict(vc.id, CheckResult.VIOLATED, witness=delivering)


@dataclass
class ReportEntry:
    vc: ValidationCondition
    verdict: Verdict
    oracle_verdict: Optional[Verdict] = None

    @property
    def agree(self) -> Optional[bool]:
        if self.oracle_verdict is None:
            return None
        if CheckResult.INCONCLUSIVE in (self.verdict.result, self.oracle_verdict.result):
            return None
        return self.verdict.result == self.oracle_verdict.result


@dataclass
class Report:
    """Aggregated verdicts for one verification run."""

    entries: list
    conflicts: list = field(default_factory=list)
    wall_time: float = 0.0
    oracle_enabled: bool = False

    @property
    def counts(self) -> dict:
        counts = {"total": len(self.entries), "holds": 0, "violated": 0, "inconclusive": 0}
        for entry in self.entries:
            counts[entry.verdict.result.value] += 1
        return counts

    @property
    def status(self) -> str:
        counts = self.counts
        if counts["violated"]:
            return "violations-found"
        if counts["inconclusive"]:
            return "inconclusive"
        return "all-hold"

    @property
    def disagreements(self) -> list:
        return [entry.vc.id for entry in self.entries if entry.agree is False]

    @property
    def oracle_inconclusive(self) -> list:
        return [
            entry.vc.id
            for entry in self.entries
            if entry.oracle_verdict is not None
            and entry.oracle_verdict.result is CheckResult.INCONCLUSIVE
        ]


def verify_all(
    rsdn: SdnModel,
    vcs: Sequence,
    state_budget: int = DEFAULT_STATE_BUDGET,
    oracle: bool = False,
    enum_cap: int = DEFAULT_ENUM_CAP,
    conflicts: Sequence = (),
) -> Report:
    """Check every condition; budget overruns become Inconclusive verdicts."""
    started = time.perf_counter()
    entries = []
    for vc in vcs:
        try:
            verdict = model_check(rsdn, vc, state_budget=state_budget)
        except StateBudgetExceeded as exc:
            verdict = Verdict(vc.id, CheckResult.INCONCLUSIVE, reason=str(exc))
        oracle_verdict = None
        if oracle:
            try:
                oracle_verdict = oracle_check(rsdn, vc, enum_cap=enum_cap)
            except UniverseTooLarge as exc:
                oracle_verdict = Verdict(vc.id, CheckResult.INCONCLUSIVE, reason=str(exc))
        entries.append(ReportEntry(vc=vc, verdict=verdict, oracle_verdict=oracle_verdict))
    return Report(
        entries=entries,
        conflicts=list(conflicts),
        wall_time=time.perf_counter() - started,
        oracle_enabled=oracle,
    )


# ---------------------------------------------------------------------------
# Report documents
# ---------------------------------------------------------------------------


def _witness_document(witness: Optional[Witness]) -> object:
    if witness is None:
        return None
    if isinstance(witness, str):
        return {"statement": witness}
    return witness.to_document()


def report_to_document(report: Report) -> dict:
    """Machine form; deterministic, so repeat runs are byte-identical.

    Wall time deliberately stays out of this form (it lives in the
    human rendering) to keep repeat runs byte-identical.
    """
    verdicts = []
    for entry in report.entries:
        doc = entry.vc.to_document()
        doc["result"] = entry.verdict.result.value
        witness = _witness_document(entry.verdict.witness)
        if witness is not None:
            doc["witness"] = witness
        if entry.verdict.reason:
            doc["reason"] = entry.verdict.reason
        if entry.oracle_verdict is not None:
            doc["oracle_result"] = entry.oracle_verdict.result.value
            if entry.agree is not None:
                doc["oracle_agrees"] = entry.agree
        verdicts.append(doc)
    return {
        "status": report.status,
        "counts": report.counts,
        "conflicts": [conflict.to_document() for conflict in report.conflicts],
        "oracle": {
            "enabled": report.oracle_enabled,
            "disagreements": report.disagreements,
            "inconclusive": report.oracle_inconclusive,
        },
        "verdicts": verdicts,
    }


def render_report(report: Report) -> str:
    """Human summary: one line per condition plus totals and witnesses."""
    lines = []
    counts = report.counts
    lines.append(
        f"status: {report.status}  "
        f"(total {counts['total']}, holds {counts['holds']}, "
        f"violated {counts['violated']}, inconclusive {counts['inconclusive']})"
    )
    lines.append(f"wall time: {report.wall_time:.3f}s")
    if report.conflicts:
        lines.append("conflicts:")
        for conflict in report.conflicts:
            lines.append(f"  {conflict.render()}")
    for entry in report.entries:
        vc = entry.vc
        service = f"proto={vc.proto if vc.proto is not None else '*'}"
        service += f",tp_dst={vc.tp_dst if vc.tp_dst is not None else '*'}"
        line = (
            f"{vc.id}: {vc.src}->{vc.dst} {service} "
            f"expected={vc.expected.value} result={entry.verdict.result.value}"
        )
        if entry.oracle_verdict is not None:
            line += f" oracle={entry.oracle_verdict.result.value}"
            if entry.agree is False:
                line += " DISAGREES"
        lines.append(line)
        if isinstance(entry.verdict.witness, str):
            lines.append(f"  witness: {entry.verdict.witness}")
        elif isinstance(entry.verdict.witness, Counterexample):
            counterexample = entry.verdict.witness
            header = counterexample.header.to_document()
            rendered = ",".join(f"{k}={v}" for k, v in sorted(header.items()))
            lines.append(f"  counterexample: {rendered}")
            for hop in counterexample.outcome.trace:
                lines.append(
                    f"    {hop.switch} in_port={hop.in_port} "
                    f"priority={hop.priority} action={hop.action}"
                )
        if entry.verdict.reason:
            lines.append(f"  reason: {entry.verdict.reason}")
    return "\n".join(lines) + "\n"
