"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PolicyFlowError(Exception):
    """Base class for every error this package raises deliberately."""


class DocumentSyntaxError(PolicyFlowError):
    """A model, policy, registry, or flow-table document is malformed."""

    def __init__(self, location: str, reason: str):
        super().__init__(f"{location}: {reason}")
        self.location = location
        self.reason = reason


class InvariantViolation(PolicyFlowError):
    """A structural invariant of a model or delta does not hold."""

    def __init__(self, invariant: str, offender: object = None):
        detail = f": {offender}" if offender is not None else ""
        super().__init__(f"invariant violated ({invariant}){detail}")
        self.invariant = invariant
        self.offender = offender


class DisconnectedTopology(PolicyFlowError):
    """The switch-link graph has more than one connected component."""

    def __init__(self, components: list[list[str]]):
        rendered = ", ".join("{" + ",".join(c) + "}" for c in components)
        super().__init__(f"topology is not connected: {rendered}")
        self.components = components


class UnknownSwitch(PolicyFlowError):
    def __init__(self, switch_id: str):
        super().__init__(f"unknown switch: {switch_id!r}")
        self.switch_id = switch_id


class UnknownTerminal(PolicyFlowError):
    def __init__(self, terminal_id: str):
        super().__init__(f"unknown terminal: {terminal_id!r}")
        self.terminal_id = terminal_id


class UnderlyingLeak(PolicyFlowError):
    """A symbolic policy smuggles in a concrete network literal."""

    def __init__(self, policy_id: str, token: str):
        super().__init__(
            f"policy {policy_id}: underlying network literal {token!r} "
            "in a symbolic field"
        )
        self.policy_id = policy_id
        self.token = token


class UnknownSymbol(PolicyFlowError):
    def __init__(self, policy_id: str, name: str):
        super().__init__(f"policy {policy_id}: no binding for symbol {name!r}")
        self.policy_id = policy_id
        self.name = name


class DanglingTerminal(PolicyFlowError):
    def __init__(self, name: str, terminal_id: str):
        super().__init__(
            f"binding {name!r} references terminal {terminal_id!r} "
            "absent from the model"
        )
        self.name = name
        self.terminal_id = terminal_id


class UnknownAttachment(PolicyFlowError):
    def __init__(self, terminal_id: str):
        super().__init__(f"terminal {terminal_id!r} is not attached in this model")
        self.terminal_id = terminal_id


class StaleDelta(PolicyFlowError):
    """The delta was generated against a different model."""

    def __init__(self, expected: str, actual: str):
        super().__init__(
            f"delta was generated for model {expected[:12]}.. "
            f"but the target model hashes to {actual[:12]}.."
        )
        self.expected = expected
        self.actual = actual


class DuplicateRule(PolicyFlowError):
    def __init__(self, switch_id: str, priority: int, match: str):
        super().__init__(
            f"switch {switch_id}: rule priority={priority} match=[{match}] "
            "already present"
        )
        self.switch_id = switch_id
        self.priority = priority
        self.match = match


class StateBudgetExceeded(PolicyFlowError):
    def __init__(self, limit: int):
        super().__init__(f"exploration exceeded the state budget of {limit}")
        self.limit = limit


class UniverseTooLarge(PolicyFlowError):
    def __init__(self, size: int, cap: int):
        super().__init__(
            f"concrete header universe of size {size} exceeds the "
            f"enumeration cap {cap}"
        )
        self.size = size
        self.cap = cap
