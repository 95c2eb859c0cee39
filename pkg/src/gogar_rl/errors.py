"""Exception hierarchy.

Every error raised by the package derives from :class:`GogarRLError`; most
also derive from the closest builtin so callers can catch them generically.
"""


class GogarRLError(Exception):
    """Base class for all package errors."""


class InvalidIndexError(GogarRLError, IndexError):
    pass


class TerminalStateError(GogarRLError, ValueError):
    pass


class ParameterError(GogarRLError, ValueError):
    pass


class NumericError(GogarRLError, ArithmeticError):
    pass


class InputError(GogarRLError, ValueError):
    pass


class ShapeError(GogarRLError, ValueError):
    pass


class ValidationError(GogarRLError, ValueError):
    pass


class ParseError(GogarRLError, ValueError):
    """Malformed text input; carries the offending line number when known."""

    def __init__(self, message, lineno=None, source=None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class MembershipError(GogarRLError, LookupError):
    pass


class EntitlementError(GogarRLError, ValueError):
    """Entitlement requested for a counter that is not committed."""


class RoleError(GogarRLError, ValueError):
    pass


class ChallengeTargetError(GogarRLError, ValueError):
    pass


class LogCorruptionError(GogarRLError, ValueError):
    pass


class PartialPolicyError(GogarRLError, ValueError):
    pass


class PopulationError(GogarRLError, ValueError):
    pass


class PolicyKindError(GogarRLError, ValueError):
    """A deterministic policy was required but a stochastic one was given."""
