"""Exception types shared by the whole package."""


class RrtwError(Exception):
    """Base class for all errors raised by rrtw."""


class ParseError(RrtwError):
    """Malformed DIMACS, decomposition or proof text."""


class InvalidDecomposition(RrtwError):
    """A tree decomposition breaks one of the rules required by an operation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class NotRefutable(RrtwError):
    """The CNF is satisfiable, so no refutation exists.

    ``witness`` is a satisfying assignment (a frozenset of literals).
    """

    def __init__(self, message, witness=frozenset()):
        super().__init__(message)
        self.witness = witness


class InternalBug(RrtwError):
    """A construction invariant failed. Never swallowed; maps to exit code 3."""
