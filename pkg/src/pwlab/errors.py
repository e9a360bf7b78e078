"""Exception types shared across the package."""


class PwlabError(Exception):
    """Base class for every error raised by pwlab."""


class ExprSyntaxError(PwlabError, ValueError):
    """Malformed expression source; ``pos`` is the 0-based offending offset."""

    def __init__(self, message, source="", pos=0):
        self.source = source
        self.pos = pos
        where = f" at position {pos}" if source else ""
        super().__init__(f"{message}{where}: {source!r}" if source else message)


class ExprDomainError(PwlabError, ArithmeticError):
    """An expression was evaluated outside its domain (log of 0, x/0, ...)."""

    def __init__(self, message, subexpr=""):
        self.subexpr = subexpr
        super().__init__(f"{message} in {subexpr}" if subexpr else message)


class DegenerateMetricError(PwlabError, ArithmeticError):
    """The metric is singular (or numerically so) at the requested point."""


class IntegrationQualityError(PwlabError, ArithmeticError):
    """A numerical integration drifted beyond what its invariants allow."""


class CausalDependenceError(PwlabError, ValueError):
    """The reduced Jacobi system was requested for a causally dependent profile."""


class ConfigError(PwlabError, ValueError):
    """Invalid scenario configuration."""
