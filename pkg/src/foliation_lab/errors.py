"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FoliationLabError(Exception):
    """Base class for every error raised by the toolkit."""


class ExprError(FoliationLabError):
    def __init__(self, message: str, offset: int | None = None, source: str | None = None):
        self.offset = offset
        self.source = source
        if offset is not None and source is not None:
            message = f"{message} at offset {offset}\n  {source}\n  {' ' * offset}^"
        elif offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset(), source: str | None = None):
        self.expected = frozenset(expected)
        if expected:
            message = f"{message}; expected one of {', '.join(sorted(expected))}"
        super().__init__(message, offset, source)


class UnknownFunctionError(ExprError):
    pass


class UnboundSymbolError(ExprError):
    pass


class DomainError(ExprError):
    """log/sqrt of an out-of-domain value, division by zero, overflow."""


class MetricError(FoliationLabError):
    """Metric singular or not positive definite."""


class RankError(FoliationLabError):
    """Spanning fields, normal complement or leaf embedding lost rank."""


class MisuseError(FoliationLabError):
    """An operator's documented precondition was violated by the caller."""


class GeodesicExitError(FoliationLabError):
    def __init__(self, message: str, time: float):
        self.time = time
        super().__init__(f"{message} (exit time t={time:.6g})")


class ScenarioError(FoliationLabError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class PivotWarning(UserWarning):
    """Frame construction is close to a Gram-Schmidt pivot switch."""


class HypothesisWarning(UserWarning):
    """A stability or identity computation ran outside its hypotheses."""
