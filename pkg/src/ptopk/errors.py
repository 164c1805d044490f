"""Exception hierarchy; each class carries the CLI exit status it maps to."""


class PtopkError(Exception):
    exit_code = 1


class ParseError(PtopkError, ValueError):
    """Input could not be parsed under the declared format."""

    exit_code = 3


class ValidationError(PtopkError, ValueError):
    """Input parsed but violates the x-Relation invariants."""

    exit_code = 3


class WorldCapExceeded(PtopkError):
    """Possible-world enumeration would exceed the configured cap."""

    exit_code = 4


class InfeasibleConfig(PtopkError, ValueError):
    exit_code = 4


class IllConditioned(PtopkError, ArithmeticError):
    """Back-substitution refused because 1 - rho is below the solve epsilon."""

    exit_code = 4


class QueryError(PtopkError, ValueError):
    """Query precondition failed (bad k, threshold, or semantics domain)."""

    exit_code = 2
