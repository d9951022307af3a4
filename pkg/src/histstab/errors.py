"""Exception hierarchy.

Every error carries the process exit code the command line reports for it.
"""


class HistStabError(Exception):
    exit_code = 1


class ValidationError(HistStabError, ValueError):
    """Malformed input: bad config, wrong dimensions, violated preconditions."""

    exit_code = 2


class StructuralError(ValidationError):
    """An operator does not have the required algebraic structure."""


class DomainError(ValidationError):
    """An argument lies outside the domain where a quantity is defined."""


class ResourceError(HistStabError):
    """A configured size cap would be exceeded."""

    exit_code = 3


class DegenerateError(HistStabError, ValueError):
    exit_code = 4


class DegenerateContextError(DegenerateError):
    """The conditioning branch has (numerically) zero probability."""


class DegenerateInputError(DegenerateError):
    """The input carries no information for the requested quantity."""


class OutputError(HistStabError, OSError):
    exit_code = 5
