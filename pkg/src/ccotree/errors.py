"""Exception hierarchy shared by all ccotree modules."""


class CcoError(Exception):
    """Base class for every error raised by ccotree."""


class UsageError(CcoError, ValueError):
    """An operation was called with arguments outside its contract."""


class DegenerateDomainError(CcoError):
    """Rejection sampling could not find a point inside the domain."""


class DegenerateGeometryError(CcoError, ValueError):
    """A segment would be shorter than the minimum admissible length."""


class DegenerateSolutionError(CcoError):
    """The optimal branching point collapsed onto one of the endpoints."""


class SolverError(CcoError):
    """The local bifurcation residual could not be bracketed or resolved."""


class ConfigError(CcoError, ValueError):
    """Invalid run configuration. ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class InputError(CcoError):
    """An input artifact (seed tree, mask) is unusable."""


class GrowthStalled(CcoError):
    """Too many consecutive candidates had no feasible connection.

    The partially grown tree is kept on ``tree`` so callers can save it.
    """

    def __init__(self, message, tree):
        super().__init__(message)
        self.tree = tree


class TreeFileError(CcoError):
    """Base class for problems found while reading a tree CSV file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedRowError(TreeFileError):
    pass


class DanglingParentError(TreeFileError):
    pass


class MultipleRootsError(TreeFileError):
    pass


class ArityError(TreeFileError):
    """An internal node does not have exactly two children."""


class ConsistencyError(TreeFileError):
    """Stored flow or beta disagrees with the values recomputed from geometry."""
