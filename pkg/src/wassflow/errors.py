"""Exception types raised by the solver and its loaders."""


class WassflowError(Exception):
    """Base class for all package errors."""


class ConfigError(WassflowError, ValueError):
    """Invalid run configuration, measure or graph file."""


class DisconnectedGraph(ConfigError):
    pass


class UnreachablePair(WassflowError):
    """Some ordered pair of nodes has no directed path between them."""

    def __init__(self, source, target):
        super().__init__(f"no directed path from node {source} to node {target}")
        self.source = source
        self.target = target


class EmptySupport(WassflowError):
    pass


class LengthMismatch(WassflowError, ValueError):
    pass


class ShapeMismatch(WassflowError, ValueError):
    pass


class NonpositiveReference(WassflowError, ValueError):
    pass


class EmptyInput(WassflowError, ValueError):
    pass


class InfeasibleRow(WassflowError):
    """A row must carry mass but every admissible destination is blocked."""

    def __init__(self, rows):
        rows = [int(r) for r in rows]
        super().__init__(f"rows {rows} require mass but have no admissible entries")
        self.rows = rows


class MaxInnerIterations(WassflowError):
    pass


class UnknownKind(ConfigError):
    pass
