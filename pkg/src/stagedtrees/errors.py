"""Exception hierarchy shared by every module."""


class StagedTreeError(Exception):
    """Base class for all errors raised by :mod:`stagedtrees`."""


class TreeStructureError(StagedTreeError, ValueError):
    """An event tree could not be built from the given edges or paths."""


class StagingError(StagedTreeError, ValueError):
    """A staging violates a hard constraint (partition, out-degree, levels)."""


class RoutingError(StagedTreeError, ValueError):
    """A dataset record does not follow a complete root-to-leaf path."""

    def __init__(self, message, record_index=None, position=None):
        super().__init__(message)
        self.record_index = record_index
        self.position = position


class OperatorError(StagedTreeError, ValueError):
    """A swap or resize was requested at a site where it does not apply."""


class DocumentError(StagedTreeError, ValueError):
    """A tree document or dataset file could not be parsed or is malformed."""

    def __init__(self, message, line=None, column=None, field=None):
        super().__init__(message)
        self.line = line
        self.column = column
        self.field = field
