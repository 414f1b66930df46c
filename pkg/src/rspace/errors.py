"""Exception types raised across the package."""


class RSpaceError(Exception):
    """Base class for all resource-space errors."""


class SchemaError(RSpaceError):
    """Malformed or inconsistent space schema."""


class PathError(RSpaceError, KeyError):
    """A coordinate path that does not exist in its dimension."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class RangeError(RSpaceError, ValueError):
    """Range bounds that violate the range invariants."""


class StoreError(RSpaceError):
    """Resource-store failures (duplicate ids, invalid points)."""


class IndexMismatchError(RSpaceError):
    """The graph index does not agree with the schema or store it is used with."""


class QueryError(RSpaceError):
    """Base class for query-language errors."""


class QuerySyntaxError(QueryError):
    def __init__(self, message: str, pos: int, line: int = 1, col: int = 1, expected=()):
        self.pos = pos
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        detail = f"{message} at line {line}, column {col}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class QuerySemanticError(QueryError):
    """Well-formed query text that violates a semantic rule."""


class ExecutionError(QueryError):
    """Errors raised while evaluating a query against a space."""
