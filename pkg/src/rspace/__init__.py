"""Multidimensional resource space with subspace aggregation queries and a graph index."""
from .errors import (
    ExecutionError,
    IndexMismatchError,
    PathError,
    QueryError,
    QuerySemanticError,
    QuerySyntaxError,
    RangeError,
    RSpaceError,
    SchemaError,
    StoreError,
)
from .space import (
    HIERARCHICAL,
    LEVEL_ORDER,
    CoordinatePath,
    Dimension,
    Point,
    Range,
    Relation,
    ReachabilityMatrix,
    ResourceSpace,
    build_reachability,
    dimension_from_notation,
    is_descendant,
    level_of,
    ordered_siblings,
    point_subsumes,
    parse_space_xml,
    resolve_range,
    resolve_ranges,
    space_to_xml,
)
from .store import Resource, ResourceStore, corpus_to_xml, parse_corpus_xml

__version__ = "0.1.0"

__all__ = [
    "ExecutionError",
    "IndexMismatchError",
    "PathError",
    "QueryError",
    "QuerySemanticError",
    "QuerySyntaxError",
    "RangeError",
    "RSpaceError",
    "SchemaError",
    "StoreError",
    "HIERARCHICAL",
    "LEVEL_ORDER",
    "CoordinatePath",
    "Dimension",
    "Point",
    "Range",
    "Relation",
    "ReachabilityMatrix",
    "ResourceSpace",
    "build_reachability",
    "dimension_from_notation",
    "is_descendant",
    "level_of",
    "ordered_siblings",
    "point_subsumes",
    "parse_space_xml",
    "resolve_range",
    "resolve_ranges",
    "space_to_xml",
    "Resource",
    "ResourceStore",
    "corpus_to_xml",
    "parse_corpus_xml",
]
