"""Resource-space schema: dimensions, coordinate trees, points and ranges.

A dimension is a tree of coordinates identified by slash-separated paths whose
first segment is the dimension name (``topic/CS/DB``).  Containment between
coordinates is always descendant-or-equal, so every coordinate contains itself.
"""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import PathError, RangeError, SchemaError

SEGMENT_RE = re.compile(r"^[A-Za-z0-9_]+$")

HIERARCHICAL = "hierarchical"
LEVEL_ORDER = "level-order"
RELATION_KINDS = (HIERARCHICAL, LEVEL_ORDER)


@dataclass(frozen=True, order=True)
class CoordinatePath:
    segments: Tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise SchemaError("coordinate path must have at least one segment")
        for seg in self.segments:
            if not SEGMENT_RE.match(seg):
                raise SchemaError(f"invalid path segment {seg!r}")

    @classmethod
    def parse(cls, text: str) -> "CoordinatePath":
        return cls(tuple(text.strip().split("/")))

    @property
    def dimension(self) -> str:
        return self.segments[0]

    @property
    def level(self) -> int:
        return len(self.segments) - 1

    @property
    def parent(self) -> Optional["CoordinatePath"]:
        if len(self.segments) == 1:
            return None
        return CoordinatePath(self.segments[:-1])

    @property
    def name(self) -> str:
        return self.segments[-1]

    def child(self, name: str) -> "CoordinatePath":
        return CoordinatePath(self.segments + (name,))

    def is_under(self, other: "CoordinatePath") -> bool:
        """Descendant-or-equal test by path prefix."""
        n = len(other.segments)
        return len(self.segments) >= n and self.segments[:n] == other.segments

    def ancestors(self) -> Iterator["CoordinatePath"]:
        """Yield self, parent, ..., root."""
        for n in range(len(self.segments), 0, -1):
            yield CoordinatePath(self.segments[:n])

    def __str__(self) -> str:
        return "/".join(self.segments)

    def __repr__(self) -> str:
        return f"CoordinatePath({str(self)!r})"


PathLike = Union[CoordinatePath, str]


def as_path(p: PathLike) -> CoordinatePath:
    return p if isinstance(p, CoordinatePath) else CoordinatePath.parse(p)


@dataclass(frozen=True)
class Point:
    """One coordinate per dimension, in schema order."""

    coords: Tuple[CoordinatePath, ...]

    @classmethod
    def of(cls, *paths: PathLike) -> "Point":
        return cls(tuple(as_path(p) for p in paths))

    @classmethod
    def parse(cls, text: str) -> "Point":
        text = text.strip()
        if not (text.startswith("<") and text.endswith(">")):
            raise SchemaError(f"malformed point key {text!r}")
        return cls(tuple(CoordinatePath.parse(s) for s in text[1:-1].split(",")))

    @property
    def key(self) -> str:
        return "<" + ", ".join(str(c) for c in self.coords) + ">"

    def __str__(self) -> str:
        return self.key

    def __lt__(self, other: "Point") -> bool:
        return self.key < other.key

    def __getitem__(self, dim: Union[int, str]) -> CoordinatePath:
        if isinstance(dim, int):
            return self.coords[dim]
        for c in self.coords:
            if c.dimension == dim:
                return c
        raise KeyError(dim)

    def __len__(self) -> int:
        return len(self.coords)

    def replace(self, i: int, coord: CoordinatePath) -> "Point":
        cs = list(self.coords)
        cs[i] = coord
        return Point(tuple(cs))


@dataclass(frozen=True)
class Relation:
    name: str
    kind: str
    level: Optional[int] = None

    def __post_init__(self):
        if self.kind not in RELATION_KINDS:
            raise SchemaError(f"unknown relation kind {self.kind!r}")
        if self.kind == LEVEL_ORDER and self.level is None:
            raise SchemaError(f"level-order relation {self.name!r} needs a level")


@dataclass(frozen=True)
class Range:
    """Range on one dimension; ``lower=None`` means the whole subtree under ``upper``."""

    dimension: str
    lower: Optional[CoordinatePath]
    upper: CoordinatePath
    relation: str

    @classmethod
    def of(cls, lower: Optional[PathLike], upper: PathLike, relation: str) -> "Range":
        up = as_path(upper)
        return cls(up.dimension, None if lower is None else as_path(lower), up, relation)


class Dimension:
    """A coordinate tree with its declared relations.

    Immutable after construction; coordinates are kept in preorder with
    children in declaration order.
    """

    def __init__(
        self,
        name: str,
        coordinates: Iterable[PathLike] = (),
        relations: Iterable[Relation] = (),
        order: Optional[Mapping[PathLike, int]] = None,
    ):
        if not SEGMENT_RE.match(name):
            raise SchemaError(f"invalid dimension name {name!r}")
        self.name = name
        self.root = CoordinatePath((name,))
        self._children: Dict[CoordinatePath, List[CoordinatePath]] = {self.root: []}
        for raw in coordinates:
            c = as_path(raw)
            if c == self.root:
                continue
            if c.dimension != name:
                raise SchemaError(f"coordinate {c} does not belong to dimension {name}")
            if c in self._children:
                raise SchemaError(f"duplicate coordinate path {c}")
            parent = c.parent
            if parent not in self._children:
                raise SchemaError(f"coordinate {c} declared before its parent")
            self._children[parent].append(c)
            self._children[c] = []
        self._order: Dict[CoordinatePath, int] = {as_path(k): int(v) for k, v in (order or {}).items()}
        for c in self._order:
            if c not in self._children:
                raise PathError(f"order given for unknown coordinate {c}")
        self.relations: Dict[str, Relation] = {}
        for rel in relations:
            if rel.name in self.relations:
                raise SchemaError(f"duplicate relation {rel.name!r} on dimension {name}")
            self.relations[rel.name] = rel
        self._preorder: List[CoordinatePath] = []
        stack = [self.root]
        while stack:
            c = stack.pop()
            self._preorder.append(c)
            stack.extend(reversed(self._children[c]))
        self.max_level = max(c.level for c in self._preorder)
        self._check_level_orders()

    def _check_level_orders(self) -> None:
        for rel in self.relations.values():
            if rel.kind != LEVEL_ORDER:
                continue
            for parent, kids in self._children.items():
                if not kids or kids[0].level != rel.level:
                    continue
                missing = [k for k in kids if k not in self._order]
                if missing:
                    raise SchemaError(
                        f"level-order relation {rel.name!r} needs order attributes on {missing[0]}")
                values = [self._order[k] for k in kids]
                if len(set(values)) != len(values):
                    raise SchemaError(f"siblings under {parent} share an order value")

    # -- tree navigation ---------------------------------------------------

    def __contains__(self, c: object) -> bool:
        return c in self._children

    def __len__(self) -> int:
        return len(self._preorder)

    def require(self, c: PathLike) -> CoordinatePath:
        c = as_path(c)
        if c not in self._children:
            raise PathError(f"path {c} not in dimension {self.name}")
        return c

    @property
    def coordinates(self) -> List[CoordinatePath]:
        return list(self._preorder)

    def children(self, c: CoordinatePath) -> List[CoordinatePath]:
        return list(self._children[self.require(c)])

    def parent(self, c: CoordinatePath) -> Optional[CoordinatePath]:
        return self.require(c).parent

    def subtree(self, c: CoordinatePath) -> List[CoordinatePath]:
        """Preorder listing of ``c`` and all its descendants."""
        out, stack = [], [self.require(c)]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(reversed(self._children[x]))
        return out

    def leaves(self) -> List[CoordinatePath]:
        return [c for c in self._preorder if not self._children[c]]

    def order_of(self, c: CoordinatePath) -> Optional[int]:
        return self._order.get(c)

    def level_of(self, c: PathLike) -> int:
        return self.require(c).level

    def ordered_siblings(self, c: PathLike) -> List[CoordinatePath]:
        """Same-parent coordinates of ``c`` (including ``c``) in sibling order."""
        c = self.require(c)
        if c.parent is None:
            return [c]
        return self.sort_siblings(self._children[c.parent])

    def sort_siblings(self, kids: Sequence[CoordinatePath]) -> List[CoordinatePath]:
        if kids and self.level_order_at(kids[0].level) is not None:
            return sorted(kids, key=lambda k: self._order[k])
        return sorted(kids)

    def level_order_at(self, level: int) -> Optional[Relation]:
        for rel in self.relations.values():
            if rel.kind == LEVEL_ORDER and rel.level == level:
                return rel
        return None

    def relation(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise SchemaError(f"unknown relation {name!r} on dimension {self.name}") from None

    @property
    def hierarchical_relation(self) -> str:
        for rel in self.relations.values():
            if rel.kind == HIERARCHICAL:
                return rel.name
        return "subclass"

    def structure(self):
        """Comparable snapshot used for structural equality."""
        return (
            self.name,
            tuple((str(c), tuple(str(k) for k in self._children[c])) for c in self._preorder),
            tuple(sorted((str(k), v) for k, v in self._order.items())),
            tuple(sorted((r.name, r.kind, r.level) for r in self.relations.values())),
        )

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dimension) and self.structure() == other.structure()

    def __hash__(self) -> int:
        return hash(self.structure())

    def __repr__(self) -> str:
        return f"Dimension({self.name!r}, {len(self)} coordinates)"


class ResourceSpace:
    def __init__(self, name: str, dimensions: Sequence[Dimension]):
        names = [d.name for d in dimensions]
        if len(set(names)) != len(names):
            raise SchemaError("dimension names must be unique")
        if not dimensions:
            raise SchemaError("a resource space needs at least one dimension")
        self.name = name
        self.dimensions: Tuple[Dimension, ...] = tuple(dimensions)
        self._by_name = {d.name: d for d in dimensions}
        self._pos = {d.name: i for i, d in enumerate(dimensions)}

    @property
    def names(self) -> List[str]:
        return [d.name for d in self.dimensions]

    def dim(self, name: Union[str, int]) -> Dimension:
        if isinstance(name, int):
            return self.dimensions[name]
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"unknown dimension {name!r}") from None

    def index_of(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise SchemaError(f"unknown dimension {name!r}") from None

    def __len__(self) -> int:
        return len(self.dimensions)

    def point(self, coords: Union[Mapping[str, PathLike], Iterable[PathLike]]) -> Point:
        """Build and validate a point from a dimension map or an ordered sequence."""
        if isinstance(coords, Mapping):
            if set(coords) != set(self._by_name):
                raise SchemaError(f"point must cover dimensions {self.names}")
            p = Point(tuple(as_path(coords[n]) for n in self.names))
        else:
            p = Point(tuple(as_path(c) for c in coords))
        self.validate_point(p)
        return p

    def validate_point(self, p: Point) -> None:
        if len(p.coords) != len(self.dimensions):
            raise SchemaError(f"point {p} has {len(p.coords)} coordinates, space has {len(self)}")
        for c, d in zip(p.coords, self.dimensions):
            if c.dimension != d.name:
                raise SchemaError(f"point {p}: expected dimension {d.name} got {c.dimension}")
            d.require(c)

    def structure(self):
        return (self.name, tuple(d.structure() for d in self.dimensions))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ResourceSpace) and self.structure() == other.structure()

    def __hash__(self) -> int:
        return hash(self.structure())

    def __repr__(self) -> str:
        return f"ResourceSpace({self.name!r}, dims={self.names})"


class ReachabilityMatrix:
    """Transitive closure of descendant-or-equal over one dimension.

    Each row is an integer bitset of the ancestors-or-self of a coordinate, so
    a descendant test is one shift-and-mask.
    """

    def __init__(self, dimension: str, coords: Sequence[CoordinatePath], rows: Sequence[int]):
        self.dimension = dimension
        self.coords = list(coords)
        self._index = {c: i for i, c in enumerate(self.coords)}
        self._rows = list(rows)

    def __len__(self) -> int:
        return len(self.coords)

    def closure(self, a: PathLike, b: PathLike) -> bool:
        """True iff ``a`` is a descendant-or-equal of ``b``."""
        try:
            ia, ib = self._index[as_path(a)], self._index[as_path(b)]
        except KeyError as e:
            raise PathError(f"path {e.args[0]} not in dimension {self.dimension}") from None
        return (self._rows[ia] >> ib) & 1 == 1

    def mask(self, coords: Iterable[PathLike]) -> int:
        """Bitset of the given coordinates."""
        m = 0
        for c in coords:
            m |= 1 << self._index[as_path(c)]
        return m

    def ancestors_in(self, a: PathLike, mask: int) -> List[CoordinatePath]:
        """Ancestors-or-self of ``a`` whose bit is set in ``mask``."""
        bits = self._rows[self._index[as_path(a)]] & mask
        out = []
        while bits:
            low = bits & -bits
            out.append(self.coords[low.bit_length() - 1])
            bits ^= low
        return out

    def to_dense(self):
        import numpy as np

        n = len(self.coords)
        m = np.zeros((n, n), dtype=bool)
        for i, row in enumerate(self._rows):
            for j in range(n):
                m[i, j] = (row >> j) & 1
        return m


def build_reachability(dim: Dimension) -> ReachabilityMatrix:
    coords = dim.coordinates
    index = {c: i for i, c in enumerate(coords)}
    rows = [0] * len(coords)
    for c in coords:  # preorder: parents come first
        i = index[c]
        rows[i] = 1 << i
        if c.parent is not None:
            rows[i] |= rows[index[c.parent]]
    return ReachabilityMatrix(dim.name, coords, rows)


def is_descendant(dim: Dimension, a: PathLike, b: PathLike) -> bool:
    a, b = dim.require(a), dim.require(b)
    return a.is_under(b)


def level_of(dim: Dimension, c: PathLike) -> int:
    return dim.level_of(c)


def ordered_siblings(dim: Dimension, c: PathLike) -> List[CoordinatePath]:
    return dim.ordered_siblings(c)


def point_subsumes(space: ResourceSpace, s: Point, p: Point) -> bool:
    """True iff ``s`` lies under ``p`` on every dimension."""
    space.validate_point(s)
    space.validate_point(p)
    return all(a.is_under(b) for a, b in zip(s.coords, p.coords))


def resolve_range(dim: Dimension, r: Range) -> List[CoordinatePath]:
    if r.dimension != dim.name:
        raise RangeError(f"range on {r.dimension} applied to dimension {dim.name}")
    rel = dim.relation(r.relation)
    upper = dim.require(r.upper)
    lower = None if r.lower is None else dim.require(r.lower)
    if rel.kind == HIERARCHICAL:
        if lower is None:
            return sorted(dim.subtree(upper))
        if not lower.is_under(upper):
            raise RangeError(f"lower bound {lower} is not under upper bound {upper}")
        return sorted(c for c in lower.ancestors() if c.is_under(upper))
    # level-order: same-parent siblings between the bounds
    if upper.level != rel.level or (lower is not None and lower.level != rel.level):
        raise RangeError(f"bounds of {rel.name!r} must lie at level {rel.level}")
    if lower is not None and lower.parent != upper.parent:
        raise RangeError(f"level-order bounds {lower} and {upper} are not siblings")
    hi = dim.order_of(upper)
    lo = dim.order_of(lower) if lower is not None else None
    if lo is not None and lo > hi:
        raise RangeError(f"lower bound {lower} is after upper bound {upper}")
    sibs = dim.ordered_siblings(upper)
    return sorted(c for c in sibs if (lo is None or dim.order_of(c) >= lo) and dim.order_of(c) <= hi)


def resolve_ranges(dim: Dimension, ranges: Iterable[Range]) -> List[CoordinatePath]:
    """Union of several ranges on one dimension, sorted."""
    out = set()
    for r in ranges:
        out.update(resolve_range(dim, r))
    return sorted(out)


# -- tree notation -----------------------------------------------------------

_TREE_TOKEN = re.compile(r"\s*([A-Za-z0-9_]+|[(),])")


def dimension_from_notation(
    text: str,
    relations: Iterable[Relation] = (),
    ordered: bool = False,
) -> Dimension:
    """Build a dimension from nested notation such as ``topic(CS(AI, DB(INDEX)))``.

    With ``ordered=True`` every coordinate gets its sibling position as order value.
    """
    toks = []
    pos = 0
    while pos < len(text):
        m = _TREE_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise SchemaError(f"bad tree notation near {text[pos:pos + 10]!r}")
        toks.append(m.group(1))
        pos = m.end()
    coords: List[CoordinatePath] = []
    order: Dict[CoordinatePath, int] = {}
    i = 0

    def node(prefix: Tuple[str, ...], position: int) -> None:
        nonlocal i
        name = toks[i]
        i += 1
        path = CoordinatePath(prefix + (name,))
        coords.append(path)
        order[path] = position
        if i < len(toks) and toks[i] == "(":
            i += 1
            k = 0
            while True:
                node(path.segments, k)
                k += 1
                if toks[i] == ",":
                    i += 1
                    continue
                if toks[i] == ")":
                    i += 1
                    break
                raise SchemaError(f"unexpected {toks[i]!r} in tree notation")

    node((), 0)
    if i != len(toks):
        raise SchemaError("trailing tokens in tree notation")
    root = coords[0]
    order.pop(root)
    return Dimension(root.name, coords[1:], relations, order if ordered else None)


# -- XML schema --------------------------------------------------------------


def parse_space_xml(text: Union[str, bytes]) -> ResourceSpace:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise SchemaError(f"malformed schema document: {e}") from None
    if root.tag != "ResourceSpace" or "name" not in root.attrib:
        raise SchemaError("schema root must be <ResourceSpace name=...>")
    dims = []
    for del_ in root:
        if del_.tag != "Dimension":
            raise SchemaError(f"unexpected element <{del_.tag}> under ResourceSpace")
        name = del_.get("name")
        if not name:
            raise SchemaError("Dimension element without name")
        rels, coords, order = [], [], {}
        root_path = CoordinatePath((name,))

        def walk(el, parent: CoordinatePath):
            for ch in el:
                if ch.tag == "Relation" and el is del_:
                    level = ch.get("level")
                    rels.append(Relation(ch.get("name", ""), ch.get("kind", HIERARCHICAL),
                                         None if level is None else int(level)))
                elif ch.tag == "Coordinate":
                    cname = ch.get("name")
                    if not cname:
                        raise SchemaError(f"Coordinate without name under {parent}")
                    path = parent.child(cname)
                    coords.append(path)
                    if ch.get("order") is not None:
                        try:
                            order[path] = int(ch.get("order"))
                        except ValueError:
                            raise SchemaError(f"non-integer order on {path}") from None
                    walk(ch, path)
                else:
                    raise SchemaError(f"unexpected element <{ch.tag}> under {parent}")

        walk(del_, root_path)
        if len(set(coords)) != len(coords):
            seen = set()
            dup = next(c for c in coords if c in seen or seen.add(c))
            raise SchemaError(f"duplicate coordinate path {dup}")
        dims.append(Dimension(name, coords, rels, order))
    return ResourceSpace(root.get("name"), dims)


def space_to_xml(space: ResourceSpace) -> str:
    root = ET.Element("ResourceSpace", name=space.name)
    for d in space.dimensions:
        de = ET.SubElement(root, "Dimension", name=d.name)
        for rel in d.relations.values():
            attrs = {"name": rel.name, "kind": rel.kind}
            if rel.level is not None:
                attrs["level"] = str(rel.level)
            ET.SubElement(de, "Relation", attrs)

        def emit(parent_el, c: CoordinatePath):
            for k in d.children(c):
                attrs = {"name": k.name}
                if d.order_of(k) is not None:
                    attrs["order"] = str(d.order_of(k))
                emit(ET.SubElement(parent_el, "Coordinate", attrs), k)

        emit(de, d.root)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"
