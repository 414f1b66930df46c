"""Subspace aggregation query execution.

Every engine first finds Q, the stored points whose coordinates all lie in
the resolved ranges C_i, then aggregates: a stored point s contributes its
resources to every grid point p with p_i an ancestor-or-self of s_i inside C_i
on aggregated dimensions and p_i = s_i elsewhere.  Points whose aggregated
resource set is empty never appear.

Engines differ only in how Q is found and in the comparisons they spend:

* ``scan`` tests every resource against every range (the reference oracle);
* ``inverted`` unions coordinate postings per dimension and intersects them;
* ``basic`` descends a coordinate-tree index and inspects the points of the
  cheapest dimension;
* ``graph`` additionally uses intersection nodes, split buckets and shortcut
  links to skip candidates.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ExecutionError, IndexMismatchError, QuerySemanticError
from .index import (
    INCLUSION,
    POINT,
    SHORTCUT,
    GraphIndex,
    is_bucket,
    locate_point,
    pair_id,
)
from .querylang import AGG_FUNCS, DimSpec, QueryAst, SubspaceSpec, TopSpec
from .space import HIERARCHICAL, CoordinatePath, Dimension, Point, Range, ResourceSpace, build_reachability, resolve_range
from .store import Resource, ResourceStore

ENGINES = ("scan", "inverted", "basic", "graph")


@dataclass
class ExecMetrics:
    comparisons: int = 0
    nodes_visited: int = 0
    intersections_computed: int = 0
    candidates_inspected: int = 0

    def inspect(self, n: int = 1) -> None:
        self.comparisons += n
        self.candidates_inspected += n


@dataclass
class ResultPoint:
    point: Point
    resources: List[Resource]
    point_vars: Dict[str, Optional[float]] = field(default_factory=dict)
    resource_vars: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)

    @property
    def key(self) -> str:
        return self.point.key

    def signature(self):
        """Comparable summary: point key, resource ids and all variable values."""
        return (
            self.point.key,
            tuple(r.id for r in self.resources),
            tuple(sorted(self.point_vars.items())),
            tuple(sorted((rid, tuple(sorted(v.items()))) for rid, v in self.resource_vars.items())),
        )


@dataclass
class ResultSet:
    points: List[ResultPoint]
    metrics: ExecMetrics = field(default_factory=ExecMetrics)

    def __len__(self) -> int:
        return len(self.points)

    def keys(self) -> List[str]:
        return [p.key for p in self.points]

    def signature(self):
        return tuple(p.signature() for p in self.points)


@dataclass(frozen=True)
class DimPlan:
    index: int
    dim: Dimension
    ranges: Tuple[Range, ...]
    agg: bool


# -- spec handling ---------------------------------------------------------------------


def plan_subspace(space: ResourceSpace, spec: SubspaceSpec) -> List[DimPlan]:
    """Per-dimension ranges; dimensions the query leaves out get their whole tree, unaggregated."""
    plans = []
    for i, d in enumerate(space.dimensions):
        ds = spec.dim(d.name)
        if ds is None:
            plans.append(DimPlan(i, d, (Range(d.name, None, d.root, d.hierarchical_relation),), False))
            continue
        if ds.rel not in d.relations:
            raise ExecutionError(f"dimension {d.name} has no relation {ds.rel!r}")
        ranges = []
        for r in ds.ranges:
            try:
                up = d.require(r.upper)
                lo = None if r.lower is None else d.require(r.lower)
            except Exception as e:
                raise ExecutionError(str(e)) from None
            ranges.append(Range(d.name, lo, up, ds.rel))
        plans.append(DimPlan(i, d, tuple(ranges), ds.agg))
    for ds in spec.dims:
        if ds.dimension not in space.names:
            raise ExecutionError(f"unknown dimension {ds.dimension!r}")
    return plans


def subspace_spec(space: ResourceSpace, ranges: Dict[str, Sequence[Tuple[Optional[str], str]]],
                  agg: Iterable[str] = (), rel: Optional[Dict[str, str]] = None) -> SubspaceSpec:
    """Convenience builder: ``{"topic": [(None, "topic/CS")]}`` style ranges."""
    from .querylang import RangeExpr

    rel = rel or {}
    agg = set(agg)
    dims = []
    for name, rs in ranges.items():
        d = space.dim(name)
        dims.append(DimSpec(name, tuple(RangeExpr(lo, up) for lo, up in rs),
                            rel.get(name, d.hierarchical_relation), name in agg))
    return SubspaceSpec(tuple(dims))


def _resolved(plan: DimPlan) -> List[CoordinatePath]:
    out: Set[CoordinatePath] = set()
    for r in plan.ranges:
        out.update(resolve_range(plan.dim, r))
    return sorted(out)


# -- aggregation -----------------------------------------------------------------------


def _aggregate(store: ResourceStore, plans: List[DimPlan], candidates: Iterable[Point],
               in_range: List[Set[CoordinatePath]]) -> List[ResultPoint]:
    buckets: Dict[Point, Dict[str, Resource]] = {}
    for s in candidates:
        per_dim = []
        for plan, c in zip(plans, s.coords):
            if plan.agg:
                per_dim.append([a for a in c.ancestors() if a in in_range[plan.index]])
            else:
                per_dim.append([c])
        res = store.get_by_point(s)
        for coords in product(*per_dim):
            tgt = buckets.setdefault(Point(coords), {})
            for r in res:
                tgt[r.id] = r
    return _finish(buckets)


def _finish(buckets: Dict[Point, Dict[str, Resource]]) -> List[ResultPoint]:
    out = []
    for p in sorted(buckets, key=lambda p: p.key):
        rs = buckets[p]
        if rs:
            out.append(ResultPoint(p, [rs[k] for k in sorted(rs)]))
    return out


# -- scan oracle -----------------------------------------------------------------------


def exec_bruteforce(space: ResourceSpace, store: ResourceStore, spec: SubspaceSpec) -> ResultSet:
    """Reference evaluation straight from the definition, scanning every resource."""
    m = ExecMetrics()
    plans = plan_subspace(space, spec)
    resolved = [_resolved(p) for p in plans]
    sets = [set(r) for r in resolved]
    reach = [build_reachability(p.dim) for p in plans]
    masks = [reach[i].mask(resolved[i]) for i in range(len(plans))]
    buckets: Dict[Point, Dict[str, Resource]] = {}
    receivers: Dict[Point, List[Point]] = {}
    for r in store.resources():
        m.inspect()
        inside = True
        for i, c in enumerate(r.point.coords):
            m.comparisons += 1
            if c not in sets[i]:
                inside = False
                break
        if not inside:
            continue
        s = r.point
        if s not in receivers:
            per_dim = []
            for i, plan in enumerate(plans):
                if plan.agg:
                    per_dim.append(reach[i].ancestors_in(s.coords[i], masks[i]))
                else:
                    per_dim.append([s.coords[i]])
            receivers[s] = [Point(cs) for cs in product(*per_dim)]
        for p in receivers[s]:
            buckets.setdefault(p, {})[r.id] = r
    return ResultSet(_finish(buckets), m)


# -- inverted-index baseline -----------------------------------------------------------


def exec_inverted(space: ResourceSpace, store: ResourceStore, spec: SubspaceSpec) -> ResultSet:
    m = ExecMetrics()
    plans = plan_subspace(space, spec)
    resolved = [_resolved(p) for p in plans]
    postings: List[Set[str]] = []
    for coords in resolved:
        ids: Set[str] = set()
        for c in coords:
            m.nodes_visited += 1
            ids |= store.get_by_coordinate(c)
        postings.append(ids)
    postings.sort(key=len)
    hits = postings[0]
    m.inspect(len(hits))
    for other in postings[1:]:
        m.intersections_computed += 1
        m.comparisons += len(hits)
        hits = {x for x in hits if x in other}
    points = sorted({store.get(x).point for x in hits}, key=lambda p: p.key)
    sets = [set(r) for r in resolved]
    return ResultSet(_aggregate(store, plans, points, sets), m)


# -- index-backed engines --------------------------------------------------------------


class _Located:
    """Materialized in-range coordinates of one dimension, split into closed covers and open nodes."""

    def __init__(self):
        self.members: Set[str] = set()
        self.subtree_roots: Set[str] = set()
        self.closed: Set[str] = set()
        self.cover: Dict[str, str] = {}  # closed coordinate -> its cover root
        self.open: Set[str] = set()
        self.touched: Set[str] = set()  # ancestors-or-self of members

    @property
    def roots(self) -> List[str]:
        return sorted(set(self.cover.values()))


def _descend(index: GraphIndex, c: CoordinatePath, m: ExecMetrics) -> Optional[str]:
    """Walk from the root to ``c`` one child lookup per level; None if a node is missing."""
    segs = c.segments
    cur = segs[0]
    m.nodes_visited += 1
    for k in range(1, len(segs)):
        nxt = cur + "/" + segs[k]
        m.comparisons += 1
        if not index.has_link(cur, nxt, INCLUSION):
            return None
        cur = nxt
        m.nodes_visited += 1
    return cur


def _level_walk(index: GraphIndex, dim: Dimension, r: Range, graph: bool, m: ExecMetrics) -> List[str]:
    resolve_range(dim, r)  # validates the bounds
    upper = r.upper
    parent = _descend(index, upper.parent, m)
    if parent is None:
        return []
    hi = dim.order_of(upper)
    lo = None if r.lower is None else dim.order_of(r.lower)
    if not graph:
        out = []
        for k in index.coord_children(parent):
            m.comparisons += 1
            m.nodes_visited += 1
            o = dim.order_of(index.coord(k))
            if (lo is None or o >= lo) and o <= hi:
                out.append(k)
        return out
    # start at the lower bound (or the first sibling) and follow shortcut successors
    sibs = dim.ordered_siblings(upper)
    start = None
    for c in sibs:
        o = dim.order_of(c)
        if lo is not None and o < lo:
            continue
        m.comparisons += 1
        if o > hi:
            return []
        if index.has_link(parent, str(c), INCLUSION):
            start = str(c)
            break
    if start is None:
        return []
    out = [start]
    cur = start
    while True:
        m.nodes_visited += 1
        o_cur = dim.order_of(index.coord(cur))
        succ = None
        for l in index.links_from(cur, SHORTCUT):
            if dim.order_of(index.coord(l.target)) > o_cur:
                succ = l.target
        if succ is None:
            break
        m.comparisons += 1
        if dim.order_of(index.coord(succ)) > hi:
            break
        out.append(succ)
        cur = succ
    return out


def _locate(index: GraphIndex, plan: DimPlan, graph: bool, m: ExecMetrics) -> _Located:
    loc = _Located()
    dim = plan.dim
    for r in plan.ranges:
        rel = dim.relation(r.relation)
        if rel.kind == HIERARCHICAL and r.lower is None:
            top = _descend(index, r.upper, m)
            if top is None:
                continue
            loc.subtree_roots.add(top)
            stack = [top]
            while stack:
                x = stack.pop()
                m.nodes_visited += 1
                loc.members.add(x)
                stack.extend(index.coord_children(x))
        elif rel.kind == HIERARCHICAL:
            chain = {str(c) for c in resolve_range(dim, r)}
            segs = r.lower.segments
            cur = segs[0]
            if cur in chain:
                loc.members.add(cur)
            for k in range(1, len(segs)):
                nxt = cur + "/" + segs[k]
                m.comparisons += 1
                if not index.has_link(cur, nxt, INCLUSION):
                    break
                cur = nxt
                m.nodes_visited += 1
                if cur in chain:
                    loc.members.add(cur)
        else:
            loc.members.update(_level_walk(index, dim, r, graph and index.shortcuts, m))
    # closed: inside a whole-subtree range, or an index leaf
    for x in loc.members:
        if not index.coord_children(x):
            loc.closed.add(x)
    for top in loc.subtree_roots:
        stack = [top]
        while stack:
            x = stack.pop()
            loc.closed.add(x)
            stack.extend(index.coord_children(x))
    for x in sorted(loc.closed, key=lambda s: s.count("/")):
        parent = index.coord(x).parent
        p = None if parent is None else str(parent)
        loc.cover[x] = loc.cover[p] if p in loc.closed else x
    loc.open = loc.members - loc.closed
    for x in loc.members:
        for a in index.coord(x).ancestors():
            loc.touched.add(str(a))
    return loc


def _point_query(plans: List[DimPlan]) -> bool:
    for p in plans:
        if len(p.ranges) != 1:
            return False
        r = p.ranges[0]
        if p.dim.relation(r.relation).kind != HIERARCHICAL or r.lower != r.upper:
            return False
    return True


class _Collector:
    def __init__(self, index: GraphIndex, locs: List[_Located], m: ExecMetrics):
        self.index = index
        self.locs = locs
        self.m = m
        self.found: Set[str] = set()

    def test(self, pid: str, dims: Iterable[int]) -> bool:
        p = self.index.point(pid)
        for k in dims:
            self.m.comparisons += 1
            if str(p.coords[k]) not in self.locs[k].members:
                return False
        return True

    def take(self, pid: str, dims: Sequence[int]) -> None:
        self.m.inspect()
        if self.test(pid, dims):
            self.found.add(pid)

    def bucket_status(self, bid: str) -> Tuple[str, int]:
        """'skip', 'closed' or 'partial' for a split bucket, plus its dimension."""
        self.m.comparisons += 1
        x = bid.split("|", 1)[1]
        k = self.index.space.index_of(x.split("/", 1)[0])
        loc = self.locs[k]
        if x in loc.closed:
            return "closed", k
        if x not in loc.touched and not any(str(a) in loc.closed for a in self.index.coord(x).ancestors()):
            return "skip", k
        return "partial", k

    def direct(self, cid: str, dims: Sequence[int], use_buckets: bool) -> None:
        idx = self.index
        for t in idx.inclusion_children(cid):
            node = idx.nodes[t]
            if node.kind == POINT:
                self.take(t, dims)
            elif is_bucket(t):
                if use_buckets:
                    status, k = self.bucket_status(t)
                    if status == "skip":
                        continue
                    rest = [d for d in dims if d != k] if status == "closed" else dims
                else:
                    rest = dims
                self.m.nodes_visited += 1
                for q in idx.direct_points(t):
                    self.take(q, rest)


def _collect_basic(index: GraphIndex, locs: List[_Located], m: ExecMetrics) -> Set[str]:
    n = len(locs)
    i = min(range(n), key=lambda d: (_mass(index, locs[d]), d))
    others = [d for d in range(n) if d != i]
    col = _Collector(index, locs, m)
    for root in locs[i].roots:
        stack = [root]
        while stack:
            x = stack.pop()
            m.nodes_visited += 1
            col.direct(x, others, use_buckets=False)
            stack.extend(index.coord_children(x))
    for o in sorted(locs[i].open):
        m.nodes_visited += 1
        col.direct(o, others, use_buckets=False)
    return col.found


def _mass(index: GraphIndex, loc: _Located) -> int:
    total = sum(index.nodes[k].resource_count for k in loc.roots)
    for o in loc.open:
        total += sum(index.nodes[q].resource_count for q in index.direct_points(o))
        total += sum(index.nodes[b].resource_count for b in index.buckets(o))
    return total


def _collect_graph(index: GraphIndex, locs: List[_Located], m: ExecMetrics) -> Set[str]:
    n = len(locs)
    masses = [_mass(index, l) for l in locs]
    i = min(range(n), key=lambda d: (masses[d], d))
    col = _Collector(index, locs, m)
    others = [d for d in range(n) if d != i]
    partners = [d for d in (i - 1, i + 1) if 0 <= d < n]
    if not partners:
        return _collect_basic(index, locs, m)
    j = min(partners, key=lambda d: (masses[d], d))
    rest = [d for d in others if d != j]
    loc_j = locs[j]
    need_open = bool(loc_j.open)

    def pair(c: str, k: str) -> str:
        return pair_id(c, k) if i < j else pair_id(k, c)

    def collect_closed(c: str, need: List[str]) -> None:
        m.nodes_visited += 1
        remaining = []
        for k in need:
            m.comparisons += 1
            nid = pair(c, k)
            if nid in index.nodes:
                m.intersections_computed += 1
                for q in index.direct_points(nid):
                    col.take(q, rest)
            else:
                remaining.append(k)
        if not remaining and not need_open:
            return
        wanted = set(remaining)

        def partner_ok(q: str) -> bool:
            m.comparisons += 1
            cj = str(index.point(q).coords[j])
            return loc_j.cover.get(cj) in wanted or (need_open and cj in loc_j.open)

        for t in index.inclusion_children(c):
            node = index.nodes[t]
            if node.kind == POINT:
                m.inspect()
                if partner_ok(t) and col.test(t, rest):
                    col.found.add(t)
            elif is_bucket(t):
                status, k = col.bucket_status(t)
                if status == "skip":
                    continue
                dims = [d for d in rest if d != k] if status == "closed" else rest
                m.nodes_visited += 1
                for q in index.direct_points(t):
                    m.inspect()
                    if partner_ok(q) and col.test(q, dims):
                        col.found.add(q)
        for child in index.coord_children(c):
            collect_closed(child, remaining)

    for root in locs[i].roots:
        collect_closed(root, loc_j.roots)
    for o in sorted(locs[i].open):
        m.nodes_visited += 1
        col.direct(o, others, use_buckets=True)
    return col.found


def exec_indexed(index: GraphIndex, store: ResourceStore, spec: SubspaceSpec, engine: str = "graph") -> ResultSet:
    """Index-backed evaluation; ``engine`` is ``graph`` (all index features) or ``basic``."""
    if engine not in ("graph", "basic"):
        raise ExecutionError(f"exec_indexed does not run engine {engine!r}")
    if index.space != store.space:
        raise IndexMismatchError("index and store were built for different schemas")
    m = ExecMetrics()
    plans = plan_subspace(index.space, spec)
    graph = engine == "graph"
    sets = [set(_resolved(p)) for p in plans]
    if graph and _point_query(plans):
        p = Point(tuple(pl.ranges[0].upper for pl in plans))
        pid = locate_point(index, p, m)
        found = [] if pid is None else [p]
        return ResultSet(_aggregate(store, plans, found, sets), m)
    locs = [_locate(index, plan, graph, m) for plan in plans]
    if any(not l.members for l in locs):
        return ResultSet([], m)
    found = _collect_graph(index, locs, m) if graph else _collect_basic(index, locs, m)
    points = [index.point(q) for q in sorted(found)]
    return ResultSet(_aggregate(store, plans, points, sets), m)


def intersect_results(results: Sequence[ResultSet]) -> List[Tuple[str, Tuple[str, ...]]]:
    """Intersection of results as (point, resource-set) tuples; points left empty are dropped."""
    if not results:
        return []
    common: Dict[str, Set[str]] = {p.key: {r.id for r in p.resources} for p in results[0].points}
    for rs in results[1:]:
        here = {p.key: {r.id for r in p.resources} for p in rs.points}
        common = {k: v & here[k] for k, v in common.items() if k in here}
    return sorted((k, tuple(sorted(v))) for k, v in common.items() if v)


# -- variables, ranking, projection ----------------------------------------------------


def _num(v) -> Optional[float]:
    if isinstance(v, bool):
        return float(v)
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return None
    return None


def _resource_func(func: str, value) -> Optional[float]:
    if func == "LEN":
        return None if value is None else len(str(value))
    x = _num(value)
    if x is None:
        return None
    if func == "ABS":
        return abs(x)
    if func == "LOG1P":
        return math.log1p(x) if x > -1 else None
    if func == "NUM":
        return x
    raise ExecutionError(f"unknown function {func!r}")


RESOURCE_FUNCS = ("ABS", "LOG1P", "LEN", "NUM")


def _fold(func: str, values: List[float]) -> Optional[float]:
    if func == "SUM":
        return sum(values)
    if func == "COUNT":
        return len(values)
    if not values:
        return None
    if func == "MAX":
        return max(values)
    if func == "MIN":
        return min(values)
    if func == "AVG":
        return sum(values) / len(values)
    raise ExecutionError(f"unknown aggregate function {func!r}")


def eval_vars(rs: ResultSet, spec: SubspaceSpec) -> ResultSet:
    rvars = spec.resource_vars
    pvars = spec.point_vars
    for v in rvars:
        if v.func not in RESOURCE_FUNCS:
            raise ExecutionError(f"unknown function {v.func!r} for variable {v.name!r}")
    for v in pvars:
        if v.func not in AGG_FUNCS:
            raise ExecutionError(f"unknown aggregate function {v.func!r} for variable {v.name!r}")
    for rp in rs.points:
        rp.resource_vars = {}
        for r in rp.resources:
            rp.resource_vars[r.id] = {v.name: _resource_func(v.func, r.get(v.arg)) for v in rvars}
        rp.point_vars = {}
        for v in pvars:
            vals = []
            for r in rp.resources:
                raw = rp.resource_vars[r.id].get(v.arg) if v.arg in rp.resource_vars[r.id] else r.get(v.arg)
                x = _num(raw)
                if x is not None:
                    vals.append(x)
            rp.point_vars[v.name] = _fold(v.func, vals)
    return rs


def _rank_key(x: Optional[float]) -> float:
    return -math.inf if x is None else float(x)


def top_point(rs: ResultSet, spec: TopSpec) -> ResultSet:
    """Keep the ``topk`` points with the highest measure; ties by point key ascending."""
    def key(rp: ResultPoint):
        return (-_rank_key(rp.point_vars.get(spec.measure)), rp.key)

    kept = sorted(rs.points, key=key)[: spec.topk]
    return ResultSet(kept, rs.metrics)


def _resource_measure(rp: ResultPoint, r: Resource, measure: str):
    rv = rp.resource_vars.get(r.id, {})
    if measure in rv:
        return rv[measure]
    return _num(r.get(measure))


def top_resource(rs: ResultSet, spec: TopSpec) -> ResultSet:
    """Within each point keep the ``topk`` resources by measure; ties by id ascending."""
    for rp in rs.points:
        ranked = sorted(rp.resources, key=lambda r: (-_rank_key(_resource_measure(rp, r, spec.measure)), r.id))
        rp.resources = ranked[: spec.topk]
        rp.resource_vars = {r.id: rp.resource_vars.get(r.id, {}) for r in rp.resources}
    return rs


def project(rs: ResultSet, select: Sequence[str], space: ResourceSpace,
            attributes: Iterable[str] = (), variables: Iterable[str] = ()) -> List[List]:
    """One row per (point, resource); columns follow ``select``."""
    attrs = set(attributes) | set(variables) | {"id"}
    dims = set(space.names)
    pnames: Set[str] = set()
    rnames: Set[str] = set()
    for rp in rs.points:
        pnames.update(rp.point_vars)
        for v in rp.resource_vars.values():
            rnames.update(v)
    for name in select:
        if name not in dims and name not in pnames and name not in rnames and name not in attrs:
            raise ExecutionError(f"unknown output name {name!r}")
    rows = []
    for rp in rs.points:
        for r in rp.resources:
            row = []
            for name in select:
                if name in dims:
                    row.append(str(rp.point[name]))
                elif name in rp.point_vars:
                    row.append(rp.point_vars[name])
                elif name in rp.resource_vars.get(r.id, {}):
                    row.append(rp.resource_vars[r.id][name])
                else:
                    row.append(r.get(name))
            rows.append(row)
    return rows


def _known_names(ast: QueryAst, space: ResourceSpace, store: ResourceStore) -> Set[str]:
    sub = ast.subspace
    return (set(space.names) | {v.name for v in sub.point_vars} | {v.name for v in sub.resource_vars}
            | store.attribute_names | {"id"})


def run(ast: QueryAst, index: Optional[GraphIndex], store: ResourceStore, engine: str = "graph"):
    """Execute a parsed query; returns (header, rows, metrics)."""
    if engine not in ENGINES:
        raise ExecutionError(f"unknown engine {engine!r}")
    space = store.space
    known = _known_names(ast, space, store)
    for name in ast.select:
        if name not in known:
            raise QuerySemanticError(f"unknown output name {name!r}")
    sub = ast.subspace
    if engine == "scan":
        rs = exec_bruteforce(space, store, sub)
    elif engine == "inverted":
        rs = exec_inverted(space, store, sub)
    else:
        if index is None:
            raise ExecutionError(f"engine {engine!r} needs an index")
        rs = exec_indexed(index, store, sub, engine)
    eval_vars(rs, sub)
    tp, tr = ast.top_point, ast.top_resource
    if tp is not None:
        if tp.measure not in {v.name for v in sub.point_vars}:
            raise QuerySemanticError(f"top_point measure {tp.measure!r} is not a point variable")
        rs = top_point(rs, tp)
    if tr is not None:
        if tr.measure not in ({v.name for v in sub.resource_vars} | store.attribute_names | {"id"}):
            raise QuerySemanticError(f"top_resource measure {tr.measure!r} is not a resource attribute or variable")
        rs = top_resource(rs, tr)
    declared = [v.name for v in sub.point_vars + sub.resource_vars]
    rows = project(rs, ast.select, space, store.attribute_names, declared)
    return list(ast.select), rows, rs.metrics


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()
