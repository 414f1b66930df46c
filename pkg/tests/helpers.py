"""Shared fixtures builders and independent oracles for the test suite."""
from __future__ import annotations

from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from rspace import Relation, Resource, ResourceSpace, ResourceStore, dimension_from_notation
from rspace.bench.gen import DimConfig, GenConfig, generate, generate_dimension
from rspace.executor import subspace_spec
from rspace.space import HIERARCHICAL, LEVEL_ORDER, Dimension

SUBCLASS = Relation("subclass", HIERARCHICAL)


def topic_dim() -> Dimension:
    return dimension_from_notation(
        "topic(CS(AI(NLP, ML), DB(MODEL, INDEX, RL)), BIO(GEN, ECO))", [SUBCLASS])


def month_date_dim(years=range(2019, 2025)) -> Dimension:
    months = ", ".join(f"{m:02d}" for m in range(1, 13))
    text = "date(" + ", ".join(f"{y}({months})" for y in years) + ")"
    rels = [SUBCLASS, Relation("year", LEVEL_ORDER, 1), Relation("month", LEVEL_ORDER, 2)]
    return dimension_from_notation(text, rels, ordered=True)


def season_date_dim() -> Dimension:
    def year(y):
        return (f"{y}(Spring(01, 02, 03), Summer(04, 05, 06), "
                f"Autumn(07, 08, 09), Winter(10, 11, 12))")
    rels = [SUBCLASS, Relation("year", LEVEL_ORDER, 1)]
    return dimension_from_notation(f"date({year(2020)}, {year(2021)})", rels, ordered=True)


def survey_space() -> ResourceSpace:
    return ResourceSpace("RS", [topic_dim(), month_date_dim()])


def make_store(space: ResourceSpace, placements: Sequence[Tuple[Sequence[str], Dict]]) -> ResourceStore:
    st = ResourceStore(space)
    for i, (coords, attrs) in enumerate(placements):
        st.put_resource(Resource(f"r{i:04d}", space.point(list(coords)), dict(attrs)))
    return st


def random_store(space: ResourceSpace, n: int, seed: int, attr: str = "c") -> ResourceStore:
    rng = np.random.default_rng(seed)
    st = ResourceStore(space)
    for i in range(n):
        coords = [d.coordinates[int(rng.integers(len(d)))] for d in space.dimensions]
        st.put_resource(Resource(f"r{i:05d}", space.point(coords), {attr: int(rng.integers(0, 50))}))
    return st


def deep_space(seed: int, dims: int = 3, depth: int = 6, fanout: int = 8, max_nodes: int = 300) -> ResourceSpace:
    """Random space of ``dims`` dimensions; the last one carries level-order relations."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(dims):
        cfg = DimConfig(f"d{k}", max_depth=depth, fanout=(1, fanout), expand_decay=0.8,
                        level_order=(k == dims - 1), max_nodes=max_nodes)
        out.append(generate_dimension(cfg, rng))
    return ResourceSpace("RS", out)


def skew_space_store(n=200, heavy=0.9, seed=0):
    """Dims x(h, l) and y(a(..), b(..)); a ``heavy`` share of resources sit under x/h."""
    d1 = dimension_from_notation("x(h, l)", [SUBCLASS])
    d2 = dimension_from_notation("y(a(a1, a2, a3), b(b1, b2))", [SUBCLASS])
    sp = ResourceSpace("S", [d1, d2])
    rng = np.random.default_rng(seed)
    leaves = [c for c in d2.coordinates if c.level == 2]
    placements = []
    for i in range(n):
        x = "x/h" if i < heavy * n else "x/l"
        placements.append(([x, leaves[int(rng.integers(len(leaves)))]], {}))
    return sp, make_store(sp, placements)


def random_range(d: Dimension, rng: np.random.Generator) -> Tuple[Tuple[Optional[str], str], str]:
    """One random range on ``d`` with the relation it is defined on."""
    c = d.coordinates[int(rng.integers(len(d)))]
    u = rng.random()
    if u < 0.5 or c.level == 0:
        return (None, str(c)), d.hierarchical_relation
    rel = d.level_order_at(c.level)
    if u < 0.75 or rel is None:
        anc = list(c.ancestors())
        return (str(c), str(anc[int(rng.integers(len(anc)))])), d.hierarchical_relation
    sibs = d.ordered_siblings(c)
    a, b = sorted(int(x) for x in rng.integers(len(sibs), size=2))
    lower = None if rng.random() < 0.3 else str(sibs[a])
    return (lower, str(sibs[b])), rel.name


def random_spec(space: ResourceSpace, rng: np.random.Generator, p_dim: float = 0.85, p_agg: float = 0.5,
                max_ranges: int = 1):
    ranges, rel, agg = {}, {}, []
    for d in space.dimensions:
        if rng.random() >= p_dim:
            continue
        first, r = random_range(d, rng)
        rs = [first]
        for _ in range(int(rng.integers(1, max_ranges + 1)) - 1):
            nxt, r2 = random_range(d, rng)
            if r2 == r:
                rs.append(nxt)
        ranges[d.name] = rs
        rel[d.name] = r
        if rng.random() < p_agg:
            agg.append(d.name)
    return subspace_spec(space, ranges, agg, rel)


def definition_oracle(space: ResourceSpace, store: ResourceStore, spec) -> List[Tuple[str, Tuple[str, ...]]]:
    """Straight from the definition: enumerate the grid, gather R(p) for each grid point.

    R(p) collects resources at stored points s inside the subspace with s_i under
    p_i on aggregated dimensions and s_i == p_i elsewhere.  Kept deliberately
    naive; only suitable for small instances.
    """
    from rspace.space import Range, resolve_range

    grids, aggs = [], []
    for d in space.dimensions:
        ds = spec.dim(d.name)
        if ds is None:
            grids.append(set(d.coordinates))
            aggs.append(False)
            continue
        cells = set()
        for r in ds.ranges:
            cells.update(resolve_range(d, Range.of(r.lower, r.upper, ds.rel)))
        grids.append(cells)
        aggs.append(ds.agg)
    stored = [s for s in store.points() if all(c in g for c, g in zip(s.coords, grids))]
    out = []
    for coords in product(*[sorted(g) for g in grids]):
        ids = set()
        for s in stored:
            ok = True
            for c, p, a in zip(s.coords, coords, aggs):
                if (a and not c.is_under(p)) or (not a and c != p):
                    ok = False
                    break
            if ok:
                ids.update(r.id for r in store.get_by_point(s))
        if ids:
            out.append((space.point(list(coords)).key, tuple(sorted(ids))))
    return sorted(out)


def as_tuples(rs) -> List[Tuple[str, Tuple[str, ...]]]:
    return sorted((p.key, tuple(r.id for r in p.resources)) for p in rs.points)


def survey_corpus(resources: int = 3000, seed: int = 11):
    return generate(GenConfig(resources=resources, seed=seed))


# -- query ASTs ------------------------------------------------------------------------

_RESERVED = {"select", "from", "subspace", "top_point", "top_resource", "union", "none", "true", "false",
             "dimension", "range", "rel", "agg", "topk", "measure"}


def random_ident(rng: np.random.Generator, first: str = "abcdefghijklmnopqrstuvwxyzABCXYZ_") -> str:
    rest = "abcdefghijklmnopqrstuvwxyz0123456789_ABCDEF"
    while True:
        n = int(rng.integers(1, 9))
        s = first[int(rng.integers(len(first)))] + "".join(rest[int(rng.integers(len(rest)))] for _ in range(n - 1))
        if s.lower() not in _RESERVED:
            return s


def random_ast(rng: np.random.Generator):
    """A random well-formed QueryAst; the parser's grammar bounds what can appear."""
    from rspace.querylang import (AGG_FUNCS, DimSpec, QueryAst, RangeExpr, SubspaceSpec, TopPoint,
                                  TopResource, VarDef)
    from rspace.executor import RESOURCE_FUNCS

    used = set()

    def fresh():
        while True:
            s = random_ident(rng)
            if s not in used:
                used.add(s)
                return s

    def path(root):
        segs = [root] + [random_ident(rng, "abcXYZ0123456789_") for _ in range(int(rng.integers(0, 4)))]
        return "/".join(segs)

    dims = []
    for _ in range(int(rng.integers(1, 4))):
        name = fresh()
        ranges = tuple(RangeExpr(None if rng.random() < 0.4 else path(name), path(name))
                       for _ in range(int(rng.integers(1, 4))))
        pv = tuple(VarDef(fresh(), AGG_FUNCS[int(rng.integers(len(AGG_FUNCS)))], random_ident(rng))
                   for _ in range(int(rng.integers(0, 3))))
        rv = tuple(VarDef(fresh(), RESOURCE_FUNCS[int(rng.integers(len(RESOURCE_FUNCS)))], random_ident(rng))
                   for _ in range(int(rng.integers(0, 2))))
        dims.append(DimSpec(name, ranges, random_ident(rng), bool(rng.random() < 0.5), pv, rv))
    pipeline = []
    if rng.random() < 0.5:
        pipeline.append(TopResource(int(rng.integers(1, 1000)), random_ident(rng)))
    if rng.random() < 0.5:
        pipeline.append(TopPoint(int(rng.integers(1, 1000)), random_ident(rng)))
    pipeline.append(SubspaceSpec(tuple(dims)))
    select = tuple(random_ident(rng) for _ in range(int(rng.integers(1, 5))))
    return QueryAst(select, tuple(pipeline), random_ident(rng))
