"""Synthetic spaces, corpora and query workloads.

Trees are grown breadth first with a wide first level and a quickly shrinking
chance of further expansion, which gives the wide-and-shallow shape of a
subject classification.  Everything is driven by one numpy generator so a
config plus seed always produces the same documents.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..space import (
    HIERARCHICAL,
    LEVEL_ORDER,
    CoordinatePath,
    Dimension,
    Relation,
    ResourceSpace,
)
from ..store import Resource


@dataclass
class DimConfig:
    name: str
    max_depth: int = 4
    fanout: Tuple[int, int] = (2, 6)
    top_fanout: Optional[Tuple[int, int]] = None
    expand_decay: float = 0.6  # chance of expanding a node at depth d is decay ** d
    level_order: bool = False
    level_names: Tuple[str, ...] = ()  # relation name per level, default seq<level>
    max_nodes: int = 250
    anchors: Tuple[str, ...] = ()  # paths that must exist (grown first)

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.fanout[0] < 1 or self.fanout[0] > self.fanout[1]:
            raise ValueError(f"bad fanout range {self.fanout}")


@dataclass
class GenConfig:
    dimensions: List[DimConfig] = field(default_factory=lambda: survey_dims())
    resources: int = 1000
    seed: int = 0
    citation_mu: float = 2.5
    citation_sigma: float = 1.2
    space_name: str = "RS"

    def __post_init__(self):
        if self.resources < 0:
            raise ValueError("resource count must be non-negative")


def survey_dims() -> List[DimConfig]:
    """A CCS-like topic tree with a database area, and a calendar of years and months."""
    return [
        DimConfig("topic", max_depth=4, fanout=(2, 6), top_fanout=(8, 12), max_nodes=260,
                  anchors=("topic/CS/DB", "topic/CS/AI")),
        DimConfig("date", max_depth=2, fanout=(12, 12), top_fanout=(10, 10), expand_decay=1.0,
                  level_order=True, level_names=("year", "month"), max_nodes=200),
    ]


def _child_name(dim: DimConfig, parent: CoordinatePath, k: int) -> str:
    if dim.level_names[:1] == ("year",):
        if parent.level == 0:
            return str(2015 + k)
        return f"{k + 1:02d}"
    return f"{dim.name[0].upper()}{k}"


def generate_dimension(cfg: DimConfig, rng: np.random.Generator) -> Dimension:
    root = CoordinatePath((cfg.name,))
    kids: Dict[CoordinatePath, List[CoordinatePath]] = {root: []}
    order: List[CoordinatePath] = []

    def add(c: CoordinatePath) -> None:
        if c in kids:
            return
        add(c.parent)
        kids[c] = []
        kids[c.parent].append(c)
        order.append(c)

    for a in cfg.anchors:
        add(CoordinatePath.parse(a))
    frontier = deque([root])
    while frontier and len(kids) < cfg.max_nodes:
        c = frontier.popleft()
        depth = c.level
        if depth >= cfg.max_depth:
            continue
        if depth > 0 and rng.random() >= cfg.expand_decay ** depth:
            frontier.extend(kids[c])
            continue
        lo, hi = cfg.top_fanout if depth == 0 and cfg.top_fanout else cfg.fanout
        want = int(rng.integers(lo, hi + 1))
        k = 0
        while len(kids[c]) < want and len(kids) < cfg.max_nodes:
            name = _child_name(cfg, c, k)
            k += 1
            if c.child(name) not in kids:
                add(c.child(name))
        frontier.extend(kids[c])
    relations = [Relation("subclass", HIERARCHICAL)]
    if cfg.level_order:
        depth = max(c.level for c in kids)
        for lv in range(1, depth + 1):
            name = cfg.level_names[lv - 1] if lv - 1 < len(cfg.level_names) else f"seq{lv}"
            relations.append(Relation(name, LEVEL_ORDER, lv))
    positions = {}
    if cfg.level_order:
        for parent, cs in kids.items():
            for n, c in enumerate(cs):
                positions[c] = n
    return Dimension(cfg.name, order, relations, positions)


def generate_space(cfg: GenConfig, rng: Optional[np.random.Generator] = None) -> ResourceSpace:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    return ResourceSpace(cfg.space_name, [generate_dimension(d, rng) for d in cfg.dimensions])


def generate_corpus(space: ResourceSpace, cfg: GenConfig, rng: np.random.Generator) -> List[Resource]:
    """Resources at a uniformly drawn level, then a uniform coordinate of that level."""
    levels = []
    for d in space.dimensions:
        by_level: Dict[int, List[CoordinatePath]] = {}
        for c in d.coordinates:
            if c.level > 0:
                by_level.setdefault(c.level, []).append(c)
        levels.append([by_level[k] for k in sorted(by_level)] or [[d.root]])
    out = []
    for i in range(cfg.resources):
        coords = []
        for per_level in levels:
            cs = per_level[int(rng.integers(len(per_level)))]
            coords.append(cs[int(rng.integers(len(cs)))])
        cites = int(rng.lognormal(cfg.citation_mu, cfg.citation_sigma))
        out.append(Resource(f"r{i:06d}", space.point(tuple(coords)),
                            {"paper_title": f"Paper {i}", "paper_citation_count": cites}))
    return out


def generate(cfg: GenConfig) -> Tuple[ResourceSpace, List[Resource]]:
    rng = np.random.default_rng(cfg.seed)
    space = generate_space(cfg, rng)
    return space, generate_corpus(space, cfg, rng)


# -- workloads -----------------------------------------------------------------------


def random_dimspec(d: Dimension, rng: np.random.Generator, agg: bool) -> str:
    """One dimension clause holding a subtree, chain or level-order range."""
    coords = d.coordinates
    c = coords[int(rng.integers(len(coords)))]
    u = rng.random()
    ordered = [lv for lv in range(1, d.max_level + 1) if d.level_order_at(lv) is not None]
    if u < 0.2 and ordered:
        lv = ordered[int(rng.integers(len(ordered)))]
        at = [x for x in coords if x.level == lv]
        x = at[int(rng.integers(len(at)))]
        sibs = d.ordered_siblings(x)
        a, b = sorted(int(v) for v in rng.integers(len(sibs), size=2))
        lower = "none" if rng.random() < 0.3 else str(sibs[a])
        rng_txt = f"[{lower}, {str(sibs[b])}]"
        rel = d.level_order_at(lv).name
    elif u < 0.35:
        anc = list(c.ancestors())
        up = anc[int(rng.integers(len(anc)))]
        rng_txt = f"[{str(c)}, {str(up)}]"
        rel = d.hierarchical_relation
    else:
        rng_txt = f"[none, {str(c)}]"
        rel = d.hierarchical_relation
    return f"[dimension={d.name}, range={rng_txt}, rel={rel}, agg={'TRUE' if agg else 'FALSE'}]"


def generate_workload(space: ResourceSpace, n: int, seed: int,
                      points: Sequence = ()) -> List[str]:
    """``n`` random subspace queries; about one in ten is a point query on a stored point."""
    rng = np.random.default_rng(seed)
    points = list(points)
    out = []
    names = ", ".join(space.names)
    for _ in range(n):
        if points and rng.random() < 0.1:
            p = points[int(rng.integers(len(points)))]
            dims = [f"[dimension={d.name}, range=[{c}, {c}], rel={d.hierarchical_relation}, agg=FALSE]"
                    for d, c in zip(space.dimensions, p.coords)]
        else:
            dims = [random_dimspec(d, rng, bool(rng.random() < 0.5)) for d in space.dimensions]
        out.append(f"SELECT {names}, id FROM subspace({', '.join(dims)}) FROM {space.name};")
    return out


SURVEY_QUERY = """SELECT topic, paper_title, paper_citation_count
    FROM top_resource(topk=10, measure=paper_citation_count)
    FROM top_point(topk=10, measure=point_citation_count)
    FROM subspace([dimension=topic, range=[none, topic/CS/DB], rel=subclass, agg=TRUE,
                   point_citation_count=SUM(paper_citation_count)],
                  [dimension=date, range=[date/2020, date/2024], rel=year, agg=FALSE])
    FROM RS;"""
