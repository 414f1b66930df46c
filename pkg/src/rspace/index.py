"""Graph index over a resource space.

Node ids are canonical strings:

* coordinate nodes use the coordinate path (``topic/CS/DB``);
* point nodes use the point key (``<topic/CS/DB, date/2021>``);
* intersection nodes join two coordinates of adjacent dimensions with ``*``
  (``topic/CS*date/2021``) and link every indexed point under both;
* split buckets join a coordinate and a child of the splitting coordinate with
  ``|`` (``topic/CS/DB|date/2021``) and hold the matching direct points of the
  split coordinate.

INCLUSION links form a DAG from each dimension root down to the point nodes;
INTERSECTION links run from a coordinate to an intersection node; SHORTCUT and
ORDER links connect sibling coordinates under a level-order relation.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from collections import Counter, deque
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

import numpy as np

from .errors import IndexMismatchError, StoreError
from .linkstats import (
    BOUNDED,
    FULL_SAMPLE_LIMIT,
    Covariance2,
    LinkPolicy,
    RunningMoments,
    WeightVector,
    covariance_inverse,
    mahalanobis,
    path_samples,
    sample_link,
)
from .space import CoordinatePath, Dimension, Point, ResourceSpace
from .store import Resource, ResourceStore

COORDINATE = "COORDINATE"
POINT = "POINT"
INTERSECTION = "INTERSECTION"
NODE_KINDS = (COORDINATE, POINT, INTERSECTION)

INCLUSION = "INCLUSION"
ORDER = "ORDER"
SHORTCUT = "SHORTCUT"
LINK_KINDS = (INCLUSION, INTERSECTION, ORDER, SHORTCUT)

PAIR_SEP = "*"
BUCKET_SEP = "|"


def pair_id(a: str, b: str) -> str:
    return a + PAIR_SEP + b


def bucket_id(s: str, x: str) -> str:
    return s + BUCKET_SEP + x


def is_bucket(node_id: str) -> bool:
    return BUCKET_SEP in node_id


@dataclass
class IndexNode:
    id: str
    kind: str
    resource_count: int = 0
    split: Optional[str] = None  # splitting coordinate, once a coordinate node has been split


@dataclass(frozen=True)
class IndexLink:
    source: str
    target: str
    kind: str
    weight: Union[int, str]


@dataclass(frozen=True)
class SplitConfig:
    """When to split: ``u>=beta`` (default) or ``u<beta`` for a uniform draw u.

    ``enabled`` only decides whether ``publish`` offers split chances; an
    explicit ``maybe_split`` call always applies the rule.
    """

    enabled: bool = True
    rule: str = "u>=beta"

    def __post_init__(self):
        if self.rule not in ("u>=beta", "u<beta"):
            raise ValueError(f"unknown split rule {self.rule!r}")

    def fires(self, u: float, beta: float) -> bool:
        return u >= beta if self.rule == "u>=beta" else u < beta

    def __str__(self) -> str:
        return self.rule if self.enabled else "off"

    @classmethod
    def parse(cls, text: str) -> "SplitConfig":
        return cls(False) if text == "off" else cls(True, text)


class GraphIndex:
    def __init__(
        self,
        space: ResourceSpace,
        store: ResourceStore,
        policy: Optional[LinkPolicy] = None,
        split_config: Optional[SplitConfig] = None,
        intersections: bool = True,
        shortcuts: bool = True,
    ):
        if store.space != space:
            raise IndexMismatchError("store schema differs from index schema")
        self.space = space
        self.store = store
        self.policy = policy if policy is not None else LinkPolicy(BOUNDED)
        self.split_config = split_config if split_config is not None else SplitConfig()
        self.intersections = intersections
        self.shortcuts = shortcuts
        self.rng = np.random.default_rng(self.policy.rng_seed)
        self.nodes: Dict[str, IndexNode] = {}
        self.out_links: Dict[str, Dict[Tuple[str, str], IndexLink]] = {}
        self.in_links: Dict[str, Set[Tuple[str, str]]] = {}
        self.roots = [str(d.root) for d in space.dimensions]
        self.splits_performed = 0
        self._coord: Dict[str, CoordinatePath] = {}
        self._points: Dict[str, Point] = {}
        self._under: Dict[str, Set[str]] = {}
        self._resources: Set[str] = set()
        self._moments = [RunningMoments(d) for d in space.dimensions]
        self._cov_cache: Dict[Tuple[int, int], Tuple[int, Covariance2]] = {}
        self._version = 0
        for d in space.dimensions:
            self._ensure_coord(d.root)

    @property
    def features(self) -> str:
        return "graph" if self.intersections or self.shortcuts else "basic"

    @property
    def seed(self) -> int:
        return self.policy.rng_seed

    # -- low-level node/link plumbing ----------------------------------------

    def _add_node(self, nid: str, kind: str) -> IndexNode:
        node = IndexNode(nid, kind)
        self.nodes[nid] = node
        self.out_links[nid] = {}
        self.in_links[nid] = set()
        return node

    def link(self, src: str, dst: str, kind: str, weight=None) -> None:
        if (dst, kind) in self.out_links[src]:
            return
        if weight is None:
            weight = self.nodes[dst].resource_count
        self.out_links[src][(dst, kind)] = IndexLink(src, dst, kind, weight)
        self.in_links[dst].add((src, kind))

    def unlink(self, src: str, dst: str, kind: str) -> None:
        self.out_links[src].pop((dst, kind), None)
        self.in_links[dst].discard((src, kind))

    def has_link(self, src: str, dst: str, kind: str) -> bool:
        return (dst, kind) in self.out_links.get(src, ())

    def links_from(self, nid: str, kind: Optional[str] = None) -> List[IndexLink]:
        return [l for l in self.out_links.get(nid, {}).values() if kind is None or l.kind == kind]

    def links(self) -> Iterable[IndexLink]:
        for out in self.out_links.values():
            yield from out.values()

    def _ensure_coord(self, c: CoordinatePath) -> bool:
        """Materialize ``c`` and its ancestors; returns True if ``c`` was new."""
        cid = str(c)
        if cid in self.nodes:
            return False
        if c.parent is not None:
            self._ensure_coord(c.parent)
        self._add_node(cid, COORDINATE)
        self._coord[cid] = c
        self._under[cid] = set()
        if c.parent is not None:
            self.link(str(c.parent), cid, INCLUSION)
        return True

    # -- views used by builders and executors --------------------------------

    def coord(self, cid: str) -> CoordinatePath:
        return self._coord[cid]

    def point(self, pid: str) -> Point:
        return self._points[pid]

    def point_ids(self) -> List[str]:
        return sorted(self._points)

    def count_under(self, dim: Union[Dimension, str], c) -> int:
        node = self.nodes.get(str(c))
        return node.resource_count if node is not None else 0

    def coord_children(self, cid: str) -> List[str]:
        return [t for (t, k) in self.out_links[cid] if k == INCLUSION and self.nodes[t].kind == COORDINATE]

    def inclusion_children(self, nid: str) -> List[str]:
        return [t for (t, k) in self.out_links[nid] if k == INCLUSION]

    def direct_points(self, nid: str) -> List[str]:
        """Point ids linked directly (not through buckets) from ``nid``."""
        return [t for (t, k) in self.out_links[nid] if k == INCLUSION and self.nodes[t].kind == POINT]

    def buckets(self, cid: str) -> List[str]:
        return [t for (t, k) in self.out_links[cid] if k == INCLUSION and is_bucket(t)]

    def pair_points(self, nid: str) -> List[str]:
        return self.direct_points(nid)

    def weight(self, i: int, cid: str) -> WeightVector:
        d = self.space.dimensions[i]
        rel = self._coord[cid].level / d.max_level if d.max_level > 0 else 0.0
        return WeightVector(rel, float(self.nodes[cid].resource_count))

    def covariance(self, i: int, j: int) -> Covariance2:
        cached = self._cov_cache.get((i, j))
        if cached is not None and cached[0] == self._version:
            return cached[1]
        di, dj = self.space.dimensions[i], self.space.dimensions[j]
        if len(di) + len(dj) <= FULL_SAMPLE_LIMIT:
            cov = RunningMoments.covariance([self._moments[i], self._moments[j]])
        else:
            cov = covariance_inverse(path_samples(di, self) + path_samples(dj, self))
        self._cov_cache[(i, j)] = (self._version, cov)
        return cov

    def bucket_for(self, cid: str, p: Point) -> Optional[str]:
        """Bucket of split coordinate ``cid`` that point ``p`` belongs in, if any."""
        split = self.nodes[cid].split
        if split is None:
            return None
        ck = CoordinatePath.parse(split)
        pk = p[self.space.index_of(ck.dimension)]
        n = len(ck.segments)
        if len(pk.segments) > n and pk.segments[:n] == ck.segments:
            return bucket_id(cid, "/".join(pk.segments[: n + 1]))
        return None

    def _ensure_bucket(self, cid: str, bid: str) -> None:
        if bid not in self.nodes:
            self._add_node(bid, INTERSECTION)
        self.link(cid, bid, INCLUSION)


# -- construction ------------------------------------------------------------------


def insert_resource(index: GraphIndex, r: Resource, rng=None) -> GraphIndex:
    """Index one stored resource: nodes, inclusion links and sampled intersection nodes."""
    rng = index.rng if rng is None else rng
    if r.id not in index.store:
        raise StoreError(f"resource {r.id!r} is not in the store")
    if r.id in index._resources:
        raise StoreError(f"resource {r.id!r} is already indexed")
    index._resources.add(r.id)
    p = r.point
    pid = p.key
    new_point = pid not in index.nodes
    if new_point:
        index._add_node(pid, POINT)
        index._points[pid] = p
    index.nodes[pid].resource_count += 1
    fresh: List[CoordinatePath] = []
    for i, c in enumerate(p.coords):
        for a in reversed(list(c.ancestors())):
            aid = str(a)
            if index._ensure_coord(a):
                fresh.append(a)
            index.nodes[aid].resource_count += 1
            index._moments[i].bump(a)
            if new_point:
                index._under[aid].add(pid)
        cid = str(c)
        bid = index.bucket_for(cid, p)
        if bid is not None:
            index._ensure_bucket(cid, bid)
            index.nodes[bid].resource_count += 1
            index.link(bid, pid, INCLUSION)
        else:
            index.link(cid, pid, INCLUSION)
    index._version += 1
    if index.intersections:
        _place_intersections(index, p, new_point, rng)
    if index.shortcuts:
        groups = {(a.dimension, a.parent) for a in fresh if a.parent is not None}
        for dname, parent in sorted(groups, key=lambda g: (g[0], str(g[1]))):
            _relink_siblings(index, index.space.dim(dname), str(parent))
    return index


def _place_intersections(index: GraphIndex, p: Point, new_point: bool, rng) -> None:
    pid = p.key
    for i in range(len(p.coords) - 1):
        j = i + 1
        path_i = [str(a) for a in reversed(list(p.coords[i].ancestors()))][1:]
        path_j = [str(b) for b in reversed(list(p.coords[j].ancestors()))][1:]
        cov = None
        for a in path_i:
            for b in path_j:
                nid = pair_id(a, b)
                node = index.nodes.get(nid)
                if node is not None:
                    if new_point:
                        index.link(nid, pid, INCLUSION)
                    node.resource_count += 1
                    continue
                if cov is None:
                    cov = index.covariance(i, j)
                x = mahalanobis(index.weight(i, a), index.weight(j, b), cov)
                if sample_link(x, index.policy, rng):
                    _create_pair(index, a, b)


def _create_pair(index: GraphIndex, a: str, b: str) -> None:
    nid = pair_id(a, b)
    node = index._add_node(nid, INTERSECTION)
    members = sorted(index._under[a] & index._under[b])
    node.resource_count = sum(index.nodes[q].resource_count for q in members)
    for q in members:
        index.link(nid, q, INCLUSION)
    index.link(a, nid, INTERSECTION)
    index.link(b, nid, INTERSECTION)


def _relink_siblings(index: GraphIndex, dim: Dimension, parent: str) -> None:
    kids = index.coord_children(parent)
    if not kids:
        return
    level = index.coord(kids[0]).level
    rel = dim.level_order_at(level)
    if rel is None:
        return
    group = set(kids)
    for k in kids:
        for (t, kind) in list(index.out_links[k]):
            if kind in (SHORTCUT, ORDER) and t in group:
                index.unlink(k, t, kind)
    ordered = sorted(kids, key=lambda k: dim.order_of(index.coord(k)))
    schema = [str(c) for c in dim.ordered_siblings(index.coord(kids[0]))]
    pos = {c: n for n, c in enumerate(schema)}
    for a, b in zip(ordered, ordered[1:]):
        index.link(a, b, SHORTCUT, rel.name)
        index.link(b, a, SHORTCUT, rel.name)
        if pos[b] == pos[a] + 1:
            index.link(a, b, ORDER, rel.name)


def add_shortcut_links(index: GraphIndex) -> GraphIndex:
    """(Re)build SHORTCUT and ORDER links for every level-order sibling group."""
    for d in index.space.dimensions:
        if not any(r.kind != "hierarchical" for r in d.relations.values()):
            continue
        for cid in list(index.nodes):
            node = index.nodes[cid]
            if node.kind == COORDINATE and index._coord[cid].dimension == d.name:
                _relink_siblings(index, d, cid)
    return index


# -- splitting -------------------------------------------------------------------


def _weighted_pick(ids: List[str], weights: List[int], rng) -> str:
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    for nid, w in zip(ids, weights):
        acc += w
        if u < acc:
            return nid
    return ids[-1]


def choose_split_child(index: GraphIndex, v: str, rng=None) -> str:
    """Sample a child of ``v`` with probability proportional to its resource count."""
    rng = index.rng if rng is None else rng
    kids = sorted(index.inclusion_children(v))
    return _weighted_pick(kids, [index.nodes[k].resource_count for k in kids], rng)


def _split_coordinate(index: GraphIndex, p: Point, skip: int) -> Optional[CoordinatePath]:
    best = None
    for k, c in enumerate(p.coords):
        if k == skip:
            continue
        d = index.space.dimensions[k]
        for a in reversed(list(c.ancestors())):
            n = len(d.children(a))
            if n == 0:
                continue
            key = (-n, str(a))
            if best is None or key < best[0]:
                best = (key, a)
    return None if best is None else best[1]


def maybe_split(index: GraphIndex, v: str, rng=None) -> bool:
    """Randomized split of a heavy child of coordinate node ``v``.

    Returns True when a child was split.  The resources under ``v`` are
    unchanged; only the links below the chosen child are rearranged.
    """
    rng = index.rng if rng is None else rng
    node = index.nodes.get(v)
    if node is None or node.kind != COORDINATE:
        raise ValueError(f"{v!r} is not a coordinate node")
    if node.resource_count <= 0:
        raise ValueError(f"{v!r} holds no resources")
    kids = index.inclusion_children(v)
    if not kids:
        return False
    beta = 1.0 - 1.0 / len(kids)
    if not index.split_config.fires(rng.random(), beta):
        return False
    s = choose_split_child(index, v, rng)
    sn = index.nodes[s]
    if sn.kind != COORDINATE or sn.split is not None:
        return False
    direct = sorted(index.direct_points(s))
    if not direct:
        return False
    q = _weighted_pick(direct, [index.nodes[x].resource_count for x in direct], rng)
    i = index.space.index_of(index.coord(s).dimension)
    ck = _split_coordinate(index, index.point(q), i)
    if ck is None:
        return False
    sn.split = str(ck)
    moves = [(x, index.bucket_for(s, index.point(x))) for x in direct]
    moves = [(x, b) for x, b in moves if b is not None]
    if not moves:
        sn.split = None
        return False
    for x, b in moves:
        index._ensure_bucket(s, b)
        index.unlink(s, x, INCLUSION)
        index.nodes[b].resource_count += index.nodes[x].resource_count
        index.link(b, x, INCLUSION)
    index.splits_performed += 1
    return True


def publish(index: GraphIndex, r: Resource, rng=None) -> GraphIndex:
    """Insert ``r`` and give every coordinate on its root paths a chance to split."""
    rng = index.rng if rng is None else rng
    insert_resource(index, r, rng)
    if index.split_config.enabled:
        for c in r.point.coords:
            for a in reversed(list(c.ancestors())):
                maybe_split(index, str(a), rng)
    return index


def max_child_share(index: GraphIndex, v: str) -> float:
    """Largest fraction of R(v) held directly (by point links) by one index node below ``v``."""
    total = index.nodes[v].resource_count
    if total == 0:
        return 0.0
    best = 0
    seen = {v}
    queue = deque(index.inclusion_children(v))
    while queue:
        x = queue.popleft()
        if x in seen or index.nodes[x].kind == POINT:
            continue
        seen.add(x)
        held = sum(index.nodes[q].resource_count for q in index.direct_points(x))
        best = max(best, held)
        queue.extend(index.inclusion_children(x))
    return best / total


def refresh_weights(index: GraphIndex) -> None:
    for src, out in index.out_links.items():
        for key, l in out.items():
            if l.kind in (INCLUSION, INTERSECTION):
                w = index.nodes[l.target].resource_count
                if w != l.weight:
                    out[key] = replace(l, weight=w)


def build_basic_index(space: ResourceSpace, store: ResourceStore) -> GraphIndex:
    """Coordinate chains and point nodes only: no intersections, shortcuts or splits."""
    index = GraphIndex(space, store, split_config=SplitConfig(enabled=False),
                       intersections=False, shortcuts=False)
    for r in store.resources():
        insert_resource(index, r)
    return index


def build_graph_index(
    space: ResourceSpace,
    store: ResourceStore,
    policy: Optional[LinkPolicy] = None,
    split_config: Optional[SplitConfig] = None,
) -> GraphIndex:
    index = GraphIndex(space, store, policy, split_config)
    for r in store.resources():
        publish(index, r)
    add_shortcut_links(index)
    refresh_weights(index)
    return index


# -- lookup ------------------------------------------------------------------------


def locate_point(index: GraphIndex, p: Point, metrics=None) -> Optional[str]:
    """Find the point node for ``p`` by descending dimension 0 from its root."""
    pid = p.key
    c = p.coords[0]
    path = [str(a) for a in reversed(list(c.ancestors()))]
    cur = path[0]
    for nxt in path[1:]:
        if metrics is not None:
            metrics.comparisons += 1
            metrics.nodes_visited += 1
        if not index.has_link(cur, nxt, INCLUSION):
            return None
        cur = nxt
    if metrics is not None:
        metrics.comparisons += 1
    if cur not in index.nodes or pid not in index.nodes:
        return None
    if index.has_link(cur, pid, INCLUSION):
        return pid
    bid = index.bucket_for(cur, index.point(pid))
    if bid is not None and index.has_link(bid, pid, INCLUSION):
        return pid
    return None


# -- audit -------------------------------------------------------------------------


def audit(index: GraphIndex, store: Optional[ResourceStore] = None, refresh: bool = True) -> List[str]:
    """Check the index against the store; returns a list of violations (empty if healthy).

    With ``refresh`` link weights are brought up to date first; stale weights
    are never reported as violations.
    """
    store = index.store if store is None else store
    out: List[str] = []
    if refresh:
        refresh_weights(index)
    space = index.space
    ids = {r.id for r in store.resources()}
    if ids != index._resources:
        out.append(f"index covers {len(index._resources)} resources, store holds {len(ids)}")
    store_points = {p.key: p for p in store.points()}
    for pid in store_points:
        node = index.nodes.get(pid)
        if node is None or node.kind != POINT:
            out.append(f"store point {pid} has no point node")
    for nid, node in index.nodes.items():
        if node.kind not in NODE_KINDS:
            out.append(f"node {nid} has unknown kind {node.kind}")
        if node.kind == POINT and nid not in store_points:
            out.append(f"point node {nid} has no resources in the store")

    # expected counts
    expected: Dict[str, int] = {}
    pair_members: Dict[str, Set[str]] = {}  # intersection or bucket id -> expected points
    for pid, p in store_points.items():
        n = store.point_count(p)
        expected[pid] = n
        paths = [[str(a) for a in reversed(list(c.ancestors()))] for c in p.coords]
        for i in range(len(paths) - 1):
            for a in paths[i][1:]:
                for b in paths[i + 1][1:]:
                    nid = pair_id(a, b)
                    if nid in index.nodes:
                        expected[nid] = expected.get(nid, 0) + n
                        pair_members.setdefault(nid, set()).add(pid)
        for i, c in enumerate(p.coords):
            cid = str(c)
            if cid in index.nodes:
                bid = index.bucket_for(cid, p)
                if bid is not None:
                    expected[bid] = expected.get(bid, 0) + n
                    pair_members.setdefault(bid, set()).add(pid)
    for nid, node in index.nodes.items():
        if node.kind == COORDINATE:
            d = space.dim(index.coord(nid).dimension)
            want = store.count_under(d, index.coord(nid))
        else:
            want = expected.get(nid, 0)
        if node.resource_count != want:
            out.append(f"count cache of {nid} is {node.resource_count}, expected {want}")

    # link typing
    for l in index.links():
        if l.source not in index.nodes or l.target not in index.nodes:
            out.append(f"dangling link {l.source} -> {l.target}")
            continue
        sk, tk = index.nodes[l.source].kind, index.nodes[l.target].kind
        if l.kind in (SHORTCUT, ORDER):
            if sk != COORDINATE or tk != COORDINATE:
                out.append(f"{l.kind} link {l.source} -> {l.target} must join coordinates")
                continue
            a, b = index.coord(l.source), index.coord(l.target)
            if a.dimension != b.dimension or a.level != b.level:
                out.append(f"{l.kind} link {l.source} -> {l.target} crosses dimensions or levels")
        elif l.kind == INTERSECTION:
            if sk != COORDINATE or tk != INTERSECTION or is_bucket(l.target):
                out.append(f"intersection link {l.source} -> {l.target} is mistyped")
            elif l.source not in l.target.split(PAIR_SEP):
                out.append(f"intersection link {l.source} -> {l.target} from a foreign coordinate")
        elif l.kind == INCLUSION:
            if sk == POINT:
                out.append(f"inclusion link leaves point node {l.source}")
            elif sk == COORDINATE and tk == COORDINATE and index.coord(l.target).parent != index.coord(l.source):
                out.append(f"inclusion link {l.source} -> {l.target} skips a level")
        else:
            out.append(f"link {l.source} -> {l.target} has unknown kind {l.kind}")
    if _has_inclusion_cycle(index):
        out.append("INCLUSION links contain a cycle")

    # intersection completeness and bucket exactness
    for nid, node in index.nodes.items():
        if node.kind != INTERSECTION:
            continue
        got = set(index.direct_points(nid))
        want = pair_members.get(nid, set())
        if got != want:
            out.append(f"{nid} links {len(got)} points, expected {len(want)}")
    for cid, node in index.nodes.items():
        if node.kind != COORDINATE or node.split is None:
            continue
        for q in index.direct_points(cid):
            if index.bucket_for(cid, index.point(q)) is not None:
                out.append(f"point {q} should sit in a bucket of split node {cid}")

    # every point reachable from every root; every point attached to its own coordinates
    point_nodes = {nid for nid, n in index.nodes.items() if n.kind == POINT}
    for root in index.roots:
        seen = _reach(index, root)
        missing = point_nodes - seen
        if missing:
            out.append(f"{len(missing)} point nodes unreachable from {root}")
    for pid in point_nodes:
        p = index.point(pid)
        for c in p.coords:
            cid = str(c)
            holder = index.bucket_for(cid, p) if cid in index.nodes else None
            holder = holder or cid
            if not index.has_link(holder, pid, INCLUSION):
                out.append(f"point {pid} is not attached under {cid}")
    return out


def _reach(index: GraphIndex, root: str) -> Set[str]:
    seen = {root}
    stack = [root]
    while stack:
        x = stack.pop()
        for (t, k) in index.out_links[x]:
            if k == INCLUSION and t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def _has_inclusion_cycle(index: GraphIndex) -> bool:
    indeg = Counter()
    for l in index.links():
        if l.kind == INCLUSION:
            indeg[l.target] += 1
    queue = deque(n for n in index.nodes if indeg[n] == 0)
    done = 0
    while queue:
        x = queue.popleft()
        done += 1
        for (t, k) in index.out_links[x]:
            if k == INCLUSION:
                indeg[t] -= 1
                if indeg[t] == 0:
                    queue.append(t)
    return done != len(index.nodes)


# -- stats and serialization ---------------------------------------------------------


def stats(index: GraphIndex) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for nid, node in index.nodes.items():
        kind = "BUCKET" if is_bucket(nid) else node.kind
        out[f"nodes.{kind}"] = out.get(f"nodes.{kind}", 0) + 1
    for l in index.links():
        out[f"links.{l.kind}"] = out.get(f"links.{l.kind}", 0) + 1
    out["splits"] = sum(1 for n in index.nodes.values() if n.split is not None)
    out["resources"] = len(index._resources)
    return out


def to_xml(index: GraphIndex) -> str:
    root = ET.Element("GraphIndex")
    ET.SubElement(root, "Meta", seed=str(index.seed), policy=str(index.policy),
                  split=str(index.split_config), features=index.features)
    for nid in sorted(index.nodes):
        node = index.nodes[nid]
        attrs = {"id": nid, "kind": node.kind, "count": str(node.resource_count)}
        if node.split is not None:
            attrs["split"] = node.split
        ET.SubElement(root, "Node", attrs)
    for l in sorted(index.links(), key=lambda l: (l.source, l.target, l.kind)):
        ET.SubElement(root, "Link", {"from": l.source, "to": l.target, "kind": l.kind,
                                     "weight": str(l.weight)})
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def from_xml(text: str, space: ResourceSpace, store: ResourceStore) -> GraphIndex:
    """Rebuild an index from ``to_xml`` output (the sampling generator restarts from the seed)."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise IndexMismatchError(f"malformed index document: {e}") from None
    if root.tag != "GraphIndex":
        raise IndexMismatchError("index root must be <GraphIndex>")
    meta = root.find("Meta")
    if meta is None:
        raise IndexMismatchError("index document lacks <Meta>")
    policy = LinkPolicy.parse(meta.get("policy", BOUNDED), int(meta.get("seed", "0")))
    graph = meta.get("features", "graph") == "graph"
    index = GraphIndex(space, store, policy, SplitConfig.parse(meta.get("split", "u>=beta")),
                       intersections=graph, shortcuts=graph)
    index.nodes.clear()
    index.out_links.clear()
    index.in_links.clear()
    index._coord.clear()
    index._under.clear()
    for el in root.iter("Node"):
        nid, kind = el.get("id"), el.get("kind")
        node = index._add_node(nid, kind)
        node.resource_count = int(el.get("count"))
        node.split = el.get("split")
        if kind == COORDINATE:
            c = CoordinatePath.parse(nid)
            try:
                space.dim(c.dimension).require(c)
            except Exception as e:
                raise IndexMismatchError(f"index node {nid}: {e}") from None
            index._coord[nid] = c
            index._under[nid] = set()
        elif kind == POINT:
            p = Point.parse(nid)
            try:
                space.validate_point(p)
            except Exception as e:
                raise IndexMismatchError(f"index node {nid}: {e}") from None
            index._points[nid] = p
    for root_id in index.roots:
        if root_id not in index.nodes:
            raise IndexMismatchError(f"index lacks dimension root {root_id}")
    for el in root.iter("Link"):
        w = el.get("weight")
        kind = el.get("kind")
        weight = int(w) if kind in (INCLUSION, INTERSECTION) else w
        src, dst = el.get("from"), el.get("to")
        if src not in index.nodes or dst not in index.nodes:
            raise IndexMismatchError(f"link {src} -> {dst} references an unknown node")
        index.link(src, dst, kind, weight)
    for pid, p in index._points.items():
        for i, c in enumerate(p.coords):
            for a in c.ancestors():
                index._under[str(a)].add(pid)
                index._moments[i].bump(a, index.nodes[pid].resource_count)
    index.splits_performed = sum(1 for n in index.nodes.values() if n.split is not None)
    index._resources = {r.id for r in store.resources()}
    return index
