"""Build, query and benchmark commands behind the command-line interface."""
from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..executor import ENGINES, rows_to_csv, run
from ..index import GraphIndex, SplitConfig, build_basic_index, build_graph_index, from_xml, stats, to_xml
from ..linkstats import LinkPolicy
from ..querylang import parse_query, parse_workload
from ..space import ResourceSpace, parse_space_xml
from ..store import ResourceStore, parse_corpus_xml


class BenchMismatch(AssertionError):
    """Engines disagreed on a benchmark query."""


def load(schema_path, corpus_path) -> Tuple[ResourceSpace, ResourceStore]:
    space = parse_space_xml(Path(schema_path).read_text(encoding="utf-8"))
    store = ResourceStore(space)
    store.put_many(parse_corpus_xml(Path(corpus_path).read_text(encoding="utf-8"), space))
    return space, store


def cmd_build(schema_path, corpus_path, policy: LinkPolicy, out_path=None,
              split: bool = True) -> Tuple[str, Dict[str, int]]:
    """Build the graph index; returns the serialized index and its stats."""
    space, store = load(schema_path, corpus_path)
    index = build_graph_index(space, store, policy, SplitConfig(enabled=split))
    text = to_xml(index)
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    return text, stats(index)


def _index_for(engine: str, space, store, index_path=None, policy: Optional[LinkPolicy] = None):
    if engine == "basic":
        return build_basic_index(space, store)
    if engine == "graph":
        if index_path is not None:
            return from_xml(Path(index_path).read_text(encoding="utf-8"), space, store)
        return build_graph_index(space, store, policy)
    return None


def cmd_query(schema_path, corpus_path, query_text: str, engine: str = "graph",
              index_path=None, policy: Optional[LinkPolicy] = None) -> str:
    """CSV rows followed by a ``# metrics`` comment line."""
    space, store = load(schema_path, corpus_path)
    ast = parse_query(query_text)
    index = _index_for(engine, space, store, index_path, policy)
    header, rows, m = run(ast, index, store, engine)
    text = rows_to_csv(header, rows)
    return text + (f"# metrics engine={engine} comparisons={m.comparisons} nodes_visited={m.nodes_visited} "
                   f"intersections_computed={m.intersections_computed} "
                   f"candidates_inspected={m.candidates_inspected}\n")


@dataclass
class BenchRow:
    query_id: int
    engine: str
    comparisons: int
    nodes_visited: int
    intersections_computed: int
    wall_ms: float
    result_points: int
    result_rows: int


@dataclass
class BenchReport:
    rows: List[BenchRow] = field(default_factory=list)

    def medians(self) -> Dict[str, float]:
        out = {}
        for e in ENGINES:
            vals = [r.comparisons for r in self.rows if r.engine == e]
            if vals:
                out[e] = statistics.median(vals)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["query_id", "engine", "comparisons", "nodes_visited", "intersections_computed",
                    "wall_ms", "result_points", "result_rows"])
        for r in self.rows:
            w.writerow([r.query_id, r.engine, r.comparisons, r.nodes_visited, r.intersections_computed,
                        f"{r.wall_ms:.3f}", r.result_points, r.result_rows])
        return buf.getvalue()


def bench_queries(space, store, queries: Sequence[str], graph: GraphIndex,
                  basic: Optional[GraphIndex] = None) -> BenchReport:
    """Run every query under every engine; raises BenchMismatch if any two disagree."""
    basic = build_basic_index(space, store) if basic is None else basic
    indexes = {"scan": None, "inverted": None, "basic": basic, "graph": graph}
    report = BenchReport()
    for qid, text in enumerate(queries):
        ast = parse_query(text)
        reference = None
        for engine in ENGINES:
            t0 = time.perf_counter()
            header, rows, m = run(ast, indexes[engine], store, engine)
            wall = (time.perf_counter() - t0) * 1000.0
            cols = [i for i, h in enumerate(header) if h in space.names]
            points = len({tuple(r[i] for i in cols) for r in rows}) if cols else 0
            if reference is None:
                reference = rows
            elif rows != reference:
                raise BenchMismatch(f"query {qid}: engine {engine} returned {len(rows)} rows, "
                                    f"scan returned {len(reference)}")
            report.rows.append(BenchRow(qid, engine, m.comparisons, m.nodes_visited,
                                        m.intersections_computed, wall, points, len(rows)))
    return report


def cmd_bench(schema_path, corpus_path, workload_path, policy: LinkPolicy,
              index_path=None) -> BenchReport:
    space, store = load(schema_path, corpus_path)
    queries = parse_workload(Path(workload_path).read_text(encoding="utf-8"))
    graph = _index_for("graph", space, store, index_path, policy)
    return bench_queries(space, store, queries, graph)
