from __future__ import annotations

import csv
import io
from collections import Counter

import pytest

from rspace.bench import harness
from rspace.bench.cli import EXIT_INTERNAL, EXIT_OK, EXIT_USER, main
from rspace.bench.gen import SURVEY_QUERY, DimConfig, GenConfig, generate, generate_workload
from rspace.bench.linkexp import LinkExpConfig, run_linkexp
from rspace.index import SplitConfig, build_graph_index, stats
from rspace.linkstats import BOUNDED, LOGISTIC, LinkPolicy
from rspace.space import space_to_xml
from rspace.store import corpus_to_xml

TWO_DIMS = [DimConfig("a", max_depth=4, fanout=(2, 4)), DimConfig("b", max_depth=3, fanout=(2, 5))]


def _docs(cfg):
    space, corpus = generate(cfg)
    return space_to_xml(space), corpus_to_xml(corpus)


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    assert main(["gen", "--resources", "1500", "--queries", "30", "--seed", "3", "--out", str(d)]) == EXIT_OK
    return d


def test_generation_is_deterministic():
    cfg = lambda: GenConfig(dimensions=list(TWO_DIMS), resources=1000, seed=7)
    assert _docs(cfg()) == _docs(cfg())
    assert _docs(cfg()) != _docs(GenConfig(dimensions=list(TWO_DIMS), resources=1000, seed=8))


def test_cli_gen_writes_identical_files(tmp_path):
    for sub in ("x", "y"):
        assert main(["gen", "--resources", "200", "--queries", "5", "--seed", "7", "--out", str(tmp_path / sub)]) == 0
    for f in ("schema.xml", "corpus.xml", "workload.txt"):
        assert (tmp_path / "x" / f).read_bytes() == (tmp_path / "y" / f).read_bytes()


def test_zero_resources_gives_empty_corpus(tmp_path):
    space, corpus = generate(GenConfig(dimensions=list(TWO_DIMS), resources=0, seed=1))
    assert corpus == []
    assert main(["gen", "--resources", "0", "--out", str(tmp_path)]) == 0
    space, store = harness.load(tmp_path / "schema.xml", tmp_path / "corpus.xml")
    assert len(store) == 0


def test_depth_config_validation():
    with pytest.raises(ValueError):
        DimConfig("a", max_depth=0)
    with pytest.raises(ValueError):
        GenConfig(resources=-1)


def test_topic_tree_is_wide_and_shallow():
    space, _ = generate(GenConfig(resources=0, seed=0))
    topic = space.dim("topic")
    hist = Counter(c.level for c in topic.coordinates)
    assert max(hist) <= 5
    assert hist[1] >= 8
    # most coordinates sit in the top three levels
    assert sum(n for lv, n in hist.items() if lv <= 3) > 0.5 * len(topic)


def test_build_is_deterministic(data_dir, tmp_path):
    a, sa = harness.cmd_build(data_dir / "schema.xml", data_dir / "corpus.xml", LinkPolicy(BOUNDED, 42),
                              tmp_path / "a.xml")
    b, sb = harness.cmd_build(data_dir / "schema.xml", data_dir / "corpus.xml", LinkPolicy(BOUNDED, 42),
                              tmp_path / "b.xml")
    assert (tmp_path / "a.xml").read_bytes() == (tmp_path / "b.xml").read_bytes()
    assert sa == sb


def test_bounded_places_fewer_links_than_logistic(data_dir):
    _, lo = harness.cmd_build(data_dir / "schema.xml", data_dir / "corpus.xml", LinkPolicy(LOGISTIC, 1))
    _, bo = harness.cmd_build(data_dir / "schema.xml", data_dir / "corpus.xml", LinkPolicy(BOUNDED, 1))
    assert bo.get("nodes.INTERSECTION", 0) < lo["nodes.INTERSECTION"]


def test_tiny_build_stats_match_hand_count(tmp_path):
    from helpers import make_store, survey_space
    sp = survey_space()
    st_ = make_store(sp, [(("topic/CS/DB", "date/2020/01"), {}), (("topic/CS/DB", "date/2020/01"), {}),
                          (("topic/BIO", "date/2021"), {})])
    s = stats(build_graph_index(sp, st_, LinkPolicy(LOGISTIC, 0), SplitConfig(enabled=False)))
    assert s["nodes.POINT"] == 2
    assert s["resources"] == 3 and s["splits"] == 0


def test_query_command_scan_equals_graph(data_dir, capsys):
    outs = {}
    for engine in ("scan", "graph"):
        assert main(["query", "--schema", str(data_dir / "schema.xml"), "--corpus", str(data_dir / "corpus.xml"),
                     "--engine", engine, "--query", SURVEY_QUERY]) == EXIT_OK
        outs[engine] = capsys.readouterr().out
    body = {e: [l for l in o.splitlines() if not l.startswith("#")] for e, o in outs.items()}
    assert body["scan"] == body["graph"] and len(body["scan"]) > 1
    assert outs["graph"].splitlines()[-1].startswith("# metrics engine=graph comparisons=")


def test_malformed_query_exits_with_user_error(data_dir, capsys):
    rc = main(["query", "--schema", str(data_dir / "schema.xml"), "--corpus", str(data_dir / "corpus.xml"),
               "--query", "SELECT FROM nowhere"])
    assert rc == EXIT_USER
    assert "error" in capsys.readouterr().err


def test_missing_file_exits_with_user_error(tmp_path):
    assert main(["build", "--schema", str(tmp_path / "no.xml"), "--corpus", str(tmp_path / "no.xml")]) == EXIT_USER


def test_engine_mismatch_exits_with_internal_error(data_dir, monkeypatch):
    real = harness.run

    def broken(ast, index, store, engine="graph"):
        header, rows, m = real(ast, index, store, engine)
        return header, (rows + rows[:1] if engine == "graph" else rows), m

    monkeypatch.setattr(harness, "run", broken)
    rc = main(["bench", "--schema", str(data_dir / "schema.xml"), "--corpus", str(data_dir / "corpus.xml"),
               "--workload", str(data_dir / "workload.txt")])
    assert rc == EXIT_INTERNAL


def test_bench_report(data_dir, tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--schema", str(data_dir / "schema.xml"), "--corpus", str(data_dir / "corpus.xml"),
                 "--workload", str(data_dir / "workload.txt"), "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 30 * 4
    by_q = {}
    for r in rows:
        by_q.setdefault(r["query_id"], set()).add((r["result_points"], r["result_rows"]))
    assert all(len(v) == 1 for v in by_q.values())
    rep = harness.cmd_bench(data_dir / "schema.xml", data_dir / "corpus.xml", data_dir / "workload.txt",
                            LinkPolicy(BOUNDED, 0))
    med = rep.medians()
    assert med["graph"] < med["scan"]


def test_point_query_cost_within_depth_sum(data_dir):
    space, store = harness.load(data_dir / "schema.xml", data_dir / "corpus.xml")
    p = store.points()[0]
    work = generate_workload(space, 40, 1, [p])
    point_q = [q for q in work if "range=[" + str(p.coords[0]) + ", " in q][:1]
    assert point_q
    rep = harness.bench_queries(space, store, point_q, build_graph_index(space, store))
    g = [r for r in rep.rows if r.engine == "graph"][0]
    assert g.comparisons <= sum(d.max_level for d in space.dimensions)
    assert g.result_points == 1


def test_empty_result_workload(data_dir):
    space, store = harness.load(data_dir / "schema.xml", data_dir / "corpus.xml")
    used = {p.coords for p in store.points()}
    leaves = [(t, d) for t in space.dim("topic").coordinates for d in space.dim("date").coordinates
              if t.level > 0 and d.level > 0 and (t, d) not in used]
    assert len(leaves) >= 5
    q = [f"SELECT topic, id FROM subspace([dimension=topic, range=[{t}, {t}], rel=subclass], "
         f"[dimension=date, range=[{d}, {d}], rel=subclass]) FROM RS;" for t, d in leaves[:5]]
    rep = harness.bench_queries(space, store, q, build_graph_index(space, store))
    assert all(r.result_rows == 0 for r in rep.rows)


def test_linkexp_sampled_within_three_sigma(tmp_path):
    rep = run_linkexp(LinkExpConfig(coords=40, seed=5))
    assert len(rep.rows) == 1600
    assert set(rep.summary) == {LOGISTIC, BOUNDED}
    assert all(s.within_3_sigma for s in rep.summary.values())
    assert rep.summary[BOUNDED].expected < rep.summary[LOGISTIC].expected
    out = tmp_path / "l.csv"
    assert main(["linkexp", "--coords", "20", "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[0].startswith("a,b,distance,")
