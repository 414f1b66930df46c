from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_store, season_date_dim, survey_space, topic_dim
from rspace import (
    CoordinatePath,
    Resource,
    ResourceSpace,
    ResourceStore,
    SchemaError,
    StoreError,
    corpus_to_xml,
    is_descendant,
    parse_corpus_xml,
)


@pytest.fixture
def space():
    return ResourceSpace("RS", [topic_dim(), season_date_dim()])


def test_put_and_lookup_by_point_and_coordinate(space):
    st_ = ResourceStore(space)
    p = space.point(["topic/CS/DB/INDEX", "date/2020/Spring/01"])
    st_.put_resource(Resource("paper1", p, {"paper_title": "Indexes"}))
    assert [r.id for r in st_.get_by_point(p)] == ["paper1"]
    assert st_.get_by_coordinate("topic/CS/DB/INDEX") == {"paper1"}
    assert st_.get_by_coordinate("date/2020/Spring/01") == {"paper1"}
    assert st_.get_by_coordinate("topic/CS/DB") == set()
    assert st_.get_by_coordinate("topic/BIO") == set()


def test_duplicate_id_rejected(space):
    st_ = ResourceStore(space)
    p = space.point(["topic/CS", "date/2020"])
    st_.put_resource(Resource("a", p))
    with pytest.raises(StoreError):
        st_.put_resource(Resource("a", p))


def test_invalid_point_rejected(space):
    st_ = ResourceStore(space)
    from rspace import Point
    with pytest.raises(StoreError):
        st_.put_resource(Resource("a", Point.of("topic/NOPE", "date/2020")))


def test_unknown_point_and_counts(space):
    st_ = ResourceStore(space)
    p = space.point(["topic/CS", "date/2020"])
    for i in range(3):
        st_.put_resource(Resource(f"x{i}", p))
    assert len(st_.get_by_point(p)) == 3
    assert st_.get_by_point(space.point(["topic/BIO", "date/2020"])) == []
    assert st_.count_under("topic", "topic") == 3
    assert st_.count_under("topic", "topic/CS") == 3
    assert st_.count_under("topic", "topic/CS/DB") == 0


def test_counting_oracles():
    sp = survey_space()
    st_ = random_store(sp, 1000, 3)
    assert sum(len(st_.get_by_point(p)) for p in st_.points()) == 1000
    total = sum(len(st_.get_by_coordinate(c)) for d in sp.dimensions for c in d.coordinates)
    assert total == 1000 * len(sp)
    assert st_.audit() == []


def test_count_under_matches_scan():
    sp = survey_space()
    st_ = random_store(sp, 400, 9)
    d = sp.dim("topic")
    for c in d.coordinates:
        scan = sum(1 for r in st_.resources() if is_descendant(d, r.point["topic"], c))
        assert st_.count_under(d, c) == scan
    with pytest.raises(Exception):
        st_.count_under(d, "topic/NOPE")


def test_leaf_count():
    sp = survey_space()
    st_ = ResourceStore(sp)
    for i in range(5):
        st_.put_resource(Resource(f"r{i}", sp.point(["topic/CS/AI/ML", "date/2020/05"])))
    assert st_.count_under("topic", "topic/CS/AI/ML") == 5


def test_persistent_store_reopens(tmp_path):
    sp = survey_space()
    path = str(tmp_path / "rs.db")
    with ResourceStore(sp, path) as st_:
        for r in random_store(sp, 50, 1).resources():
            st_.put_resource(r)
        before = {p.key: [r.id for r in st_.get_by_point(p)] for p in st_.points()}
    with ResourceStore(sp, path) as again:
        assert len(again) == 50
        assert {p.key: [r.id for r in again.get_by_point(p)] for p in again.points()} == before
        assert again.audit() == []


def test_corpus_xml_round_trip():
    sp = survey_space()
    st_ = random_store(sp, 30, 2)
    items = list(st_.resources())
    items.append(Resource("odd", items[0].point, {"paper_title": "007", "w": 1.5, "n": -3}))
    text = corpus_to_xml(items)
    back = parse_corpus_xml(text, sp)
    assert [(r.id, r.point, dict(r.attributes)) for r in back] == [(r.id, r.point, dict(r.attributes)) for r in items]
    assert corpus_to_xml(back) == text


@pytest.mark.parametrize("doc", [
    "<Resources><Resource id='a'><At dim='topic' path='topic'/></Resource></Resources>",
    "<Resources><Resource><At dim='topic' path='topic'/></Resource></Resources>",
    "<Nope/>",
    "<Resources",
])
def test_bad_corpus_documents(doc):
    with pytest.raises(SchemaError):
        parse_corpus_xml(doc, survey_space())


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 11), st.integers(0, 60)), min_size=0, max_size=40))
def test_postings_and_buckets_agree(cells):
    sp = survey_space()
    t, d = sp.dim("topic").coordinates, sp.dim("date").coordinates
    st_ = ResourceStore(sp)
    for i, (a, b) in enumerate(cells):
        st_.put_resource(Resource(f"r{i}", sp.point([t[a % len(t)], d[b % len(d)]])))
    per_point = Counter(sp.point([t[a % len(t)], d[b % len(d)]]) for a, b in cells)
    assert {p: st_.point_count(p) for p in st_.points()} == dict(per_point)
    assert st_.audit() == []
    for c in (CoordinatePath.parse("topic/CS"), CoordinatePath.parse("date/2020")):
        assert st_.count_under(c.dimension, c) == sum(n for p, n in per_point.items() if p[c.dimension].is_under(c))
