import math
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import FIXTURE16_IN, fixture16_graph, oracle_relatedness
from wikitag.kb import InLinkGraph, SenseCandidate
from wikitag.scoring import RelCache, Relatedness, coherence, relatedness, total_score, vote


def test_hand_value_two_thirds():
    g = fixture16_graph()
    assert relatedness(0, 1, g) == pytest.approx(2 / 3, abs=1e-12)
    # written out: d = (log 4 - log 2) / (log 16 - log 2) = 1/3
    assert 1 - (math.log(4) - math.log(2)) / (math.log(16) - math.log(2)) == pytest.approx(2 / 3, abs=1e-15)


def test_identity_and_guards():
    g = fixture16_graph()
    assert relatedness(2, 3, g) == 1.0  # identical in-sets
    assert relatedness(5, 5, g) == 1.0
    assert relatedness(2, 4, g) == 0.0  # disjoint
    assert relatedness(12, 0, g) == 0.0  # empty in-set
    with pytest.raises(KeyError):
        relatedness(0, 99, g)


def test_denominator_guard():
    # both pages are linked from every page: log W - log min = 0
    g = InLinkGraph(2, {0: [1], 1: [0]})
    g.W = 1
    assert relatedness(0, 1, g) == 0.0


def test_fixture_pairs_against_oracle():
    g = fixture16_graph()
    for p, q in combinations(sorted(FIXTURE16_IN), 2):
        expected = oracle_relatedness(FIXTURE16_IN[p], FIXTURE16_IN[q], 16)
        assert abs(relatedness(p, q, g) - expected) <= 1e-12


def test_distance_variant():
    g = fixture16_graph()
    assert relatedness(0, 1, g, distance=True) == pytest.approx(1 / 3)
    assert relatedness(2, 3, g, distance=True) == 0.0
    assert relatedness(2, 4, g, distance=True) == 1.0


def const_rel(table):
    return lambda p, q: table.get((p, q), table.get((q, p), 0.0))


def test_vote_examples():
    rel = const_rel({(10, 1): 0.6, (11, 1): 0.2})
    senses = [SenseCandidate(10, 7, 0.7), SenseCandidate(11, 3, 0.3)]
    assert vote(senses, 1, rel) == pytest.approx(0.24)
    assert vote([SenseCandidate(10, 5, 1.0)], 1, rel) == pytest.approx(0.6)  # unambiguous voter
    assert vote(senses, 2, rel) == 0.0
    assert vote([], 1, rel) == 0.0


def test_total_score_examples():
    rel = const_rel({(10, 1): 0.6, (11, 1): 0.2, (12, 1): 0.1})
    b1 = [SenseCandidate(10, 7, 0.7), SenseCandidate(11, 3, 0.3)]
    b2 = [SenseCandidate(12, 1, 1.0)]
    assert total_score(1, [b1, b2], rel) == pytest.approx(0.34)
    assert total_score(1, [], rel) == 0.0
    assert total_score(5, [b1, b2], rel) == 0.0


def test_coherence_examples():
    rel = const_rel({(2, 1): 0.5, (3, 1): 0.6, (4, 1): 0.2})
    assert coherence(1, {1, 2}, rel) == pytest.approx(0.5)
    assert coherence(1, {1}, rel) == 0.0
    assert coherence(1, set(), rel) == 0.0
    assert coherence(1, {1, 3, 4}, rel) == pytest.approx(0.4)


def test_cache_transparency_and_counters():
    g = fixture16_graph()
    cache = RelCache(maxsize=5)
    cached, plain = Relatedness(g, cache), Relatedness(g)
    for p, q in combinations(range(16), 2):
        assert cached(p, q) == plain(q, p) == relatedness(p, q, g)
    assert len(cache) <= 5
    plain(0, 1), plain(1, 0)
    assert plain.computed == 120 and plain.calls == 122
    # a second instance sharing the cache recomputes only what was evicted
    again = Relatedness(g, cache)
    again(14, 15)
    assert again.computed == 0


graphs = st.integers(3, 12).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.lists(st.integers(0, n - 1), max_size=n), min_size=n, max_size=n),
))


def to_graph(spec):
    n, raw = spec
    return InLinkGraph(n, {p: sorted(set(src) - {p}) for p, src in enumerate(raw)})


@settings(max_examples=200, deadline=None)
@given(graphs)
def test_symmetry_and_bounds(spec):
    g = to_graph(spec)
    for p in range(spec[0]):
        for q in range(spec[0]):
            r = relatedness(p, q, g)
            assert r == relatedness(q, p, g)
            assert 0.0 <= r <= 1.0
            assert abs(r - oracle_relatedness(g.in_links[p], g.in_links[q], g.W, p == q)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(4, 60), st.integers(1, 30), st.integers(1, 30), st.data())
def test_monotone_in_intersection(W, na, nb, data):
    na, nb = min(na, W - 2), min(nb, W - 2)
    # pages 0 and 1 with in-sets of fixed sizes; grow their overlap one source at a time
    prev = -1.0
    for common in range(0, min(na, nb) + 1):
        a = list(range(2, 2 + na))
        b = a[:common] + list(range(2 + na, 2 + na + nb - common))
        if max(b, default=0) >= W:
            break
        g = InLinkGraph(W, {0: a, 1: b})
        r = relatedness(0, 1, g)
        assert r >= prev - 1e-15
        prev = r
