import struct

import pytest

from helpers import FIXTURE16_IN, fixture16_graph
from wikitag.corpus import CorpusError, LinkOccurrence, PageKind, RawPage
from wikitag.index_io import IndexFormatError, load_kb, save_kb
from wikitag.kb import (
    BuildReport,
    KbConsistencyError,
    KnowledgeBase,
    TokenTrie,
    build_anchor_dictionary,
    build_inlink_graph,
    build_kb,
    build_page_catalog,
    count_freq,
    Catalog,
    PageRecord,
)
from wikitag.text import tokenize


def art(pid, title, body=""):
    return RawPage(pid, title, PageKind.ARTICLE, body)


def occ(src, dst, text):
    return LinkOccurrence(src, dst, text, (0, len(text)))


# -- dictionary ------------------------------------------------------------------

def test_digit_and_single_char_anchors_excluded():
    pages = [art(1, "Seven"), art(2, "X"), art(3, "Src", "[[Seven|7]] [[Seven|7]] [[X|x]] [[X|x]] [[Seven|1 2]] [[Seven|1 2]]")]
    kb = build_kb(pages)
    assert kb.lookup_anchor("7") is None
    assert kb.lookup_anchor("x") is None
    assert kb.lookup_anchor("1 2") is None


def test_link_once_excluded_and_twice_kept():
    pages = [art(1, "Alpha"), art(2, "Src", "[[Alpha|ab]] [[Alpha|cd]] [[Alpha|cd]]")]
    kb = build_kb(pages)
    assert kb.lookup_anchor("ab") is None
    assert kb.lookup_anchor("cd").link == 2


def test_lp_ratio_and_threshold():
    body = " ".join(["[[Alpha|foo]]"] * 5 + ["foo"] * 5)
    kb = build_kb([art(1, "Alpha"), art(2, "Src", body)])
    e = kb.lookup_anchor("foo")
    assert (e.freq, e.link, e.lp) == (10, 5, 0.5)

    rare = " ".join(["[[Alpha|bar]]"] * 2 + ["bar"] * 3998)  # lp = 0.0005
    kb = build_kb([art(1, "Alpha"), art(2, "Src", rare)])
    assert kb.lookup_anchor("bar") is None
    kb = build_kb([art(1, "Alpha"), art(2, "Src", rare)], min_lp=0)
    assert kb.lookup_anchor("bar").lp == pytest.approx(0.0005)


def test_anchor_longer_than_six_tokens_excluded():
    long = "a1 b1 c1 d1 e1 f1 g1"
    kb = build_kb([art(1, "Alpha"), art(2, "Src", f"[[Alpha|{long}]] [[Alpha|{long}]]")])
    assert kb.lookup_anchor(long) is None


def test_commonness_from_link_counts():
    body = "[[Mercury (planet)|mercury]] " * 3 + "[[Mercury (element)|mercury]] " * 7
    kb = build_kb([art(1, "Mercury (planet)"), art(2, "Mercury (element)"), art(3, "Src", body)])
    e = kb.lookup_anchor("MERCURY ")
    assert [(s.page, s.link_count, s.commonness) for s in e.senses] == [(2, 7, 0.7), (1, 3, 0.3)]


def test_count_freq_non_overlapping_and_subsequences():
    bodies = [tokenize("x x x x x"), tokenize("new york and york")]
    freq = count_freq(bodies, ["x x", "york", "new york"])
    assert freq["x x"] == 2
    assert freq["york"] == 2  # inside "new york" counts too
    assert freq["new york"] == 1


def test_freq_below_link_is_consistency_error():
    with pytest.raises(KbConsistencyError):
        build_anchor_dictionary([occ(1, 2, "foo"), occ(1, 2, "foo")], [tokenize("foo")])


def test_redirect_titles_need_links_to_survive():
    pages = [art(1, "Sun", "plain text"), RawPage(2, "Sol", PageKind.REDIRECT, redirect_to="Sun"),
             art(3, "Src", "[[Sol|sol]] [[Sun|sol]] sun")]
    kb = build_kb(pages)
    assert kb.lookup_anchor("sol").senses[0].page == 1
    assert kb.lookup_anchor("sun") is None  # title variant never linked


def test_trie_matches():
    trie = TokenTrie(["jaguar", "jaguar cars", "a b c d e f", "a b c d e f g"])
    assert list(trie.matches_at(["jaguar", "cars"], 0)) == [(1, "jaguar"), (2, "jaguar cars")]
    assert list(trie.matches_at("a b c d e f g".split(), 0)) == [(6, "a b c d e f")]


# -- catalog and graph -----------------------------------------------------------

def test_catalog_articles_only():
    pages = [art(i, f"A{i}") for i in range(5)] + [
        RawPage(5, "R1", PageKind.REDIRECT, redirect_to="A0"),
        RawPage(6, "R2", PageKind.REDIRECT, redirect_to="A1"),
        RawPage(7, "L", PageKind.LIST, "")]
    cat = build_page_catalog(pages)
    assert len(cat) == 5 and cat.id_of("A3") == 3 and cat.title(4) == "A4"
    assert len(build_page_catalog([])) == 0
    with pytest.raises(CorpusError):
        build_page_catalog([art(1, "A"), art(2, "A")])
    with pytest.raises(CorpusError):
        build_page_catalog([art(1, "A"), art(1, "B")])


def test_inlink_graph_dedup_and_self_links():
    cat = Catalog(PageRecord(i, f"P{i}") for i in range(1, 6))
    occs = [occ(1, 2, "x"), occ(1, 2, "x"), occ(1, 1, "x"), occ(3, 4, "x"), occ(2, 4, "x"), occ(5, 4, "x")]
    g = build_inlink_graph(occs, cat)
    assert g.in_links[2] == (1,)
    assert g.in_links[1] == ()
    assert g.in_links[4] == (2, 3, 5)
    assert g.n_edges == 4


def test_stats_on_16_page_fixture():
    graph = fixture16_graph()
    cat = Catalog(PageRecord(p, f"P{p}") for p in FIXTURE16_IN)
    kb = KnowledgeBase(cat, {}, graph)
    edges = sum(len(v) for v in FIXTURE16_IN.values())  # brute-force edge count
    assert edges == 48
    st = kb.stats()
    assert (st.n_pages, st.n_edges, st.avg_in_degree) == (16, 48, 3.0)


def test_build_report_counts_dropped_links():
    pages = [art(1, "A", "[[Nowhere|x]] [[D|y]]"), RawPage(2, "D", PageKind.DISAMBIGUATION, "")]
    report = BuildReport()
    build_kb(pages, report=report)
    assert report.dropped_links == {"missing": 1, "excluded": 1}


# -- persistence ------------------------------------------------------------------

def assert_same_kb(a, b):
    assert a.build_id == b.build_id
    assert a.dictionary == b.dictionary
    assert a.graph.W == b.graph.W and a.graph.in_links == b.graph.in_links
    assert {p.id: p.title for p in a.catalog} == {p.id: p.title for p in b.catalog}
    assert a.stats() == b.stats()


def test_roundtrip(synth_kb, tmp_path):
    path = tmp_path / "kb.wktg"
    save_kb(synth_kb, path)
    loaded = load_kb(path)
    assert_same_kb(synth_kb, loaded)
    key = next(k for k, e in synth_kb.dictionary.items() if len(e.senses) > 1)
    assert loaded.lookup_anchor(key).senses == synth_kb.lookup_anchor(key).senses


def test_save_is_deterministic(synth_kb, tmp_path):
    save_kb(synth_kb, tmp_path / "a")
    save_kb(synth_kb, tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


@pytest.fixture
def index_bytes(synth_kb, tmp_path):
    path = tmp_path / "kb.wktg"
    save_kb(synth_kb, path)
    return path, path.read_bytes()


def test_bad_magic(index_bytes):
    path, data = index_bytes
    path.write_bytes(b"NOPE" + data[4:])
    with pytest.raises(IndexFormatError, match="magic"):
        load_kb(path)


def test_major_version_mismatch(index_bytes):
    path, data = index_bytes
    path.write_bytes(data[:4] + struct.pack("<H", 99) + data[6:])
    with pytest.raises(IndexFormatError, match="version"):
        load_kb(path)


@pytest.mark.parametrize("cut", [3, 12, 40, -1])
def test_truncation(index_bytes, cut):
    path, data = index_bytes
    path.write_bytes(data[:cut])
    with pytest.raises(IndexFormatError):
        load_kb(path)


def test_checksum_failure(index_bytes):
    path, data = index_bytes
    pos = len(data) // 2
    path.write_bytes(data[:pos] + bytes([data[pos] ^ 0xFF]) + data[pos + 1:])
    with pytest.raises(IndexFormatError):
        load_kb(path)


def test_trailing_bytes(index_bytes):
    path, data = index_bytes
    path.write_bytes(data + b"\0")
    with pytest.raises(IndexFormatError):
        load_kb(path)
