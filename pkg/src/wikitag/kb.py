"""Anchor dictionary, page catalog and in-link graph."""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .corpus import (
    CorpusError,
    LinkOccurrence,
    PageKind,
    RawPage,
    extract_links,
    render_body,
    resolve_redirects,
)
from .text import MAX_ANCHOR_TOKENS, Token, anchor_key, strip_qualifier

log = logging.getLogger(__name__)

DEFAULT_MIN_LINK = 2
DEFAULT_MIN_LP = 0.001


class KbConsistencyError(Exception):
    pass


@dataclass(frozen=True)
class PageRecord:
    id: int
    title: str
    kind: PageKind = PageKind.ARTICLE


@dataclass(frozen=True)
class SenseCandidate:
    page: int
    link_count: int
    commonness: float


@dataclass(frozen=True)
class AnchorEntry:
    text: str
    freq: int
    link: int
    senses: tuple[SenseCandidate, ...]  # descending commonness, then page id

    @property
    def lp(self) -> float:
        return self.link / self.freq

    @property
    def n_tokens(self) -> int:
        return self.text.count(" ") + 1


@dataclass(frozen=True)
class KbStats:
    n_pages: int
    n_anchors: int
    avg_senses_per_anchor: float
    avg_in_degree: float
    n_edges: int = 0


class Catalog:
    def __init__(self, pages: Iterable[PageRecord] = ()):
        self.by_id: dict[int, PageRecord] = {}
        self.by_title: dict[str, int] = {}
        for p in pages:
            self.add(p)

    def add(self, page: PageRecord) -> None:
        if page.id in self.by_id:
            raise CorpusError(f"duplicate page id {page.id}")
        if page.title in self.by_title:
            raise CorpusError(f"duplicate page title {page.title!r}")
        self.by_id[page.id] = page
        self.by_title[page.title] = page.id

    def __len__(self) -> int:
        return len(self.by_id)

    def __contains__(self, page_id: int) -> bool:
        return page_id in self.by_id

    def __iter__(self) -> Iterator[PageRecord]:
        return iter(self.by_id.values())

    def get(self, page_id: int) -> PageRecord | None:
        return self.by_id.get(page_id)

    def id_of(self, title: str) -> int | None:
        return self.by_title.get(title)

    def title(self, page_id: int) -> str:
        return self.by_id[page_id].title


class InLinkGraph:
    """Per-page ascending in-link lists plus the catalog size W."""

    def __init__(self, n_pages: int, in_links: Mapping[int, Sequence[int]]):
        self.W = n_pages
        self.in_links: dict[int, tuple[int, ...]] = {p: tuple(v) for p, v in in_links.items()}
        self._sets: dict[int, frozenset[int]] = {p: frozenset(v) for p, v in self.in_links.items()}

    def __contains__(self, page: int) -> bool:
        return page in self.in_links

    def in_set(self, page: int) -> frozenset[int]:
        return self._sets[page]

    def in_degree(self, page: int) -> int:
        return len(self.in_links[page])

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self.in_links.values())


class TokenTrie:
    """Prefix tree over lowercased token sequences, capped at MAX_ANCHOR_TOKENS."""

    __slots__ = ("root",)
    _END = ""  # no token is empty, so this never clashes with a child key

    def __init__(self, keys: Iterable[str] = ()):
        self.root: dict = {}
        for k in keys:
            self.add(k)

    def add(self, key: str) -> None:
        node = self.root
        for tok in key.split(" "):
            node = node.setdefault(tok, {})
        node[self._END] = key

    def matches_at(self, norms: Sequence[str], i: int) -> Iterator[tuple[int, str]]:
        """Yield (end_exclusive, key) for every key starting at token ``i``."""
        node = self.root
        for j in range(i, min(i + MAX_ANCHOR_TOKENS, len(norms))):
            node = node.get(norms[j])
            if node is None:
                return
            key = node.get(self._END)
            if key is not None:
                yield j + 1, key


def _valid_anchor_text(key: str) -> bool:
    if not key:
        return False
    if key.count(" ") + 1 > MAX_ANCHOR_TOKENS:
        return False
    compact = key.replace(" ", "")
    return len(compact) > 1 and not compact.isdigit()


def count_freq(bodies: Iterable[Sequence[Token]], anchors: Iterable[str]) -> Counter:
    """Non-overlapping left-to-right occurrence counts of each anchor, one trie pass per body."""
    trie = TokenTrie(anchors)
    freq: Counter = Counter()
    for tokens in bodies:
        norms = [t.norm for t in tokens]
        last_end: dict[str, int] = {}
        for i in range(len(norms)):
            for end, key in trie.matches_at(norms, i):
                if last_end.get(key, 0) <= i:
                    freq[key] += 1
                    last_end[key] = end
    return freq


def build_page_catalog(pages: Iterable[RawPage]) -> Catalog:
    cat = Catalog()
    titles: set[str] = set()
    ids: set[int] = set()
    for p in pages:
        if p.id in ids:
            raise CorpusError(f"duplicate page id {p.id}")
        if p.title in titles:
            raise CorpusError(f"duplicate page title {p.title!r}")
        ids.add(p.id)
        titles.add(p.title)
        if p.kind is PageKind.ARTICLE:
            cat.add(PageRecord(p.id, p.title))
    return cat


def build_inlink_graph(occurrences: Iterable[LinkOccurrence], catalog: Catalog) -> InLinkGraph:
    edges: dict[int, set[int]] = {p.id: set() for p in catalog}
    for occ in occurrences:
        if occ.source_page == occ.target_page:
            continue
        if occ.source_page in catalog and occ.target_page in catalog:
            edges[occ.target_page].add(occ.source_page)
    return InLinkGraph(len(catalog), {p: sorted(src) for p, src in edges.items()})


def build_anchor_dictionary(occurrences: Sequence[LinkOccurrence],
                            bodies: Iterable[Sequence[Token]],
                            extra_candidates: Iterable[str] = (),
                            min_link: int = DEFAULT_MIN_LINK,
                            min_lp: float = DEFAULT_MIN_LP) -> dict[str, AnchorEntry]:
    """Anchor text -> entry, after the length/charset, link and lp filters (in that order).

    ``extra_candidates`` are redirect titles and title variants; they enter
    the candidate set but, like any anchor, survive only if linked often enough.
    """
    per_anchor: dict[str, Counter] = defaultdict(Counter)
    for occ in occurrences:
        per_anchor[anchor_key(occ.anchor_text)][occ.target_page] += 1

    candidates = {k for k in per_anchor if _valid_anchor_text(k)}
    candidates.update(k for k in map(anchor_key, extra_candidates) if _valid_anchor_text(k))
    linked = {k for k in candidates if sum(per_anchor[k].values()) >= max(min_link, 1)}

    freq = count_freq(bodies, linked)
    out: dict[str, AnchorEntry] = {}
    for key in sorted(linked):
        counts = per_anchor[key]
        link = sum(counts.values())
        f = freq.get(key, 0)
        if f < link:
            raise KbConsistencyError(f"anchor {key!r}: freq {f} < link {link}")
        if link / f < min_lp:
            continue
        senses = tuple(
            SenseCandidate(page, n, n / link)
            for page, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        )
        out[key] = AnchorEntry(key, f, link, senses)
    return out


def title_variants(title: str) -> list[str]:
    stripped = strip_qualifier(title)
    return [title] if stripped == title or not stripped else [title, stripped]


class KnowledgeBase:
    """Immutable after construction; safe for concurrent readers."""

    def __init__(self, catalog: Catalog, dictionary: dict[str, AnchorEntry],
                 graph: InLinkGraph, build_id: str = "",
                 min_link: int = DEFAULT_MIN_LINK, min_lp: float = DEFAULT_MIN_LP):
        self.catalog = catalog
        self.dictionary = dictionary
        self.graph = graph
        self.build_id = build_id
        self.min_link = min_link
        self.min_lp = min_lp
        self.trie = TokenTrie(dictionary)

    def lookup_anchor(self, text: str) -> AnchorEntry | None:
        return self.dictionary.get(anchor_key(text))

    def title(self, page_id: int) -> str:
        return self.catalog.title(page_id)

    def stats(self) -> KbStats:
        n_anchors = len(self.dictionary)
        n_senses = sum(len(e.senses) for e in self.dictionary.values())
        edges = self.graph.n_edges
        W = len(self.catalog)
        return KbStats(
            n_pages=W,
            n_anchors=n_anchors,
            avg_senses_per_anchor=n_senses / n_anchors if n_anchors else 0.0,
            avg_in_degree=edges / W if W else 0.0,
            n_edges=edges,
        )


@dataclass
class BuildReport:
    n_pages_in: int = 0
    n_occurrences: int = 0
    dropped_links: Counter = field(default_factory=Counter)
    unresolved_redirects: int = 0


def build_kb(pages: Sequence[RawPage], *, build_id: str = "",
             min_link: int = DEFAULT_MIN_LINK, min_lp: float = DEFAULT_MIN_LP,
             report: BuildReport | None = None) -> KnowledgeBase:
    """Full build from parsed pages. Links and text are taken from article bodies only."""
    report = report if report is not None else BuildReport()
    report.n_pages_in = len(pages)
    titlemap = resolve_redirects(pages)
    report.unresolved_redirects = len(titlemap.unresolved)
    catalog = build_page_catalog(pages)

    occurrences: list[LinkOccurrence] = []
    bodies: list[list[Token]] = []
    for page in pages:
        if page.kind is not PageKind.ARTICLE:
            continue
        plain = render_body(page.body)
        bodies.append(plain.tokens())
        occurrences.extend(extract_links(page, titlemap, report.dropped_links, plain))
    report.n_occurrences = len(occurrences)

    extra: list[str] = []
    for page in pages:
        if page.kind is PageKind.ARTICLE:
            extra.extend(title_variants(page.title))
        elif page.kind is PageKind.REDIRECT and page.title in titlemap:
            extra.append(page.title)

    dictionary = build_anchor_dictionary(occurrences, bodies, extra, min_link, min_lp)
    graph = build_inlink_graph(occurrences, catalog)
    log.info("built kb: %d pages, %d anchors, %d edges", len(catalog), len(dictionary), graph.n_edges)
    return KnowledgeBase(catalog, dictionary, graph, build_id, min_link, min_lp)
