"""Shared test fixtures: hand-built KBs, random toy corpora and brute-force oracles.

The oracles here are written independently of the package: they work from
explicit Python sets and loops rather than the package's helpers.
"""
from __future__ import annotations

import math
import random

from wikitag.corpus import PageKind, RawPage
from wikitag.kb import AnchorEntry, Catalog, InLinkGraph, KnowledgeBase, PageRecord, SenseCandidate

# -- 16-page fixture graph (48 edges) -----------------------------------------

FIXTURE16_IN = {
    0: [1, 2, 3, 4],
    1: [2, 3],  # |in|=2, shares {2,3} with page 0: rel = 2/3
    2: [5, 6, 7],
    3: [5, 6, 7],  # identical in-set to page 2: rel = 1
    4: [8, 9, 10],  # disjoint from page 2: rel = 0
    5: [0, 1, 2, 11],
    6: [0, 12, 13],
    7: [1, 4, 14, 15],
    8: [0, 2, 4, 6],
    9: [3, 5, 7, 11, 13],
    10: [9, 11],
    11: [10, 12, 14],
    12: [],  # no in-links: rel = 0 with everything else
    13: [1, 2, 3],
    14: [0, 15],
    15: [12, 13, 14],
}


def fixture16_graph() -> InLinkGraph:
    return InLinkGraph(16, FIXTURE16_IN)


def oracle_relatedness(in_a, in_b, W: int, same: bool = False) -> float:
    """Formula evaluated with a hand-rolled intersection count and base-2 logs."""
    if same:
        return 1.0
    a, b = list(in_a), list(in_b)
    common = 0
    for x in a:
        for y in b:
            if x == y:
                common += 1
    if not a or not b or common == 0:
        return 0.0
    big, small = max(len(a), len(b)), min(len(a), len(b))
    denom = math.log2(W) - math.log2(small)
    if denom <= 0:
        return 0.0
    d = (math.log2(big) - math.log2(common)) / denom
    return min(1.0, max(0.0, 1.0 - d))


# -- hand-built KBs ------------------------------------------------------------

def make_kb(titles: dict[int, str], in_links: dict[int, list[int]],
            anchors: dict[str, tuple[int, int, dict[int, int]]]) -> KnowledgeBase:
    """anchors: key -> (freq, link, {page: link count}); commonness derived from the counts."""
    catalog = Catalog(PageRecord(pid, t) for pid, t in titles.items())
    dictionary = {}
    for key, (freq, link, counts) in anchors.items():
        total = sum(counts.values())
        assert total == link
        senses = tuple(SenseCandidate(p, n, n / total)
                       for p, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
        dictionary[key] = AnchorEntry(key, freq, link, senses)
    graph = InLinkGraph(len(titles), {p: sorted(in_links.get(p, [])) for p in titles})
    return KnowledgeBase(catalog, dictionary, graph, build_id="fixture")


def mercury_kb() -> KnowledgeBase:
    """'mercury' is mostly the element (0.7) but only the planet relates to the Sun."""
    titles = {1: "Mercury (element)", 2: "Mercury (planet)", 3: "Sun"}
    titles.update({i: f"Filler {i}" for i in range(4, 11)})
    in_links = {1: [9, 10], 2: [4, 5, 6, 7], 3: [4, 5, 6, 8]}
    anchors = {
        "mercury": (20, 10, {1: 7, 2: 3}),
        "sun": (10, 5, {3: 5}),
        "orbits": (200, 2, {4: 2}),
    }
    return make_kb(titles, in_links, anchors)


def maradona_kb() -> KnowledgeBase:
    """Two strongly linked, related entities and two common words with weak links."""
    titles = {1: "Diego Maradona", 2: "Mexico", 3: "Mexico national football team",
              4: "Korean won", 5: "Against (album)"}
    titles.update({i: f"Filler {i}" for i in range(6, 21)})
    in_links = {
        1: [6, 7, 8, 9, 10],
        2: [11, 12, 13, 14],
        3: [6, 7, 8, 15],
        4: [11, 16],
        5: [15, 17],
    }
    anchors = {
        "diego maradona": (50, 45, {1: 45}),
        "mexico": (100, 60, {2: 40, 3: 20}),
        "won": (1000, 10, {4: 10}),
        "against": (2000, 4, {5: 4}),
    }
    return make_kb(titles, in_links, anchors)


# -- random toy corpora --------------------------------------------------------

_SYLLABLES = "ka lo mi nu pe ra si to vu ze".split()


def random_corpus(rng: random.Random, *, max_articles: int = 10) -> list[RawPage]:
    """A small well-formed corpus: articles with links, plus some redirects and a disambiguation page."""
    n = rng.randint(3, max_articles)
    words = sorted({rng.choice(_SYLLABLES) + rng.choice(_SYLLABLES) for _ in range(12)})
    titles = []
    for i in range(n):
        base = f"{rng.choice(words).capitalize()} {i}"
        titles.append(base + (" (thing)" if rng.random() < 0.3 else ""))
    # surfaces: 1-3 word phrases, each tied to 1-3 candidate targets
    surfaces = {}
    for _ in range(rng.randint(3, 8)):
        phrase = " ".join(rng.choice(words) for _ in range(rng.randint(1, 3)))
        surfaces[phrase] = rng.sample(range(n), rng.randint(1, min(3, n)))
    phrases = sorted(surfaces)
    redirects = {}
    for i in range(n):
        if rng.random() < 0.25:
            redirects[f"Alias {i}"] = titles[i]

    pages = []
    for i in range(n):
        items = []
        for _ in range(rng.randint(5, 30)):
            r = rng.random()
            if r < 0.3:
                phrase = rng.choice(phrases)
                target = titles[rng.choice(surfaces[phrase])]
                if redirects and rng.random() < 0.1:
                    alias = rng.choice(sorted(redirects))
                    target = alias
                items.append(f"[[{target}|{phrase}]]")
            elif r < 0.35:
                items.append(f"[[{titles[rng.randrange(n)]}]]")
            elif r < 0.6:
                items.append(rng.choice(phrases))
            else:
                items.append(rng.choice(words))
        pages.append(RawPage(i + 1, titles[i], PageKind.ARTICLE, " ".join(items)))
    next_id = n + 1
    for alias, target in sorted(redirects.items()):
        pages.append(RawPage(next_id, alias, PageKind.REDIRECT, redirect_to=target))
        next_id += 1
    if rng.random() < 0.5:
        body = " ".join(f"[[{t}]]" for t in titles[:3])
        pages.append(RawPage(next_id, "Things (disambiguation)", PageKind.DISAMBIGUATION, body))
    return pages


def random_text(rng: random.Random, kb: KnowledgeBase, n_items: int) -> str:
    """Words drawn from the KB's anchors with some filler in between."""
    keys = sorted(kb.dictionary)
    out = []
    for _ in range(n_items):
        if keys and rng.random() < 0.6:
            out.append(rng.choice(keys))
        else:
            out.append(rng.choice(["the", "and", "of", "then", "xyzzy"]))
    return " ".join(out)


# -- disambiguation oracle ----------------------------------------------------

def naive_dt(scores: list[tuple[int, float, float]], epsilon: float, *, n_anchors: int = 2,
             fallback: bool = False):
    """scores: (page, commonness, rel_a). Applies the rule by explicit enumeration."""
    if not scores:
        return None
    best = scores[0][2]
    for _, _, r in scores:
        if r > best:
            best = r
    if best <= 0:
        if fallback and n_anchors == 1:
            members = list(scores)
        else:
            return None
    else:
        members = [s for s in scores if s[2] >= (1 - epsilon) * best]
    winner = None
    for cand in members:
        if winner is None:
            winner = cand
            continue
        page, comm, rel = cand
        wp, wc, wr = winner
        if comm > wc or (comm == wc and (rel > wr or (rel == wr and page < wp))):
            winner = cand
    return winner[0]


def oracle_decide(entries, kb: KnowledgeBase, tau: float, epsilon: float, fallback: bool = False):
    """anchor key -> (choice, rel_score, coherence) for one group of distinct anchors, from scratch."""
    graph = kb.graph

    def rel(p, q):
        return oracle_relatedness(graph.in_links[p], graph.in_links[q], graph.W, same=p == q)

    distinct = {e.text: e for e in entries}
    kept = {k: [s for s in e.senses if s.commonness >= tau] for k, e in distinct.items()}
    out = {}
    for key in distinct:
        scores = []
        for s in kept[key]:
            total = 0.0
            for other in sorted(distinct):
                if other == key:
                    continue
                vs = kept[other]
                if vs:
                    total += sum(rel(v.page, s.page) * v.commonness for v in vs) / len(vs)
            scores.append((s.page, s.commonness, total))
        choice = naive_dt(scores, epsilon, n_anchors=len(distinct), fallback=fallback)
        if choice is None:
            score = max((r for _, _, r in scores), default=0.0)
        else:
            score = next(r for p, _, r in scores if p == choice)
        out[key] = [choice, score]
    assigned = sorted({c for c, _ in out.values() if c is not None})
    for key, (choice, score) in out.items():
        coh = None
        if choice is not None:
            others = [p for p in assigned if p != choice]
            coh = sum(rel(p, choice) for p in others) / (len(assigned) - 1) if others else 0.0
        out[key] = (choice, score, coh)
    return out
