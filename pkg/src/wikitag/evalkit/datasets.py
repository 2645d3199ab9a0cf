"""Wikipedia-style evaluation datasets cut from the corpus itself.

Three styles: ``disamb`` (one ambiguous gold link per ~30-word fragment),
``annot`` (all gold links of a fragment, expanded to every occurrence of an
anchor the page links elsewhere) and ``long`` (whole articles, same gold).
"""
from __future__ import annotations

import json
import logging
import random
from bisect import bisect_left
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ..corpus import LinkOccurrence, PageKind, PlainBody, RawPage, extract_links, render_body, resolve_redirects
from ..kb import KnowledgeBase
from ..spotter import spot
from ..text import Token, anchor_key

log = logging.getLogger(__name__)

DATASET_FORMAT = "wikitag-dataset"
DATASET_VERSION = 1
STYLES = ("disamb", "annot", "long")


class DatasetError(Exception):
    pass


@dataclass(frozen=True)
class GoldSpan:
    start: int
    end: int
    page: int
    anchor: str


@dataclass(frozen=True)
class DisambCase:
    text: str
    start: int
    end: int
    page: int
    anchor: str
    source_page: int = -1


@dataclass(frozen=True)
class AnnotCase:
    text: str
    gold: tuple[GoldSpan, ...]
    source_page: int = -1


@dataclass
class Dataset:
    style: str
    build_id: str
    cases: list
    params: dict = field(default_factory=dict)
    skipped_conflicts: int = 0


@dataclass
class _Article:
    page: RawPage
    plain: PlainBody
    tokens: list[Token]
    links: list[tuple[LinkOccurrence, int, int]]  # occurrence, first token, last token (inclusive)


def _prepare(pages: Sequence[RawPage]) -> list[_Article]:
    titlemap = resolve_redirects(pages)
    out = []
    for page in sorted((p for p in pages if p.kind is PageKind.ARTICLE), key=lambda p: p.id):
        plain = render_body(page.body)
        tokens = plain.tokens()
        starts = [t.start for t in tokens]
        links = []
        for occ in extract_links(page, titlemap, plain=plain):
            a, b = occ.char_span
            # link edges are token boundaries: the surface's tokens are exactly those starting in [a, b)
            first, last = bisect_left(starts, a), bisect_left(starts, b) - 1
            if first <= last:
                links.append((occ, first, last))
        out.append(_Article(page, plain, tokens, links))
    return out


def _expand_to_links(lo: int, hi: int, art: _Article) -> tuple[int, int]:
    """Grow the half-open token window [lo, hi) so that no link is cut in two."""
    changed = True
    while changed:
        changed = False
        for _, first, last in art.links:
            if first < hi and last >= lo and (first < lo or last >= hi):
                lo, hi = min(lo, first), max(hi, last + 1)
                changed = True
    return lo, hi


def _window(art: _Article, lo: int, hi: int) -> tuple[str, int]:
    start = art.tokens[lo].start
    return art.plain.text[start:art.tokens[hi - 1].end], start


def gen_disamb(pages: Sequence[RawPage], kb: KnowledgeBase, n: int,
               fragment_words: int = 30, seed: int = 0) -> list[DisambCase]:
    """Fragments centred on a link whose anchor is ambiguous; gold is that link's target.

    A window is rejected unless the spotter, run on the fragment alone,
    yields the target as a mention (otherwise no system could attempt it).
    """
    articles = _prepare(pages)
    candidates = []
    for ai, art in enumerate(articles):
        for li, (occ, _, _) in enumerate(art.links):
            entry = kb.dictionary.get(anchor_key(occ.anchor_text))
            if entry is not None and len(entry.senses) > 1 and any(s.page == occ.target_page for s in entry.senses):
                candidates.append((ai, li))
    rng = random.Random(seed)
    rng.shuffle(candidates)

    cases: list[DisambCase] = []
    for ai, li in candidates:
        if len(cases) >= n:
            break
        art = articles[ai]
        occ, first, last = art.links[li]
        span_len = last - first + 1
        before = max(0, fragment_words - span_len) // 2
        lo = max(0, first - before)
        hi = min(len(art.tokens), lo + max(fragment_words, span_len))
        lo = max(0, min(lo, hi - fragment_words))
        lo, hi = _expand_to_links(lo, hi, art)
        text, offset = _window(art, lo, hi)
        target = (art.tokens[first].start - offset, art.tokens[last].end - offset)
        key = anchor_key(occ.anchor_text)
        hit = next((m for m in spot(text, kb) if m.anchor.text == key and m.char_span == target), None)
        if hit is None:
            continue
        cases.append(DisambCase(text, hit.char_span[0], hit.char_span[1], occ.target_page, key, art.page.id))
    if len(cases) < n:
        log.warning("disamb dataset: corpus exhausted after %d of %d cases", len(cases), n)
    return cases


def _gold_for_window(art: _Article, lo: int, hi: int, offset: int, conflicts: Counter) -> tuple[GoldSpan, ...]:
    targets: dict[str, set[int]] = defaultdict(set)
    for occ, _, _ in art.links:
        key = anchor_key(occ.anchor_text)
        if key:
            targets[key].add(occ.target_page)

    taken: list[tuple[int, int]] = []
    gold: list[tuple[int, int, int, str]] = []  # token lo, token hi, page, anchor
    for occ, first, last in art.links:
        if lo <= first and last < hi:
            gold.append((first, last, occ.target_page, anchor_key(occ.anchor_text)))
            taken.append((first, last))

    norms = [t.norm for t in art.tokens[lo:hi]]
    expandable = sorted((k for k, t in targets.items() if len(t) == 1), key=lambda k: (-k.count(" "), k))
    for key, t in targets.items():
        if len(t) > 1:
            conflicts[key] += 1
    for key in expandable:
        page = next(iter(targets[key]))
        seq = key.split(" ")
        i = 0
        while i + len(seq) <= len(norms):
            if norms[i:i + len(seq)] == seq:
                first, last = lo + i, lo + i + len(seq) - 1
                if not any(a <= last and first <= b for a, b in taken):
                    gold.append((first, last, page, key))
                    taken.append((first, last))
                i += len(seq)
            else:
                i += 1

    toks = art.tokens
    spans = sorted((toks[a].start - offset, toks[b].end - offset, p, k) for a, b, p, k in gold)
    return tuple(GoldSpan(*s) for s in spans)


def gen_annot(pages: Sequence[RawPage], kb: KnowledgeBase, n: int,
              fragment_words: int = 30, seed: int = 0,
              conflicts: Counter | None = None) -> list[AnnotCase]:
    articles = [a for a in _prepare(pages) if a.tokens]
    conflicts = conflicts if conflicts is not None else Counter()
    rng = random.Random(seed)
    seen: set[tuple[int, int]] = set()
    cases: list[AnnotCase] = []
    attempts = 0
    while articles and len(cases) < n and attempts < 50 * n:
        attempts += 1
        ai = rng.randrange(len(articles))
        art = articles[ai]
        lo = rng.randrange(max(1, len(art.tokens) - fragment_words + 1))
        if (ai, lo) in seen:
            continue
        seen.add((ai, lo))
        lo, hi = _expand_to_links(lo, min(len(art.tokens), lo + fragment_words), art)
        text, offset = _window(art, lo, hi)
        cases.append(AnnotCase(text, _gold_for_window(art, lo, hi, offset, conflicts), art.page.id))
    if len(cases) < n:
        log.warning("annot dataset: corpus exhausted after %d of %d cases", len(cases), n)
    return cases


def gen_long(pages: Sequence[RawPage], kb: KnowledgeBase, n: int,
             min_links: int = 10, seed: int = 0,
             conflicts: Counter | None = None) -> list[AnnotCase]:
    conflicts = conflicts if conflicts is not None else Counter()
    eligible = [a for a in _prepare(pages) if a.tokens and len(a.links) >= min_links]
    rng = random.Random(seed)
    chosen = rng.sample(eligible, min(n, len(eligible)))
    if len(chosen) < n:
        log.warning("long dataset: only %d articles with >= %d links", len(chosen), min_links)
    cases = []
    for art in chosen:
        text, offset = _window(art, 0, len(art.tokens))
        cases.append(AnnotCase(text, _gold_for_window(art, 0, len(art.tokens), offset, conflicts), art.page.id))
    return cases


def write_dataset(path: str | Path, ds: Dataset) -> None:
    header = {"format": DATASET_FORMAT, "version": DATASET_VERSION, "style": ds.style,
              "build_id": ds.build_id, "params": ds.params, "n_cases": len(ds.cases)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for case in ds.cases:
            rec = asdict(case)
            if isinstance(case, AnnotCase):
                rec["gold"] = [asdict(g) for g in case.gold]
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def read_dataset(path: str | Path) -> Dataset:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    if not lines:
        raise DatasetError(f"{path}: empty file, no header")
    header = json.loads(lines[0])
    if header.get("format") != DATASET_FORMAT or header.get("style") not in STYLES:
        raise DatasetError(f"{path}: not a {DATASET_FORMAT} file")
    if header.get("version") != DATASET_VERSION:
        raise DatasetError(f"{path}: unsupported dataset version {header.get('version')}")
    cases: list = []
    for line_no, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        rec = json.loads(line)
        try:
            if header["style"] == "disamb":
                cases.append(DisambCase(**rec))
            else:
                gold = tuple(GoldSpan(**g) for g in rec.pop("gold"))
                cases.append(AnnotCase(gold=gold, **rec))
        except (TypeError, KeyError) as exc:
            raise DatasetError(f"{path}:{line_no}: bad case record: {exc}") from exc
    return Dataset(header["style"], header.get("build_id", ""), cases, header.get("params", {}))
