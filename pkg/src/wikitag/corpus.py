"""Corpus ingest: line-delimited page records with inline ``[[target|anchor]]`` links."""
from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .text import Token, normalize, tokenize

log = logging.getLogger(__name__)

REDIRECT_DEPTH_LIMIT = 8

LINK_RE = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")


class CorpusError(Exception):
    """Fatal ingest problem (unreadable file, strict-mode parse failure, duplicates)."""


class PageKind(str, Enum):
    ARTICLE = "article"
    REDIRECT = "redirect"
    DISAMBIGUATION = "disambiguation"
    LIST = "list"


@dataclass(frozen=True)
class RawPage:
    id: int
    title: str
    kind: PageKind
    body: str = ""
    redirect_to: str | None = None


@dataclass(frozen=True)
class MarkupLink:
    target: str
    surface: str
    start: int  # span of the surface in the plain text
    end: int


@dataclass(frozen=True)
class PlainBody:
    """A body with link markup stripped. Link spans index into ``text``."""

    text: str
    links: tuple[MarkupLink, ...]

    def tokens(self) -> list[Token]:
        # Link edges are forced token boundaries so that every link surface
        # is a whole token sequence ("[[A|foo]]bar" gives "foo", "bar").
        out: list[Token] = []
        pos = 0
        for link in self.links:
            out.extend(tokenize(self.text[pos:link.start], pos))
            out.extend(tokenize(self.text[link.start:link.end], link.start))
            pos = link.end
        out.extend(tokenize(self.text[pos:], pos))
        return out


@dataclass(frozen=True)
class LinkOccurrence:
    source_page: int
    target_page: int
    anchor_text: str  # normalized surface
    char_span: tuple[int, int]  # in the markup-stripped body
    surface: str = ""


@dataclass
class ParseIssue:
    line_no: int
    message: str


def render_body(body: str) -> PlainBody:
    """Strip link markup. Raises ValueError on nested or unbalanced brackets."""
    parts: list[str] = []
    links: list[MarkupLink] = []
    pos = 0
    plain_len = 0
    for m in LINK_RE.finditer(body):
        chunk = body[pos:m.start()]
        _check_no_brackets(chunk)
        parts.append(chunk)
        plain_len += len(chunk)
        target = m.group(1).strip()
        surface = m.group(2) if m.group(2) is not None else m.group(1)
        if not target:
            raise ValueError(f"empty link target at offset {m.start()}")
        parts.append(surface)
        links.append(MarkupLink(target, surface, plain_len, plain_len + len(surface)))
        plain_len += len(surface)
        pos = m.end()
    tail = body[pos:]
    _check_no_brackets(tail)
    parts.append(tail)
    return PlainBody("".join(parts), tuple(links))


def _check_no_brackets(chunk: str) -> None:
    if "[[" in chunk or "]]" in chunk:
        raise ValueError("malformed or nested link markup")


def page_from_record(obj: object) -> RawPage:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    pid = obj.get("id")
    if not isinstance(pid, int) or isinstance(pid, bool):
        raise ValueError("id must be an integer")
    if pid < 0:
        raise ValueError("id must be non-negative")
    title = obj.get("title")
    if not isinstance(title, str) or not title.strip():
        raise ValueError("title must be a non-empty string")
    try:
        kind = PageKind(obj.get("kind"))
    except ValueError:
        raise ValueError(f"unknown kind {obj.get('kind')!r}") from None
    redirect_to = obj.get("redirect_to")
    if kind is PageKind.REDIRECT:
        if not isinstance(redirect_to, str) or not redirect_to.strip():
            raise ValueError("redirect page without redirect_to")
    elif redirect_to is not None:
        raise ValueError("redirect_to on a non-redirect page")
    body = obj.get("body", "")
    if not isinstance(body, str):
        raise ValueError("body must be a string")
    render_body(body)  # validates markup
    return RawPage(pid, " ".join(title.split()), kind, body, redirect_to and " ".join(redirect_to.split()))


def page_to_record(page: RawPage) -> dict:
    rec: dict = {"id": page.id, "title": page.title, "kind": page.kind.value}
    if page.redirect_to is not None:
        rec["redirect_to"] = page.redirect_to
    rec["body"] = page.body
    return rec


def parse_corpus(path: str | Path, *, strict: bool = False,
                 errors: list[ParseIssue] | None = None) -> Iterator[RawPage]:
    """Yield pages in file order.

    Malformed lines are appended to ``errors`` and skipped, or raise
    CorpusError when ``strict`` is set.
    """
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                page = page_from_record(json.loads(line))
            except (json.JSONDecodeError, ValueError) as exc:
                if strict:
                    raise CorpusError(f"{path}:{line_no}: {exc}") from exc
                log.warning("%s:%d: skipping malformed page: %s", path, line_no, exc)
                if errors is not None:
                    errors.append(ParseIssue(line_no, str(exc)))
                continue
            yield page


def write_corpus(pages: Iterable[RawPage], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for page in pages:
            fh.write(json.dumps(page_to_record(page), ensure_ascii=False) + "\n")


def corpus_build_id(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()[:16]


@dataclass
class TitleMap:
    """Title -> terminal article id, with bookkeeping for titles that did not resolve."""

    ids: dict[str, int]
    unresolved: set[str] = field(default_factory=set)
    excluded: set[str] = field(default_factory=set)  # disambiguation/list pages, or redirects to them

    def get(self, title: str) -> int | None:
        return self.ids.get(" ".join(title.split()))

    def __getitem__(self, title: str) -> int:
        return self.ids[" ".join(title.split())]

    def __contains__(self, title: str) -> bool:
        return self.get(title) is not None

    def __len__(self) -> int:
        return len(self.ids)


def resolve_redirects(pages: Iterable[RawPage], depth_limit: int = REDIRECT_DEPTH_LIMIT) -> TitleMap:
    by_title: dict[str, RawPage] = {}
    seen_ids: set[int] = set()
    for page in pages:
        if page.id in seen_ids:
            raise CorpusError(f"duplicate page id {page.id}")
        if page.title in by_title:
            raise CorpusError(f"duplicate page title {page.title!r}")
        seen_ids.add(page.id)
        by_title[page.title] = page

    tm = TitleMap({})
    for title, page in by_title.items():
        if page.kind is PageKind.ARTICLE:
            tm.ids[title] = page.id
        elif page.kind is not PageKind.REDIRECT:
            tm.excluded.add(title)
    for title, page in by_title.items():
        if page.kind is not PageKind.REDIRECT:
            continue
        cur = page
        for _ in range(depth_limit):
            nxt = by_title.get(cur.redirect_to)
            if nxt is None or nxt.kind is not PageKind.REDIRECT:
                cur = nxt
                break
            cur = nxt
        else:
            cur = None  # chain too long or cyclic
        if cur is None:
            tm.unresolved.add(title)
        elif cur.kind is PageKind.ARTICLE:
            tm.ids[title] = cur.id
        else:
            tm.excluded.add(title)
    return tm


def extract_links(page: RawPage, titlemap: TitleMap,
                  dropped: Counter | None = None,
                  plain: PlainBody | None = None) -> list[LinkOccurrence]:
    """Resolved link occurrences of one page; links to non-articles are dropped.

    ``dropped`` counts skipped links by reason ("missing" / "excluded").
    """
    plain = plain or render_body(page.body)
    out = []
    for link in plain.links:
        target = titlemap.get(link.target)
        if target is None:
            if dropped is not None:
                key = " ".join(link.target.split())
                reason = "excluded" if key in titlemap.excluded else "missing"
                dropped[reason] += 1
            continue
        out.append(LinkOccurrence(page.id, target, normalize(link.surface),
                                  (link.start, link.end), link.surface))
    return out
