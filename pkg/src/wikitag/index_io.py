"""Binary persistence of a KnowledgeBase (layout documented in docs/INDEX_FORMAT.md)."""
from __future__ import annotations

import io
import struct
import zlib
from pathlib import Path

from .kb import AnchorEntry, Catalog, InLinkGraph, KnowledgeBase, PageRecord, SenseCandidate

MAGIC = b"WKTG"
FORMAT_MAJOR = 1
FORMAT_MINOR = 0

_HEADER = struct.Struct("<4sHHI")
_SECTION = struct.Struct("<4sQI")
_SECTION_ORDER = (b"META", b"CATL", b"DICT", b"GRPH", b"STAT")


class IndexFormatError(Exception):
    pass


class _Writer:
    def __init__(self) -> None:
        self.buf = io.BytesIO()

    def u8(self, v: int) -> None:
        self.buf.write(struct.pack("<B", v))

    def u32(self, v: int) -> None:
        self.buf.write(struct.pack("<I", v))

    def u64(self, v: int) -> None:
        self.buf.write(struct.pack("<Q", v))

    def f64(self, v: float) -> None:
        self.buf.write(struct.pack("<d", v))

    def str(self, s: str) -> None:
        raw = s.encode("utf-8")
        self.u32(len(raw))
        self.buf.write(raw)

    def varint(self, v: int) -> None:
        while True:
            b = v & 0x7F
            v >>= 7
            if v:
                self.buf.write(bytes((b | 0x80,)))
            else:
                self.buf.write(bytes((b,)))
                return

    def getvalue(self) -> bytes:
        return self.buf.getvalue()


class _Reader:
    def __init__(self, data: bytes, section: str):
        self.data = data
        self.pos = 0
        self.section = section

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError(f"section {self.section}: truncated payload")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def str(self) -> str:
        return self._take(self.u32()).decode("utf-8")

    def varint(self) -> int:
        shift = result = 0
        while True:
            b = self.u8()
            result |= (b & 0x7F) << shift
            if not b & 0x80:
                return result
            shift += 7

    def done(self) -> None:
        if self.pos != len(self.data):
            raise IndexFormatError(f"section {self.section}: {len(self.data) - self.pos} trailing bytes")


def _encode(kb: KnowledgeBase) -> dict[bytes, bytes]:
    meta = _Writer()
    meta.str(kb.build_id)
    meta.u32(kb.min_link)
    meta.f64(kb.min_lp)

    catl = _Writer()
    pages = sorted(kb.catalog, key=lambda p: p.id)
    catl.u32(len(pages))
    for p in pages:
        catl.u64(p.id)
        catl.str(p.title)

    dct = _Writer()
    dct.u32(len(kb.dictionary))
    for key in sorted(kb.dictionary):
        e = kb.dictionary[key]
        dct.str(e.text)
        dct.u64(e.freq)
        dct.u64(e.link)
        dct.u32(len(e.senses))
        for s in e.senses:
            dct.u64(s.page)
            dct.u64(s.link_count)

    grph = _Writer()
    grph.u64(kb.graph.W)
    grph.u32(len(kb.graph.in_links))
    for page in sorted(kb.graph.in_links):
        lst = kb.graph.in_links[page]
        grph.u64(page)
        grph.u32(len(lst))
        prev = 0
        for src in lst:  # ascending, so deltas are non-negative
            grph.varint(src - prev)
            prev = src

    st = kb.stats()
    stat = _Writer()
    stat.u64(st.n_pages)
    stat.u64(st.n_anchors)
    stat.u64(st.n_edges)
    stat.f64(st.avg_senses_per_anchor)
    stat.f64(st.avg_in_degree)

    return {b"META": meta.getvalue(), b"CATL": catl.getvalue(), b"DICT": dct.getvalue(),
            b"GRPH": grph.getvalue(), b"STAT": stat.getvalue()}


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    sections = _encode(kb)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_MAJOR, FORMAT_MINOR, len(_SECTION_ORDER)))
        for tag in _SECTION_ORDER:
            payload = sections[tag]
            fh.write(_SECTION.pack(tag, len(payload), zlib.crc32(payload)))
            fh.write(payload)


def _read_sections(data: bytes) -> dict[bytes, bytes]:
    if len(data) < _HEADER.size:
        raise IndexFormatError("file too short for header")
    magic, major, minor, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}, not a wikitag index")
    if major != FORMAT_MAJOR:
        raise IndexFormatError(f"index format version {major}.{minor} unsupported (need {FORMAT_MAJOR}.x)")
    pos = _HEADER.size
    sections: dict[bytes, bytes] = {}
    for _ in range(count):
        if pos + _SECTION.size > len(data):
            raise IndexFormatError("truncated section header")
        tag, length, crc = _SECTION.unpack_from(data, pos)
        pos += _SECTION.size
        payload = data[pos:pos + length]
        if len(payload) != length:
            raise IndexFormatError(f"section {tag.decode(errors='replace')}: truncated ({len(payload)}/{length} bytes)")
        if zlib.crc32(payload) != crc:
            raise IndexFormatError(f"section {tag.decode(errors='replace')}: checksum mismatch")
        sections[tag] = payload
        pos += length
    if pos != len(data):
        raise IndexFormatError(f"{len(data) - pos} unexpected bytes after the last section")
    missing = [t.decode() for t in _SECTION_ORDER if t not in sections]
    if missing:
        raise IndexFormatError(f"missing sections: {', '.join(missing)}")
    return sections


def load_kb(path: str | Path) -> KnowledgeBase:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IndexFormatError(f"cannot read index {path}: {exc}") from exc
    sec = _read_sections(data)

    r = _Reader(sec[b"META"], "META")
    build_id, min_link, min_lp = r.str(), r.u32(), r.f64()
    r.done()

    r = _Reader(sec[b"CATL"], "CATL")
    catalog = Catalog(PageRecord(r.u64(), r.str()) for _ in range(r.u32()))
    r.done()

    r = _Reader(sec[b"DICT"], "DICT")
    dictionary: dict[str, AnchorEntry] = {}
    for _ in range(r.u32()):
        text, freq, link = r.str(), r.u64(), r.u64()
        senses = []
        for _ in range(r.u32()):
            page, n = r.u64(), r.u64()
            senses.append(SenseCandidate(page, n, n / link))
        dictionary[text] = AnchorEntry(text, freq, link, tuple(senses))
    r.done()

    r = _Reader(sec[b"GRPH"], "GRPH")
    W = r.u64()
    in_links: dict[int, list[int]] = {}
    for _ in range(r.u32()):
        page = r.u64()
        lst, prev = [], 0
        for _ in range(r.u32()):
            prev += r.varint()
            lst.append(prev)
        in_links[page] = lst
    r.done()

    kb = KnowledgeBase(catalog, dictionary, InLinkGraph(W, in_links), build_id, min_link, min_lp)
    r = _Reader(sec[b"STAT"], "STAT")
    n_pages, n_anchors, n_edges = r.u64(), r.u64(), r.u64()
    r.f64(), r.f64()
    r.done()
    st = kb.stats()
    if (n_pages, n_anchors, n_edges) != (st.n_pages, st.n_anchors, st.n_edges):
        raise IndexFormatError("stats section disagrees with index contents")
    return kb
