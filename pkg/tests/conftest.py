from __future__ import annotations

import pytest

from wikitag.corpus import corpus_build_id, write_corpus
from wikitag.index_io import save_kb
from wikitag.kb import build_kb
from wikitag.synth import SynthParams, generate

_acceptance: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): one of the numbered acceptance criteria")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None and (report.when == "call" or report.outcome != "passed"):
        n, title = marker.args
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        prev = _acceptance.get(n)
        if prev is None or prev[0] == "PASS":
            _acceptance[n] = ("PASS" if report.passed else "FAIL", title, detail)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        status, title, detail = _acceptance[n]
        line = f"[{status}] criterion {n:2d}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))


@pytest.fixture(scope="session")
def synth():
    return generate(SynthParams(seed=1))


@pytest.fixture(scope="session")
def synth_kb(synth):
    return build_kb(synth.pages, build_id="synth-1")


@pytest.fixture(scope="session")
def synth_files(synth, tmp_path_factory):
    """Corpus and index files on disk for CLI and service tests."""
    d = tmp_path_factory.mktemp("synth")
    corpus = d / "corpus.jsonl"
    write_corpus(synth.pages, corpus)
    kb = build_kb(synth.pages, build_id=corpus_build_id(corpus))
    index = d / "kb.wktg"
    save_kb(kb, index)
    return corpus, index, kb
