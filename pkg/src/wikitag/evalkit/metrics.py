"""Precision/recall for disambiguation, annotation (span + page) and topics (page sets)."""
from __future__ import annotations

import csv
import dataclasses
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ..disambiguation import DisambConfig, disambiguate_dt, disambiguate_mc, disambiguate_random
from ..kb import KnowledgeBase
from ..pipeline import Annotation, PipelineConfig, annotate_auto
from ..pruning import PruneConfig, prune
from ..scoring import RelCache, Relatedness
from ..spotter import SpotMention, spot
from .datasets import AnnotCase, DisambCase

Disambiguator = Callable[[SpotMention, Sequence[SpotMention], KnowledgeBase], "int | None"]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f: float
    tp: int
    n_system: int
    n_gold: int


def prf(tp: int, n_system: int, n_gold: int) -> PRF:
    p = tp / n_system if n_system else 0.0
    r = tp / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f, tp, n_system, n_gold)


@dataclass
class MetricReport:
    families: dict[str, PRF]
    macro_f: dict[str, float] = field(default_factory=dict)
    n_cases: int = 0

    def __getitem__(self, family: str) -> PRF:
        return self.families[family]


# -- disambiguation -------------------------------------------------------

def dt_disambiguator(cfg: DisambConfig = DisambConfig(), cache: RelCache | None = None) -> Disambiguator:
    def run(m, mentions, kb):
        return disambiguate_dt(m, mentions, kb, cfg, Relatedness(kb.graph, cache))
    return run


def mc_disambiguator() -> Disambiguator:
    return lambda m, mentions, kb: disambiguate_mc(m.anchor)


def random_disambiguator(seed: int = 0) -> Disambiguator:
    rng = random.Random(seed)
    return lambda m, mentions, kb: disambiguate_random(m.anchor, rng)


def disamb_outcomes(cases: Iterable[DisambCase], kb: KnowledgeBase,
                    disambiguator: Disambiguator) -> list[int | None]:
    """The page each case's target mention was mapped to (None: NA or not spotted)."""
    out = []
    for case in cases:
        mentions = spot(case.text, kb)
        target = next((m for m in mentions if m.char_span == (case.start, case.end)), None)
        out.append(None if target is None else disambiguator(target, mentions, kb))
    return out


def eval_disamb(cases: Sequence[DisambCase], kb: KnowledgeBase, disambiguator: Disambiguator) -> MetricReport:
    """Precision over attempted (non-NA) cases, recall over all cases."""
    answers = disamb_outcomes(cases, kb, disambiguator)
    attempted = sum(a is not None for a in answers)
    correct = sum(a == c.page for a, c in zip(answers, cases))
    return MetricReport({"disamb": prf(correct, attempted, len(cases))}, n_cases=len(cases))


# -- annotation -----------------------------------------------------------

@dataclass
class _Counts:
    ann_tp: int = 0
    ann_sys: int = 0
    ann_gold: int = 0
    top_tp: int = 0
    top_sys: int = 0
    top_gold: int = 0
    macro_ann: float = 0.0
    macro_topics: float = 0.0

    def add(self, case: AnnotCase, anns: Iterable[Annotation]) -> None:
        system = {(a.mention.char_span, a.sense) for a in anns if a.sense is not None}
        gold = {((g.start, g.end), g.page) for g in case.gold}
        tp = len(system & gold)
        self.ann_tp += tp
        self.ann_sys += len(system)
        self.ann_gold += len(gold)
        s_pages = {p for _, p in system}
        g_pages = {p for _, p in gold}
        ttp = len(s_pages & g_pages)
        self.top_tp += ttp
        self.top_sys += len(s_pages)
        self.top_gold += len(g_pages)
        self.macro_ann += prf(tp, len(system), len(gold)).f
        self.macro_topics += prf(ttp, len(s_pages), len(g_pages)).f

    def report(self, n_cases: int) -> MetricReport:
        return MetricReport(
            {"ann": prf(self.ann_tp, self.ann_sys, self.ann_gold),
             "topics": prf(self.top_tp, self.top_sys, self.top_gold)},
            {"ann": self.macro_ann / n_cases if n_cases else 0.0,
             "topics": self.macro_topics / n_cases if n_cases else 0.0},
            n_cases,
        )


def score_annotations(cases: Sequence[AnnotCase], outputs: Sequence[Sequence[Annotation]]) -> MetricReport:
    """Micro-averaged (pooled) annotation and topic metrics; macro F per family alongside."""
    counts = _Counts()
    for case, anns in zip(cases, outputs, strict=True):
        counts.add(case, anns)
    return counts.report(len(cases))


def annotate_cases(cases: Sequence[AnnotCase], kb: KnowledgeBase, cfg: PipelineConfig,
                   cache: RelCache | None = None) -> list[list[Annotation]]:
    return [annotate_auto(c.text, kb, cfg, cache=cache)[0] for c in cases]


def eval_annot(cases: Sequence[AnnotCase], kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(),
               cache: RelCache | None = None) -> MetricReport:
    return score_annotations(cases, annotate_cases(cases, kb, cfg, cache))


def rho_grid(step: float = 0.01) -> list[float]:
    n = int(round(1.0 / step))
    return [round(i * step, 10) for i in range(n + 1)]


SWEEP_COLUMNS = ("rho_na", "p_ann", "r_ann", "f_ann", "p_topics", "r_topics", "f_topics",
                 "tp_ann", "n_system", "n_gold", "macro_f_ann", "macro_f_topics")


def sweep_rho(cases: Sequence[AnnotCase], kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(),
              grid: Sequence[float] | None = None,
              annotated: Sequence[Sequence[Annotation]] | None = None) -> list[dict]:
    """One metrics row per rho_NA value.

    Disambiguation and coherence do not depend on rho_NA, so texts are
    annotated once and only the thresholding is repeated.
    """
    grid = rho_grid() if grid is None else grid
    if annotated is None:
        annotated = annotate_cases(cases, kb, cfg)
    rows = []
    for r in grid:
        pcfg = dataclasses.replace(cfg.prune, rho_na=r)
        rep = score_annotations(cases, [prune(anns, pcfg) for anns in annotated])
        a, t = rep["ann"], rep["topics"]
        rows.append({
            "rho_na": r, "p_ann": a.precision, "r_ann": a.recall, "f_ann": a.f,
            "p_topics": t.precision, "r_topics": t.recall, "f_topics": t.f,
            "tp_ann": a.tp, "n_system": a.n_system, "n_gold": a.n_gold,
            "macro_f_ann": rep.macro_f["ann"], "macro_f_topics": rep.macro_f["topics"],
        })
    return rows


def best_row(rows: Sequence[dict], key: str = "f_ann") -> dict:
    return max(rows, key=lambda r: (r[key], -r["rho_na"]))


def write_csv(rows: Sequence[dict], path_or_file, columns: Sequence[str] | None = None) -> None:
    columns = list(columns or (rows[0].keys() if rows else SWEEP_COLUMNS))
    if isinstance(path_or_file, (str, Path)):
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write(fh, rows, columns)
    else:
        _write(path_or_file, rows, columns)


def _write(fh, rows, columns) -> None:
    w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})


def report_row(report: MetricReport, **extra) -> dict:
    row = dict(extra)
    for fam, m in report.families.items():
        row.update({f"p_{fam}": m.precision, f"r_{fam}": m.recall, f"f_{fam}": m.f,
                    f"tp_{fam}": m.tp, f"n_system_{fam}": m.n_system, f"n_gold_{fam}": m.n_gold})
    for fam, v in report.macro_f.items():
        row[f"macro_f_{fam}"] = v
    row["n_cases"] = report.n_cases
    return row
