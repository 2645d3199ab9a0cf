"""How many anchors short fragments contain, and how link-worthy the best of them are."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..kb import KnowledgeBase
from ..spotter import spot

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
SIGNIFICANT_LP = 0.065


@dataclass
class CoverageReport:
    n_fragments: int
    histogram: dict[int, int]  # anchors per fragment -> number of fragments
    frac_at_least: dict[int, float]  # k = 1..5
    max_lp_quantiles: dict[float, float]
    top5_lp_quantiles: dict[float, float]
    frac_max_lp_significant: float
    frac_top5_lp_significant: float


def coverage_stats(fragments: Iterable[str], kb: KnowledgeBase) -> CoverageReport:
    counts: list[int] = []
    max_lp: list[float] = []
    top5: list[float] = []
    for text in fragments:
        lps = sorted((m.anchor.lp for m in spot(text, kb)), reverse=True)
        counts.append(len(lps))
        max_lp.append(lps[0] if lps else 0.0)
        top5.append(sum(lps[:5]) / len(lps[:5]) if lps else 0.0)
    n = len(counts)
    hist = dict(sorted(Counter(counts).items()))

    def quantiles(xs: list[float]) -> dict[float, float]:
        if not xs:
            return {q: 0.0 for q in QUANTILES}
        return {q: float(v) for q, v in zip(QUANTILES, np.quantile(xs, QUANTILES))}

    return CoverageReport(
        n_fragments=n,
        histogram=hist,
        frac_at_least={k: (sum(c >= k for c in counts) / n if n else 0.0) for k in range(1, 6)},
        max_lp_quantiles=quantiles(max_lp),
        top5_lp_quantiles=quantiles(top5),
        frac_max_lp_significant=sum(v > SIGNIFICANT_LP for v in max_lp) / n if n else 0.0,
        frac_top5_lp_significant=sum(v > SIGNIFICANT_LP for v in top5) / n if n else 0.0,
    )
