"""Pruning scores (only-lp, average, linear regression) and thresholding against rho_NA."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .kb import KnowledgeBase
    from .pipeline import Annotation, PipelineConfig

DEFAULT_RHO_NA = 0.2


class PruneMethod(str, Enum):
    ONLY_LP = "only_lp"
    AVG = "avg"
    LR = "lr"


@dataclass(frozen=True)
class PruneFeatures:
    lp: float
    coherence: float


@dataclass(frozen=True)
class LrModel:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.alpha, self.beta, self.gamma)):
            raise ValueError("LR coefficients must be finite")

    def __call__(self, lp: float, coherence: float) -> float:
        return self.alpha * lp + self.beta * coherence + self.gamma

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            f"alpha = {self.alpha!r}\nbeta = {self.beta!r}\ngamma = {self.gamma!r}\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LrModel":
        values: dict[str, float] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, _, value = line.partition("=")
            values[name.strip()] = float(value)
        try:
            return cls(values["alpha"], values["beta"], values["gamma"])
        except KeyError as exc:
            raise ValueError(f"{path}: missing coefficient {exc}") from None


@dataclass(frozen=True)
class PruneConfig:
    method: PruneMethod = PruneMethod.AVG
    rho_na: float = DEFAULT_RHO_NA
    lr_model: LrModel | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", PruneMethod(self.method))
        if self.method is PruneMethod.LR and self.lr_model is None:
            raise ValueError("the lr pruner needs a trained model")


def rho(features: PruneFeatures, cfg: PruneConfig) -> float:
    if cfg.method is PruneMethod.ONLY_LP:
        return features.lp
    if cfg.method is PruneMethod.AVG:
        return (features.lp + features.coherence) / 2
    return cfg.lr_model(features.lp, features.coherence)


def prune(annotations: Iterable["Annotation"], cfg: PruneConfig) -> list["Annotation"]:
    """Re-score each disambiguated annotation and map it to NA when rho < rho_NA.

    Works from the disambiguation choice (``candidate``), so the same
    annotations can be re-pruned at any threshold or with any method.
    """
    out = []
    for ann in annotations:
        if ann.candidate is None:
            out.append(ann)
            continue
        r = rho(PruneFeatures(ann.lp, ann.coherence), cfg)
        out.append(dataclasses.replace(ann, rho=r, sense=None if r < cfg.rho_na else ann.candidate))
    return out


class SingularDesignError(ValueError):
    pass


def train_lr(cases: Sequence[tuple[float, float, int]]) -> LrModel:
    """Least-squares fit of label ~ alpha*lp + beta*coherence + gamma."""
    if len(cases) < 3:
        raise ValueError(f"need at least 3 training cases, got {len(cases)}")
    data = np.asarray(cases, dtype=float)
    X = np.column_stack([data[:, 0], data[:, 1], np.ones(len(data))])
    y = data[:, 2]
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < 3:
        raise SingularDesignError(
            f"design matrix has rank {rank} < 3: lp and coherence are constant or collinear")
    return LrModel(*(float(c) for c in coef))


def build_training_cases(cases, kb: "KnowledgeBase", cfg: "PipelineConfig") -> list[tuple[float, float, int]]:
    """(lp, coherence, label) triples from gold-annotated fragments.

    Positive when the gold page equals the DT choice, skipped when gold links
    the mention elsewhere, negative otherwise.
    """
    from .pipeline import annotate_auto

    out = []
    for case in cases:
        gold = {(g.start, g.end): g.page for g in case.gold}
        anns, _ = annotate_auto(case.text, kb, cfg)
        for ann in anns:
            if ann.candidate is None:
                continue
            gold_page = gold.get(ann.mention.char_span)
            if gold_page is None:
                out.append((ann.lp, ann.coherence, 0))
            elif gold_page == ann.candidate:
                out.append((ann.lp, ann.coherence, 1))
    return out
