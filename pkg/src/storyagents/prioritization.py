"""Numeric core of the three prioritization techniques.

Hundred-Dollar and WSJF are exact rational arithmetic; AHP uses float linear
algebra (geometric-mean weights, Saaty consistency ratio). Ranks always use
average-rank tie semantics, so a two-way tie at the top yields 1.5.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .domain import PrioritizationTechnique, RankEntry
from .parsing import WSJF_COMPONENTS, ScoreSheet


class SheetError(ValueError):
    """Invalid or inconsistent score-sheet input."""


# Saaty random-index table, indexed by matrix size.
RANDOM_INDEX = {1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45, 10: 1.49}

CONSISTENCY_THRESHOLD = 0.10


def _check_sheets(sheets: Sequence[ScoreSheet], technique: PrioritizationTechnique) -> list[str]:
    if not sheets:
        raise SheetError("at least one score sheet required")
    for sheet in sheets:
        if sheet.technique is not technique:
            raise SheetError(
                f"mixed techniques: expected {technique.value}, got {sheet.technique.value}"
            )
    ids = set(sheets[0].entries)
    for sheet in sheets[1:]:
        if set(sheet.entries) != ids:
            raise SheetError("coverage mismatch: sheets score different story sets")
    return sorted(ids)


def score_hundred_dollar(sheets: Sequence[ScoreSheet]) -> dict[str, Fraction]:
    """Mean allocation per story; output sums to exactly 100."""
    ids = _check_sheets(sheets, PrioritizationTechnique.HUNDRED_DOLLAR)
    for sheet in sheets:
        total = sum(sheet.entries.values())
        if total != 100:
            raise SheetError(f"sheet from {sheet.agent.value} sums to {total}, not 100")
    k = len(sheets)
    return {
        sid: sum((Fraction(sheet.entries[sid]) for sheet in sheets), Fraction(0)) / k
        for sid in ids
    }


def score_wsjf(sheets: Sequence[ScoreSheet]) -> dict[str, Fraction]:
    """WSJF = Cost of Delay / job size, on per-component means across sheets."""
    ids = _check_sheets(sheets, PrioritizationTechnique.WSJF)
    k = len(sheets)
    out: dict[str, Fraction] = {}
    for sid in ids:
        means = {}
        for comp in WSJF_COMPONENTS:
            means[comp] = (
                sum((Fraction(sheet.entries[sid][comp]) for sheet in sheets), Fraction(0)) / k
            )
        if means["job_size"] == 0:
            raise SheetError(f"zero job size for {sid}")
        cod = means["cod_value"] + means["time_criticality"] + means["risk_reduction"]
        out[sid] = cod / means["job_size"]
    return out


@dataclass(frozen=True)
class PairwiseMatrix:
    ids: tuple[str, ...]
    cells: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.ids)
        cells = np.asarray(self.cells, dtype=float)
        if cells.shape != (n, n):
            raise ValueError(f"cells must be {n}x{n}")
        if not np.allclose(np.diag(cells), 1.0):
            raise ValueError("diagonal must be all ones")
        if not np.allclose(cells * cells.T, 1.0, rtol=1e-9, atol=1e-12):
            raise ValueError("matrix must be reciprocal")
        if (cells < 1 / 9 - 1e-12).any() or (cells > 9 + 1e-12).any():
            raise ValueError("cells must lie in [1/9, 9]")
        object.__setattr__(self, "cells", cells)

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class AhpResult:
    ids: tuple[str, ...]
    weights: np.ndarray
    lambda_max: float
    consistency_index: float
    consistency_ratio: float

    @property
    def is_consistent(self) -> bool:
        return self.consistency_ratio <= CONSISTENCY_THRESHOLD

    def weight_map(self) -> dict[str, float]:
        return dict(zip(self.ids, self.weights.tolist()))


def build_pairwise(importance: Mapping[str, Fraction | float | int]) -> PairwiseMatrix:
    """Pairwise ratios from scalar importances, clamped to the Saaty scale.

    Reciprocity needs care: clamp(a/b) and clamp(b/a) must stay exact
    reciprocals, so the clamp is applied to the upper-triangle ratio and
    mirrored."""
    if len(importance) < 2:
        raise SheetError("at least two stories required for pairwise comparison")
    ids = tuple(sorted(importance))
    vals = [float(importance[i]) for i in ids]
    n = len(ids)
    cells = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            ratio = min(max(vals[i] / vals[j], 1 / 9), 9.0)
            cells[i, j] = ratio
            cells[j, i] = 1.0 / ratio
    return PairwiseMatrix(ids=ids, cells=cells)


def ahp_weights(matrix: PairwiseMatrix) -> AhpResult:
    """Geometric-mean weights with Saaty consistency statistics."""
    cells = matrix.cells
    n = matrix.n
    gm = np.exp(np.log(cells).mean(axis=1))
    weights = gm / gm.sum()
    lam = float(np.mean((cells @ weights) / weights))
    ci = (lam - n) / (n - 1) if n >= 3 else 0.0
    ri = RANDOM_INDEX.get(n, RANDOM_INDEX[10])
    cr = ci / ri if ri > 0 else 0.0
    return AhpResult(
        ids=matrix.ids,
        weights=weights,
        lambda_max=lam,
        consistency_index=ci,
        consistency_ratio=cr,
    )


def score_ahp(sheets: Sequence[ScoreSheet]) -> dict[str, float]:
    """Mean importance across sheets -> pairwise matrix -> normalized weights."""
    ids = _check_sheets(sheets, PrioritizationTechnique.AHP)
    k = len(sheets)
    importance = {
        sid: sum((Fraction(sheet.entries[sid]) for sheet in sheets), Fraction(0)) / k
        for sid in ids
    }
    return ahp_weights(build_pairwise(importance)).weight_map()


def score_sheets(technique: PrioritizationTechnique, sheets: Sequence[ScoreSheet]) -> dict:
    if technique is PrioritizationTechnique.HUNDRED_DOLLAR:
        return score_hundred_dollar(sheets)
    if technique is PrioritizationTechnique.WSJF:
        return score_wsjf(sheets)
    return score_ahp(sheets)


def ranks_from_scores(
    scores: Mapping[str, Fraction | float | int],
    descending: bool = True,
    justifications: Mapping[str, str] | None = None,
) -> tuple[RankEntry, ...]:
    """Average-rank assignment: tied scores share the mean of the positions
    they span, so rank sums are always n(n+1)/2 exactly."""
    if not scores:
        raise ValueError("scores must be non-empty")
    items = sorted(
        scores.items(),
        key=lambda kv: (-kv[1] if descending else kv[1], kv[0]),
    )
    entries: list[RankEntry] = []
    i = 0
    n = len(items)
    while i < n:
        j = i
        while j + 1 < n and items[j + 1][1] == items[i][1]:
            j += 1
        # positions i+1 .. j+1 share the mean rank
        rank = Fraction((i + 1) + (j + 1), 2)
        for sid, score in items[i : j + 1]:
            just = justifications.get(sid, "") if justifications else ""
            entries.append(RankEntry(story_id=sid, rank=rank, score=score, justification=just))
        i = j + 1
    return tuple(sorted(entries, key=lambda e: (e.rank, e.story_id)))
