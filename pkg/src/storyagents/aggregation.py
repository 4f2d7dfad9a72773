"""Merging of per-agent rankings and the ranking-consistency evaluation:
Kendall distance with half-credit for one-sided ties, modal ranking with a
Kemeny fallback when no ranking repeats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .prioritization import ranks_from_scores

KEMENY_MAX_ITEMS = 8


class CoverageMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RankingVector:
    ranks: dict  # story_id -> Fraction
    source: str = ""

    def __post_init__(self) -> None:
        n = len(self.ranks)
        ranks = {sid: Fraction(r) for sid, r in self.ranks.items()}
        total = sum(ranks.values(), Fraction(0))
        if total != Fraction(n * (n + 1), 2):
            raise ValueError(f"rank sum {total} != n(n+1)/2 for n={n}")
        object.__setattr__(self, "ranks", ranks)

    def key(self) -> frozenset:
        """Exact-equality key over the rank map, ignoring the source label."""
        return frozenset(self.ranks.items())

    @classmethod
    def from_order(cls, ordered_ids: Sequence[str], source: str = "") -> "RankingVector":
        return cls(
            ranks={sid: Fraction(i + 1) for i, sid in enumerate(ordered_ids)},
            source=source,
        )


def _common_ids(a: RankingVector, b: RankingVector) -> list[str]:
    if set(a.ranks) != set(b.ranks):
        raise CoverageMismatch("rankings cover different story sets")
    return sorted(a.ranks)


def merge_borda(vectors: Sequence[RankingVector]) -> RankingVector:
    """Average-rank (Borda-style) merge: rank stories by their mean rank."""
    if not vectors:
        raise ValueError("at least one ranking required")
    ids = sorted(vectors[0].ranks)
    for v in vectors[1:]:
        if set(v.ranks) != set(ids):
            raise CoverageMismatch("rankings cover different story sets")
    k = len(vectors)
    mean_rank = {
        sid: sum((v.ranks[sid] for v in vectors), Fraction(0)) / k for sid in ids
    }
    entries = ranks_from_scores(mean_rank, descending=False)
    return RankingVector(
        ranks={e.story_id: e.rank for e in entries},
        source="borda-merge",
    )


def kendall_distance(a: RankingVector, b: RankingVector) -> Fraction:
    """Discordant-pair count; a pair tied in exactly one ranking counts 1/2."""
    ids = _common_ids(a, b)
    half = Fraction(1, 2)
    dist = Fraction(0)
    for x, y in itertools.combinations(ids, 2):
        da = (a.ranks[x] > a.ranks[y]) - (a.ranks[x] < a.ranks[y])
        db = (b.ranks[x] > b.ranks[y]) - (b.ranks[x] < b.ranks[y])
        if da * db < 0:
            dist += 1
        elif (da == 0) != (db == 0):
            dist += half
    return dist


def consistency_matrix(vectors: Sequence[RankingVector]) -> list[list[Fraction]]:
    if len(vectors) < 2:
        raise ValueError("at least two rankings required")
    k = len(vectors)
    out = [[Fraction(0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            d = kendall_distance(vectors[i], vectors[j])
            out[i][j] = d
            out[j][i] = d
    return out


def _total_distance(candidate: RankingVector, vectors: Sequence[RankingVector]) -> Fraction:
    return sum((kendall_distance(candidate, v) for v in vectors), Fraction(0))


def kemeny_ranking(vectors: Sequence[RankingVector]) -> RankingVector:
    """Exhaustive Kemeny minimizer over strict permutations; frequency-free
    tie-break is lexicographic on the ordered id sequence."""
    ids = sorted(vectors[0].ranks)
    if len(ids) > KEMENY_MAX_ITEMS:
        return merge_borda(vectors)
    best: RankingVector | None = None
    best_dist: Fraction | None = None
    for perm in itertools.permutations(ids):
        cand = RankingVector.from_order(perm, source="kemeny")
        d = _total_distance(cand, vectors)
        if best_dist is None or d < best_dist:
            best, best_dist = cand, d
    assert best is not None
    return best


def modal_ranking(vectors: Sequence[RankingVector]) -> tuple[RankingVector, int]:
    """The exact ranking generated most often. Frequency ties break toward
    the smallest total Kendall distance; when every ranking is unique the
    Kemeny minimizer is returned instead."""
    if not vectors:
        raise ValueError("at least one ranking required")
    counts: dict[frozenset, list] = {}
    for v in vectors:
        counts.setdefault(v.key(), [0, v])
        counts[v.key()][0] += 1
    max_count = max(c for c, _ in counts.values())
    if max_count == 1 and len(vectors) > 1:
        winner = kemeny_ranking(vectors)
        support = sum(1 for v in vectors if v.key() == winner.key())
        return winner, support
    candidates = [v for c, v in counts.values() if c == max_count]
    if len(candidates) > 1:
        candidates.sort(
            key=lambda v: (
                _total_distance(v, vectors),
                tuple(sorted(v.ranks.items())),
            )
        )
    return candidates[0], max_count
