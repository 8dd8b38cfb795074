"""Recall@K retrieval over similarity matrices, with Wilson intervals and baselines.

The gold alignment is positional: query i's correct candidate sits at index i
(parallel manifests list utterances in the same order). Ties are broken by
ascending candidate index, so reports are reproducible byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .seqsim import SimilarityMatrix

SRC2TRG = "src->trg"
TRG2SRC = "trg->src"
POOLED = "pooled"
ALL_PAIRS = "ALL"

_DIRECTIONS = (SRC2TRG, TRG2SRC)


@dataclass(frozen=True)
class RetrievalConfig:
    """Evaluation settings: cutoffs, interval width, and directions to run."""

    ks: tuple[int, ...] = (1, 5, 10)
    z: float = 1.96
    directions: tuple[str, ...] = (SRC2TRG, TRG2SRC)

    def __post_init__(self) -> None:
        if not self.ks or any(k < 1 for k in self.ks):
            raise ValidationError(f"every K must be >= 1, got {self.ks}")
        if self.z <= 0:
            raise ValidationError(f"z must be > 0, got {self.z}")
        if not self.directions or any(d not in _DIRECTIONS for d in self.directions):
            raise ValidationError(f"directions must be drawn from {_DIRECTIONS}, got {self.directions}")


@dataclass(frozen=True)
class RetrievalRow:
    """One report line: counts, the proportion, its interval, and the chance level."""

    pair: str
    direction: str
    layer: int
    k: int
    hits: int
    trials: int
    recall: float
    ci_low: float
    ci_high: float
    baseline: float


def _score_array(matrix: SimilarityMatrix | np.ndarray) -> np.ndarray:
    if isinstance(matrix, SimilarityMatrix):
        return matrix.scores
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"similarity matrix must be 2-D, got shape {arr.shape}")
    return arr


def recall_at_k(
    matrix: SimilarityMatrix | np.ndarray,
    k: int,
    direction: str = SRC2TRG,
) -> tuple[int, int]:
    """Hit and trial counts for retrieval at cutoff `k` in one direction.

    Query i hits iff candidate i is among the k best-scoring candidates, where
    equal scores are ordered by ascending candidate index. Returns
    (hits, trials) with trials = number of queries.
    """
    if direction not in _DIRECTIONS:
        raise ValidationError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
    scores = _score_array(matrix)
    if direction == TRG2SRC:
        scores = scores.T
    n_queries, n_candidates = scores.shape
    if k < 1:
        raise ValidationError(f"K must be >= 1, got {k}")
    if k > n_candidates:
        raise ValidationError(f"K={k} exceeds candidate count {n_candidates}")
    if n_queries > n_candidates:
        raise ValidationError(
            f"no 1:1 gold alignment: {n_queries} queries but only {n_candidates} candidates"
        )
    qidx = np.arange(n_queries)
    gold = scores[qidx, qidx]
    stronger = (scores > gold[:, None]).sum(axis=1)
    tied_earlier = ((scores == gold[:, None]) & (np.arange(n_candidates)[None, :] < qidx[:, None])).sum(axis=1)
    rank = stronger + tied_earlier
    return int((rank < k).sum()), int(n_queries)


def wilson_interval(hits: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clipped to [0, 1].

    Exactly 0.0 at the low end for zero hits and exactly 1.0 at the high end
    for all hits (the closed form lands there up to rounding noise).
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if not 0 <= hits <= trials:
        raise ValidationError(f"hits must lie in [0, {trials}], got {hits}")
    if z <= 0:
        raise ValidationError(f"z must be > 0, got {z}")
    p = hits / trials
    zz = z * z
    denom = 1.0 + zz / trials
    center = (p + zz / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + zz / (4.0 * trials * trials))
    low = 0.0 if hits == 0 else max(0.0, center - half)
    high = 1.0 if hits == trials else min(1.0, center + half)
    return low, high


def random_baseline(n_candidates: int, k: int) -> float:
    """Chance-level recall: probability a uniform size-k guess contains the one gold item."""
    if n_candidates < 1:
        raise ValidationError(f"n_candidates must be >= 1, got {n_candidates}")
    if not 1 <= k <= n_candidates:
        raise ValidationError(f"K must lie in [1, {n_candidates}], got {k}")
    return k / n_candidates


def make_row(
    *,
    pair: str,
    direction: str,
    layer: int,
    k: int,
    hits: int,
    trials: int,
    n_candidates: int,
    z: float = 1.96,
) -> RetrievalRow:
    """Assemble one report row, computing recall, interval, and baseline."""
    low, high = wilson_interval(hits, trials, z)
    return RetrievalRow(
        pair=pair,
        direction=direction,
        layer=layer,
        k=k,
        hits=hits,
        trials=trials,
        recall=hits / trials,
        ci_low=low,
        ci_high=high,
        baseline=random_baseline(n_candidates, k),
    )


def micro_average(
    rows: list[RetrievalRow],
    *,
    pair_label: str = ALL_PAIRS,
    z: float = 1.96,
) -> RetrievalRow:
    """Pool raw hit/trial counts of the given rows into a single proportion.

    All rows must share one layer and one K. The interval is recomputed on the
    pooled counts, and the pooled baseline weights each row's chance level by
    its trial count.
    """
    if not rows:
        raise ValidationError("cannot micro-average an empty row list")
    layers = {r.layer for r in rows}
    ks = {r.k for r in rows}
    if len(layers) != 1 or len(ks) != 1:
        raise ValidationError(f"micro-average needs a single (layer, K) group, got layers={sorted(layers)}, ks={sorted(ks)}")
    hits = sum(r.hits for r in rows)
    trials = sum(r.trials for r in rows)
    if trials < 1:
        raise ValidationError("pooled trials must be >= 1")
    directions = {r.direction for r in rows}
    low, high = wilson_interval(hits, trials, z)
    baseline = sum(r.baseline * r.trials for r in rows) / trials
    return RetrievalRow(
        pair=pair_label,
        direction=directions.pop() if len(directions) == 1 else POOLED,
        layer=rows[0].layer,
        k=rows[0].k,
        hits=hits,
        trials=trials,
        recall=hits / trials,
        ci_low=low,
        ci_high=high,
        baseline=baseline,
    )


def evaluate_pairs(
    matrices: dict[str, SimilarityMatrix],
    layer: int,
    config: RetrievalConfig = RetrievalConfig(),
) -> list[RetrievalRow]:
    """Full report for one layer: per-pair rows, per-direction micro rows, and a pooled row.

    `matrices` maps a pair label (e.g. "eng-zho") to its similarity matrix.
    Pairs are processed in sorted label order so output is deterministic.
    """
    if not matrices:
        raise ValidationError("no similarity matrices given")
    rows: list[RetrievalRow] = []
    for k in config.ks:
        per_direction: dict[str, list[RetrievalRow]] = {d: [] for d in config.directions}
        for pair in sorted(matrices):
            matrix = matrices[pair]
            for direction in config.directions:
                n_candidates = len(matrix.trg_ids) if direction == SRC2TRG else len(matrix.src_ids)
                hits, trials = recall_at_k(matrix, k, direction)
                row = make_row(
                    pair=pair,
                    direction=direction,
                    layer=layer,
                    k=k,
                    hits=hits,
                    trials=trials,
                    n_candidates=n_candidates,
                    z=config.z,
                )
                rows.append(row)
                per_direction[direction].append(row)
        micro_rows = []
        for direction in config.directions:
            micro = micro_average(per_direction[direction], z=config.z)
            rows.append(micro)
            micro_rows.append(micro)
        if len(config.directions) > 1:
            rows.append(micro_average(micro_rows, z=config.z))
    return rows
