"""Soft frame-alignment similarity between variable-length embedding sequences.

The score matches every frame of one sequence against its best-scoring frame
in the other, averages per direction, and combines the two directional means
F1-style:

    recall    = mean over rows x of X of  max over rows y of Y of  x . y
    precision = mean over rows y of Y of  max over rows x of X of  x . y
    score     = 2 * precision * recall / (precision + recall)

Frames are L2-normalized by default (cosine mode), making scores
scale-invariant and comparable across encoder layers; pass
normalize="none" to use raw dot products. Means and maxes accumulate in
float64 even though storage is float32, so long sequences do not drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .store import EmbeddingSequence

# Harmonic combination is 0/0 when precision + recall vanishes; below this
# magnitude the score is defined as 0 ("no alignment").
EPS_GUARD = 1e-12

# Frame-block edge for the tiled Gram product; bounds working memory to
# block^2 float64 cells per tile.
DEFAULT_BLOCK = 256

_MODES = ("l2", "none")


@dataclass(frozen=True)
class SeqSimScore:
    """Directional best-match means and their harmonic combination."""

    recall: float
    precision: float
    score: float


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """All-pairs scores for one language pair and layer: |src| x |trg|."""

    src_ids: tuple[str, ...]
    trg_ids: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.shape != (len(self.src_ids), len(self.trg_ids)):
            raise ValidationError(
                f"score matrix shape {arr.shape} does not match "
                f"{len(self.src_ids)} src ids x {len(self.trg_ids)} trg ids"
            )
        object.__setattr__(self, "scores", arr)
        object.__setattr__(self, "src_ids", tuple(self.src_ids))
        object.__setattr__(self, "trg_ids", tuple(self.trg_ids))


def normalize_frames(seq: EmbeddingSequence) -> tuple[EmbeddingSequence, int]:
    """L2-normalize each frame row; zero-norm rows stay all-zero.

    Returns the normalized sequence and the number of zero-norm rows left
    untouched (a warning count, not an error).
    """
    unit, zero_rows = _unit_rows(seq.data.astype(np.float64))
    return EmbeddingSequence(unit.astype(np.float32)), zero_rows


def _unit_rows(frames: np.ndarray) -> tuple[np.ndarray, int]:
    norms = np.linalg.norm(frames, axis=1)
    zero = norms == 0.0
    out = frames / np.where(zero, 1.0, norms)[:, None]
    return out, int(zero.sum())


def _prep(seq: EmbeddingSequence, normalize: str) -> np.ndarray:
    if normalize not in _MODES:
        raise ValidationError(f"normalize must be one of {_MODES}, got {normalize!r}")
    frames = seq.data.astype(np.float64)
    if normalize == "l2":
        frames, _ = _unit_rows(frames)
    return frames


def _combine(precision: float, recall: float) -> float:
    denom = precision + recall
    if abs(denom) <= EPS_GUARD:
        return 0.0
    return 2.0 * precision * recall / denom


def _best_match_means(x: np.ndarray, y: np.ndarray, block: int) -> tuple[float, float]:
    """Row-max mean and column-max mean of the frame Gram matrix x @ y.T, tiled."""
    m, n = x.shape[0], y.shape[0]
    row_best = np.full(m, -np.inf)
    col_best = np.full(n, -np.inf)
    for i0 in range(0, m, block):
        xi = x[i0 : i0 + block]
        for j0 in range(0, n, block):
            gram = xi @ y[j0 : j0 + block].T
            np.maximum(row_best[i0 : i0 + block], gram.max(axis=1), out=row_best[i0 : i0 + block])
            np.maximum(col_best[j0 : j0 + block], gram.max(axis=0), out=col_best[j0 : j0 + block])
    return float(row_best.mean()), float(col_best.mean())


def seqsim(
    x: EmbeddingSequence,
    y: EmbeddingSequence,
    *,
    normalize: str = "l2",
    block: int = DEFAULT_BLOCK,
) -> SeqSimScore:
    """Score one sequence pair. Symmetric in its arguments and invariant to frame order."""
    if x.dim != y.dim:
        raise ValidationError(f"dim mismatch: {x.dim} vs {y.dim}")
    if block < 1:
        raise ValidationError(f"block must be >= 1, got {block}")
    recall, precision = _best_match_means(_prep(x, normalize), _prep(y, normalize), block)
    return SeqSimScore(recall=recall, precision=precision, score=_combine(precision, recall))


def seqsim_matrix(
    srcs: Sequence[EmbeddingSequence],
    trgs: Sequence[EmbeddingSequence],
    *,
    src_ids: Sequence[str] | None = None,
    trg_ids: Sequence[str] | None = None,
    normalize: str = "l2",
    block: int = DEFAULT_BLOCK,
) -> SimilarityMatrix:
    """All-pairs scores between two utterance lists.

    scores[i][j] equals seqsim(srcs[i], trgs[j]) under the same settings; the
    Gram product is tiled to `block` frames per side to bound memory.
    """
    if len(srcs) == 0 or len(trgs) == 0:
        raise ValidationError("src and trg lists must be nonempty")
    if block < 1:
        raise ValidationError(f"block must be >= 1, got {block}")
    dims = {s.dim for s in srcs} | {t.dim for t in trgs}
    if len(dims) != 1:
        raise ValidationError(f"all sequences must share one dim, got {sorted(dims)}")
    if src_ids is None:
        src_ids = [str(i) for i in range(len(srcs))]
    if trg_ids is None:
        trg_ids = [str(j) for j in range(len(trgs))]
    if len(src_ids) != len(srcs) or len(trg_ids) != len(trgs):
        raise ValidationError("id lists must match sequence list lengths")

    src_frames = [_prep(s, normalize) for s in srcs]
    trg_frames = [_prep(t, normalize) for t in trgs]
    scores = np.empty((len(srcs), len(trgs)), dtype=np.float64)
    for i, xf in enumerate(src_frames):
        for j, yf in enumerate(trg_frames):
            recall, precision = _best_match_means(xf, yf, block)
            scores[i, j] = _combine(precision, recall)
    return SimilarityMatrix(src_ids=tuple(src_ids), trg_ids=tuple(trg_ids), scores=scores)
