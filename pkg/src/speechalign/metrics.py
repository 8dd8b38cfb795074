"""Character and word error rates with explicit, configurable text normalization.

Rates are edit operations over reference length and can exceed 1.0 (a
hypothesis much longer than its reference does that). Corpus aggregation is
micro: summed edits over summed reference lengths, not a mean of
per-utterance rates.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, ValidationError

# Beyond this many DP cells the row-vectorized path wins over plain loops.
_SMALL_DP_CELLS = 4096

_UNITS = ("char", "word")


@dataclass(frozen=True)
class NormalizationConfig:
    """Text normalization applied before comparison; echoed into every report."""

    case_fold: bool = True
    strip_punctuation: bool = True
    unicode_form: str = "NFC"
    whitespace_collapse: bool = True

    def __post_init__(self) -> None:
        if self.unicode_form not in ("NFC", "NFKC"):
            raise ValidationError(f"unicode_form must be NFC or NFKC, got {self.unicode_form!r}")


DEFAULT_NORMALIZATION = NormalizationConfig()


def normalize_text(text: str, cfg: NormalizationConfig = DEFAULT_NORMALIZATION) -> str:
    """Deterministic normalization: unicode form, case fold, punctuation strip, space collapse.

    Punctuation means Unicode categories P* and S*.
    """
    out = unicodedata.normalize(cfg.unicode_form, text)
    if cfg.case_fold:
        out = out.casefold()
    if cfg.strip_punctuation:
        out = "".join(ch for ch in out if unicodedata.category(ch)[0] not in "PS")
    if cfg.whitespace_collapse:
        out = " ".join(out.split())
    return out


@dataclass(frozen=True)
class EditCounts:
    """Minimal unit-cost edit script sizes turning a reference into a hypothesis."""

    substitutions: int
    insertions: int
    deletions: int

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions


def levenshtein(ref: Sequence, hyp: Sequence) -> EditCounts:
    """Edit counts for transforming `ref` into `hyp` (chars of a string or token lists).

    Among all minimal-total scripts, the one with the fewest insert+delete
    operations is reported, i.e. ties prefer substitutions. That makes the
    (S, I, D) split deterministic.
    """
    m, n = len(ref), len(hyp)
    if m == 0:
        return EditCounts(0, n, 0)
    if n == 0:
        return EditCounts(0, 0, m)

    # Costs are packed as total * big + (insertions + deletions); any monotone
    # DP path keeps insertions + deletions <= m + n < big, so integer min on
    # the packed value is exactly lexicographic (total, ins+del) min.
    big = m + n + 2
    if m * n <= _SMALL_DP_CELLS:
        packed = _packed_dp_small(ref, hyp, big)
    else:
        packed = _packed_dp_rows(ref, hyp, big)

    total, ins_del = divmod(packed, big)
    insertions = (ins_del + (n - m)) // 2
    deletions = ins_del - insertions
    return EditCounts(substitutions=total - ins_del, insertions=insertions, deletions=deletions)


def _packed_dp_small(ref: Sequence, hyp: Sequence, big: int) -> int:
    shift = big + 1  # one insertion or deletion: total 1, ins_del 1
    prev = [j * shift for j in range(len(hyp) + 1)]
    for i in range(1, len(ref) + 1):
        cur = [i * shift] * (len(hyp) + 1)
        r = ref[i - 1]
        for j in range(1, len(hyp) + 1):
            best = prev[j - 1] + (0 if r == hyp[j - 1] else big)
            dele = prev[j] + shift
            if dele < best:
                best = dele
            ins = cur[j - 1] + shift
            if ins < best:
                best = ins
            cur[j] = best
        prev = cur
    return prev[-1]


def _packed_dp_rows(ref: Sequence, hyp: Sequence, big: int) -> int:
    shift = big + 1
    hyp_arr = np.asarray(list(hyp))
    n = len(hyp)
    idx = np.arange(n + 1, dtype=np.int64)
    prev = idx * shift
    cand = np.empty(n + 1, dtype=np.int64)
    for i in range(1, len(ref) + 1):
        sub = prev[:-1] + np.where(hyp_arr != ref[i - 1], big, 0)
        dele = prev[1:] + shift
        cand[0] = i * shift
        np.minimum(sub, dele, out=cand[1:])
        # Insertions propagate left to right: cur[j] = min_k<=j cand[k] + (j-k)*shift.
        prev = np.minimum.accumulate(cand - idx * shift) + idx * shift
        cand = np.empty(n + 1, dtype=np.int64)
    return int(prev[-1])


@dataclass(frozen=True)
class ErrorRateReport:
    """Edit counts, reference length, and their ratio for one unit of comparison."""

    substitutions: int
    insertions: int
    deletions: int
    ref_len: int
    rate: float
    config: NormalizationConfig = DEFAULT_NORMALIZATION

    @property
    def total_edits(self) -> int:
        return self.substitutions + self.insertions + self.deletions


def _tokenize(text: str, unit: str, cfg: NormalizationConfig) -> list[str]:
    normalized = normalize_text(text, cfg)
    if unit == "char":
        # Whitespace never counts as a character error unit; this keeps the
        # metric comparable between spaced and space-free scripts.
        return [ch for ch in normalized if not ch.isspace()]
    return normalized.split()


def _rate(ref_tokens: list[str], hyp_tokens: list[str], cfg: NormalizationConfig) -> ErrorRateReport:
    if not ref_tokens:
        raise ValidationError("reference is empty after normalization")
    counts = levenshtein(ref_tokens, hyp_tokens)
    return ErrorRateReport(
        substitutions=counts.substitutions,
        insertions=counts.insertions,
        deletions=counts.deletions,
        ref_len=len(ref_tokens),
        rate=counts.total / len(ref_tokens),
        config=cfg,
    )


def cer(ref: str, hyp: str, cfg: NormalizationConfig = DEFAULT_NORMALIZATION) -> ErrorRateReport:
    """Character error rate over normalized code points, whitespace removed."""
    return _rate(_tokenize(ref, "char", cfg), _tokenize(hyp, "char", cfg), cfg)


def wer(ref: str, hyp: str, cfg: NormalizationConfig = DEFAULT_NORMALIZATION) -> ErrorRateReport:
    """Word error rate over whitespace-separated tokens of the normalized text."""
    return _rate(_tokenize(ref, "word", cfg), _tokenize(hyp, "word", cfg), cfg)


@dataclass(frozen=True)
class CorpusReport:
    """Micro-aggregated corpus totals plus the per-utterance breakdown."""

    unit: str
    corpus: ErrorRateReport
    utterances: tuple[ErrorRateReport, ...]


def corpus_rate(
    pairs: Sequence[tuple[str, str]],
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
    unit: str = "char",
) -> CorpusReport:
    """Corpus error rate over (reference, hypothesis) pairs.

    Aggregation is micro: summed edit counts divided by summed reference
    length. A per-utterance macro mean would weight short utterances up; the
    report keeps per-utterance rows so both views stay recoverable.
    """
    if unit not in _UNITS:
        raise ValidationError(f"unit must be one of {_UNITS}, got {unit!r}")
    if not pairs:
        raise ValidationError("corpus_rate needs at least one (ref, hyp) pair")
    scorer = cer if unit == "char" else wer
    per_utt = tuple(scorer(ref, hyp, cfg) for ref, hyp in pairs)
    subs = sum(r.substitutions for r in per_utt)
    ins = sum(r.insertions for r in per_utt)
    dels = sum(r.deletions for r in per_utt)
    ref_len = sum(r.ref_len for r in per_utt)
    corpus = ErrorRateReport(
        substitutions=subs,
        insertions=ins,
        deletions=dels,
        ref_len=ref_len,
        rate=(subs + ins + dels) / ref_len,
        config=cfg,
    )
    return CorpusReport(unit=unit, corpus=corpus, utterances=per_utt)


def read_transcript_tsv(path: str | Path) -> dict[str, str]:
    """Read a two-column utterance TSV: utt_id <tab> text. Later columns join the text."""
    path = Path(path)
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'utt_id<TAB>text', got {line!r}")
        utt_id, text = line.split("\t", 1)
        if utt_id in out:
            raise ValidationError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
        out[utt_id] = text
    return out


def join_ref_hyp(refs: dict[str, str], hyps: dict[str, str]) -> list[tuple[str, str, str]]:
    """Join reference and hypothesis maps on utt_id; any unmatched id is an error."""
    missing_hyp = sorted(set(refs) - set(hyps))
    missing_ref = sorted(set(hyps) - set(refs))
    if missing_hyp or missing_ref:
        parts = []
        if missing_hyp:
            parts.append(f"no hypothesis for: {', '.join(missing_hyp[:5])}{'...' if len(missing_hyp) > 5 else ''}")
        if missing_ref:
            parts.append(f"no reference for: {', '.join(missing_ref[:5])}{'...' if len(missing_ref) > 5 else ''}")
        raise ValidationError("; ".join(parts))
    return [(utt_id, refs[utt_id], hyps[utt_id]) for utt_id in sorted(refs)]
