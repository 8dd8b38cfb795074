"""Pronunciation-controlled selection of parallel utterances.

Builds, from an n-way aligned utterance table plus POS-tagged transcripts, a
challenge subset per language pair with the pronunciation shortcuts removed:
rows with proper nouns on either side are dropped, rows whose Japanese side
contains katakana (the loanword script) are dropped, and near-duplicate rows
go first. A seeded sampler then shrinks the unfiltered table to the same
per-pair proportions so the two sets stay comparable.

Tagging itself is out of scope: tags are ingested from an external tagger's
output (JSONL records with per-token universal POS tags).
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FormatError, ValidationError

# (langA, langB) -> surviving row count
PairCounts = dict[tuple[str, str], int]

# Language codes treated as Japanese for the katakana filter.
JAPANESE_CODES = frozenset({"ja", "jpn"})

_KATAKANA_RANGES = (
    (0x30A1, 0x30FA),  # main block letters
    (0x30FD, 0x30FF),  # iteration marks, digraph
    (0x31F0, 0x31FF),  # phonetic extensions
    (0xFF66, 0xFF9D),  # halfwidth forms
)
_PROLONGED_SOUND_MARK = 0x30FC


@dataclass(frozen=True)
class TaggedUtterance:
    """One transcript with its tagger output: (surface, universal POS) per token."""

    utt_id: str
    lang: str
    text: str
    tokens: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple((str(s), str(t)) for s, t in self.tokens))
        # An untagged record (no tokens) is representable; screening it later
        # is an error there. When tokens exist they must reassemble the text.
        if self.tokens:
            token_chars = "".join("".join(s.split()) for s, _ in self.tokens)
            text_chars = "".join(self.text.split())
            if token_chars != text_chars:
                raise ValidationError(
                    f"utt {self.utt_id!r}: token surfaces do not reassemble the text (modulo whitespace)"
                )


@dataclass(frozen=True)
class ParallelSet:
    """Content-aligned utterance rows: one utt_id per language per row."""

    langs: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "langs", tuple(self.langs))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(set(self.langs)) != len(self.langs) or not self.langs:
            raise ValidationError(f"languages must be nonempty and distinct, got {self.langs}")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.langs):
                raise ValidationError(f"row {i} has {len(row)} entries for {len(self.langs)} languages")

    def column(self, lang: str) -> tuple[str, ...]:
        """The utt_id column for one language, in row order."""
        try:
            j = self.langs.index(lang)
        except ValueError:
            raise ValidationError(f"language {lang!r} not in parallel set {self.langs}") from None
        return tuple(row[j] for row in self.rows)


def has_proper_noun(utt: TaggedUtterance) -> bool:
    """True iff any token is tagged PROPN. An untagged nonempty utterance is an error,
    never silently False."""
    if not utt.tokens and utt.text.strip():
        raise ValidationError(f"utt {utt.utt_id!r} has text but no tags; cannot screen for proper nouns")
    return any(upos == "PROPN" for _, upos in utt.tokens)


def _is_katakana_cp(cp: int) -> bool:
    return any(lo <= cp <= hi for lo, hi in _KATAKANA_RANGES)


def contains_katakana(text: str) -> bool:
    """True iff the text contains katakana script.

    The prolonged-sound mark counts only when it sits next to a katakana
    character, since it also occurs in hiragana and informal contexts.
    """
    n = len(text)
    for i, ch in enumerate(text):
        cp = ord(ch)
        if _is_katakana_cp(cp):
            return True
        if cp == _PROLONGED_SOUND_MARK:
            if i > 0 and _is_katakana_cp(ord(text[i - 1])):
                return True
            if i + 1 < n and _is_katakana_cp(ord(text[i + 1])):
                return True
    return False


def _dedup_key(text: str) -> str:
    t = unicodedata.normalize("NFC", text)
    return " ".join(t.split()).casefold()


def dedup(utts: Iterable[TaggedUtterance]) -> list[TaggedUtterance]:
    """Keep the first utterance per normalized-text key, preserving order.

    Same content spoken by different speakers collapses to one record; the
    key is NFC-normalized, whitespace-collapsed, case-folded text.
    """
    seen: set[str] = set()
    out: list[TaggedUtterance] = []
    for utt in utts:
        key = _dedup_key(utt.text)
        if key not in seen:
            seen.add(key)
            out.append(utt)
    return out


def _require_tags(parallel: ParallelSet, tags: Mapping[str, TaggedUtterance]) -> None:
    missing = sorted({u for row in parallel.rows for u in row if u not in tags})
    if missing:
        head = ", ".join(missing[:5])
        raise ValidationError(f"{len(missing)} utterances lack tags: {head}{'...' if len(missing) > 5 else ''}")


def _validate_pairs(parallel: ParallelSet, pairs: Sequence[tuple[str, str]]) -> None:
    if not pairs:
        raise ValidationError("no language pairs requested")
    for a, b in pairs:
        for lang in (a, b):
            if lang not in parallel.langs:
                raise ValidationError(f"pair ({a}, {b}): language {lang!r} not in parallel set {parallel.langs}")
        if a == b:
            raise ValidationError(f"pair ({a}, {b}) must name two distinct languages")


def _dedup_rows(parallel: ParallelSet, tags: Mapping[str, TaggedUtterance]) -> list[int]:
    """Indices of rows that are first occurrences in every language column.

    A row whose text in any language repeats an earlier row is the same
    content re-spoken, so the whole row goes.
    """
    keep = np.ones(len(parallel.rows), dtype=bool)
    for j in range(len(parallel.langs)):
        seen: set[str] = set()
        for i, row in enumerate(parallel.rows):
            key = _dedup_key(tags[row[j]].text)
            if key in seen:
                keep[i] = False
            else:
                seen.add(key)
    return [i for i in range(len(parallel.rows)) if keep[i]]


def _blocked(text: str, lang: str, blocklist) -> bool:
    if blocklist is None:
        return False
    terms = blocklist.get(lang, ()) if isinstance(blocklist, Mapping) else blocklist
    folded = text.casefold()
    return any(term.casefold() in folded for term in terms)


def build_full_set(
    parallel: ParallelSet,
    tags: Mapping[str, TaggedUtterance],
    pairs: Sequence[tuple[str, str]],
) -> tuple[dict[tuple[str, str], ParallelSet], PairCounts]:
    """Per-pair view of the parallel table after deduplication only.

    This is the "full" counterpart the challenge subset is measured against.
    """
    _require_tags(parallel, tags)
    _validate_pairs(parallel, pairs)
    kept = _dedup_rows(parallel, tags)
    out: dict[tuple[str, str], ParallelSet] = {}
    counts: PairCounts = {}
    for a, b in pairs:
        ja, jb = parallel.langs.index(a), parallel.langs.index(b)
        rows = tuple((parallel.rows[i][ja], parallel.rows[i][jb]) for i in kept)
        out[(a, b)] = ParallelSet(langs=(a, b), rows=rows)
        counts[(a, b)] = len(rows)
    return out, counts


def build_challenge_set(
    parallel: ParallelSet,
    tags: Mapping[str, TaggedUtterance],
    pairs: Sequence[tuple[str, str]],
    *,
    japanese_langs: Iterable[str] = JAPANESE_CODES,
    blocklist: Mapping[str, Sequence[str]] | Sequence[str] | None = None,
) -> tuple[dict[tuple[str, str], ParallelSet], PairCounts]:
    """Per-pair challenge subsets with pronunciation shortcuts removed.

    Deduplication runs first; a row then survives for a pair iff neither
    side contains a proper noun, any Japanese side is katakana-free, and no
    side matches the optional case-insensitive substring blocklist.
    """
    _require_tags(parallel, tags)
    _validate_pairs(parallel, pairs)
    japanese = frozenset(japanese_langs)
    kept = _dedup_rows(parallel, tags)

    out: dict[tuple[str, str], ParallelSet] = {}
    counts: PairCounts = {}
    for a, b in pairs:
        ja, jb = parallel.langs.index(a), parallel.langs.index(b)
        rows = []
        for i in kept:
            ua, ub = tags[parallel.rows[i][ja]], tags[parallel.rows[i][jb]]
            if has_proper_noun(ua) or has_proper_noun(ub):
                continue
            if any(lang in japanese and contains_katakana(u.text) for lang, u in ((a, ua), (b, ub))):
                continue
            if _blocked(ua.text, a, blocklist) or _blocked(ub.text, b, blocklist):
                continue
            rows.append((ua.utt_id, ub.utt_id))
        out[(a, b)] = ParallelSet(langs=(a, b), rows=tuple(rows))
        counts[(a, b)] = len(rows)
    return out, counts


def _pair_entropy(pair: tuple[str, str]) -> int:
    digest = hashlib.sha256("\x00".join(pair).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def proportion_sample(
    full: Mapping[tuple[str, str], ParallelSet],
    targets: Mapping[tuple[str, str], int],
    seed: int,
) -> dict[tuple[str, str], ParallelSet]:
    """Uniform without-replacement sample of exactly targets[pair] rows per pair.

    Row order of the input is preserved in the sample. The generator is
    seeded per pair from (seed, pair), so results do not depend on dict
    iteration order and rerunning with one seed is byte-identical.
    """
    out: dict[tuple[str, str], ParallelSet] = {}
    for pair, pset in full.items():
        if pair not in targets:
            raise ValidationError(f"no sample target for pair {pair}")
        target = int(targets[pair])
        if target < 0:
            raise ValidationError(f"pair {pair}: target must be >= 0, got {target}")
        n = len(pset.rows)
        if target > n:
            raise ValidationError(f"pair {pair}: target {target} exceeds available {n} rows")
        if target == n:
            out[pair] = pset
            continue
        rng = np.random.default_rng([seed, _pair_entropy(pair)])
        idx = np.sort(rng.choice(n, size=target, replace=False))
        out[pair] = ParallelSet(langs=pset.langs, rows=tuple(pset.rows[i] for i in idx))
    return out


def read_tagged_jsonl(path: str | Path) -> dict[str, TaggedUtterance]:
    """Load tagger output: one JSON object per line with utt_id, lang, text, tokens."""
    path = Path(path)
    out: dict[str, TaggedUtterance] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            utt = TaggedUtterance(
                utt_id=str(raw["utt_id"]),
                lang=str(raw["lang"]),
                text=str(raw["text"]),
                tokens=tuple((tok["surface"], tok["upos"]) for tok in raw["tokens"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed tagged record: {exc}") from exc
        if utt.utt_id in out:
            raise ValidationError(f"{path}:{lineno}: duplicate utt_id {utt.utt_id!r}")
        out[utt.utt_id] = utt
    return out


def read_blocklist(path: str | Path) -> tuple[str, ...]:
    """Load a substring blocklist: one term per line, '#' starts a comment."""
    terms = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        term = line.split("#", 1)[0].strip()
        if term:
            terms.append(term)
    return tuple(terms)


def read_parallel_json(path: str | Path) -> ParallelSet:
    """Load an n-way aligned table: {"langs": [...], "rows": [[utt_id, ...], ...]}."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        return ParallelSet(langs=tuple(doc["langs"]), rows=tuple(tuple(r) for r in doc["rows"]))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed parallel set: {exc}") from exc


def save_parallel_json(pset: ParallelSet, path: str | Path) -> None:
    doc = {"langs": list(pset.langs), "rows": [list(r) for r in pset.rows]}
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
