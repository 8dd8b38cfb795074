"""Early-exit layer sweep: score every encoder layer's transcripts on a dev
split, pick the best layer there, and report test performance against the
final layer.

Layer selection is per metric (character and word rates can disagree on the
best layer) and never looks at test rates. Hypothesis files follow the naming
contract <root>/<lang>/<split>/layer_<i>.tsv with utt_id <tab> text lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ValidationError
from .metrics import DEFAULT_NORMALIZATION, NormalizationConfig, corpus_rate, read_transcript_tsv

_TIEBREAKS = ("deepest", "shallowest")
_LAYER_FILE = re.compile(r"^layer_(\d+)\.tsv$")


@dataclass(frozen=True)
class LayerHypothesisSet:
    """Decoded transcripts of one (language, split, layer): utt_id -> text."""

    lang: str
    split: str
    layer: int
    hypotheses: Mapping[str, str]

    def __post_init__(self) -> None:
        if self.split not in ("dev", "test"):
            raise ValidationError(f"split must be dev or test, got {self.split!r}")
        object.__setattr__(self, "hypotheses", dict(self.hypotheses))


def evaluate_layers(
    hyp_sets: Sequence[LayerHypothesisSet],
    refs: Mapping[str, str],
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> dict[int, tuple[float, float]]:
    """Corpus (cer, wer) per layer. Every layer must cover the same utterances."""
    if not hyp_sets:
        raise ValidationError("no hypothesis sets given")
    layers = [hs.layer for hs in hyp_sets]
    if len(set(layers)) != len(layers):
        raise ValidationError(f"duplicate layers in hypothesis sets: {sorted(layers)}")
    ids = set(hyp_sets[0].hypotheses)
    for hs in hyp_sets[1:]:
        if set(hs.hypotheses) != ids:
            diff = sorted(set(hs.hypotheses) ^ ids)
            raise ValidationError(
                f"layer {hs.layer} covers different utterances than layer {hyp_sets[0].layer} "
                f"(first differences: {diff[:5]})"
            )
    missing_refs = sorted(ids - set(refs))
    if missing_refs:
        raise ValidationError(f"references missing for: {missing_refs[:5]}{'...' if len(missing_refs) > 5 else ''}")

    order = sorted(ids)
    out: dict[int, tuple[float, float]] = {}
    for hs in sorted(hyp_sets, key=lambda h: h.layer):
        pairs = [(refs[u], hs.hypotheses[u]) for u in order]
        c = corpus_rate(pairs, cfg, "char").corpus.rate
        w = corpus_rate(pairs, cfg, "word").corpus.rate
        out[hs.layer] = (c, w)
    return out


def select_best_layer(dev_rates: Mapping[int, float], tiebreak: str = "deepest") -> int:
    """Layer with the lowest dev rate; equal rates resolve toward the deepest layer."""
    if not dev_rates:
        raise ValidationError("cannot select from an empty rate map")
    if tiebreak not in _TIEBREAKS:
        raise ValidationError(f"tiebreak must be one of {_TIEBREAKS}, got {tiebreak!r}")
    best = min(dev_rates.values())
    candidates = [layer for layer, rate in dev_rates.items() if rate == best]
    return max(candidates) if tiebreak == "deepest" else min(candidates)


@dataclass(frozen=True)
class MetricSweep:
    """One metric's sweep outcome. delta = final_layer_rate - best_test_rate, sign-preserving."""

    metric: str
    dev_rates: dict[int, float]
    test_rates: dict[int, float]
    best_layer: int
    best_test_rate: float
    final_layer_rate: float
    delta: float


@dataclass(frozen=True)
class LayerSweepReport:
    lang: str
    layers: tuple[int, ...]
    cer: MetricSweep
    wer: MetricSweep
    config: NormalizationConfig


def sweep_report(
    dev_sets: Sequence[LayerHypothesisSet],
    test_sets: Sequence[LayerHypothesisSet],
    refs_dev: Mapping[str, str],
    refs_test: Mapping[str, str],
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
    *,
    tiebreak: str = "deepest",
) -> LayerSweepReport:
    """Select per metric on dev, report test at the selected and final layers.

    The final layer is the deepest layer of the sweep range. A negative delta
    (final layer better than the dev pick) is reported as-is.
    """
    if not dev_sets or not test_sets:
        raise ValidationError("dev and test hypothesis sets must be nonempty")
    dev_layers = sorted(hs.layer for hs in dev_sets)
    test_layers = sorted(hs.layer for hs in test_sets)
    if dev_layers != test_layers:
        raise ValidationError(f"layer ranges differ: dev {dev_layers} vs test {test_layers}")
    langs = {hs.lang for hs in list(dev_sets) + list(test_sets)}
    if len(langs) != 1:
        raise ValidationError(f"sweep mixes languages: {sorted(langs)}")

    dev_rates = evaluate_layers(dev_sets, refs_dev, cfg)
    test_rates = evaluate_layers(test_sets, refs_test, cfg)
    final_layer = max(dev_layers)

    metrics = {}
    for idx, metric in ((0, "cer"), (1, "wer")):
        dev_metric = {layer: rates[idx] for layer, rates in dev_rates.items()}
        test_metric = {layer: rates[idx] for layer, rates in test_rates.items()}
        best_layer = select_best_layer(dev_metric, tiebreak)
        best_test = test_metric[best_layer]
        final_test = test_metric[final_layer]
        metrics[metric] = MetricSweep(
            metric=metric,
            dev_rates=dev_metric,
            test_rates=test_metric,
            best_layer=best_layer,
            best_test_rate=best_test,
            final_layer_rate=final_test,
            delta=final_test - best_test,
        )
    return LayerSweepReport(
        lang=langs.pop(),
        layers=tuple(dev_layers),
        cer=metrics["cer"],
        wer=metrics["wer"],
        config=cfg,
    )


def read_hypothesis_dir(
    root: str | Path,
    lang: str,
    split: str,
    *,
    layers: Sequence[int] | None = None,
) -> list[LayerHypothesisSet]:
    """Load <root>/<lang>/<split>/layer_<i>.tsv files, all of them or a given layer list."""
    base = Path(root) / lang / split
    if not base.is_dir():
        raise ValidationError(f"hypothesis directory not found: {base}")
    if layers is None:
        found = sorted(
            int(m.group(1)) for p in base.iterdir() if (m := _LAYER_FILE.match(p.name))
        )
        if not found:
            raise ValidationError(f"no layer_<i>.tsv files under {base}")
        layers = found
    out = []
    for layer in layers:
        path = base / f"layer_{layer}.tsv"
        if not path.exists():
            raise ValidationError(f"missing hypothesis file {path}")
        out.append(LayerHypothesisSet(lang=lang, split=split, layer=layer, hypotheses=read_transcript_tsv(path)))
    return out
