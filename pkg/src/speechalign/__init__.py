"""Cross-lingual speech-encoder alignment evaluation toolkit.

Measures how well encoder representations align across languages through
spoken-translation retrieval over frame-embedding similarity, builds
pronunciation-controlled evaluation subsets, and scores early-exit layer
sweeps for speech recognition.
"""

from .challenge import (
    JAPANESE_CODES,
    PairCounts,
    ParallelSet,
    TaggedUtterance,
    build_challenge_set,
    build_full_set,
    contains_katakana,
    dedup,
    has_proper_noun,
    proportion_sample,
    read_blocklist,
    read_parallel_json,
    read_tagged_jsonl,
    save_parallel_json,
)
from .errors import FormatError, ToolkitError, ValidationError
from .metrics import (
    DEFAULT_NORMALIZATION,
    CorpusReport,
    EditCounts,
    ErrorRateReport,
    NormalizationConfig,
    cer,
    corpus_rate,
    join_ref_hyp,
    levenshtein,
    normalize_text,
    read_transcript_tsv,
    wer,
)
from .retrieval import (
    ALL_PAIRS,
    POOLED,
    SRC2TRG,
    TRG2SRC,
    RetrievalConfig,
    RetrievalRow,
    evaluate_pairs,
    make_row,
    micro_average,
    random_baseline,
    recall_at_k,
    wilson_interval,
)
from .seqsim import (
    DEFAULT_BLOCK,
    EPS_GUARD,
    SeqSimScore,
    SimilarityMatrix,
    normalize_frames,
    seqsim,
    seqsim_matrix,
)
from .store import (
    EmbeddingSequence,
    UtteranceManifest,
    UtteranceRecord,
    load_manifest,
    read_embedding,
    save_manifest,
    sha256_file,
    write_embedding,
)
from .sweep import (
    LayerHypothesisSet,
    LayerSweepReport,
    MetricSweep,
    evaluate_layers,
    read_hypothesis_dir,
    select_best_layer,
    sweep_report,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_PAIRS",
    "DEFAULT_BLOCK",
    "DEFAULT_NORMALIZATION",
    "EPS_GUARD",
    "JAPANESE_CODES",
    "POOLED",
    "SRC2TRG",
    "TRG2SRC",
    "CorpusReport",
    "EditCounts",
    "EmbeddingSequence",
    "ErrorRateReport",
    "FormatError",
    "LayerHypothesisSet",
    "LayerSweepReport",
    "MetricSweep",
    "NormalizationConfig",
    "PairCounts",
    "ParallelSet",
    "RetrievalConfig",
    "RetrievalRow",
    "SeqSimScore",
    "SimilarityMatrix",
    "TaggedUtterance",
    "ToolkitError",
    "UtteranceManifest",
    "UtteranceRecord",
    "ValidationError",
    "build_challenge_set",
    "build_full_set",
    "cer",
    "contains_katakana",
    "corpus_rate",
    "dedup",
    "evaluate_layers",
    "evaluate_pairs",
    "has_proper_noun",
    "join_ref_hyp",
    "levenshtein",
    "load_manifest",
    "make_row",
    "micro_average",
    "normalize_frames",
    "normalize_text",
    "proportion_sample",
    "random_baseline",
    "read_blocklist",
    "read_embedding",
    "read_hypothesis_dir",
    "read_parallel_json",
    "read_tagged_jsonl",
    "read_transcript_tsv",
    "recall_at_k",
    "save_manifest",
    "save_parallel_json",
    "select_best_layer",
    "seqsim",
    "seqsim_matrix",
    "sha256_file",
    "sweep_report",
    "wer",
    "wilson_interval",
    "write_embedding",
]
