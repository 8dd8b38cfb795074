"""Command-line pipeline over the library: similarity matrices, retrieval
reports, challenge filtering, sampling, error rates, layer sweeps, and a
table renderer.

Every command writes into --out, embeds its resolved options as a "# config:"
header comment (CSV/text outputs) and a sibling <command>.run.json, and is
deterministic: rerunning with unchanged inputs and the same seed produces
byte-identical files. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .challenge import (
    ParallelSet,
    build_challenge_set,
    build_full_set,
    proportion_sample,
    read_blocklist,
    read_parallel_json,
    read_tagged_jsonl,
    save_parallel_json,
)
from .errors import FormatError, ToolkitError, ValidationError
from .metrics import (
    NormalizationConfig,
    corpus_rate,
    join_ref_hyp,
    read_transcript_tsv,
)
from .retrieval import RetrievalConfig, SimilarityMatrix, evaluate_pairs
from .seqsim import seqsim_matrix
from .store import load_manifest, read_embedding
from .sweep import read_hypothesis_dir, sweep_report


class UsageError(Exception):
    """Bad invocation (missing or malformed arguments): exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems by default; the contract here
    # reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    """Shortest round-tripping decimal form; deterministic for equal floats."""
    return repr(float(x))


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return doc


class _Options:
    """Resolved command options: built-in default < config file < CLI flag."""

    def __init__(self, ns: argparse.Namespace, defaults: dict):
        self.command = ns.command
        config = _load_config_file(getattr(ns, "config", None))
        unknown = sorted(set(config) - set(defaults) - {"seed", "out"})
        if unknown:
            raise ValidationError(f"config file sets unknown options: {', '.join(unknown)}")
        self.values = dict(defaults)
        self.values.update({k: v for k, v in config.items() if k != "out"})
        for key in list(defaults) + ["seed"]:
            cli_val = getattr(ns, key, None)
            if cli_val is not None:
                self.values[key] = cli_val
        self.values.setdefault("seed", 0)
        seed = self.values["seed"]
        if not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise UsageError(f"--seed must be an unsigned 64-bit integer, got {seed!r}")
        out = getattr(ns, "out", None) or config.get("out")
        if out is None:
            raise UsageError("--out <dir> is required")
        self.out = Path(out)

    def __getitem__(self, key):
        return self.values[key]

    def require(self, *keys):
        missing = [k for k in keys if self.values.get(k) in (None, [])]
        if missing:
            raise UsageError(f"missing required option(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")

    def echo(self) -> str:
        doc = {"command": self.command, "out": str(self.out)}
        doc.update(self.values)
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    def write_sidecar(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f"{self.command}.run.json"
        path.write_text(self.echo() + "\n", encoding="utf-8")

    def normalization(self) -> NormalizationConfig:
        return NormalizationConfig(
            case_fold=self.values["case_fold"],
            strip_punctuation=self.values["strip_punctuation"],
            unicode_form=self.values["unicode_form"],
            whitespace_collapse=self.values["whitespace_collapse"],
        )


def _write_csv(path: Path, comments: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def write_matrix_csv(matrix: SimilarityMatrix, path: Path, comments: Sequence[str] = ()) -> None:
    """Matrix CSV: '# ' comments, then a header row of target ids under 'id'."""
    rows = [
        [src_id] + [_fmt(v) for v in matrix.scores[i]]
        for i, src_id in enumerate(matrix.src_ids)
    ]
    _write_csv(path, comments, ["id", *matrix.trg_ids], rows)


def read_matrix_csv(path: str | Path) -> SimilarityMatrix:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or rows[0][:1] != ["id"]:
        raise FormatError(f"{path}: expected a matrix CSV with an 'id' header row")
    trg_ids = tuple(rows[0][1:])
    src_ids = tuple(r[0] for r in rows[1:])
    try:
        scores = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric score cell: {exc}") from exc
    if scores.size == 0 or scores.shape != (len(src_ids), len(trg_ids)):
        raise FormatError(f"{path}: ragged or empty matrix body")
    return SimilarityMatrix(src_ids=src_ids, trg_ids=trg_ids, scores=scores)


def _load_layer_embeddings(manifest_path: str, layer: int, verify: bool):
    manifest = load_manifest(manifest_path, verify_checksums=verify)
    records = manifest.for_layer(layer)
    if not records:
        raise ValidationError(f"{manifest_path}: no records for layer {layer}")
    seqs, ids = [], []
    for rec in records:
        try:
            seqs.append(read_embedding(manifest.resolve(rec)))
        except (OSError, ToolkitError) as exc:
            raise ValidationError(f"utt {rec.utt_id!r} (layer {layer}): {exc}") from exc
        ids.append(rec.utt_id)
    return seqs, ids


def cmd_seqsim(ns: argparse.Namespace) -> int:
    opts = _Options(ns, {
        "src": None, "trg": None, "layer": None, "mode": "l2",
        "block": 256, "tag": "", "verify_checksums": False,
    })
    opts.require("src", "trg", "layer")
    src_seqs, src_ids = _load_layer_embeddings(opts["src"], opts["layer"], opts["verify_checksums"])
    trg_seqs, trg_ids = _load_layer_embeddings(opts["trg"], opts["layer"], opts["verify_checksums"])
    matrix = seqsim_matrix(
        src_seqs, trg_seqs, src_ids=src_ids, trg_ids=trg_ids,
        normalize=opts["mode"], block=opts["block"],
    )
    opts.write_sidecar()
    stem = f"seqsim_{opts['tag']}_layer{opts['layer']}" if opts["tag"] else f"seqsim_layer{opts['layer']}"
    write_matrix_csv(matrix, opts.out / f"{stem}.csv", [f"config: {opts.echo()}"])
    return 0


def _parse_matrix_args(items: Sequence[str], default_layer) -> dict[tuple[str, int], str]:
    """Each item is pair=path or pair@layer=path."""
    out: dict[tuple[str, int], str] = {}
    for item in items:
        key, sep, path = item.partition("=")
        if not sep or not path:
            raise UsageError(f"--matrix expects pair[@layer]=path, got {item!r}")
        pair, at, layer_text = key.partition("@")
        if at:
            try:
                layer = int(layer_text)
            except ValueError:
                raise UsageError(f"--matrix {item!r}: layer must be an integer") from None
        elif default_layer is not None:
            layer = default_layer
        else:
            raise UsageError(f"--matrix {item!r} names no layer and --layer is unset")
        if not pair:
            raise UsageError(f"--matrix {item!r}: empty pair label")
        if (pair, layer) in out:
            raise UsageError(f"--matrix given twice for pair {pair!r} layer {layer}")
        out[(pair, layer)] = path
    return out


def cmd_retrieve(ns: argparse.Namespace) -> int:
    opts = _Options(ns, {
        "matrix": None, "layer": None, "ks": "1,5,10", "z": 1.96,
        "directions": "src->trg,trg->src",
    })
    opts.require("matrix")
    sources = _parse_matrix_args(opts["matrix"], opts["layer"])
    try:
        ks = tuple(int(k) for k in str(opts["ks"]).split(","))
    except ValueError:
        raise UsageError(f"--ks must be comma-separated integers, got {opts['ks']!r}") from None
    config = RetrievalConfig(ks=ks, z=float(opts["z"]), directions=tuple(str(opts["directions"]).split(",")))

    rows = []
    for layer in sorted({layer for _, layer in sources}):
        matrices = {
            pair: read_matrix_csv(path)
            for (pair, pair_layer), path in sorted(sources.items())
            if pair_layer == layer
        }
        rows.extend(evaluate_pairs(matrices, layer=layer, config=config))

    opts.write_sidecar()
    _write_csv(
        opts.out / "retrieval.csv",
        [f"config: {opts.echo()}"],
        ["layer", "pair", "direction", "K", "recall", "ci_low", "ci_high", "baseline", "hits", "trials"],
        [
            [r.layer, r.pair, r.direction, r.k, _fmt(r.recall), _fmt(r.ci_low),
             _fmt(r.ci_high), _fmt(r.baseline), r.hits, r.trials]
            for r in rows
        ],
    )
    return 0


def _parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for token in text.split(","):
        parts = token.split("-")
        if len(parts) != 2 or not all(parts):
            raise UsageError(f"pair {token!r} must look like srclang-trglang")
        pairs.append((parts[0], parts[1]))
    return pairs


def _pair_label(pair: tuple[str, str]) -> str:
    return f"{pair[0]}-{pair[1]}"


def _load_blocklists(opts: _Options):
    flat = read_blocklist(opts["blocklist"]) if opts["blocklist"] else ()
    per_lang: dict[str, tuple[str, ...]] = {}
    for item in opts["blocklist_lang"] or []:
        lang, sep, path = item.partition("=")
        if not sep or not lang or not path:
            raise UsageError(f"--blocklist-lang expects lang=path, got {item!r}")
        per_lang[lang] = read_blocklist(path)
    if per_lang and flat:
        raise UsageError("use either --blocklist or --blocklist-lang, not both")
    return per_lang or flat or None


def cmd_filter(ns: argparse.Namespace) -> int:
    opts = _Options(ns, {
        "parallel": None, "tags": None, "pairs": None,
        "japanese": "ja,jpn", "blocklist": None, "blocklist_lang": None,
    })
    opts.require("parallel", "tags", "pairs")
    parallel = read_parallel_json(opts["parallel"])
    tags = read_tagged_jsonl(opts["tags"])
    pairs = _parse_pairs(opts["pairs"])
    blocklist = _load_blocklists(opts)
    japanese = frozenset(str(opts["japanese"]).split(","))

    full, full_counts = build_full_set(parallel, tags, pairs)
    challenge, challenge_counts = build_challenge_set(
        parallel, tags, pairs, japanese_langs=japanese, blocklist=blocklist
    )

    opts.write_sidecar()
    for pair in pairs:
        save_parallel_json(full[pair], opts.out / f"full_{_pair_label(pair)}.json")
        save_parallel_json(challenge[pair], opts.out / f"challenge_{_pair_label(pair)}.json")
    _write_csv(
        opts.out / "counts.csv",
        [f"config: {opts.echo()}"],
        ["pair", "full", "challenge"],
        [[_pair_label(p), full_counts[p], challenge_counts[p]] for p in pairs],
    )
    return 0


def _parse_targets(opts: _Options) -> dict[tuple[str, str], int]:
    raw = opts["target"]
    targets: dict[tuple[str, str], int] = {}
    if isinstance(raw, Mapping):
        items = [(label, count) for label, count in raw.items()]
    else:
        items = []
        for item in raw:
            label, sep, count = str(item).partition("=")
            if not sep:
                raise UsageError(f"--target expects pair=count, got {item!r}")
            items.append((label, count))
    for label, count in items:
        (pair,) = _parse_pairs(label)
        try:
            targets[pair] = int(count)
        except ValueError:
            raise UsageError(f"target for {label!r} must be an integer, got {count!r}") from None
    return targets


def cmd_sample(ns: argparse.Namespace) -> int:
    opts = _Options(ns, {"full_dir": None, "target": None})
    opts.require("full_dir", "target")
    targets = _parse_targets(opts)
    full_dir = Path(opts["full_dir"])
    full = {}
    for pair in targets:
        path = full_dir / f"full_{_pair_label(pair)}.json"
        if not path.exists():
            raise ValidationError(f"no full set for pair {_pair_label(pair)}: {path} not found")
        full[pair] = read_parallel_json(path)

    sampled = proportion_sample(full, targets, seed=opts["seed"])

    opts.write_sidecar()
    for pair, pset in sorted(sampled.items()):
        save_parallel_json(pset, opts.out / f"sampled_{_pair_label(pair)}.json")
    _write_csv(
        opts.out / "counts.csv",
        [f"config: {opts.echo()}"],
        ["pair", "full", "sampled"],
        [[_pair_label(p), len(full[p].rows), len(sampled[p].rows)] for p in sorted(sampled)],
    )
    return 0


_NORMALIZATION_DEFAULTS = {
    "case_fold": True, "strip_punctuation": True,
    "unicode_form": "NFC", "whitespace_collapse": True,
}


def cmd_eval_asr(ns: argparse.Namespace) -> int:
    opts = _Options(ns, {"refs": None, "hyps": None, "unit": "both", **_NORMALIZATION_DEFAULTS})
    opts.require("refs", "hyps")
    if opts["unit"] not in ("char", "word", "both"):
        raise UsageError(f"--unit must be char, word, or both, got {opts['unit']!r}")
    cfg = opts.normalization()
    refs = read_transcript_tsv(opts["refs"])
    hyps = read_transcript_tsv(opts["hyps"])
    joined = join_ref_hyp(refs, hyps)
    units = ("char", "word") if opts["unit"] == "both" else (opts["unit"],)

    opts.write_sidecar()
    for unit in units:
        report = corpus_rate([(ref, hyp) for _, ref, hyp in joined], cfg, unit)
        rows = [
            [utt_id, u.substitutions, u.insertions, u.deletions, u.ref_len, _fmt(u.rate)]
            for (utt_id, _, _), u in zip(joined, report.utterances)
        ]
        c = report.corpus
        rows.append(["CORPUS", c.substitutions, c.insertions, c.deletions, c.ref_len, _fmt(c.rate)])
        _write_csv(
            opts.out / f"asr_{unit}.csv",
            [f"config: {opts.echo()}"],
            ["utt_id", "substitutions", "insertions", "deletions", "ref_len", "rate"],
            rows,
        )
    return 0


def cmd_sweep(ns: argparse.Namespace) -> int:
    opts = _Options(ns, {
        "hyp_root": None, "lang": None, "refs_dev": None, "refs_test": None,
        "layers": None, "tiebreak": "deepest", **_NORMALIZATION_DEFAULTS,
    })
    opts.require("hyp_root", "lang", "refs_dev", "refs_test")
    if opts["layers"] is None:
        layers = None
    else:
        try:
            layers = [int(x) for x in str(opts["layers"]).split(",")]
        except ValueError:
            raise UsageError(f"--layers must be comma-separated integers, got {opts['layers']!r}") from None
    lang = opts["lang"]
    dev_sets = read_hypothesis_dir(opts["hyp_root"], lang, "dev", layers=layers)
    test_sets = read_hypothesis_dir(opts["hyp_root"], lang, "test", layers=layers)
    refs_dev = read_transcript_tsv(opts["refs_dev"])
    refs_test = read_transcript_tsv(opts["refs_test"])
    report = sweep_report(
        dev_sets, test_sets, refs_dev, refs_test, opts.normalization(), tiebreak=opts["tiebreak"]
    )

    opts.write_sidecar()
    _write_csv(
        opts.out / f"sweep_{lang}_summary.csv",
        [f"config: {opts.echo()}"],
        ["lang", "metric", "best_layer", "best_test_rate", "final_layer_rate", "delta"],
        [
            [lang, m.metric, m.best_layer, _fmt(m.best_test_rate), _fmt(m.final_layer_rate), _fmt(m.delta)]
            for m in (report.cer, report.wer)
        ],
    )
    _write_csv(
        opts.out / f"sweep_{lang}_layers.csv",
        [f"config: {opts.echo()}"],
        ["lang", "split", "layer", "cer", "wer"],
        [
            [lang, split, layer, _fmt(cer_map[layer]), _fmt(wer_map[layer])]
            for split, cer_map, wer_map in (
                ("dev", report.cer.dev_rates, report.wer.dev_rates),
                ("test", report.cer.test_rates, report.wer.test_rates),
            )
            for layer in report.layers
        ],
    )
    return 0


def _render_table(title: str, columns: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    numeric = [
        all(_is_number(row[j]) for row in rows) if rows else False
        for j in range(len(columns))
    ]
    widths = [
        max(len(columns[j]), *(len(row[j]) for row in rows)) if rows else len(columns[j])
        for j in range(len(columns))
    ]
    def fmt_row(cells):
        return "  ".join(
            cells[j].rjust(widths[j]) if numeric[j] else cells[j].ljust(widths[j])
            for j in range(len(cells))
        ).rstrip()
    lines = [title, "-" * len(title), fmt_row(columns)]
    lines += [fmt_row([str(c) for c in row]) for row in rows]
    return "\n".join(lines)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_plain_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise FormatError(f"{path}: no rows")
    return rows[0], rows[1:]


def cmd_report(ns: argparse.Namespace) -> int:
    opts = _Options(ns, {"inputs": None, "title": "run report"})
    opts.require("inputs")
    sections = []
    for path in opts["inputs"]:
        columns, rows = _read_plain_csv(path)
        sections.append(_render_table(Path(path).name, columns, rows))
    opts.write_sidecar()
    body = f"# config: {opts.echo()}\n\n{opts['title']}\n\n" + "\n\n".join(sections) + "\n"
    (opts.out / "report.txt").write_text(body, encoding="utf-8")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="u64 seed for all randomness")
    parser.add_argument("--config", default=argparse.SUPPRESS, help="JSON file with option defaults")
    parser.add_argument("--out", default=argparse.SUPPRESS, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="speechalign", description=__doc__)
    _add_common(parser)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("seqsim", help="pairwise similarity matrix from two embedding manifests")
    p.add_argument("--src", help="source-language manifest JSON")
    p.add_argument("--trg", help="target-language manifest JSON")
    p.add_argument("--layer", type=int, help="encoder layer to compare")
    p.add_argument("--mode", choices=["l2", "none"], help="frame normalization (default l2)")
    p.add_argument("--block", type=int, help="frames per tile (default 256)")
    p.add_argument("--tag", help="label inserted into the output file name")
    p.add_argument("--verify-checksums", action="store_const", const=True, dest="verify_checksums")
    p.set_defaults(func=cmd_seqsim)

    p = sub.add_parser("retrieve", help="recall@K with confidence intervals from matrix CSVs")
    p.add_argument("--matrix", action="append", metavar="PAIR[@LAYER]=PATH")
    p.add_argument("--layer", type=int, help="layer for --matrix entries without @LAYER")
    p.add_argument("--ks", help="comma-separated K values (default 1,5,10)")
    p.add_argument("--z", type=float, help="interval width parameter (default 1.96)")
    p.add_argument("--directions", help="comma-separated: src->trg,trg->src")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("filter", help="build full and challenge sets from a tagged parallel corpus")
    p.add_argument("--parallel", help="parallel table JSON")
    p.add_argument("--tags", help="tagged utterances JSONL")
    p.add_argument("--pairs", help="comma-separated pairs, e.g. eng-zho,fra-zho")
    p.add_argument("--japanese", help="comma-separated codes screened for katakana (default ja,jpn)")
    p.add_argument("--blocklist", help="terms file applied to every language")
    p.add_argument("--blocklist-lang", action="append", metavar="LANG=PATH", dest="blocklist_lang")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("sample", help="fixed-size uniform subsample of each pair's full set")
    p.add_argument("--full-dir", dest="full_dir", help="directory holding full_<pair>.json files")
    p.add_argument("--target", action="append", metavar="PAIR=COUNT")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval-asr", help="character and word error rates for a ref/hyp TSV pair")
    p.add_argument("--refs", help="reference transcript TSV")
    p.add_argument("--hyps", help="hypothesis transcript TSV")
    p.add_argument("--unit", choices=["char", "word", "both"])
    _add_normalization_flags(p)
    p.set_defaults(func=cmd_eval_asr)

    p = sub.add_parser("sweep", help="early-exit layer selection on dev, reported on test")
    p.add_argument("--hyp-root", dest="hyp_root", help="root of <lang>/<split>/layer_<i>.tsv files")
    p.add_argument("--lang", help="language code")
    p.add_argument("--refs-dev", dest="refs_dev", help="dev reference TSV")
    p.add_argument("--refs-test", dest="refs_test", help="test reference TSV")
    p.add_argument("--layers", help="comma-separated layer list (default: all found)")
    p.add_argument("--tiebreak", choices=["deepest", "shallowest"])
    _add_normalization_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render command outputs as aligned text tables")
    p.add_argument("--inputs", nargs="+", help="CSV files produced by other subcommands")
    p.add_argument("--title", help="heading for the report")
    p.set_defaults(func=cmd_report)

    for sp in sub.choices.values():
        _add_common(sp)
    return parser


def _add_normalization_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--no-case-fold", action="store_const", const=False, dest="case_fold")
    parser.add_argument("--keep-punctuation", action="store_const", const=False, dest="strip_punctuation")
    parser.add_argument("--unicode-form", choices=["NFC", "NFKC"], dest="unicode_form")
    parser.add_argument("--no-whitespace-collapse", action="store_const", const=False, dest="whitespace_collapse")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"speechalign {ns.command}: usage error: {exc}", file=sys.stderr)
        return 1
    except ToolkitError as exc:
        print(f"speechalign {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"speechalign {ns.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
