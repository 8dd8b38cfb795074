"""Command line: `layertap export` writes encoder states, `layertap decode`
writes early-exit hypothesis TSVs. Flags mirror ExportJob fields.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ExportError
from .export import ExportJob, decode_from_layer, export_encoder_states


def _parse_layers(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"layers must be comma-separated integers, got {text!r}")


def _add_job_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="checkpoint directory or hub id")
    p.add_argument("--audio-manifest", required=True, help="TSV: utt_id, lang, wav path")
    p.add_argument("--layers", required=True, type=_parse_layers, help="encoder layers, e.g. 24,28,32")
    p.add_argument("--out", required=True, dest="out_dir", help="output directory")
    p.add_argument("--task", default="transcribe")
    p.add_argument("--language", default=None, help="language token name, needs tokenizer files")
    p.add_argument("--split", default="test", choices=("dev", "test"))
    p.add_argument("--max-new-tokens", type=int, default=32)
    p.add_argument("--forced-token-ids", type=_parse_layers, default=(),
                   help="raw decoder token ids inserted after the start token")
    p.add_argument("--dataset-tag", default="")
    p.add_argument("--checksums", action="store_true", help="record sha256 of each state file")


def _job(ns: argparse.Namespace) -> ExportJob:
    return ExportJob(
        model=ns.model,
        audio_manifest=ns.audio_manifest,
        layers=ns.layers,
        out_dir=ns.out_dir,
        task=ns.task,
        language=ns.language,
        split=ns.split,
        max_new_tokens=ns.max_new_tokens,
        forced_token_ids=tuple(ns.forced_token_ids),
        dataset_tag=ns.dataset_tag,
        checksums=ns.checksums,
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="layertap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_job_flags(sub.add_parser("export", help="write per-layer encoder states + manifest"))
    _add_job_flags(sub.add_parser("decode", help="write early-exit hypothesis TSVs per layer"))
    ns = parser.parse_args(argv)
    try:
        job = _job(ns)
        if ns.command == "export":
            manifest = export_encoder_states(job)
            print(f"wrote {manifest}")
        else:
            from .model import SpeechModel

            model = SpeechModel(job.model)
            for layer in job.layers:
                for path in decode_from_layer(job, layer, model):
                    print(f"wrote {path}")
    except ExportError as exc:
        print(f"layertap {ns.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
