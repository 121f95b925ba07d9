"""Command line: export a corpus of documents into interchange embedding files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corpus_io import CorpusFormatError
from .exporter import ExportError, ExportJob, export_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Encode marker-inserted documents and write embedding interchange files.",
    )
    parser.add_argument("--corpus", required=True, type=Path, help="directory of corpus JSON documents")
    parser.add_argument(
        "--encoder",
        required=True,
        help="encoder name (resolved from the local cache) or path to a saved encoder",
    )
    parser.add_argument("--out", required=True, type=Path, help="output directory for .emb files")
    parser.add_argument("--window-size", type=int, default=256, help="content tokens per window")
    parser.add_argument("--step", type=int, default=32, help="stride between window starts")
    parser.add_argument("--docs", nargs="*", default=None, help="restrict to these doc ids")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        corpus_dir=args.corpus,
        encoder=args.encoder,
        out_dir=args.out,
        window_size=args.window_size,
        step=args.step,
        doc_ids=args.docs,
    )
    try:
        written = export_corpus(job)
    except CorpusFormatError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 3
    except ExportError as exc:
        print(f"error: export: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
