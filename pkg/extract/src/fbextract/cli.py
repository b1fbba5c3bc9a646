"""fbextract command line: images in, fuzzyboost-ready descriptor datasets out."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .extraction import ExtractionError, ExtractionJob, extract_image, run_job
from .manifest import ManifestError, build_manifest


def cmd_run(args: argparse.Namespace) -> int:
    job = ExtractionJob(
        input_dir=args.input,
        output_dir=args.output,
        detector=args.detector,
        max_keypoints=args.max_keypoints,
    )
    summary = run_job(job)
    print(f"extracted {len(summary.written)} images, skipped {len(summary.skipped)}")
    for path, reason in summary.skipped:
        print(f"  skipped {path}: {reason}")
    if not summary.written:
        print("nothing extracted; no manifest written", file=sys.stderr)
        return 1
    manifest_path = build_manifest(
        args.output, test_fraction=args.test_frac, seed=args.seed
    )
    print(f"manifest written to {manifest_path}")
    return 0


def cmd_extract_image(args: argparse.Namespace) -> int:
    count = extract_image(args.image, args.out, args.detector, args.max_keypoints)
    print(f"{args.out}: {count} descriptors")
    return 0


def cmd_manifest(args: argparse.Namespace) -> int:
    path = build_manifest(
        args.descriptors, args.out, test_fraction=args.test_frac, seed=args.seed
    )
    print(f"manifest written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbextract",
        description="Extract local-feature descriptors into FBDS files and manifests",
    )
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="extract a class-per-subfolder image tree and build the manifest")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--detector", default="sift")
    p.add_argument("--max-keypoints", type=int, default=0, help="0 = unlimited")
    p.add_argument("--test-frac", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("extract-image", help="extract a single image to one FBDS file")
    p.add_argument("image", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--detector", default="sift")
    p.add_argument("--max-keypoints", type=int, default=0)
    p.set_defaults(func=cmd_extract_image)

    p = sub.add_parser("manifest", help="build a manifest over extracted descriptors")
    p.add_argument("--descriptors", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--test-frac", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_manifest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, args.log_level.upper()))
    try:
        return args.func(args)
    except (ExtractionError, ManifestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
