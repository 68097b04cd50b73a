"""``phash`` command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, harness
from .blockhash import BitHash
from .imageio_prep import DecodeError
from .linalg import NumericalError
from .metrics import TAU_HIGH, TAU_LOW, classify
from .prng import KEY_ENV_VAR, Key
from .spectral import SpectralHash

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=harness.ALGORITHMS, default="bdct_pca")
    p.add_argument("--key", help=f"64 hex chars; defaults to ${KEY_ENV_VAR}")
    p.add_argument("--workers", type=int, default=1)


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-low", type=float, default=TAU_LOW)
    p.add_argument("--tau-high", type=float, default=TAU_HIGH)


def _add_corpus(p: argparse.ArgumentParser, suite: bool = False) -> None:
    p.add_argument("--corpus", required=True, type=Path, help="directory of PNG/JPEG/BMP images")
    p.add_argument("--out", type=Path, default=Path("phash-report"), help="report directory")
    p.add_argument("--deterministic", action="store_true",
                   help="omit timestamps and wall-clock so reruns are byte-identical")
    if suite:
        p.add_argument("--suite", default="table1", help='"table1" or a path to an attacks JSON file')
        p.add_argument("--debug", action="store_true", help="append an identity (contrast 0) row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phash", description="Perceptual image hashing tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hash", help="print one hash per input image")
    _add_common(p)
    p.add_argument("paths", nargs="*", type=Path)
    p.add_argument("--out", type=Path, help="write to this file instead of stdout")

    p = sub.add_parser("compare", help="distance and verdict for two images or hash strings")
    _add_common(p)
    _add_thresholds(p)
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--hashes", action="store_true", help="arguments are serialized hashes, not files")

    p = sub.add_parser("robustness", help="hash distance under each attack of a suite")
    _add_common(p)
    _add_corpus(p, suite=True)

    p = sub.add_parser("discrimination", help="pairwise distance distribution over a corpus")
    _add_common(p)
    _add_thresholds(p)
    _add_corpus(p)

    p = sub.add_parser("tamper", help="logo-tamper each image and classify the pair")
    _add_common(p)
    _add_thresholds(p)
    _add_corpus(p)
    p.add_argument("--logo-fraction", type=float, default=0.1)
    return parser


def _resolve_key(args) -> str | None:
    text = args.key or os.environ.get(KEY_ENV_VAR)
    if text:
        try:
            return Key.from_hex(text).hex()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.algorithm == "svd_dctpca":
        raise UsageError(f"svd_dctpca needs --key or ${KEY_ENV_VAR}")
    return None


def _config(args, key_hex) -> harness.RunConfig:
    try:
        return harness.RunConfig(
            corpus_dir=args.corpus,
            key_hex=key_hex,
            algorithm=args.algorithm,
            attack_suite=getattr(args, "suite", "table1"),
            thresholds=(getattr(args, "tau_low", TAU_LOW), getattr(args, "tau_high", TAU_HIGH)),
            output_dir=args.out,
            workers=args.workers,
            deterministic=args.deterministic,
            debug=getattr(args, "debug", False),
            logo_fraction=getattr(args, "logo_fraction", 0.1),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _safe_hash(job):
    try:
        return str(harness._hash_unit(job)), None
    except (OSError, DecodeError, NumericalError) as exc:
        return None, f"{job[0]}: {exc}"


def cmd_hash(args, key_hex) -> int:
    if not args.paths:
        raise UsageError("no input images")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    jobs = [(p, args.algorithm, key_hex) for p in args.paths]
    results = harness._map(_safe_hash, jobs, args.workers)
    lines, failed = [], 0
    for path, (text, err) in zip(args.paths, results):
        if err:
            print(f"phash: {err}", file=sys.stderr)
            failed += 1
        else:
            lines.append(f"{text}  {path}\n")
    if args.out:
        args.out.write_text("".join(lines), encoding="utf-8")
    else:
        sys.stdout.write("".join(lines))
    return EXIT_FAILURE if failed else EXIT_OK


def _parse_hash(text: str):
    if text.startswith("svd-dctpca"):
        return SpectralHash.from_string(text)
    return BitHash.from_string(text)


def cmd_compare(args, key_hex) -> int:
    if args.hashes:
        try:
            a, b = _parse_hash(args.a), _parse_hash(args.b)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        a, b = (harness._hash_unit((Path(x), args.algorithm, key_hex)) for x in (args.a, args.b))
    try:
        value = harness.distance(a, b)
    except (ValueError, AttributeError) as exc:
        raise UsageError(f"hashes are not comparable: {exc}") from None
    out = {"metric": "ber" if isinstance(a, BitHash) else "spectral_distance", "value": value}
    if isinstance(a, BitHash):
        try:
            out["label"] = classify(value, args.tau_low, args.tau_high).label
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _summary_line(report: dict) -> str:
    cmd = report["command"]
    if cmd == "robustness":
        return f"{len(report['attacks'])} attacks x {len(report['images'])} images"
    if cmd == "discrimination":
        d = report["discrimination"]
        return f"{d['count']} pairs, mean {d['mean']:.4f}, std {d['std']:.4f}"
    s = report["summary"]
    return f"{s['tampered']}/{s['n']} labelled tampered"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        key_hex = _resolve_key(args)
        if args.command == "hash":
            return cmd_hash(args, key_hex)
        if args.command == "compare":
            return cmd_compare(args, key_hex)
        runner = {"robustness": harness.run_robustness,
                  "discrimination": harness.run_discrimination,
                  "tamper": harness.run_tamper}[args.command]
        report = runner(_config(args, key_hex))
        print(f"{args.command}: {_summary_line(report)} -> {args.out}")
        return EXIT_OK
    except UsageError as exc:
        print(f"phash: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (harness.CorpusError, OSError, DecodeError, NumericalError, ValueError) as exc:
        print(f"phash: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
