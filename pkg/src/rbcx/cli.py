"""Command-line interface: ``rbcx index|query|evaluate|sweep|ablate|bench``."""

import argparse
import json
import sys
from pathlib import Path

from . import __version__, kernels
from .bench import format_rows, run_benchmark
from .errors import RbcxError
from .experiments import (
    ablate,
    evaluate_queries,
    list_images,
    load_query_features,
    rows_to_csv,
    sweep,
)
from .imaging import PreprocessConfig
from .index import Mode, RetrievalConfig, build_index, retrieve
from .irma import BranchingScheme, load_ground_truth, load_scheme
from .persistence import load_index, save_index
from .radon import DEFAULT_ANGLES

MODE_CHOICES = [m.value for m in Mode]


def parse_k_range(text: str) -> list[int]:
    """``"14"``, ``"1,5,10"`` or ``"1..20"`` (inclusive)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError(f"invalid k specification {text!r}")
    return out


def parse_modes(text: str) -> list[Mode]:
    if text.strip() == "all":
        return list(Mode)
    try:
        return [Mode(m.strip()) for m in text.split(",") if m.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"modes must be 'all' or a list of {MODE_CHOICES}") from None


def _add_preprocess_args(p):
    p.add_argument("--angles", type=float, nargs="+", default=list(DEFAULT_ANGLES))
    p.add_argument("--side", type=int, default=64, help="preprocessed image side (default 64)")
    p.add_argument("--no-pad", action="store_true", help="resize instead of zero-padding to a square")
    p.add_argument("--no-landmarks", action="store_true", help="skip bright landmark removal")
    p.add_argument("--no-circle", action="store_true", help="skip the circular margin mask")


def _pcfg(args) -> PreprocessConfig:
    return PreprocessConfig(
        target_side=args.side,
        pad_enabled=not args.no_pad,
        landmarks_enabled=not args.no_landmarks,
        circle_enabled=not args.no_circle,
    )


def _scheme(args) -> BranchingScheme:
    return load_scheme(args.scheme) if args.scheme else BranchingScheme.uniform()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbcx", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rbcx {__version__} ({kernels.BACKEND} kernels)")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: RBCX_THREADS, 0 = all CPUs)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and save an index from a directory of images")
    p.add_argument("--images", required=True, type=Path)
    p.add_argument("--codes", type=Path, help="ground-truth file 'image_id;irma_code'")
    p.add_argument("--out", required=True, type=Path)
    _add_preprocess_args(p)

    p = sub.add_parser("query", help="retrieve similar images for one query image")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--image", required=True, type=Path)
    p.add_argument("--mode", choices=MODE_CHOICES, default=Mode.SP_R.value)
    p.add_argument("--k", type=int, default=14, help="top-k per projection")
    p.add_argument("--top", type=int, default=10, help="number of ranked results to print")
    p.add_argument("--no-timings", action="store_true", help="omit per-stage timings from the JSON")

    for name, help_text in (
        ("evaluate", "score rank-1 answers of a query directory with the IRMA error"),
        ("sweep", "error-vs-k table over modes plus single-projection runs (CSV)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--index", required=True, type=Path)
        p.add_argument("--queries", required=True, type=Path)
        p.add_argument("--codes", required=True, type=Path)
        p.add_argument("--scheme", type=Path, help="branching scheme file (default: uniform 10)")
        p.add_argument("--out", type=Path, help="CSV output path")
        if name == "evaluate":
            p.add_argument("--mode", choices=MODE_CHOICES, default=Mode.SP_R.value)
            p.add_argument("--k", type=int, default=14)
        else:
            p.add_argument("--k", type=parse_k_range, default=list(range(1, 21)))
            p.add_argument("--modes", type=parse_modes, default=list(Mode))
            p.add_argument("--no-per-angle", action="store_true")
            p.add_argument("--no-timings", action="store_true", help="drop the latency column")

    p = sub.add_parser("ablate", help="concatenated-projection error with each preprocessing stage toggled")
    p.add_argument("--images", required=True, type=Path, help="training image directory")
    p.add_argument("--queries", required=True, type=Path, help="test image directory")
    p.add_argument("--codes", required=True, type=Path)
    p.add_argument("--scheme", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--angles", type=float, nargs="+", default=list(DEFAULT_ANGLES))

    p = sub.add_parser("bench", help="time compiled vs numpy kernels")
    p.add_argument("--entries", type=int, default=13000)
    p.add_argument("--repeat", type=int, default=5)
    return parser


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_index(args) -> int:
    labels = load_ground_truth(args.codes) if args.codes else {}
    paths = list_images(args.images)
    corpus = [(p.stem, p, labels.get(p.stem)) for p in paths]
    cfg = RetrievalConfig(angles=tuple(args.angles))
    idx = build_index(corpus, cfg, _pcfg(args), threads=args.threads)
    save_index(idx, args.out)
    print(idx.summary)
    return 0


def cmd_query(args) -> int:
    idx = load_index(args.index)
    cfg = RetrievalConfig(mode=Mode(args.mode), top_k_per_projection=args.k, angles=idx.angles)
    result = retrieve(idx, args.image, cfg)
    record = result.to_dict(args.image.stem, top=args.top, timings=not args.no_timings)
    print(json.dumps(record, sort_keys=False))
    return 0


def _queries(idx, args):
    feats = load_query_features(idx, list_images(args.queries), threads=args.threads)
    for qid, _, err in feats:
        if err is not None:
            print(f"warning: skipped query {qid}: {err}", file=sys.stderr)
    return [(qid, f) for qid, f, err in feats if err is None]


def cmd_evaluate(args) -> int:
    idx = load_index(args.index)
    labels = load_ground_truth(args.codes)
    cfg = RetrievalConfig(mode=Mode(args.mode), top_k_per_projection=args.k, angles=idx.angles)
    report, rows = evaluate_queries(idx, _queries(idx, args), labels, cfg, _scheme(args))
    out = args.out or Path("evaluate_per_query.csv")
    out.write_text(rows_to_csv(rows, drop=("latency_ms",)), encoding="utf-8")
    summary = {"mode": cfg.mode.value, "k": cfg.top_k_per_projection, **report.summary(), "per_query_csv": str(out)}
    print(json.dumps(summary))
    return 0


def cmd_sweep(args) -> int:
    idx = load_index(args.index)
    labels = load_ground_truth(args.codes)
    rows = sweep(idx, _queries(idx, args), labels, args.modes, args.k,
                 scheme=_scheme(args), per_angle=not args.no_per_angle)
    drop = ("mean_latency_ms",) if args.no_timings else ()
    _emit(rows_to_csv(rows, drop=drop), args.out)
    return 0


def cmd_ablate(args) -> int:
    labels = load_ground_truth(args.codes)
    rows = ablate(list_images(args.images), list_images(args.queries), labels,
                  angles=tuple(args.angles), scheme=_scheme(args), threads=args.threads)
    _emit(rows_to_csv(rows), args.out)
    return 0


def cmd_bench(args) -> int:
    print(f"default backend: {kernels.BACKEND}; available: {', '.join(kernels.available_backends())}")
    print(format_rows(run_benchmark(n_entries=args.entries, repeat=args.repeat)))
    return 0


COMMANDS = {
    "index": cmd_index,
    "query": cmd_query,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (RbcxError, OSError, ValueError, KeyError) as exc:
        print(f"rbcx {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
