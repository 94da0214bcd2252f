"""Command-line interface: ``wavesdtw {gen,normalize,align,verify,bench,sweep}``.

Exit codes: 0 success, 1 verification or determinism failure, 2 usage error
(bad flag, missing or malformed input file).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .bench import (BenchInputs, DeterminismError, format_rows, format_table,
                    run_benchmark, run_sweep)
from .engine import EngineConfig, align_batch, align_query
from .normalizer import normalize_batch, normalize_series
from .numerics import PrecisionMode
from .oracle import sdtw_min
from .series import DatasetError, QueryBatch, load_dataset, manifest_for, store_dataset

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _widths(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition("-")
        try:
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad width list {text!r}") from None
    return out


def _engine_flags(p):
    p.add_argument("--lanes", type=int, default=64, metavar="L")
    p.add_argument("--segment-width", type=int, default=14, metavar="W")
    p.add_argument("--precision", choices=["f32", "f16"], default="f32")
    p.add_argument("--workers", type=int, default=1)


def _input_flags(p):
    p.add_argument("--batch", type=Path, help="query batch dataset (stem or file)")
    p.add_argument("--ref", type=Path, help="reference dataset (stem or file)")
    p.add_argument("--queries", type=int, default=512, metavar="Z")
    p.add_argument("--query-len", type=int, default=2000, metavar="M")
    p.add_argument("--ref-len", type=int, default=100_000, metavar="N")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavesdtw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate CBF reference and query batch datasets")
    p.add_argument("--queries", type=int, default=512, metavar="Z")
    p.add_argument("--query-len", type=int, default=2000, metavar="M")
    p.add_argument("--ref-len", type=int, default=100_000, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("data"), help="output directory")

    p = sub.add_parser("normalize", help="z-normalize a batch and/or reference dataset")
    p.add_argument("--batch", type=Path)
    p.add_argument("--ref", type=Path)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("align", help="align every query of a batch against a reference")
    p.add_argument("--batch", type=Path, required=True)
    p.add_argument("--ref", type=Path, required=True)
    _engine_flags(p)
    p.add_argument("--out", type=Path, help="cost file (default: stdout)")

    p = sub.add_parser("verify", help="compare the engine to the sequential oracle on random instances")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=["f32", "f16"], default="f32")

    for name, text in (("bench", "time the normalizer and sDTW kernels"),
                       ("sweep", "time the sDTW kernel across segment widths")):
        p = sub.add_parser(name, help=text)
        _input_flags(p)
        _engine_flags(p)
        p.add_argument("--runs", type=int, default=10)
        p.add_argument("--warmups", type=int, default=2)
        p.add_argument("--out", type=Path, help="write key=value rows here")
        if name == "bench":
            p.add_argument("--kernel", choices=["sdtw", "normalizer", "both"], default="both")
        else:
            p.add_argument("--widths", type=_widths, default=list(range(2, 21)),
                           help="e.g. 2-20 or 2,4,14 (default 2-20)")
    return parser


def _load(path, role):
    try:
        manifest, payload = load_dataset(path)
    except FileNotFoundError as exc:
        raise UsageError(f"missing dataset file: {exc.filename}") from None
    except DatasetError as exc:
        raise UsageError(str(exc)) from None
    if manifest.role != role:
        raise UsageError(f"{path}: expected a {role} dataset, found role={manifest.role}")
    return manifest, payload


def _config(args) -> EngineConfig:
    try:
        return EngineConfig(args.lanes, args.segment_width, PrecisionMode(args.precision), args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    batch = datagen.gen_batch(args.queries, args.query_len, args.seed, workers=args.workers)
    reference = datagen.gen_reference(args.ref_len, args.seed)
    store_dataset(manifest_for(batch, seed=args.seed), batch, args.out / "batch")
    store_dataset(manifest_for(reference, seed=args.seed), reference, args.out / "reference")
    print(f"wrote {args.out / 'batch'} ({args.queries}x{args.query_len}) "
          f"and {args.out / 'reference'} ({args.ref_len})")
    return EXIT_OK


def cmd_normalize(args) -> int:
    if args.batch is None and args.ref is None:
        raise UsageError("normalize needs --batch and/or --ref")
    if args.batch is not None:
        manifest, batch = _load(args.batch, "batch")
        out = normalize_batch(batch, workers=args.workers)
        store_dataset(manifest_for(out, normalized=True, seed=manifest.seed), out,
                      args.out / Path(args.batch).with_suffix("").name)
    if args.ref is not None:
        manifest, ref = _load(args.ref, "reference")
        out = normalize_series(ref)
        store_dataset(manifest_for(out, normalized=True, seed=manifest.seed), out,
                      args.out / Path(args.ref).with_suffix("").name)
    return EXIT_OK


def cmd_align(args) -> int:
    _, batch = _load(args.batch, "batch")
    _, ref = _load(args.ref, "reference")
    result = align_batch(batch, ref, _config(args))
    text = "".join(f"{float(c)!r}\n" for c in result.costs)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def random_instance(rng: np.random.Generator):
    """Random verification case: (query, reference, lanes, segment_width)."""
    m = int(rng.integers(4, 65))
    n = int(rng.integers(8, 257))
    lanes = int(rng.choice([1, 2, 4, 8]))
    width = int(rng.integers(1, 17))
    q = rng.standard_normal(m).astype(np.float32)
    r = rng.standard_normal(n).astype(np.float32)
    return q, r, lanes, width


def verify(instances: int, seed: int, precision=PrecisionMode.FULL32) -> list:
    """Return the list of mismatching instances (empty when all agree)."""
    precision = PrecisionMode.parse(precision)
    rng = np.random.default_rng(seed)
    failures = []
    for idx in range(instances):
        q, r, lanes, width = random_instance(rng)
        if precision is PrecisionMode.PACKED16 and width % 2:
            width += 1
        got = align_query(q, r, EngineConfig(lanes, width, precision))
        want = sdtw_min(q, r, precision).cost
        if np.float32(got).tobytes() != np.float32(want).tobytes():
            failures.append((idx, q.size, r.size, lanes, width, float(got), float(want)))
    return failures


def cmd_verify(args) -> int:
    failures = verify(args.instances, args.seed, args.precision)
    for idx, m, n, lanes, width, got, want in failures:
        print(f"MISMATCH instance={idx} M={m} N={n} L={lanes} W={width} engine={got!r} oracle={want!r}")
    print(f"verify: {args.instances - len(failures)}/{args.instances} instances match "
          f"(precision={args.precision}, seed={args.seed})")
    return EXIT_MISMATCH if failures else EXIT_OK


def _bench_inputs(args) -> tuple[QueryBatch, np.ndarray]:
    """Raw (unnormalized) batch and reference, from files or freshly generated."""
    if args.batch is not None:
        _, batch = _load(args.batch, "batch")
    else:
        batch = datagen.gen_batch(args.queries, args.query_len, args.seed, workers=args.workers)
    if args.ref is not None:
        _, ref = _load(args.ref, "reference")
    else:
        ref = datagen.gen_reference(args.ref_len, args.seed)
    return batch, ref


def _emit(rows, out):
    sys.stdout.write(format_table(rows))
    sys.stdout.write(format_rows(rows))
    if out:
        out.write_text(format_rows(rows))


def cmd_bench(args) -> int:
    batch, ref = _bench_inputs(args)
    config = _config(args)
    rows = []
    if args.kernel in ("normalizer", "both"):
        report = run_benchmark("normalizer", BenchInputs(batch, ref, config), args.runs, args.warmups)
        rows.append(report.row())
    if args.kernel in ("sdtw", "both"):
        # normalization happens outside the timed region
        inputs = BenchInputs(normalize_batch(batch, workers=args.workers), normalize_series(ref), config)
        report = run_benchmark("sdtw", inputs, args.runs, args.warmups)
        rows.append(report.row())
    _emit(rows, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    batch, ref = _bench_inputs(args)
    config = _config(args)
    if config.precision is PrecisionMode.PACKED16 and any(w % 2 for w in args.widths):
        raise UsageError("f16 sweeps need even segment widths")
    inputs = BenchInputs(normalize_batch(batch, workers=args.workers), normalize_series(ref), config)
    report = run_sweep(args.widths, inputs, args.runs, args.warmups)
    _emit(report.table_rows(), args.out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "normalize": cmd_normalize, "align": cmd_align,
            "verify": cmd_verify, "bench": cmd_bench, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"wavesdtw {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DeterminismError as exc:
        print(f"wavesdtw {args.command}: determinism violation: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
