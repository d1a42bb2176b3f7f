"""Command-line front end.

Exit status: 0 ok, 1 usage error, 2 I/O error, 3 corrupt stream,
4 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import secrets
import sys
from pathlib import Path

import numpy as np

from . import sim, synth
from .codec import EXHAUSTIVE_LIMIT, make_network
from .errors import CodecError, CorruptStreamError
from .tensor import (
    DEFAULT_BLOCK_SIZE,
    QuantizedMatrix,
    compression_stats,
    decode_tensor,
    deserialize,
    encode_tensor,
    patch_trace,
    read_qmat,
    serialize,
    write_qmat,
)

DEFAULT_SEED = 20190101

EXIT_USAGE, EXIT_IO, EXIT_CORRUPT, EXIT_MISMATCH = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(args) -> int:
    if getattr(args, "entropy_seed", False):
        s = secrets.randbits(64)
        print(f"seed: {s}", file=sys.stderr)
        return s
    return args.seed


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _format_stats(stats: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(stats, indent=2)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(stats), lineterminator="\n")
    w.writeheader()
    w.writerow(stats)
    return buf.getvalue()


def _encode(args, qm: QuantizedMatrix):
    if args.n_in < 1 or args.n_out < args.n_in:
        raise UsageError(f"need 1 <= --n-in <= --n-out, got {args.n_in} and {args.n_out}")
    if args.exhaustive and args.n_in > EXHAUSTIVE_LIMIT:
        raise UsageError(f"--exhaustive needs --n-in <= {EXHAUSTIVE_LIMIT}")
    net = make_network(args.n_out, args.n_in, _seed(args))
    return encode_tensor(qm, net, args.block_size, exhaustive=args.exhaustive, workers=args.workers)


def cmd_encode(args) -> int:
    qm = read_qmat(Path(args.input).read_bytes())
    ct = _encode(args, qm)
    Path(args.output).write_bytes(serialize(ct))
    if args.trace_out:
        Path(args.trace_out).write_text(json.dumps(patch_trace(ct)))
    print(_format_stats(compression_stats(ct).as_dict(), args.format))
    return 0


def cmd_decode(args) -> int:
    ct = deserialize(Path(args.input).read_bytes())
    mask = None
    if args.mask:
        mask = read_qmat(Path(args.mask).read_bytes()).prune_mask
    Path(args.output).write_bytes(write_qmat(decode_tensor(ct, mask)))
    return 0


def cmd_verify(args) -> int:
    qm = read_qmat(Path(args.input).read_bytes())
    ct = deserialize(serialize(_encode(args, qm)))
    out = decode_tensor(ct, qm.prune_mask)
    if out != qm:
        bad = sum((a.bits ^ b.bits).bit_count() for a, b in zip(out.planes, qm.planes))
        print(f"verify: {bad} care bits differ", file=sys.stderr)
        return EXIT_MISMATCH
    print("verify: ok", file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    ct = deserialize(Path(args.input).read_bytes())
    print(_format_stats(compression_stats(ct).as_dict(), args.format))
    return 0


def cmd_synth_sweep(args) -> int:
    cfg = synth.SynthConfig(
        total_bits=args.bits,
        sparsity=args.sparsity,
        seed=_seed(args),
        n_in=args.n_in,
        n_out_values=tuple(args.n_out) if args.n_out else None,
        trials=args.trials,
        block_size=args.block_size,
        exhaustive=args.exhaustive,
    )
    if args.sweep == "nout":
        rows = synth.sweep_nout(cfg)
    elif args.sweep == "nin":
        rows = synth.sweep_nin(cfg, args.n_in_values or range(12, 61, 8))
    else:
        rows = synth.sweep_sparsity(cfg, args.sparsities or (0.8, 0.9, 0.95))
    text = synth.to_csv(rows) if args.format == "csv" else synth.to_json(rows)
    _emit(text, args.output)
    best = synth.best_row(rows)
    print(
        f"best: n_in={best.n_in} n_out={best.n_out} S={best.sparsity} "
        f"reduction={best.memory_reduction:.4f}",
        file=sys.stderr,
    )
    return 0


def cmd_simulate(args) -> int:
    if args.csr_rows:
        rows = json.loads(Path(args.csr_rows).read_text())
        report = sim.simulate_csr(rows, args.n_decoders)
    else:
        trace = sim.load_trace(Path(args.trace).read_text())
        report = sim.simulate_decode(
            sim.SimConfig(trace, args.n_decoders, args.n_fifo, args.fifo_depth)
        )
    _emit(report.to_json(), args.output)
    return 0


def cmd_gen_synthetic(args) -> int:
    if not 0.0 <= args.sparsity <= 1.0:
        raise UsageError("--sparsity must be within [0, 1]")
    rng = np.random.default_rng(_seed(args))
    keep = rng.random((args.m, args.n)) >= args.sparsity
    codes = rng.integers(0, 1 << args.n_q, size=(args.m, args.n))
    Path(args.output).write_bytes(write_qmat(QuantizedMatrix.from_arrays(codes, keep, args.n_q)))
    return 0


def _codec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-in", type=int, required=True)
    p.add_argument("--n-out", type=int, required=True)
    p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="network seed")
    p.add_argument("--entropy-seed", action="store_true", help="draw the network seed from the OS")
    p.add_argument("--exhaustive", action="store_true", help="minimum-patch search over all seeds")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xorcodec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="QMAT -> XQZ")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--trace-out", help="write per-word patch counts as JSON")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _codec_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="XQZ -> QMAT")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mask", help="QMAT whose prune mask re-zeroes pruned positions")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", help="encode, decode and compare care bits")
    p.add_argument("--input", required=True)
    _codec_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="size breakdown of an XQZ file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth-sweep", help="compression sweeps on random streams")
    p.add_argument("--sweep", choices=("nout", "nin", "sparsity"), default="nout")
    p.add_argument("--s", "--sparsity", dest="sparsity", type=float, default=0.9)
    p.add_argument("--n-in", type=int, default=20)
    p.add_argument("--n-out", type=int, nargs="+")
    p.add_argument("--n-in-values", type=int, nargs="+")
    p.add_argument("--sparsities", type=float, nargs="+")
    p.add_argument("--bits", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--block-size", type=int)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--entropy-seed", action="store_true")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output")
    p.set_defaults(func=cmd_synth_sweep)

    p = sub.add_parser("simulate", help="patch-FIFO decode or CSR baseline timing")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", help="JSON array of n_patch per word")
    src.add_argument("--csr-rows", help="JSON array of non-zeros per row")
    p.add_argument("--n-decoders", type=int, default=1)
    p.add_argument("--n-fifo", type=int, default=1)
    p.add_argument("--fifo-depth", type=int, default=sim.DEFAULT_FIFO_DEPTH)
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-synthetic", help="write a random pruned QMAT")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n-q", type=int, default=1)
    p.add_argument("--s", "--sparsity", dest="sparsity", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--entropy-seed", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CorruptStreamError as exc:
        print(f"corrupt stream: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, CodecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
