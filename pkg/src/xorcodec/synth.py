"""Synthetic pruned bit streams and compression sweeps.

Each element of a random stream is a don't-care with probability ``S``;
care bits are fair coin flips. Sweeps encode the same stream at many
``(n_in, n_out)`` points and report the resulting memory reduction.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .codec import MaskedWord, encode_word, encode_word_exhaustive, make_network
from .errors import ConfigError
from .prng import MASK64, splitmix64
from .tensor import (
    QuantizedMatrix,
    compression_stats,
    encode_tensor,
    slice_words,
)

REPORT_COLUMNS = ("n_in", "n_out", "sparsity", "reduction", "ratio", "mean_patch", "max_patch", "seconds")


@dataclass(frozen=True)
class SynthConfig:
    total_bits: int = 10_000
    sparsity: float = 0.9
    seed: int = 0
    n_in: int = 20
    # None means 2*n_in, 3*n_in, ..., 20*n_in
    n_out_values: tuple[int, ...] | None = None
    trials: int = 3
    n_q: int = 1
    # None puts every word in one block, i.e. one global patch-count width
    block_size: int | None = None
    exhaustive: bool = False

    def __post_init__(self):
        if not 0.0 <= self.sparsity <= 1.0:
            raise ConfigError(f"sparsity must be in [0, 1], got {self.sparsity}")
        if self.total_bits < 1 or self.trials < 1 or self.n_in < 1 or self.n_q < 1:
            raise ConfigError("total_bits, trials, n_in and n_q must be positive")

    def n_outs(self) -> list[int]:
        if self.n_out_values is not None:
            return list(self.n_out_values)
        return [k * self.n_in for k in range(2, 21)]


@dataclass
class SweepRow:
    n_in: int
    n_out: int
    sparsity: float
    payload_bits: float
    width_bits: float
    patch_bits: float
    uncompressed_bits: int
    memory_reduction: float
    mean_patch: float
    max_patch: int
    seconds: float
    trials: int = field(default=1, repr=False)

    @property
    def ratio(self) -> float:
        total = self.payload_bits + self.width_bits + self.patch_bits
        return self.uncompressed_bits / total if total else float("inf")

    def report(self) -> dict:
        return {
            "n_in": self.n_in,
            "n_out": self.n_out,
            "sparsity": self.sparsity,
            "reduction": self.memory_reduction,
            "ratio": self.ratio,
            "mean_patch": self.mean_patch,
            "max_patch": self.max_patch,
            "seconds": self.seconds,
        }


def _trial_seed(seed: int, trial: int) -> int:
    return splitmix64((seed + 0x632BE59BD9B4E019 * trial) & MASK64)


def gen_matrix(cfg: SynthConfig, trial: int = 0) -> QuantizedMatrix:
    """A ``1 x total_bits`` matrix with ``n_q`` random planes."""
    rng = np.random.default_rng(_trial_seed(cfg.seed, trial))
    keep = rng.random((1, cfg.total_bits)) >= cfg.sparsity
    codes = rng.integers(0, 1 << cfg.n_q, size=(1, cfg.total_bits))
    return QuantizedMatrix.from_arrays(codes, keep, cfg.n_q)


def gen_words(cfg: SynthConfig, n_out: int, trial: int = 0) -> list[MaskedWord]:
    return slice_words(gen_matrix(cfg, trial), n_out)


def run_point(cfg: SynthConfig, n_out: int, matrices: Sequence[QuantizedMatrix] | None = None) -> SweepRow:
    """Encode every trial stream at ``(cfg.n_in, n_out)`` and average."""
    if n_out > cfg.total_bits:
        raise ConfigError(f"n_out={n_out} exceeds total_bits={cfg.total_bits}")
    if matrices is None:
        matrices = [gen_matrix(cfg, t) for t in range(cfg.trials)]
    t0 = time.perf_counter()
    payload = width = patch = 0
    reductions = []
    counts: list[int] = []
    for t, qm in enumerate(matrices):
        net = make_network(n_out, cfg.n_in, _trial_seed(cfg.seed ^ 0x5EED, t))
        block = cfg.block_size or max(1, -(-cfg.total_bits // n_out) * cfg.n_q)
        ct = encode_tensor(qm, net, block, exhaustive=cfg.exhaustive)
        st = compression_stats(ct)
        payload += st.payload_bits
        width += st.width_field_bits
        patch += st.patch_pos_bits
        reductions.append(st.memory_reduction)
        counts.extend(ct.patch_counts)
    k = len(matrices)
    return SweepRow(
        n_in=cfg.n_in,
        n_out=n_out,
        sparsity=cfg.sparsity,
        payload_bits=payload / k,
        width_bits=width / k,
        patch_bits=patch / k,
        uncompressed_bits=cfg.total_bits * cfg.n_q,
        memory_reduction=float(np.mean(reductions)),
        mean_patch=float(np.mean(counts)) if counts else 0.0,
        max_patch=max(counts, default=0),
        seconds=time.perf_counter() - t0,
        trials=k,
    )


def sweep_nout(cfg: SynthConfig, stop_after_declines: int | None = None) -> list[SweepRow]:
    """One row per ``n_out``; optionally stop after that many consecutive drops."""
    matrices = [gen_matrix(cfg, t) for t in range(cfg.trials)]
    rows: list[SweepRow] = []
    declines = 0
    for n_out in cfg.n_outs():
        if n_out < cfg.n_in or n_out > cfg.total_bits:
            continue
        row = run_point(cfg, n_out, matrices)
        if rows and row.memory_reduction < rows[-1].memory_reduction:
            declines += 1
        else:
            declines = 0
        rows.append(row)
        if stop_after_declines and declines >= stop_after_declines:
            break
    return rows


def sweep_nin(
    cfg: SynthConfig,
    n_in_values: Iterable[int] = range(12, 61, 8),
    stop_after_declines: int = 2,
) -> list[SweepRow]:
    """``sweep_nout`` for each seed size, each line cut off once reduction starts falling."""
    rows = []
    for n_in in n_in_values:
        rows.extend(sweep_nout(replace(cfg, n_in=n_in), stop_after_declines))
    return rows


def sweep_sparsity(
    cfg: SynthConfig,
    sparsities: Iterable[float] = (0.8, 0.9, 0.95),
) -> list[SweepRow]:
    rows = []
    for s in sparsities:
        rows.extend(sweep_nout(replace(cfg, sparsity=s)))
    return rows


def best_row(rows: Iterable[SweepRow]) -> SweepRow:
    """Row with the highest memory reduction; the earliest wins ties."""
    best = None
    for r in rows:
        if best is None or r.memory_reduction > best.memory_reduction:
            best = r
    if best is None:
        raise ValueError("no rows")
    return best


def best_by(rows: Iterable[SweepRow], key: str) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(getattr(r, key), []).append(r)
    return {k: best_row(v) for k, v in groups.items()}


def sparsity_gaps(rows: Iterable[SweepRow]) -> dict[float, float]:
    """``S - best reduction`` for each sparsity in ``rows``."""
    return {s: s - r.memory_reduction for s, r in best_by(rows, "sparsity").items()}


def patch_totals(
    n_in: int, n_out: int, sparsity: float, n_words: int, seed: int = 0
) -> tuple[int, int]:
    """Total patches of the greedy and the exhaustive encoder over random words."""
    rng = np.random.default_rng(_trial_seed(seed, 0))
    net = make_network(n_out, n_in, _trial_seed(seed ^ 0x5EED, 0))
    greedy = exhaustive = 0
    for _ in range(n_words):
        keep = rng.random(n_out) >= sparsity
        vals = rng.integers(0, 2, n_out).astype(bool)
        care = int.from_bytes(np.packbits(keep, bitorder="little").tobytes(), "little")
        value = int.from_bytes(np.packbits(vals, bitorder="little").tobytes(), "little")
        word = MaskedWord.from_bits(n_out, value, care)
        greedy += encode_word(net, word).n_patch
        exhaustive += encode_word_exhaustive(net, word).n_patch
    return greedy, exhaustive


def to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.report())
    return buf.getvalue()


def to_json(rows: Iterable[SweepRow]) -> str:
    return json.dumps([r.report() for r in rows], indent=2)
