"""Cycle-level model of patch streaming into an array of XOR decoders.

Each decoder owns a multi-bank FIFO of patch positions. Every cycle the fill
stream pushes up to ``n_fifo`` entries (one per bank) into it; entries that do
not fit because the FIFO is full are lost for that cycle, not carried over.
Then the decoder either takes all ``n_patch`` entries of its current word and
retires it, or stalls because the FIFO holds fewer than that.

The CSR baseline assigns rows to decoders in lock-step batches; a batch lasts
as long as its longest row.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError

DEFAULT_FIFO_DEPTH = 256


@dataclass(frozen=True)
class SimConfig:
    trace: tuple[int, ...]
    n_decoders: int = 1
    n_fifo: int = 1
    fifo_depth: int = DEFAULT_FIFO_DEPTH

    def __post_init__(self):
        object.__setattr__(self, "trace", tuple(int(p) for p in self.trace))
        if self.n_decoders < 1 or self.n_fifo < 1 or self.fifo_depth < 1:
            raise ConfigError("n_decoders, n_fifo and fifo_depth must be >= 1")
        if not self.trace:
            raise ConfigError("trace is empty")
        if min(self.trace) < 0:
            raise ConfigError("negative patch count in trace")
        if max(self.trace) > self.fifo_depth:
            # a word needing more entries than the FIFO holds would never retire
            raise ConfigError(
                f"fifo_depth={self.fifo_depth} is below the largest patch count {max(self.trace)}"
            )


@dataclass(frozen=True)
class SimReport:
    """Cycle counts; stalls include the warm-up cycles spent filling an empty FIFO."""

    total_cycles: float
    ideal_cycles: float
    stall_cycles: float
    relative_time: float
    fifo_full_events: int = 0
    fifo_empty_events: int = 0

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def _run_decoder(words: Sequence[int], n_fifo: int, depth: int) -> tuple[int, int, int]:
    occupancy = 0
    pending = sum(words)
    cycles = full = empty = 0
    i = 0
    while i < len(words):
        push = min(n_fifo, pending)
        if push > depth - occupancy:
            full += 1
            push = depth - occupancy
        occupancy += push
        pending -= push
        need = words[i]
        if occupancy >= need:
            occupancy -= need
            i += 1
        else:
            empty += 1
        cycles += 1
    return cycles, full, empty


def simulate_decode(cfg: SimConfig) -> SimReport:
    """Words go to decoders round-robin; the slowest decoder sets the total."""
    total = full = empty = 0
    for d in range(cfg.n_decoders):
        words = cfg.trace[d :: cfg.n_decoders]
        if not words:
            continue
        c, f, e = _run_decoder(words, cfg.n_fifo, cfg.fifo_depth)
        total = max(total, c)
        full += f
        empty += e
    ideal = -(-len(cfg.trace) // cfg.n_decoders)
    return SimReport(total, ideal, total - ideal, total / ideal, full, empty)


def simulate_csr(row_nnz: Sequence[int], n_decoders: int) -> SimReport:
    if not len(row_nnz):
        raise ConfigError("no rows")
    if n_decoders < 1:
        raise ConfigError("n_decoders must be >= 1")
    rows = [int(r) for r in row_nnz]
    total = sum(max(rows[i : i + n_decoders]) for i in range(0, len(rows), n_decoders))
    ideal = sum(rows) / n_decoders
    if ideal == 0:
        return SimReport(0, 0, 0, 1.0)
    return SimReport(total, ideal, total - ideal, total / ideal)


def binomial_rows(n_rows: int, n_cols: int, sparsity: float, seed: int = 0) -> np.ndarray:
    """Non-zeros per row of a randomly pruned ``n_rows x n_cols`` matrix."""
    rng = np.random.default_rng(seed)
    return rng.binomial(n_cols, 1.0 - sparsity, size=n_rows)


def load_trace(text: str) -> tuple[int, ...]:
    """Parse a JSON array of per-word patch counts."""
    data = json.loads(text)
    if not isinstance(data, list) or not all(isinstance(x, int) and x >= 0 for x in data):
        raise ConfigError("trace must be a JSON array of non-negative integers")
    return tuple(data)


def fifo_sweep(trace: Sequence[int], n_fifo_values: Sequence[int], **kwargs) -> dict[int, SimReport]:
    """Reports for each FIFO bank count, holding everything else fixed."""
    return {k: simulate_decode(SimConfig(tuple(trace), n_fifo=k, **kwargs)) for k in n_fifo_values}

