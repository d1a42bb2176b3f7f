import csv
import io
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from xorcodec.codec import make_network
from xorcodec.errors import ConfigError
from xorcodec.synth import (
    REPORT_COLUMNS,
    SynthConfig,
    best_by,
    best_row,
    gen_matrix,
    gen_words,
    patch_totals,
    run_point,
    sparsity_gaps,
    sweep_nin,
    sweep_nout,
    sweep_sparsity,
    to_csv,
    to_json,
)
from xorcodec.tensor import compression_stats, deserialize, encode_tensor, serialize


def _strip_time(rows):
    return [replace(r, seconds=0.0) for r in rows]


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(sparsity=1.5)
    with pytest.raises(ConfigError):
        SynthConfig(trials=0)
    assert SynthConfig(n_in=20).n_outs() == list(range(40, 401, 20))


def test_gen_words_boundaries():
    assert all(w.care_count == 0 for w in gen_words(SynthConfig(sparsity=1.0, total_bits=500), 50))
    assert all(w.care_count == 50 for w in gen_words(SynthConfig(sparsity=0.0, total_bits=500), 50))


def test_gen_words_care_fraction():
    fractions = []
    for seed in range(10):
        words = gen_words(SynthConfig(sparsity=0.9, seed=seed), 100)
        fractions.append(sum(w.care_count for w in words) / 10_000)
    assert 0.085 <= np.mean(fractions) <= 0.115


def test_gen_words_deterministic():
    a = gen_words(SynthConfig(seed=5), 64)
    b = gen_words(SynthConfig(seed=5), 64)
    c = gen_words(SynthConfig(seed=6), 64)
    assert a == b and a != c


def test_care_values_balanced():
    qm = gen_matrix(SynthConfig(sparsity=0.0, total_bits=20_000))
    assert 0.48 < qm.planes[0].popcount() / 20_000 < 0.52


@pytest.fixture(scope="module")
def fig5_rows():
    return sweep_nout(SynthConfig(trials=5))


def test_payload_closed_form(fig5_rows):
    for r in fig5_rows:
        assert r.payload_bits == 20 * math.ceil(10_000 / r.n_out)
    payloads = [r.payload_bits for r in fig5_rows]
    assert payloads == sorted(payloads, reverse=True)


def test_patch_bits_grow_with_n_out(fig5_rows):
    overhead = [r.patch_bits + r.width_bits for r in fig5_rows]
    assert overhead == sorted(overhead)


def test_peak_reduction_near_expected(fig5_rows):
    best = best_row(fig5_rows)
    assert 0.80 <= best.memory_reduction <= 0.86
    assert 120 <= best.n_out <= 320


def test_row_invariant(fig5_rows):
    for r in fig5_rows:
        total = r.payload_bits + r.width_bits + r.patch_bits
        assert r.memory_reduction == pytest.approx(1 - total / r.uncompressed_bits)
        assert r.memory_reduction == pytest.approx(1 - 1 / r.ratio)


def test_reduction_bounded_by_sparsity():
    for s in (0.5, 0.8, 0.95):
        for r in sweep_nout(SynthConfig(sparsity=s, trials=2)):
            assert r.memory_reduction <= s + 0.01


def test_dense_stream_is_incompressible():
    rows = sweep_nout(SynthConfig(sparsity=0.0, trials=1, n_out_values=(40, 80, 200)))
    assert all(r.memory_reduction <= 0 for r in rows)


def test_sweep_deterministic():
    cfg = SynthConfig(trials=2, n_out_values=(60, 160, 260))
    assert _strip_time(sweep_nout(cfg)) == _strip_time(sweep_nout(cfg))


def test_sweep_rows_match_serialized_streams():
    cfg = SynthConfig(trials=1)
    qm = gen_matrix(cfg)
    row = run_point(cfg, 180, [qm])
    # rebuild the same stream and take its size from the serialized bytes
    from xorcodec.synth import _trial_seed

    net = make_network(180, 20, _trial_seed(cfg.seed ^ 0x5EED, 0))
    ct = encode_tensor(qm, net, len(qm.planes) * math.ceil(10_000 / 180))
    back = deserialize(serialize(ct))
    st = compression_stats(back)
    assert st.total_bits == row.payload_bits + row.width_bits + row.patch_bits
    assert st.memory_reduction == pytest.approx(row.memory_reduction)


def test_nin_sweep_stopping_rule_and_trend():
    rows = sweep_nin(SynthConfig(trials=2), n_in_values=(12, 20, 28))
    for n_in in (12, 20, 28):
        line = [r for r in rows if r.n_in == n_in]
        assert all(r.n_out > n_in for r in line)
        red = [r.memory_reduction for r in line]
        ended_by_rule = len(red) >= 3 and red[-1] < red[-2] < red[-3]
        assert ended_by_rule or line[-1].n_out == 20 * n_in
        # no earlier pair of consecutive drops
        for k in range(2, len(red) - 1):
            assert not (red[k] < red[k - 1] < red[k - 2])
    best = best_by(rows, "n_in")
    assert best[28].memory_reduction >= best[12].memory_reduction - 0.01


def test_sparsity_gaps_shrink():
    gaps = sparsity_gaps(sweep_sparsity(SynthConfig(trials=2)))
    assert gaps[0.95] < gaps[0.9] < gaps[0.8]


def test_exhaustive_never_worse_than_greedy():
    greedy, exhaustive = patch_totals(12, 64, 0.8, 200)
    assert exhaustive <= greedy


def test_exhaustive_sweep_point():
    cfg = SynthConfig(trials=1, n_in=12, exhaustive=True)
    assert run_point(cfg, 96).memory_reduction >= run_point(replace(cfg, exhaustive=False), 96).memory_reduction


def test_report_formats():
    rows = sweep_nout(SynthConfig(trials=1, n_out_values=(100, 200)))
    parsed = list(csv.DictReader(io.StringIO(to_csv(rows))))
    assert tuple(parsed[0]) == REPORT_COLUMNS
    assert [int(p["n_out"]) for p in parsed] == [100, 200]
    data = json.loads(to_json(rows))
    assert tuple(data[0]) == REPORT_COLUMNS
    assert data[1]["reduction"] == rows[1].memory_reduction
