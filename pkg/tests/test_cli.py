import csv
import io
import json
import subprocess
import sys

import pytest

from xorcodec import cli
from xorcodec.tensor import QuantizedMatrix, read_qmat


@pytest.fixture
def qmat(tmp_path):
    path = tmp_path / "w.qmat"
    assert cli.main(["gen-synthetic", "--m", "48", "--n", "40", "--n-q", "2", "--s", "0.85", "--output", str(path)]) == 0
    return path


def test_verify_generated(qmat):
    assert cli.main(["verify", "--input", str(qmat), "--n-in", "16", "--n-out", "96"]) == 0


def test_verify_exhaustive(qmat):
    assert cli.main(["verify", "--input", str(qmat), "--n-in", "10", "--n-out", "48", "--exhaustive"]) == 0


def test_encode_decode_equals_inprocess_verify(qmat, tmp_path, capsys):
    xqz, out, trace = tmp_path / "w.xqz", tmp_path / "back.qmat", tmp_path / "t.json"
    assert cli.main([
        "encode", "--input", str(qmat), "--output", str(xqz), "--n-in", "16", "--n-out", "96",
        "--trace-out", str(trace),
    ]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["total_bits"] == stats["payload_bits"] + stats["width_field_bits"] + stats["patch_pos_bits"]
    assert cli.main(["decode", "--input", str(xqz), "--mask", str(qmat), "--output", str(out)]) == 0
    assert out.read_bytes() == qmat.read_bytes()
    assert len(json.loads(trace.read_text())) == 2 * -(-48 * 40 // 96)


def test_outputs_are_byte_identical(qmat, tmp_path):
    paths = []
    for k in range(2):
        p = tmp_path / f"{k}.xqz"
        cli.main(["encode", "--input", str(qmat), "--output", str(p), "--n-in", "12", "--n-out", "80", "--workers", str(k + 1)])
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    g = [tmp_path / "a.qmat", tmp_path / "b.qmat"]
    for p in g:
        cli.main(["gen-synthetic", "--m", "10", "--n", "10", "--output", str(p)])
    assert g[0].read_bytes() == g[1].read_bytes()


def test_stats_patch_free_ratio(tmp_path, capsys):
    q, x = tmp_path / "empty.qmat", tmp_path / "empty.xqz"
    cli.main(["gen-synthetic", "--m", "100", "--n", "100", "--s", "1.0", "--output", str(q)])
    cli.main(["encode", "--input", str(str(q)), "--output", str(x), "--n-in", "20", "--n-out", "200"])
    capsys.readouterr()
    assert cli.main(["stats", "--input", str(x)]) == 0
    assert json.loads(capsys.readouterr().out)["ratio"] == 10.0
    assert cli.main(["stats", "--input", str(x), "--format", "csv"]) == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert float(row["ratio"]) == 10.0


def test_synth_sweep_table(capsys):
    assert cli.main(["synth-sweep", "--s", "0.9", "--n-in", "20", "--bits", "10000"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert list(rows[0]) == ["n_in", "n_out", "sparsity", "reduction", "ratio", "mean_patch", "max_patch", "seconds"]
    best = max(float(r["reduction"]) for r in rows)
    assert 0.80 <= best <= 0.86


def test_synth_sweep_json_to_file(tmp_path):
    out = tmp_path / "s.json"
    assert cli.main([
        "synth-sweep", "--sweep", "sparsity", "--sparsities", "0.8", "0.95", "--n-out", "100", "200",
        "--trials", "1", "--format", "json", "--output", str(out),
    ]) == 0
    data = json.loads(out.read_text())
    assert {d["sparsity"] for d in data} == {0.8, 0.95}


def test_simulate_trace_and_csr(tmp_path, capsys):
    t = tmp_path / "t.json"
    t.write_text(json.dumps([0, 3, 0, 3, 1]))
    assert cli.main(["simulate", "--trace", str(t), "--n-fifo", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["relative_time"] == 1.0
    rows = tmp_path / "rows.json"
    rows.write_text("[1, 9]")
    assert cli.main(["simulate", "--csr-rows", str(rows), "--n-decoders", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["relative_time"] == pytest.approx(1.8)


def test_exit_codes(qmat, tmp_path):
    assert cli.main(["encode", "--input", str(qmat), "--n-in", "4", "--n-out", "8", "--output", str(tmp_path / "x")]) == 0
    with pytest.raises(SystemExit) as exc:
        cli.main(["encode", "--input", str(qmat)])
    assert exc.value.code == 1
    assert cli.main(["verify", "--input", str(qmat), "--n-in", "9", "--n-out", "8"]) == 1
    assert cli.main(["stats", "--input", str(tmp_path / "missing.xqz")]) == 2
    bad = tmp_path / "bad.xqz"
    bad.write_bytes(b"NOPE" + bytes(40))
    assert cli.main(["stats", "--input", str(bad)]) == 3


def test_verify_mismatch_exit(qmat, monkeypatch):
    def broken(ct, mask=None, net=None):
        q = read_qmat(qmat.read_bytes())
        planes = (q.planes[0].flip(q.prune_mask.positions()[0]),) + q.planes[1:]
        return QuantizedMatrix(q.m, q.n, q.n_q, q.prune_mask, planes)

    monkeypatch.setattr(cli, "decode_tensor", broken)
    assert cli.main(["verify", "--input", str(qmat), "--n-in", "16", "--n-out", "96"]) == 4


def test_module_entry_point(qmat):
    proc = subprocess.run(
        [sys.executable, "-m", "xorcodec", "verify", "--input", str(qmat), "--n-in", "16", "--n-out", "64"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "ok" in proc.stderr
