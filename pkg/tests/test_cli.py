import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tensor_rtc import io as tio
from tensor_rtc import NonFiniteIterate, cli, conj_transpose, sample_mask, t_product
from tensor_rtc.cli import main


@pytest.fixture
def low_rank_file(tmp_path):
    rng = np.random.default_rng(0)
    a = t_product(rng.standard_normal((8, 2, 4)), rng.standard_normal((2, 6, 4)))
    path = tmp_path / "a.t3d"
    tio.write_tensor(path, a)
    return path, a


def test_table_preset(capsys):
    assert main(["table", "--preset", "paper-table1", "--size", "40"]) == 0
    out, err = capsys.readouterr()
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0].keys())[:4] == ["n", "r", "rank", "rel_error"]
    assert [(int(r["n"]), int(r["r"]), int(r["rank"])) for r in rows] == [(40, 2, 2), (40, 4, 4)]
    assert all(float(r["rel_error"]) <= 1e-5 for r in rows)
    assert "lambda: default" in err
    # no output file, so the manifest goes to stderr
    assert '"subcommand": "table"' in err


def test_mismatched_mask_names_both_shapes(tmp_path, low_rank_file, capsys):
    path, _ = low_rank_file
    mask = tmp_path / "m.txt"
    tio.write_mask(mask, sample_mask((8, 6, 5), 0.5, seed=0))
    assert main(["solve-rtc", "--in", str(path), "--mask", str(mask)]) == 1
    err = capsys.readouterr().err
    assert "(8, 6, 5)" in err and "(8, 6, 4)" in err


def test_info(low_rank_file, capsys):
    path, _ = low_rank_file
    assert main(["info", "--in", str(path)]) == 0
    out = capsys.readouterr().out
    assert "dims: 8 x 6 x 4" in out
    assert "tubal_rank: 2" in out
    assert "tnn:" in out and "incoherence: mu_u=" in out


def test_synth_then_solve(tmp_path, capsys):
    prefix = tmp_path / "inst"
    assert main(["synth", "--size", "20", "--n3", "10", "--rank", "1", "--rho", "0.8",
                 "--gamma", "0.1", "--seed", "3", "--out", str(prefix)]) == 0
    for suffix in ("_l0.t3d", "_x.t3d", "_mask.txt", "_support.txt"):
        assert (tmp_path / f"inst{suffix}").exists()
    out_l = tmp_path / "l.t3d"
    code = main(["solve-rtc", "--in", f"{prefix}_x.t3d", "--mask", f"{prefix}_mask.txt",
                 "--truth", f"{prefix}_l0.t3d", "--out", str(out_l), "--sparse-out", str(tmp_path / "e.t3d")])
    assert code == 0
    out = capsys.readouterr().out
    assert "lambda:" in out and "(default)" in out
    l0 = tio.read_tensor(f"{prefix}_l0.t3d")
    l = tio.read_tensor(out_l)
    assert np.linalg.norm(l - l0) <= 1e-5 * np.linalg.norm(l0)

    manifest = json.loads((tmp_path / "l.t3d.manifest.json").read_text())
    assert manifest["subcommand"] == "solve-rtc" and manifest["status"] == "ok"
    assert manifest["outputs"][str(out_l)] == tio.sha256_file(out_l)


def test_solve_tc_and_trpca(low_rank_file, tmp_path, capsys):
    path, a = low_rank_file
    mask = tmp_path / "m.txt"
    tio.write_mask(mask, sample_mask(a.shape, 0.8, seed=1))
    out = tmp_path / "tc.t3d"
    assert main(["solve-tc", "--in", str(path), "--mask", str(mask), "--out", str(out)]) == 0
    assert main(["solve-trpca", "--in", str(path), "--lambda", "0.5", "--manifest", str(tmp_path / "m.json")]) == 0
    assert "(--lambda)" in capsys.readouterr().out
    assert json.loads((tmp_path / "m.json").read_text())["params"]["lam"] == 0.5


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["solve-rtc", "--in", "x.t3d"]) == 1
    assert main(["table", "--preset", "nope"]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_file_exits_one(tmp_path):
    assert main(["info", "--in", str(tmp_path / "missing.t3d")]) == 1


def test_bad_file_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.t3d"
    bad.write_bytes(b"NOPE")
    assert main(["info", "--in", str(bad)]) == 1
    assert "magic" in capsys.readouterr().err


def test_numerical_failure_exits_two(low_rank_file, monkeypatch, capsys):
    def fail(*args, **kwargs):
        raise NonFiniteIterate("simulated")

    monkeypatch.setattr(cli, "solve_trpca", fail)
    path, _ = low_rank_file
    assert main(["solve-trpca", "--in", str(path)]) == 2


def test_tsvd_outputs(low_rank_file, tmp_path, capsys):
    path, a = low_rank_file
    assert main(["tsvd", "--in", str(path), "--out", str(tmp_path / "f")]) == 0
    u, s, v = (tio.read_tensor(tmp_path / f"f_{n}.t3d") for n in "usv")
    np.testing.assert_allclose(t_product(t_product(u, s), conj_transpose(v)), a, atol=1e-10)


def test_phase_grid_cli(tmp_path, capsys):
    out = tmp_path / "grid.pgm"
    assert main(["phase-grid", "--size", "10", "--n3", "4", "--rho", "0.9", "--ranks", "1,2",
                 "--gammas", "0,0.1,0.2", "--trials", "1", "--out", str(out)]) == 0
    assert tio.read_pgm(out).shape == (3, 2)
    assert (tmp_path / "grid.csv").exists()
    assert (tmp_path / "grid.pgm.manifest.json").exists()


def test_lemma_check_cli(capsys):
    assert main(["lemma-check", "--lemma", "4", "--size", "10", "--n3", "3", "--rho", "0,0.5",
                 "--trials", "2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 4 and float(rows[0]["normalized_norm"]) == 0.0


def test_image_restore(tmp_path, capsys):
    img = tmp_path / "in.ppm"
    y, x = np.mgrid[0:16, 0:16] / 15
    tio.write_ppm(img, np.stack([x, y, 0.5 * (x + y)], axis=2))
    out = tmp_path / "out.ppm"
    assert main(["image-restore", "--in", str(img), "--rho", "0.8", "--gamma", "0.05", "--out", str(out)]) == 0
    assert tio.read_ppm(out).shape == (16, 16, 3)
    assert "psnr:" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tensor_rtc", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
