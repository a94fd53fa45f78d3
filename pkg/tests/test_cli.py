import json
import math
import subprocess
import sys

import pytest

from rfdlab.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def table(out):
    return dict(line.split("\t", 1) for line in out.strip().splitlines())


def test_compress_empty(tmp_path, capsys):
    src, dst = tmp_path / "e", tmp_path / "e.rfd"
    src.write_bytes(b"")
    code, out, _ = run(capsys, "compress", src, dst)
    assert code == 0
    assert table(out)["original_bytes"] == "0"
    assert len(dst.read_bytes()) == 46  # header and checksum only


def test_compress_constant_file(tmp_path, capsys):
    src, dst, back = tmp_path / "z", tmp_path / "z.rfd", tmp_path / "z.out"
    src.write_bytes(b"\x07" * 10**5)
    code, out, _ = run(capsys, "compress", src, dst, "--d", 32, "--c", "1/2", "--T", 65536)
    assert code == 0
    t = table(out)
    assert int(t["compressed_bytes"]) < 0.1 * 10**5
    assert float(t["ideal_bits"]) <= int(t["actual_bits"])
    assert run(capsys, "decompress", dst, back)[0] == 0
    assert back.read_bytes() == src.read_bytes()


def test_round_trip_with_flags(tmp_path, capsys):
    src, dst, back = tmp_path / "a", tmp_path / "a.rfd", tmp_path / "a.out"
    src.write_bytes(bytes(range(256)) * 40 + b"tail")
    assert run(capsys, "compress", src, dst, "--d", 3, "--c", "3/4", "--L", 500,
               "--s0", 2)[0] == 0
    assert run(capsys, "decompress", dst, back)[0] == 0
    assert back.read_bytes() == src.read_bytes()


def test_compress_bad_increment(tmp_path, capsys):
    src = tmp_path / "a"
    src.write_bytes(b"abc")
    code, _, err = run(capsys, "compress", src, tmp_path / "b", "--d", 0)
    assert code == 1 and "C1" in err


def test_T_and_L_exclusive(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["compress", "a", "b", "--T", "100", "--L", "3"])
    assert exc.value.code == 1


def test_missing_input(tmp_path, capsys):
    code, _, err = run(capsys, "compress", tmp_path / "nope", tmp_path / "b")
    assert code == 2 and err


def test_decompress_errors(tmp_path, capsys):
    src, dst = tmp_path / "a", tmp_path / "a.rfd"
    src.write_bytes(b"hello world" * 50)
    run(capsys, "compress", src, dst)
    blob = bytearray(dst.read_bytes())
    crc = tmp_path / "crc"
    crc.write_bytes(bytes(blob[:-1]) + bytes([blob[-1] ^ 1]))
    code, _, err = run(capsys, "decompress", crc, tmp_path / "o")
    assert code == 2 and "CRC" in err
    blob[4] = 2
    ver = tmp_path / "ver"
    ver.write_bytes(bytes(blob))
    code, _, err = run(capsys, "decompress", ver, tmp_path / "o")
    assert code == 2 and "version" in err


def test_bounds_table(capsys):
    code, out, _ = run(capsys, "bounds", "--alphabet", 2, "--d", 1, "--c", 0, "--T", 34,
                       "--n", 10**4, "--segments", 1)
    assert code == 0
    t = table(out)
    assert t["L"].startswith("32")
    assert float(t["r(L+1)"]) == pytest.approx(26.090624, abs=1e-6)
    assert float(t["prop1"]) == pytest.approx(30.460815, abs=1e-6)
    assert float(t["thm1 (worst-case |R|=314)"]) == pytest.approx(8405.042821, abs=1e-6)
    assert t["thm2 delta"].startswith("n/a")


def test_bounds_measured_and_thm2(capsys):
    code, out, _ = run(capsys, "bounds", "--c", "1/3", "--L", 9, "--n", 1000,
                       "--segments", 2, "--rescales", 40, "--eps", 0.3)
    t = table(out)
    assert code == 0 and "thm1 (measured |R|=40)" in t
    assert float(t["thm2 delta"]) == pytest.approx(13.283253, abs=1e-6)
    assert float(t["thm2 rhs"]) == pytest.approx(165.829291, abs=1e-6)


def test_bounds_non_integral_gamma(capsys):
    code, out, _ = run(capsys, "bounds", "--c", "1/3", "--L", 10, "--n", 1000, "--eps", 0.3)
    t = table(out)
    assert code == 0
    assert t["thm2 delta"].startswith("n/a") and t["thm2 rhs"] == "n/a"
    assert math.isfinite(float(t["prop1"]))


def test_experiment_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "experiment", "--trials", 1, "--seed", 7, "--n", 3000, "--out", a)[0] == 0
    assert run(capsys, "experiment", "--trials", 1, "--seed", 7, "--n", 3000, "--out", b)[0] == 0
    assert a.read_text() == b.read_text()
    assert a.read_text().splitlines()[0] == (
        "n,seed,S_size,R_size,ell_rfd,ell_pws,redundancy,bound_thm1,delta,"
        "bound_thm2_rhs,verdicts")


def test_experiment_rows_pass(capsys):
    code, out, _ = run(capsys, "experiment", "--segments", 3, "--n", 20000, "--alphabet", 4,
                       "--trials", 4, "--seed", 0)
    assert code == 0
    lines = out.strip().splitlines()[1:]
    assert len(lines) == 4
    for line in lines:
        cols = line.split(",")
        assert cols[-1] == "pass"
        assert float(cols[6]) <= float(cols[7])


def test_experiment_json_and_workers(tmp_path, capsys):
    one, many = tmp_path / "one.json", tmp_path / "many.json"
    args = ["experiment", "--n", 2000, "--trials", 3, "--eps", 0.2, "--seed", 3]
    assert run(capsys, *args, "--out", one)[0] == 0
    assert run(capsys, *args, "--workers", 2, "--out", many)[0] == 0
    rows = json.loads(one.read_text())
    assert [r["seed"] for r in rows] == [3, 4, 5]
    assert all(r["delta"] is not None for r in rows)
    assert one.read_text() == many.read_text()


def test_experiment_infeasible_eps(capsys):
    code, _, err = run(capsys, "experiment", "--eps", 0.6, "--alphabet", 2)
    assert code == 1 and "infeasible" in err


def test_experiment_example1(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, err = run(capsys, "experiment", "--example1", "--n-list", "1000,4000",
                       "--trials", 3, "--out", out)
    assert code == 0 and "mean_normalized" in err
    assert len(out.read_text().splitlines()) == 7


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rfdlab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "compress" in res.stdout
    res = subprocess.run([sys.executable, "-m", "rfdlab", "frobnicate"], capture_output=True)
    assert res.returncode == 1
