import csv
import io
import subprocess
import sys

import pytest

from polyeo import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_gate_single(capsys):
    code, out, _ = run(["gate", "--gate", "xor", "--x", "1", "--w", "0"], capsys)
    assert code == 0
    assert rows(out) == [["gate", "port", "x", "w", "out"], ["xor", "drop", "1", "0", "1"]]


def test_gate_sweep_blocks(capsys):
    code, out, _ = run(["gate", "--gate", "and", "--sweep", "--points", "21"], capsys)
    table = rows(out)[1:]
    assert code == 0 and len(table) == 4 * 21
    assert {(r[0], r[1]) for r in table} == {("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")}


def test_gate_input_errors(capsys):
    assert run(["gate", "--gate", "and", "--x", "2", "--w", "0"], capsys)[0] == 2
    assert run(["gate", "--gate", "and"], capsys)[0] == 2
    assert run(["gate", "--gate", "and", "--x", "1", "--w", "1", "--shift", "0.05"], capsys)[0] == 2


def test_pbau_single(capsys):
    code, out, _ = run(["pbau", "--op", "add", "--bits", "8", "--x", "100", "--w", "55"], capsys)
    assert code == 0
    assert rows(out)[1] == ["add", "8", "100", "55", "155", "20.51", "60.1"]


def test_pbau_exhaustive(capsys):
    code, out, _ = run(["pbau", "--op", "sub,mul", "--bits", "6", "--exhaustive"], capsys)
    table = {r[0]: r for r in rows(out)[1:]}
    assert code == 0
    assert float(table["sub"][2]) == 0
    assert float(table["mul"][2]) <= 0.05


def test_pbau_errors(capsys):
    assert run(["pbau", "--op", "div", "--x", "1", "--w", "1"], capsys)[0] == 2
    assert run(["pbau", "--op", "add", "--bits", "4", "--x", "16", "--w", "1"], capsys)[0] == 2
    assert run(["pbau", "--op", "add", "--bits", "0", "--x", "0", "--w", "0"], capsys)[0] == 2


def test_scalability_grid(capsys):
    code, out, _ = run(["scalability"], capsys)
    table = rows(out)[1:]
    assert code == 0 and len(table) == 60
    assert all(int(r[3]) <= 200 for r in table if r[0] == "ceona_i")
    assert [r[3] for r in table if r[:3] == ["ceona_i", "4", "1"]] == ["192"]


def test_scalability_bad_params(tmp_path, capsys):
    assert run(["scalability", "--params", str(tmp_path / "none.ini")], capsys)[0] == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[noise]\nnope = 1\n")
    assert run(["scalability", "--params", str(bad)], capsys)[0] == 2


def write_net(tmp_path, text):
    f = tmp_path / "net.txt"
    f.write_text(text)
    return str(f)


def test_ceona_one_layer(tmp_path, capsys):
    net = write_net(tmp_path, "fc 64 64\n")
    code, out, _ = run(["ceona", "--model", net], capsys)
    table = rows(out)
    assert code == 0 and table[1][2] == "1"


def test_ceona_fps_ratio(tmp_path, capsys):
    net = write_net(tmp_path, "conv 64 16 3 3 16 16\nfc 1024 10\n")
    fps = []
    for sr in ("50", "5"):
        code, out, _ = run(["ceona", "--model", net, "--sr", sr], capsys)
        assert code == 0
        fps.append(float(rows(out)[-1][6]))
    assert fps[0] / fps[1] == pytest.approx(10, rel=0.01)


def test_ceona_capacity_exit(tmp_path, capsys):
    net = write_net(tmp_path, "fc 100000 4\n")
    code, _, err = run(["ceona", "--model", net, "--n", "1", "--gamma", "10"], capsys)
    assert code == 3 and "L1_fc" in err


def test_ceona_missing_model(tmp_path, capsys):
    assert run(["ceona", "--model", str(tmp_path / "x.txt")], capsys)[0] == 2


def test_missing_output_dir(tmp_path, capsys):
    code, _, _ = run(["gate", "--gate", "or", "--x", "0", "--w", "0", "--out",
                      str(tmp_path / "no" / "out.csv")], capsys)
    assert code == 2


def test_dfrc_santafe_requires_data(capsys):
    assert run(["dfrc", "--task", "santafe"], capsys)[0] == 2


def test_dfrc_small_chaneq(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["--jobs", "2", "dfrc", "--task", "chaneq", "--nv", "30", "--train", "300",
                     "--test", "300", "--snr", "12,32", "--out", str(out)]) == 0
    table = rows(out.read_text())
    assert [r[3] for r in table[1:]] == ["12", "32"]
    assert all(r[-1] == "" for r in table[1:])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "polyeo", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "polyeo" in res.stdout
