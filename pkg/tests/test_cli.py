import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from willmore_umbilic.cli import DEFAULT_N, field_csv, load_tolerances, main
from willmore_umbilic.fields import sample_function


def run(argv, capsys=None):
    buf = io.StringIO()
    code = main(argv, stdout=buf)
    return code, buf.getvalue()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_catalog_listing():
    code, text = run(["catalog"])
    assert code == 0
    for name in ("catenoid", "sphere_stereo", "enneper", "clifford_stereo", "graph_bump"):
        assert name in text
    code, text = run(["catalog", "--json"])
    doc = json.loads(text)
    names = {e["name"] for e in doc["charts"]}
    assert {"catenoid", "graph_bump"} <= names


def test_unknown_flag_is_usage_error():
    proc = subprocess.run([sys.executable, "-m", "willmore_umbilic.cli", "catalog", "--bogus"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "catenoid", "--order", "3"])
    assert exc.value.code == 2


def test_usage_errors_from_validation(tmp_path):
    assert run(["umbilic", "--out", str(tmp_path)])[0] == 2
    assert run(["umbilic", "catenoid", "--synthetic", "z1", "--out", str(tmp_path)])[0] == 2
    assert run(["analyze", "catenoid", "--param", "bogus=1", "--out", str(tmp_path)])[0] in (1, 2)


def test_analyze_catenoid(tmp_path):
    code, _ = run(["analyze", "catenoid", "--n", "128", "--order", "4", "--out", str(tmp_path)])
    assert code == 0
    files = sorted(os.listdir(tmp_path))
    assert files == ["A0norm.csv", "H.csv", "e2u.csv", "manifest.json", "phi_im.csv", "phi_re.csv"]
    rows = read_csv(tmp_path / "H.csv")
    assert rows[0] == ["x", "y", "value"]
    assert max(abs(float(r[2])) for r in rows[1:]) <= 1e-6
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["stencil_order"] == 4 and man["config"]["chart"] == "catenoid"
    assert "catalog_version" in man


def test_analyze_rejects_non_isothermal(tmp_path, capsys):
    code, _ = run(["analyze", "graph_bump", "--n", "64", "--out", str(tmp_path)])
    assert code == 1
    assert "isothermal_deviation" in capsys.readouterr().err


def test_verify_catenoid(tmp_path):
    code, _ = run(["verify", "catenoid", "--n", "64,128", "--out", str(tmp_path), "--json"])
    assert code == 0
    rows = json.loads((tmp_path / "verify.json").read_text())["records"]
    cr = [r for r in rows if r["operation"] == "cr_residual" and r["n"] == 128][0]
    assert 1.7 <= cr["order"] <= 2.3
    assert (tmp_path / "verify.csv").exists()


def test_verify_clifford_in_sphere(tmp_path):
    code, _ = run(["verify", "clifford_stereo", "--ambient", "sphere", "--n", "128", "--order", "4", "--out", str(tmp_path)])
    assert code == 0
    rows = json.loads((tmp_path / "verify.json").read_text())["records"]
    (hol,) = [r for r in rows if r["operation"] == "holomorphy_check"]
    assert hol["sup_raw"] <= 1e-3


def test_verify_graph_bump_is_a_control(tmp_path):
    code, _ = run(["verify", "graph_bump", "--n", "64,128", "--out", str(tmp_path)])
    assert code == 0
    rows = json.loads((tmp_path / "verify.json").read_text())["records"]
    wr = [r for r in rows if r["operation"] == "willmore_residual"]
    assert wr and all(r["sup_normalized"] >= 1e-2 for r in wr)


def test_verify_fails_on_tight_tolerances(tmp_path, capsys):
    reg = load_tolerances(None)
    for rule in reg["identities"].values():
        rule["max_sup_normalized"] = 1e-12
    path = tmp_path / "tight.json"
    path.write_text(json.dumps(reg))
    code, _ = run(["verify", "catenoid", "--n", "64", "--tolerances", str(path), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "FAILED" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv,check",
    [
        (["umbilic", "sphere_stereo"], lambda r: r["totally_umbilic"] is True),
        (["umbilic", "catenoid"], lambda r: r["components"] == []),
        (
            ["umbilic", "--synthetic", "z2_times_shift"],
            lambda r: sorted((c["kind"], c["order"]) for c in r["components"]) == [("isolated", 1), ("isolated", 1)],
        ),
    ],
)
def test_umbilic(tmp_path, argv, check):
    code, _ = run(argv + ["--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "umbilic.json").read_text())
    assert check(doc["report"])
    assert read_csv(tmp_path / "components.csv")[0][0]


def test_flow_commands(tmp_path):
    code, _ = run(["flow", "catenoid", "--out", str(tmp_path / "c")])
    man = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert code == 0 and man["status"] == "converged" and man["steps"] <= 1
    code, _ = run(["flow", "--steps", "0", "--out", str(tmp_path / "z")])
    rows = read_csv(tmp_path / "z" / "trace.csv")
    assert code == 0 and len(rows) == 2 and rows[1][3] == "0.0"
    code, _ = run(["flow", "--steps", "20", "--out", str(tmp_path / "p")])
    rows = read_csv(tmp_path / "p" / "trace.csv")
    energies = [float(r[1]) for r in rows[1:]]
    assert code == 0 and all(b <= a for a, b in zip(energies, energies[1:]))
    assert float(rows[-1][2]) < float(rows[1][2])
    assert sorted(os.listdir(tmp_path / "p")) == ["A0norm.csv", "H.csv", "area_factor.csv", "manifest.json", "trace.csv"]


def _snapshot(path):
    return {name: (path / name).read_bytes() for name in sorted(os.listdir(path))}


def test_repeat_runs_are_bit_identical(tmp_path):
    # the manifest echoes the output path, so both runs write to the same place
    for argv in (["umbilic", "--synthetic", "curved_line"], ["flow", "--steps", "5"], ["verify", "enneper", "--n", "64"]):
        out = tmp_path / argv[0]
        assert run(argv + ["--out", str(out)])[0] == 0
        first = _snapshot(out)
        assert run(argv + ["--out", str(out)])[0] == 0
        assert _snapshot(out) == first


def test_field_csv_round_trip_precision():
    f = sample_function(lambda z: np.exp(z) / 3, 16)
    rows = list(csv.reader(io.StringIO(field_csv(f))))
    assert rows[0] == ["x", "y", "re", "im"]
    vals = np.array([[float(r[2]), float(r[3])] for r in rows[1:]])
    flat = f.values.ravel()
    assert np.array_equal(vals[:, 0] + 1j * vals[:, 1], flat)


def test_defaults():
    assert DEFAULT_N["verify"] == [64, 128]
