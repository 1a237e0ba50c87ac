import json
import subprocess
import sys

import pytest

from nonneg_whitney.cli import main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def dataset(tmp_path, points, m=1, n=1, name="d.json"):
    return write(tmp_path / name, {"n": n, "m": m, "points": [{"x": x, "f": f} for x, f in points]})


def read(path):
    return json.loads(path.read_text())


def check_outputs_carry_digest(out):
    man = read(out / "manifest.json")
    for name in man["outputs"]:
        text = (out / name).read_text()
        if name.endswith(".json"):
            assert json.loads(text)["input_digest"] == man["input_digest"], name
        else:
            assert text.splitlines()[0] == f"# input_digest={man['input_digest']}", name
    return man


class TestSubcommands:
    def test_interpolate_zero_data(self, tmp_path):
        d = dataset(tmp_path, [([0.0], 0.0), ([0.5], 0.0), ([1.0], 0.0)])
        out = tmp_path / "run"
        assert main(["interpolate", "--dataset", d, "--m", "1", "--flavor", "cm1",
                     "--grid", "2001", "--out", str(out)]) == 0
        assert read(out / "report.json")["interp_ok"] is True
        check_outputs_carry_digest(out)

    def test_interpolate_header_and_rows(self, tmp_path):
        d = dataset(tmp_path, [([0.0], 0.3), ([0.7], 1.0)])
        out = tmp_path / "run"
        assert main(["interpolate", "--dataset", d, "--grid", "101", "--out", str(out)]) == 0
        lines = (out / "grid.csv").read_text().splitlines()
        assert lines[1] == "x1,F,d1"
        assert len(lines) == 2 + 101
        report = read(out / "report.json")
        assert report["interp_ok"] and report["nonneg_ok"]

    def test_feasibility_two_points(self, tmp_path):
        d = dataset(tmp_path, [([0.0], 0.0), ([1.0], 1.0)])
        out = tmp_path / "run"
        assert main(["feasibility", "--dataset", d, "--k-sharp", "2", "--m", "1",
                     "--out", str(out)]) == 0
        s = read(out / "summary.json")
        assert s["ratio"] == pytest.approx(1.0, abs=1e-3)
        assert s["M_global"] == pytest.approx(1.0, rel=1e-3)
        lines = (out / "subsets.csv").read_text().splitlines()
        assert lines[1] == "subset_id,size,points,M,status"
        check_outputs_carry_digest(out)

    def test_decompose_empty(self, tmp_path):
        d = write(tmp_path / "empty.json", {"n": 1, "m": 1, "points": []})
        out = tmp_path / "run"
        assert main(["decompose", "--dataset", d, "--region", "-2", "2", "--out", str(out)]) == 0
        dec = read(out / "decomposition.json")
        assert len(dec["cubes"]) == 4
        assert all(c["type"] == 3 and c["level"] == 0 for c in dec["cubes"])
        check_outputs_carry_digest(out)

    def test_gamma_check(self, tmp_path):
        jets = [
            {"jet": {"base": [0.0], "m": 1, "derivs": [{"alpha": [0], "value": 0.5}]},
             "set": "prime", "x": [0.0], "M": 1.0},
            {"jet": {"base": [0.0], "m": 1, "derivs": [{"alpha": [0], "value": 2.0}]},
             "set": "prime", "x": [0.0], "M": 1.0},
        ]
        j = write(tmp_path / "jets.json", jets)
        out = tmp_path / "run"
        assert main(["gamma-check", "--jets", j, "--out", str(out)]) == 0
        verdicts = read(out / "verdicts.json")["verdicts"]
        assert [v["status"] for v in verdicts] == ["member", "nonmember"]

    def test_extend(self, tmp_path):
        jet = {"base": [0.0], "m": 2,
               "derivs": [{"alpha": [0], "value": 0.2}, {"alpha": [1], "value": 0.1}]}
        j = write(tmp_path / "jet.json", jet)
        out = tmp_path / "run"
        assert main(["extend", "--jet", j, "--M", "1", "--grid", "201", "--out", str(out)]) == 0
        report = read(out / "report.json")
        assert report["min_on_grid"] >= -1e-10
        check_outputs_carry_digest(out)

    def test_selftest(self, capsys):
        assert main(["selftest", "--seed", "0"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines and all(line.startswith("PASS") for line in lines)


class TestInputErrors:
    @pytest.mark.parametrize("payload,needle", [
        ("{not json", "JSON"),
        ({"n": 1, "m": 1, "points": [{"x": [0.0], "f": -1.0}]}, "points[0]"),
        ({"n": 1, "m": 1, "points": [{"x": [0.0, 1.0], "f": 1.0}]}, "points[0]"),
        ({"n": 1, "m": 1, "points": [{"x": [0.0], "f": 1.0}, {"x": [0.0], "f": 1.0}]}, "points[1]"),
    ])
    def test_bad_dataset(self, tmp_path, capsys, payload, needle):
        p = tmp_path / "bad.json"
        p.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        assert main(["interpolate", "--dataset", str(p), "--out", str(tmp_path / "o")]) == 2
        assert needle in capsys.readouterr().err

    def test_conflicting_m(self, tmp_path):
        d = dataset(tmp_path, [([0.0], 1.0)], m=2)
        assert main(["feasibility", "--dataset", d, "--m", "1", "--out", str(tmp_path / "o")]) == 2

    def test_point_outside_region(self, tmp_path, capsys):
        d = dataset(tmp_path, [([5.0], 1.0)])
        assert main(["decompose", "--dataset", d, "--region", "-2", "2",
                     "--out", str(tmp_path / "o")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["feasibility", "--dataset", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")]) == 2


class TestReproducibility:
    def test_byte_identical(self, tmp_path):
        d = dataset(tmp_path, [([0.0], 0.3), ([0.4], 0.0), ([1.1], 0.8)], m=2)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["interpolate", "--dataset", d, "--grid", "201", "--out", str(out)]) == 0
            outs.append(out)
        for name in ("report.json", "grid.csv", "manifest.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name

    def test_manifest_replay(self, tmp_path, capsys):
        d = dataset(tmp_path, [([0.0], 0.0), ([1.0], 1.0), ([1.5], 0.2)])
        out = tmp_path / "run"
        assert main(["feasibility", "--dataset", d, "--k-sharp", "2", "--out", str(out)]) == 0
        assert main(["selftest", "--manifest", str(out / "manifest.json")]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_replay_detects_changed_input(self, tmp_path):
        d = dataset(tmp_path, [([0.0], 0.0), ([1.0], 1.0)])
        out = tmp_path / "run"
        assert main(["feasibility", "--dataset", d, "--out", str(out)]) == 0
        dataset(tmp_path, [([0.0], 0.0), ([1.0], 2.0)])
        assert main(["selftest", "--manifest", str(out / "manifest.json")]) == 1


def test_module_entry_point(tmp_path):
    d = dataset(tmp_path, [([0.0], 0.0)])
    r = subprocess.run([sys.executable, "-m", "nonneg_whitney", "feasibility", "--dataset", d,
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
