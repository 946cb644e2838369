import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from radinfo.cli import build_config, main, UsageError
from radinfo.experiments import EXPERIMENTS


def load(path):
    doc = json.loads((path / "result.json").read_text())
    doc.pop("wall_time")
    return doc


def test_cost_model_run(tmp_path):
    out = tmp_path / "cm"
    code = main(["run", "cost-model", "--c", "1", "--m", "0.1", "--M", "10", "--out", str(out)])
    assert code == 0
    doc = load(out)
    assert set(doc) == {"experiment", "config_echo", "results", "pass_flags"}
    assert doc["results"]["comp_delta"] == 1.1 and doc["results"]["comp_wor"] == 2.0
    assert all(doc["pass_flags"].values())


def test_failing_flags_give_status_1(tmp_path):
    # at 200 samples the F(m) trend cannot separate the large-m intervals
    out = tmp_path / "fm"
    code = main(["run", "fm-measure", "--T", "64", "--samples", "200", "--ms", "2,4,8,16,32,64",
                 "--out", str(out)])
    assert code == 1
    assert load(out)["pass_flags"] == {"strictly_decreasing_beyond_ci": False}
    rows = list(csv.DictReader(open(out / "delta_table.csv")))
    assert [int(r["m"]) for r in rows] == [2, 4, 8, 16, 32, 64]


def test_experiment_exception_gives_status_1(tmp_path):
    out = tmp_path / "err"
    code = main(["run", "atoms-demo", "--deltas", "0", "--out", str(out)])
    assert code == 1
    doc = json.loads((out / "result.json").read_text())
    assert doc["error"]["type"] == "ValueError"


@pytest.mark.parametrize("argv", [
    ["run", "cost-model", "--bogus", "1"],
    ["run", "no-such-experiment"],
    ["run", "cost-model", "--c", "abc"],
    ["run", "wiener-gap", "--T", "1.5"],
    ["run", "cost-model", "--workers", "0"],
    [],
])
def test_usage_errors(tmp_path, argv, capsys):
    out = tmp_path / "never"
    assert main(argv + (["--out", str(out)] if len(argv) > 1 else [])) == 2
    assert not out.exists()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"c": 2.0, "m": 0.5, "M": 10}))
    out = tmp_path / "o"
    assert main(["run", "cost-model", "--config", str(cfg), "--m", "0.25", "--out", str(out)]) == 0
    echo = load(out)["config_echo"]
    assert echo == {"c": 2.0, "m": 0.25, "M": 10.0, "epsilon": 0.1}


def test_unknown_file_keys(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"zz": 1}))
    assert main(["run", "cost-model", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    cfg.write_text("[1, 2]")
    assert main(["run", "cost-model", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_build_config_lists():
    cfg = build_config("p-average", {"ps": [1, 2]}, {"deltas": "0.1,0.05"})
    assert cfg.ps == [1, 2] and cfg.deltas == [0.1, 0.05]
    with pytest.raises(UsageError):
        build_config("p-average", {}, {"ps": "1,x"})


def test_every_experiment_has_flags():
    from radinfo.cli import _make_parser
    parser = _make_parser()
    for name, (cls, _) in EXPERIMENTS.items():
        args = parser.parse_args(["run", name])
        assert args.experiment == name


def test_chebyshev_points_csv(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("0,0\n1,0\n0.5,0.8660254037844386\n")
    out = tmp_path / "cheb"
    assert main(["run", "chebyshev", "--points", str(pts), "--out", str(out)]) == 0
    assert abs(load(out)["results"]["points"]["radius"] - 3 ** -0.5) <= 1e-6


@pytest.mark.parametrize("name, args", [
    ("hilbert-demo", ["--samples", "5000"]),
    ("uc-convergence", ["--n_measure", "20000", "--n_points", "8", "--n_y", "11"]),
    ("perturbation", ["--trials", "2", "--n_points", "32"]),
])
def test_reproducible_bytes(tmp_path, name, args):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", name, *args, "--out", str(a)])
    main(["run", name, *args, "--out", str(b), "--workers", "3"])
    assert load(a) == load(b)
    for f in a.glob("*.csv"):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "radinfo.cli", "list"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.split() == list(EXPERIMENTS)


def test_key_value_pairs(tmp_path):
    out = tmp_path / "kv"
    assert main(["run", "cost-model", "c=1", "m=0.1", "M=10", f"out={out}"]) == 0
    assert load(out)["results"]["comp_delta"] == 1.1
    assert main(["run", "cost-model", "nope=1", f"out={tmp_path / 'x'}"]) == 2


def test_documents_match_schema(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((Path(__file__).parents[1] / "docs" / "result_schema.json").read_text())
    main(["run", "cost-model", "--out", str(tmp_path / "ok")])
    main(["run", "atoms-demo", "--deltas", "0", "--out", str(tmp_path / "err")])
    for d in ("ok", "err"):
        jsonschema.validate(json.loads((tmp_path / d / "result.json").read_text()), schema)
