"""CLI: config validation, exit codes, determinism, report verification."""

import json

import numpy as np
import pytest

from mmslab.cli import main, reverify_report, run_config
from mmslab.errors import ConfigError
from mmslab.space import MetricMeasureSpace


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_describe_known_and_unknown(capsys):
    assert main(["describe", "curvature"]) == 0
    out = capsys.readouterr().out
    assert "T_t(g^2) - (T_t g)^2" in out and "c_kappa" in out
    assert main(["describe", "gradest"]) == 0
    out = capsys.readouterr().out
    assert "sqrt(c_kappa)" in out and "|Du|/u" in out
    assert main(["describe", "bogus"]) == 2


def test_run_doubling_cycle(tmp_path, capsys):
    cfg = {"space": {"family": "cycle", "n": 64}, "task": "doubling",
           "params": {"R0": 16.0}, "seed": 7}
    code = main(["run", write_config(tmp_path, cfg), "--out", str(tmp_path / "rep")])
    assert code == 0
    report = json.loads((tmp_path / "rep" / "report_doubling.json").read_text())
    assert report["pass"] is True
    assert report["records"][0]["report"]["C_d"] == pytest.approx(2.2)
    assert report["config_sha256"]
    assert reverify_report(str(tmp_path / "rep" / "report_doubling.json"))


def test_unknown_config_key_exits_2(tmp_path):
    cfg = {"space": {"family": "cycle", "n": 8}, "task": "doubling",
           "params": {"R0": 4.0}, "typo": 1}
    assert main(["run", write_config(tmp_path, cfg)]) == 2


def test_unknown_task_and_bad_params(tmp_path):
    cfg = {"space": {"family": "cycle", "n": 8}, "task": "frobnicate"}
    assert main(["run", write_config(tmp_path, cfg)]) == 2
    cfg = {"space": {"family": "cycle", "n": 8}, "task": "doubling",
           "params": {"R0": -1.0}}
    assert main(["run", write_config(tmp_path, cfg)]) == 2
    cfg = {"space": {"family": "cycle", "n": 8}, "task": "doubling",
           "params": {"R0": 4.0, "bogus": 2}}
    assert main(["run", write_config(tmp_path, cfg)]) == 2


def test_counterexample_needs_three_meshes(tmp_path):
    cfg = {"task": "counterexample", "params": {"h_list": [0.25, 0.125]}}
    assert main(["run", write_config(tmp_path, cfg)]) == 2


def test_numerical_failure_exits_3(tmp_path):
    cfg = {"space": {"family": "grid", "dim": 2, "h": 0.25},
           "task": "solve",
           "params": {"problem": {"domain": {"type": "all_interior"},
                                  "boundary": {"type": "constant", "value": 1.0},
                                  "lambda": -1000.0}}}
    assert main(["run", write_config(tmp_path, cfg)]) == 3


def test_verification_failure_exits_1(tmp_path):
    # an impossibly small cap forces the Hoelder check to fail
    cfg = {"space": {"family": "grid", "dim": 2, "h": 0.125},
           "task": "hoelder",
           "params": {"problem": {"domain": {"type": "all_interior"},
                                  "boundary": {"type": "affine",
                                               "coeffs": [0.0, 1.0, -0.5]}},
                      "ball": {"center": [0.0, 0.0], "radius": 0.25},
                      "cap": 1e-9}}
    code = main(["run", write_config(tmp_path, cfg), "--out", str(tmp_path / "r")])
    assert code == 1
    report = json.loads((tmp_path / "r" / "report_hoelder.json").read_text())
    assert report["pass"] is False
    assert reverify_report(str(tmp_path / "r" / "report_hoelder.json"))


def test_determinism_identical_reports(tmp_path):
    cfg = {"space": {"family": "torus", "n1": 8, "n2": 8}, "task": "poincare",
           "params": {"R0": 4.0, "sample_count": 6}, "seed": 11}
    p = write_config(tmp_path, cfg)
    main(["run", p, "--out", str(tmp_path / "a")])
    main(["run", p, "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "report_poincare.json").read_text()
    b = (tmp_path / "b" / "report_poincare.json").read_text()
    assert a == b


def test_export_space_roundtrip(tmp_path):
    cfg = {"space": {"family": "grid", "dim": 2, "h": 0.5,
                     "weight": "sqrt_abs_x"}, "task": "solve"}
    out = tmp_path / "g.txt"
    assert main(["export-space", write_config(tmp_path, cfg), str(out)]) == 0
    sp = MetricMeasureSpace.from_text(out.read_text())
    assert sp.n == 25 and sp.n_edges == 40
    header = out.read_text().splitlines()[0].split()
    assert header == ["25", "40"]


def test_run_config_all_on_two_point(tmp_path):
    cfg = {"space": {"family": "two_point"}, "task": "all", "seed": 1}
    passed, report, _ = run_config(cfg, out_dir=str(tmp_path / "r"))
    assert passed
    names = [r["name"] for r in report["records"]]
    assert "two_point_closed_forms" in names
    assert "exact_identities" in names
    assert reverify_report(str(tmp_path / "r" / "report_all.json"))


def test_gradest_task_via_cli(tmp_path):
    cfg = {"space": {"family": "torus", "n1": 16, "n2": 16},
           "task": "gradest", "seed": 2,
           "params": {"mode": "thm11",
                      "problem": {"domain": {"type": "ball",
                                             "center": [8, 8], "radius": 7.0},
                                  "boundary": {"type": "chart", "axis": 0,
                                               "center": [8, 8]}},
                      "ball": {"center": [8, 8], "radius": 3.0},
                      "n_random": 4}}
    passed, report, _ = run_config(cfg, out_dir=str(tmp_path / "r"))
    assert passed
    rec = report["records"][0]
    assert rec["name"] == "gradest_thm11"
    assert np.isfinite(rec["constant"])


def test_heat_caccioppoli_task(tmp_path):
    cfg = {"space": {"family": "torus", "n1": 16, "n2": 16},
           "task": "heat-caccioppoli", "seed": 5,
           "params": {"x": [8, 8], "R": 2.0, "s_list": [1.0, 4.0], "c": 0.25}}
    passed, report, _ = run_config(cfg, out_dir=str(tmp_path / "r"))
    assert passed
    names = [r["name"] for r in report["records"]]
    assert "lhs_nondecreasing_in_s" in names


def test_curvature_task(tmp_path):
    cfg = {"space": {"family": "cycle", "n": 32}, "task": "curvature",
           "seed": 4, "params": {"T": 1.0, "n_random": 8}}
    passed, report, _ = run_config(cfg)
    assert passed
    rec = report["records"][0]
    assert rec["constant"] <= 1e-6
    assert rec["commutation_margin"] >= -1e-10


def test_counterexample_csv(tmp_path):
    cfg = {"task": "counterexample", "seed": 3,
           "params": {"h_list": [1 / 8, 1 / 16, 1 / 32]}}
    passed, report, rows = run_config(cfg, out_dir=str(tmp_path / "r"))
    assert passed
    csv_text = (tmp_path / "r" / "counterexample.csv").read_text()
    assert csv_text.splitlines()[0].startswith("h,")
    assert len(csv_text.splitlines()) == 4


def test_run_config_rejects_non_dict():
    with pytest.raises(ConfigError):
        run_config(["not", "a", "mapping"])


QUAD_PROBLEM = {"domain": {"type": "all_interior"},
                "boundary": {"type": "affine", "coeffs": [3.0, 1.0, -0.5]}}


@pytest.mark.parametrize("task,params", [
    ("caccioppoli", {"problem": QUAD_PROBLEM, "y0": [0.0, 0.0],
                     "r1": 0.25, "r2": 0.5}),
    ("moser", {"problem": QUAD_PROBLEM,
               "ball": {"center": [0.0, 0.0], "radius": 0.25},
               "p": 1.0, "Q": 2.5}),
    ("harnack", {"problem": QUAD_PROBLEM,
                 "ball": {"center": [0.0, 0.0], "radius": 0.25}, "q": 0.5}),
    ("prop31", {"problem": QUAD_PROBLEM, "y0": [0.0, 0.0], "R": 0.1}),
])
def test_every_elliptic_task_runs(tmp_path, task, params):
    cfg = {"space": {"family": "grid", "dim": 2, "h": 0.125},
           "task": task, "params": params, "seed": 3}
    passed, report, _ = run_config(cfg, out_dir=str(tmp_path / "r"))
    assert passed
    assert report["records"][0]["name"].startswith(task)
    assert reverify_report(str(tmp_path / "r" / f"report_{task}.json"))
