import json
import math
import os
import warnings

import numpy as np
import pytest

from jumpsift import (
    ConfigError,
    InvalidArgumentError,
    Model1,
    Model3,
    CustomModel,
    SamplePath,
    ThresholdSpec,
    TimeGrid,
    build_histogram,
    build_uniform_grid,
    detect_jumps,
    estimation_report,
    path_seed,
    simulate,
    threshold_realized_variance,
)
from jumpsift.cli import main, replay_manifest
from jumpsift.config import (
    DEFAULT_BASE_SEED,
    load_config_file,
    merge_settings,
    preset_values,
    resolve_seed,
)
from jumpsift.serialize import (
    dumps_json,
    file_sha256,
    fmt_float,
    read_path_csv,
    report_to_dict,
    write_detection_csv,
    write_histogram_csv,
    write_path_csv,
)

SPEC09 = ThresholdSpec(0.9, 1.0)


def tiny_path():
    times = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    xs = np.array([0.0, 0.1, 0.1, 0.6, 0.65])
    return SamplePath(TimeGrid(times), xs)


# ---------------------------------------------------------------------------
# serialization primitives

def test_fmt_float_round_trips():
    for x in (0.1, -1.0 / 3.0, 1e-300, 2.0 ** -1074, 6.02e23, 0.0, -0.0):
        assert float(fmt_float(x)) == x
    assert fmt_float(math.nan) == "nan"
    assert fmt_float(math.inf) == "inf"
    assert fmt_float(-math.inf) == "-inf"


def test_dumps_json_shape_and_round_trip():
    obj = {
        "b_first": 2,
        "a_second": [1.5, None, True],
        "text": 'quote " backslash \\ tab \t',
        "bad": math.nan,
        "empty": {},
    }
    text = dumps_json(obj)
    assert text.endswith("\n") and "\r" not in text
    # insertion order is kept, not sorted
    assert text.index("b_first") < text.index("a_second")
    back = json.loads(text)
    assert back["bad"] is None
    assert back["a_second"] == [1.5, None, True]
    assert back["text"] == obj["text"]
    with pytest.raises(InvalidArgumentError):
        dumps_json({"x": object()})


# ---------------------------------------------------------------------------
# path files

def test_path_csv_round_trip_bitwise(tmp_path):
    grid = build_uniform_grid(64, 1.0)
    path = simulate(Model1(), grid, 1, path_seed(99, 0))
    dest = str(tmp_path / "p.csv")
    write_path_csv(path, dest)

    with open(dest, "rb") as fh:
        raw = fh.read()
    assert b"\r" not in raw
    header = raw.decode().splitlines()[0]
    assert header == "time,x,x_cont,jump_cum,sigma2"

    back = read_path_csv(dest)
    assert np.array_equal(back.grid.times, path.grid.times)
    assert np.array_equal(back.observations, path.observations)
    assert back.ground_truth is None

    cols = np.loadtxt(dest, delimiter=",", skiprows=1)
    x, x_cont, jump_cum = cols[:, 1], cols[:, 2], cols[:, 3]
    assert np.max(np.abs(x_cont + jump_cum - x)) < 1e-12
    assert np.all(cols[:, 4] > 0.0)


def test_read_path_csv_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,y\n0,1\n1,2\n")
    with pytest.raises(InvalidArgumentError):
        read_path_csv(str(bad))
    short = tmp_path / "short.csv"
    short.write_text("time,x\n0,1\n")
    with pytest.raises(InvalidArgumentError):
        read_path_csv(str(short))


# ---------------------------------------------------------------------------
# detection and histogram files

def test_detection_csv_rows(tmp_path):
    path = tiny_path()
    det = detect_jumps(path, ThresholdSpec(0.9, 0.1))
    dest = str(tmp_path / "det.csv")
    write_detection_csv(path, det, dest)
    lines = open(dest).read().splitlines()
    assert lines[0] == "interval,t_left,t_right,dx,flagged,size_hat"
    assert len(lines) == 1 + 4
    cells = [ln.split(",") for ln in lines[1:]]
    flagged = [c for c in cells if c[4] == "1"]
    quiet = [c for c in cells if c[4] == "0"]
    assert len(flagged) == 1 and flagged[0][0] == "2"
    assert float(flagged[0][5]) == 0.5
    assert all(c[5] == "" for c in quiet)


def test_histogram_csv_layout(tmp_path):
    hist = build_histogram(np.array([-9.0, 0.0, 0.1, 9.0, 9.5]), 8, (-4.0, 4.0))
    dest = str(tmp_path / "h.csv")
    write_histogram_csv(hist, dest)
    lines = open(dest).read().splitlines()
    assert lines[0] == "bin_left,bin_right,count"
    assert len(lines) == 1 + 8 + 2
    assert lines[1].startswith("-inf,")
    assert lines[-1].split(",")[1] == "inf"
    counts = [int(ln.split(",")[2]) for ln in lines[1:]]
    assert sum(counts) == 5
    assert counts[0] == 1 and counts[-1] == 2


# ---------------------------------------------------------------------------
# report dictionaries

def test_report_to_dict_contents():
    path = tiny_path()
    spec = ThresholdSpec(0.9, 0.1)
    d = report_to_dict(estimation_report(path, spec), path)
    assert d["schema_version"] == 1
    assert d["n_intervals"] == 4 and d["uniform_grid"] is True
    assert d["n_flagged"] == 1 and d["flagged_intervals"] == [2]
    assert d["jump_size_estimates"] == [{"interval": 2, "size_hat": 0.5}]
    assert d["iv_threshold"] == pytest.approx(0.0125)
    assert d["admissible"] is True and d["admissibility_warning"] is False
    json.loads(dumps_json(d))


def test_report_to_dict_flags_inadmissible_threshold():
    path = tiny_path()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = report_to_dict(estimation_report(path, ThresholdSpec(1.0, 1.0)), path)
    assert d["admissible"] is False
    assert d["admissibility_warning"] is True
    assert d["admissibility_reason"]


# ---------------------------------------------------------------------------
# config files and presets

def write_cfg(tmp_path, text):
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


def test_load_config_file_parses_values(tmp_path):
    src = write_cfg(tmp_path, """
# comment line
schema_version = 1
model = model3     # trailing comment
n = 4000
beta = 0.99
""")
    raw = load_config_file(src)
    assert raw == {"schema_version": "1", "model": "model3",
                   "n": "4000", "beta": "0.99"}


@pytest.mark.parametrize("text,fragment", [
    ("", "schema_version"),
    ("schema_version = 1\nwidth = 3\n", "unknown key"),
    ("schema_version = 1\nn = 2\nn = 3\n", "duplicate"),
    ("schema_version = 2\n", "schema_version"),
    ("schema_version = 1\nn 2000\n", "key = value"),
    ("schema_version = 1\nn =\n", "empty value"),
])
def test_load_config_file_errors(tmp_path, text, fragment):
    src = write_cfg(tmp_path, text)
    with pytest.raises(ConfigError) as err:
        load_config_file(src)
    assert fragment in str(err.value)


def test_merge_precedence(tmp_path):
    file_values = {"n": "3000", "beta": "0.5"}
    s = merge_settings(file_values, {"n": 400}, preset="model1-full")
    assert s.n == 400            # override beats file
    assert s.beta == 0.5         # file beats preset's 0.9
    assert s.n_paths == 5000     # preset beats default
    assert s.t_end == 1.0        # untouched default
    # preset key inside the file applies when no explicit preset
    s2 = merge_settings({"preset": "model3-desk"}, None)
    assert isinstance(s2.model, Model3) and s2.beta == 0.99


def test_preset_contents():
    s = merge_settings(preset="model1-full")
    assert (s.n, s.n_paths, s.beta) == (6000, 5000, 0.9)
    assert s.model == Model1(sigma=0.3, jump_intensity=5.0,
                             jump_size_std=0.6, drift=0.0)
    s3 = merge_settings(preset="model3-full")
    assert (s3.n, s3.beta) == (6000, 0.99)
    assert s3.model == Model3(sigma=0.3, gamma_var=0.23,
                              vg_drift=-0.2, vg_vol=0.2)
    d = merge_settings(preset="diffusion-desk")
    assert isinstance(d.model, CustomModel) and d.model.jumps == "none"
    with pytest.raises(ConfigError):
        preset_values("model9-desk")


def test_model_param_keys_require_custom():
    with pytest.raises(ConfigError):
        merge_settings({"model": "model1", "drift": "zero"}, None)


def test_resolve_seed(monkeypatch):
    monkeypatch.delenv("JUMPSIFT_SEED", raising=False)
    assert resolve_seed(None) == DEFAULT_BASE_SEED
    assert resolve_seed(7) == 7
    monkeypatch.setenv("JUMPSIFT_SEED", "0x10")
    assert resolve_seed(None) == 16
    assert resolve_seed(5) == 5
    monkeypatch.setenv("JUMPSIFT_SEED", "not-a-seed")
    with pytest.raises(ConfigError):
        resolve_seed(None)


# ---------------------------------------------------------------------------
# command line

def test_cli_version_and_config_errors(tmp_path, capsys):
    assert main(["--version"]) == 0
    assert main(["mc", "--preset", "nope", "--out", str(tmp_path)]) == 2
    assert main(["estimate", "--out", str(tmp_path)]) == 2
    bad = write_cfg(tmp_path, "schema_version = 1\nwidth = 3\n")
    assert main(["mc", "--config", bad, "--out", str(tmp_path)]) == 2
    capsys.readouterr()


def test_cli_missing_input_file_is_runtime_error(tmp_path, capsys):
    missing = str(tmp_path / "absent.csv")
    assert main(["estimate", "--in", missing, "--out", str(tmp_path)]) == 3
    assert "error" in capsys.readouterr().err


def test_cli_simulate_then_estimate_round_trip(tmp_path, capsys):
    sim_dir = str(tmp_path / "sim")
    assert main(["simulate", "--n", "128", "--seed", "11",
                 "--out", sim_dir]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert os.path.join(sim_dir, "path.csv") in printed
    assert os.path.join(sim_dir, "manifest.json") in printed

    est_dir = str(tmp_path / "est")
    path_csv = os.path.join(sim_dir, "path.csv")
    assert main(["estimate", "--in", path_csv, "--out", est_dir]) == 0
    capsys.readouterr()
    report = json.load(open(os.path.join(est_dir, "report.json")))
    want = threshold_realized_variance(read_path_csv(path_csv), SPEC09)
    assert report["iv_threshold"] == want
    assert report["beta"] == 0.9 and report["n_intervals"] == 128

    manifest = json.load(open(os.path.join(est_dir, "manifest.json")))
    assert manifest["inputs"][0]["sha256"] == file_sha256(path_csv)


def test_cli_detect_reports_inadmissible_beta(tmp_path, capsys):
    sim_dir = str(tmp_path / "sim")
    main(["simulate", "--n", "64", "--seed", "3", "--out", sim_dir])
    det_dir = str(tmp_path / "det")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert main(["detect", "--in", os.path.join(sim_dir, "path.csv"),
                     "--beta", "1.0", "--out", det_dir]) == 0
    capsys.readouterr()
    report = json.load(open(os.path.join(det_dir, "report.json")))
    assert report["admissibility_warning"] is True
    lines = open(os.path.join(det_dir, "detection.csv")).read().splitlines()
    assert len(lines) == 1 + 64


MC_ARGS = ["mc", "--n", "150", "--paths", "6", "--seed", "21"]


def test_cli_mc_outputs_and_determinism(tmp_path, capsys):
    dir_a, dir_b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(MC_ARGS + ["--out", dir_a]) == 0
    assert main(MC_ARGS + ["--out", dir_b]) == 0
    capsys.readouterr()

    summary = json.load(open(os.path.join(dir_a, "summary.json")))
    assert summary["n_paths"] == 6
    assert summary["normality_supported"] is True
    assert "parallelism" not in summary["config"]
    assert summary["detection"]["total_tp"] >= 0
    assert set(summary["estimates"]) == {
        "mean_iv_hat", "mean_true_iv", "mean_abs_error", "mean_rv", "mean_bpv"}

    for name in ("summary.json", "hist.csv"):
        a = open(os.path.join(dir_a, name), "rb").read()
        b = open(os.path.join(dir_b, name), "rb").read()
        assert a == b

    manifest = json.load(open(os.path.join(dir_a, "manifest.json")))
    for entry in manifest["outputs"]:
        assert entry["sha256"] == file_sha256(os.path.join(dir_a, entry["file"]))
        assert entry["bytes"] == os.path.getsize(os.path.join(dir_a, entry["file"]))


def test_cli_mc_irregular_grid_drops_histogram(tmp_path, capsys):
    out = str(tmp_path / "jit")
    assert main(["mc", "--n", "100", "--paths", "3", "--seed", "5",
                 "--jitter", "0.4", "--out", out]) == 0
    capsys.readouterr()
    assert not os.path.exists(os.path.join(out, "hist.csv"))
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["normality_supported"] is False
    assert summary["ks_statistic"] is None


def test_cli_compare_writes_efficiency_table(tmp_path, capsys):
    out = str(tmp_path / "cmp")
    assert main(["compare", "--n", "200", "--paths", "32", "--seed", "9",
                 "--out", out]) == 0
    capsys.readouterr()
    lines = open(os.path.join(out, "efficiency.csv")).read().splitlines()
    assert lines[0] == "estimator,normalized_error_variance,ratio_to_threshold"
    first, second = lines[1].split(","), lines[2].split(",")
    assert first[0] == "threshold" and float(first[2]) == 1.0
    assert second[0] == "bipower"
    assert math.isclose(float(second[2]),
                        float(second[1]) / float(first[1]), rel_tol=1e-12)


def test_replay_manifest_reproduces_run(tmp_path, capsys):
    dir_a = str(tmp_path / "orig")
    assert main(MC_ARGS + ["--out", dir_a]) == 0
    capsys.readouterr()
    dir_b = str(tmp_path / "replay")
    outputs = replay_manifest(os.path.join(dir_a, "manifest.json"), dir_b)
    assert "summary.json" in outputs
    for name in ("summary.json", "hist.csv"):
        a = open(os.path.join(dir_a, name), "rb").read()
        b = open(os.path.join(dir_b, name), "rb").read()
        assert a == b
    ma = json.load(open(os.path.join(dir_a, "manifest.json")))
    mb = json.load(open(os.path.join(dir_b, "manifest.json")))
    ma.pop("created_utc"), mb.pop("created_utc")
    assert ma == mb


def test_cli_env_seed_lands_in_manifest(tmp_path, monkeypatch, capsys):
    out = str(tmp_path / "env")
    monkeypatch.setenv("JUMPSIFT_SEED", "424242")
    assert main(["simulate", "--n", "32", "--out", out]) == 0
    capsys.readouterr()
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["base_seed"] == 424242
    assert manifest["config"]["seed"] == 424242
    assert manifest["rng"]
