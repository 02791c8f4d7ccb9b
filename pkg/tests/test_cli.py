import json

import pytest

from seqshift.cli import main
from seqshift.streams import save_stream_file


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def base_arl_config(w=20, alpha=0.05, n_runs=30, redraw=True):
    return {
        "seed": 7,
        "detector": {
            "statistic": "ks",
            "window": w,
            "threshold": {"policy": "ks_asymptotic", "alpha": alpha},
        },
        "reference": {
            "family": "gaussian",
            "means": [0.0],
            "variances": [1.0],
            "size": 300,
            "redraw_per_run": redraw,
        },
        "stream": {"pre": {"family": "gaussian", "means": [0.0], "variances": [1.0]}},
        "evaluation": {"n_runs": n_runs, "cap": 2000},
    }


class TestConfigValidation:
    def test_unknown_top_level_key(self, tmp_path, capsys):
        cfg = base_arl_config()
        cfg["extra"] = 1
        code = main(["arl", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "unknown keys" in capsys.readouterr().err

    def test_unknown_nested_key(self, tmp_path, capsys):
        cfg = base_arl_config()
        cfg["detector"]["threshold"]["fuzz"] = True
        code = main(["arl", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "unknown keys" in capsys.readouterr().err

    def test_missing_required_key(self, tmp_path, capsys):
        cfg = base_arl_config()
        del cfg["detector"]["window"]
        code = main(["arl", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "missing required keys" in capsys.readouterr().err

    def test_bad_family(self, tmp_path, capsys):
        cfg = base_arl_config()
        cfg["stream"]["pre"]["family"] = "levy"
        code = main(["arl", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2

    def test_arl_requires_null_stream(self, tmp_path, capsys):
        cfg = base_arl_config()
        cfg["stream"]["change_point"] = 100
        code = main(["arl", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "change_point" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["arl", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2

    def test_unknown_flag_exits_with_usage(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["arl", "--config", "x", "--frobnicate"])
        assert exc.value.code == 2

    def test_calibrated_policy_requires_concrete_reference(self, tmp_path, capsys):
        cfg = base_arl_config()
        cfg["detector"]["threshold"] = {
            "policy": "calibrated", "alpha": 0.05, "t_max": 40, "n_streams": 2000,
        }
        code = main(["arl", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "redraw_per_run" in capsys.readouterr().err


class TestArlCommand:
    def test_writes_report_and_csv(self, tmp_path, capsys):
        cfg = base_arl_config()
        out = tmp_path / "report.json"
        csv = tmp_path / "runs.csv"
        code = main(["arl", "--config", write_config(tmp_path, cfg),
                     "--out", str(out), "--runs-csv", str(csv)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["command"] == "arl"
        assert payload["seed"] == 7
        assert payload["config_hash"]
        assert payload["report"]["n_runs"] == 30
        lines = csv.read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert lines[1] == "run_id,T,censored"
        assert len(lines) == 2 + 30

    def test_byte_identical_reruns(self, tmp_path):
        cfg_path = write_config(tmp_path, base_arl_config())
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"report_{tag}.json"
            csv = tmp_path / f"runs_{tag}.csv"
            assert main(["arl", "--config", cfg_path, "--out", str(out),
                         "--runs-csv", str(csv)]) == 0
            outs.append((out.read_bytes(), csv.read_bytes()))
        assert outs[0] == outs[1]

    def test_workers_do_not_change_bytes(self, tmp_path):
        cfg_path = write_config(tmp_path, base_arl_config(n_runs=24))
        blobs = []
        for workers in (1, 3):
            out = tmp_path / f"report_w{workers}.json"
            assert main(["arl", "--config", cfg_path, "--out", str(out),
                         "--workers", str(workers)]) == 0
            payload = json.loads(out.read_text())
            del payload["config"]  # config echo identical by construction
            blobs.append(json.dumps(payload, sort_keys=True))
        assert blobs[0] == blobs[1]

    def test_seed_override_changes_hash(self, tmp_path):
        cfg_path = write_config(tmp_path, base_arl_config())
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert main(["arl", "--config", cfg_path, "--out", str(out1)]) == 0
        assert main(["arl", "--config", cfg_path, "--out", str(out2),
                     "--seed", "99"]) == 0
        p1, p2 = json.loads(out1.read_text()), json.loads(out2.read_text())
        assert p1["config_hash"] != p2["config_hash"]
        assert p2["seed"] == 99


class TestCalibrateAndRun:
    def test_calibrate_then_run_with_schedule_file(self, tmp_path):
        cal_cfg = {
            "seed": 5,
            "detector": {
                "statistic": "ks",
                "window": 15,
                "threshold": {
                    "policy": "calibrated", "alpha": 0.02, "t_max": 40,
                    "n_streams": 3000,
                },
            },
            "reference": {
                "family": "gaussian", "means": [0.0], "variances": [1.0], "size": 200,
            },
        }
        sched_path = tmp_path / "sched.json"
        assert main(["calibrate", "--config", write_config(tmp_path, cal_cfg),
                     "--out", str(sched_path)]) == 0
        doc = json.loads(sched_path.read_text())
        assert doc["kind"] == "time_varying"
        assert doc["w"] == 15
        assert doc["alpha"] == 0.02
        assert len(doc["values"]) == 40 - 15 + 1
        assert doc["meta"]["seed"] == 5

        run_cfg = {
            "seed": 6,
            "detector": {
                "statistic": "ks",
                "window": 15,
                "threshold": {"policy": "schedule_file", "path": str(sched_path)},
            },
            "reference": {
                "family": "gaussian", "means": [0.0], "variances": [1.0], "size": 200,
            },
            "stream": {
                "pre": {"family": "gaussian", "means": [0.0], "variances": [1.0]},
                "post": {"family": "gaussian", "means": [3.0], "variances": [1.0]},
                "change_point": 16,
            },
            "evaluation": {"cap": 300},
        }
        out = tmp_path / "result.json"
        trace = tmp_path / "trace.csv"
        assert main(["run", "--config", write_config(tmp_path, run_cfg, "run.json"),
                     "--out", str(out), "--trace", str(trace)]) == 0
        payload = json.loads(out.read_text())
        assert 16 <= payload["report"]["detection_time"] <= 40
        lines = trace.read_text().splitlines()
        assert lines[1] == "t,statistic,threshold,detected"
        assert lines[-1].endswith("true")

    def test_run_on_stream_file(self, tmp_path, rng):
        stream_path = tmp_path / "stream.csv"
        save_stream_file(stream_path, rng.normal(loc=5.0, size=(80, 1)))
        cfg = {
            "seed": 3,
            "detector": {
                "statistic": "ks",
                "window": 10,
                "threshold": {"policy": "ks_asymptotic", "alpha": 0.05},
            },
            "reference": {
                "family": "gaussian", "means": [0.0], "variances": [1.0], "size": 500,
            },
            "evaluation": {"cap": 80},
        }
        out = tmp_path / "result.json"
        assert main(["run", "--config", write_config(tmp_path, cfg),
                     "--out", str(out), "--stream-file", str(stream_path)]) == 0
        payload = json.loads(out.read_text())
        assert payload["report"]["detection_time"] == 10  # 5-sigma shift: first test

    def test_delay_command(self, tmp_path):
        cfg = {
            "seed": 11,
            "detector": {
                "statistic": "mean_diff",
                "window": 10,
                "threshold": {"policy": "permutation", "alpha": 0.02,
                              "n_permutations": 600},
            },
            "reference": {
                "family": "gaussian", "means": [0.0], "variances": [1.0], "size": 400,
            },
            "stream": {
                "pre": {"family": "gaussian", "means": [0.0], "variances": [1.0]},
                "post": {"family": "gaussian", "means": [-2.0], "variances": [1.0]},
                "change_point": 50,
            },
            "evaluation": {"n_runs": 40, "cap": 400},
        }
        out = tmp_path / "delay.json"
        assert main(["delay", "--config", write_config(tmp_path, cfg),
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["report"]["detected_after_change"] > 0
        assert payload["report"]["mean_delay"] < 50

    def test_mmd_with_median_bandwidth(self, tmp_path):
        cfg = {
            "seed": 13,
            "detector": {
                "statistic": "mmd",
                "window": 10,
                "kernel": {"kind": "rbf", "bandwidth": "median"},
                "threshold": {"policy": "permutation", "alpha": 0.05,
                              "n_permutations": 300},
            },
            "reference": {
                "family": "gaussian", "means": [0.0, 0.0],
                "variances": [1.0, 1.0], "size": 120,
            },
            "stream": {
                "pre": {"family": "gaussian", "means": [0.0, 0.0],
                        "variances": [1.0, 1.0]},
                "post": {"family": "gaussian", "means": [3.0, 3.0],
                         "variances": [1.0, 1.0]},
                "change_point": 20,
            },
            "evaluation": {"cap": 200},
        }
        out = tmp_path / "result.json"
        assert main(["run", "--config", write_config(tmp_path, cfg),
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["report"]["detection_time"] >= 20


class TestReproduceAppendix:
    def test_tiny_scale_sweep(self, tmp_path):
        out_dir = tmp_path / "appendix"
        code = main(["reproduce-appendix", "--out-dir", str(out_dir),
                     "--scale", "0.016", "--seed", "1"])
        assert code == 0
        for name, rows in (("fig1a.csv", 5), ("fig1b.csv", 5)):
            lines = (out_dir / name).read_text().splitlines()
            assert lines[1] == "w,n,alpha,mean_T,se,slackness"
            assert len(lines) == 2 + rows
        meta = json.loads((out_dir / "meta.json").read_text())
        assert meta["alpha"] == pytest.approx(0.001 / 0.016)
        assert meta["n_runs"] == 4

    def test_rerun_is_byte_identical(self, tmp_path):
        blobs = []
        for tag in ("x", "y"):
            out_dir = tmp_path / tag
            assert main(["reproduce-appendix", "--out-dir", str(out_dir),
                         "--scale", "0.016", "--seed", "2"]) == 0
            blobs.append(
                ((out_dir / "fig1a.csv").read_bytes(),
                 (out_dir / "fig1b.csv").read_bytes())
            )
        assert blobs[0] == blobs[1]

    def test_bad_scale_rejected(self, tmp_path, capsys):
        assert main(["reproduce-appendix", "--out-dir", str(tmp_path / "d"),
                     "--scale", "0"]) == 2
