import csv
import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from grasp.cli import main

SMALL = {
    "env.id": "collect",
    "afford.variant": "SA",
    "afford.K": 2,
    "afford.hidden": 8,
    "model.state_dim": 6,
    "model.hidden": 8,
    "model.unroll_len": 2,
    "train.steps": 150,
    "train.warmup": 30,
    "train.batch": 4,
    "train.update_every": 5,
    "train.buffer": 400,
    "train.eval_interval": 100,
    "train.eval_episodes": 1,
    "train.log_interval": 50,
    "train.explore_anneal": 40,
    "target.sync_period": 10,
    "train.seeds": "0,1",
}


def write_config(path, overrides=None):
    values = dict(SMALL)
    values.update(overrides or {})
    with open(path, "w") as f:
        f.write("# test config\n")
        for k, v in values.items():
            f.write(f"{k} = {v}\n")
    return str(path)


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    """One tiny two-seed training run shared by the CLI tests."""
    root = tmp_path_factory.mktemp("clirun")
    cfg = write_config(root / "cfg.txt")
    out = str(root / "out")
    assert main(["run", "--config", cfg, "--out", out]) == 0
    return cfg, out


class TestRun:
    def test_dry_run_prints_resolved_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.txt")
        assert main(["run", "--config", cfg, "--dry-run"]) == 0
        out = capsys.readouterr().out
        assert "afford.variant = SA" in out
        assert "train.steps = 150" in out

    def test_unknown_key_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("train.velocity = 3\n")
        assert main(["run", "--config", str(cfg), "--dry-run"]) == 1
        assert "config error" in capsys.readouterr().err

    def test_malformed_line_exits_1(self, tmp_path):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("just some words\n")
        assert main(["run", "--config", str(cfg), "--dry-run"]) == 1

    def test_env_override(self, tmp_path, capsys, monkeypatch):
        cfg = write_config(tmp_path / "cfg.txt")
        monkeypatch.setenv("GRASP_AFFORD_K", "3")
        assert main(["run", "--config", cfg, "--dry-run"]) == 0
        assert "afford.K = 3" in capsys.readouterr().out

    def test_set_overrides_file(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.txt")
        assert main(["run", "--config", cfg, "--set", "plan.depth=3",
                     "--dry-run"]) == 0
        assert "plan.depth = 3" in capsys.readouterr().out

    def test_invalid_planner_combo_exits_1(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.txt",
                           {"plan.depth": 9, "afford.K": 4})
        assert main(["run", "--config", cfg, "--dry-run"]) == 1

    def test_run_artifacts(self, trained_run):
        _, out = trained_run
        for seed in (0, 1):
            assert os.path.exists(os.path.join(out, f"seed_{seed}", "metrics.csv"))
            assert os.path.exists(os.path.join(out, f"seed_{seed}", "checkpoint.grsp"))
        assert os.path.exists(os.path.join(out, "aggregate.csv"))
        assert os.path.exists(os.path.join(out, "config.resolved"))
        figures = os.listdir(os.path.join(out, "figures"))
        assert any(f.endswith(".svg") for f in figures)

    def test_parallel_seeds_matches_sequential(self, trained_run, tmp_path):
        cfg, out = trained_run
        out2 = str(tmp_path / "par")
        assert main(["run", "--config", cfg, "--out", out2,
                     "--parallel-seeds"]) == 0
        for seed in (0, 1):
            a = open(os.path.join(out, f"seed_{seed}", "metrics.csv"), "rb").read()
            b = open(os.path.join(out2, f"seed_{seed}", "metrics.csv"), "rb").read()
            assert a == b


class TestPlot:
    def test_svgs_are_valid_xml(self, trained_run, tmp_path):
        _, out = trained_run
        csvs = ",".join(os.path.join(out, f"seed_{s}", "metrics.csv") for s in (0, 1))
        plots = str(tmp_path / "plots")
        assert main(["plot", f"sa-2={csvs}", "--out", plots]) == 0
        svgs = [f for f in os.listdir(plots) if f.endswith(".svg")]
        assert len(svgs) >= 5  # one per metric
        for f in svgs:
            ET.parse(os.path.join(plots, f))  # well-formed XML

    def test_schema_mismatch_exits_1(self, trained_run, tmp_path):
        _, out = trained_run
        bad = tmp_path / "bad.csv"
        bad.write_text("step,other\n1,2\n")
        good = os.path.join(out, "seed_0", "metrics.csv")
        assert main(["plot", f"x={good},{bad}", "--out", str(tmp_path / "p")]) == 1

    def test_bad_group_spec_exits_1(self, tmp_path):
        assert main(["plot", "no-equals-sign", "--out", str(tmp_path)]) == 1


class TestVisualize:
    def test_dump_and_svg(self, trained_run, tmp_path):
        cfg, out = trained_run
        ck = os.path.join(out, "seed_0", "checkpoint.grsp")
        viz = str(tmp_path / "viz")
        assert main(["visualize-affordances", "--config", cfg,
                     "--checkpoint", ck, "--grid", "2x2", "--out", viz]) == 0
        with open(os.path.join(viz, "trajectories.csv"), newline="") as f:
            rows = list(csv.DictReader(f))
        # 2x2 grid x 2 heads -> 8 rollouts, each with >= 1 point
        assert len({r["episode"] for r in rows}) == 8
        assert set(rows[0]) == {"episode", "step", "head_index", "x", "y",
                                "reward", "event"}
        ET.parse(os.path.join(viz, "affordances.svg"))

    def test_checkpoint_mismatch_exits_1(self, trained_run, tmp_path):
        cfg, out = trained_run
        ck = os.path.join(out, "seed_0", "checkpoint.grsp")
        other = write_config(tmp_path / "other.txt", {"model.state_dim": 5})
        assert main(["visualize-affordances", "--config", other,
                     "--checkpoint", ck, "--out", str(tmp_path / "v")]) == 1

    def test_bad_grid_spec_exits_1(self, trained_run, tmp_path):
        cfg, out = trained_run
        ck = os.path.join(out, "seed_0", "checkpoint.grsp")
        assert main(["visualize-affordances", "--config", cfg,
                     "--checkpoint", ck, "--grid", "banana",
                     "--out", str(tmp_path / "v")]) == 1


class TestSwitchAnalysis:
    def test_report_and_histograms(self, trained_run, tmp_path):
        cfg, out = trained_run
        ck = os.path.join(out, "seed_0", "checkpoint.grsp")
        sw = str(tmp_path / "sw")
        assert main(["switch-analysis", "--config", cfg, "--checkpoint", ck,
                     "--configs", "12", "--out", sw]) == 0
        with open(os.path.join(sw, "summary.json")) as f:
            summary = json.load(f)
        assert len(summary["heads"]) == 2
        assert {"head", "mean_delta", "stderr", "skew"} <= set(summary["heads"][0])
        deltas = np.genfromtxt(os.path.join(sw, "deltas.csv"),
                               delimiter=",", names=True)
        assert deltas.shape[0] == 12
        for k in range(2):
            ET.parse(os.path.join(sw, f"switch_head{k}.svg"))

    def test_single_head_rejected(self, trained_run, tmp_path):
        cfg, out = trained_run
        ck = os.path.join(out, "seed_0", "checkpoint.grsp")
        # K=1 checkpoints cannot be compared against a planner mixture
        other = write_config(tmp_path / "k1.txt", {"afford.K": 1})
        assert main(["switch-analysis", "--config", other, "--checkpoint", ck,
                     "--out", str(tmp_path / "s")]) == 1


class TestGradcheckCommand:
    def test_exit_zero_and_report(self, capsys):
        assert main(["gradcheck"]) == 0
        out = capsys.readouterr().out
        assert "all" in out and "passed" in out
