import csv
import json

import numpy as np
import pytest

from orientcloud.cli import main
from orientcloud.config import Config

SMALL_CFG = "pool_size = 4\nmax_epochs = 25\npatience = 10\nrf_trees = 6\n"


def run(*args):
    return main([str(a) for a in args])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    cfg = base / "small.cfg"
    cfg.write_text(SMALL_CFG)
    assert run("synth", "--benchmark", "--subjects", 3, "--min-frames", 30, "--max-frames", 32,
               "--out-dir", base / "bench") == 0
    assert run("evaluate", "--data", base / "bench", "--config", cfg,
               "--out-dir", base / "eval") == 0
    return base, cfg


class TestExitCodes:
    def test_usage(self, capsys):
        assert run("no-such-command") == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "usage" and err["exit_code"] == 1

    def test_missing_subcommand(self):
        assert run() == 1

    def test_missing_input(self, tmp_path):
        assert run("preprocess", "--out-dir", tmp_path) == 1

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("no_such_key = 3\n")
        assert run("preprocess", "--config", cfg, "--out-dir", tmp_path) == 1

    def test_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"format": "nope"}\n')
        assert run("preprocess", "--session", bad, "--out-dir", tmp_path / "o") == 2
        assert json.loads(capsys.readouterr().err)["error"] == "data"

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_numerical_error(self, small_run, tmp_path, capsys):
        base, cfg = small_run
        src = base / "eval" / "features.csv"
        text = src.read_text().splitlines()
        header = text[0].split(",")
        col = header.index("head_mean_x")
        out = [text[0]]
        for line in text[1:]:
            cells = line.split(",")
            cells[col] = "inf"
            out.append(",".join(cells))
        (tmp_path / "f.csv").write_text("\n".join(out) + "\n")
        (tmp_path / "f.schema.json").write_text((base / "eval" / "features.schema.json").read_text())
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"selected": ["head_mean_x", "nose_bearing"]}))
        code = run("train", "--features", tmp_path / "f.csv", "--selected", sel, "--config", cfg,
                   "--out-dir", tmp_path / "o")
        assert code == 3
        assert json.loads(capsys.readouterr().err)["error"] == "numerical"


class TestPipeline:
    def test_config_snapshot(self, small_run):
        base, cfg = small_run
        snap = Config.load(base / "eval" / "config.json")
        assert snap == Config.load(cfg)

    def test_seed_flag_overrides(self, tmp_path):
        assert run("synth", "--sweep", "--step", 90, "--seed", 7, "--out-dir", tmp_path) == 0
        assert Config.load(tmp_path / "config.json").seed == 7

    def test_evaluate_outputs(self, small_run):
        base, _ = small_run
        table = rows(base / "eval" / "loso_per_subject.csv")
        assert [r["subject"] for r in table] == ["S01", "S02", "S03", "mean"]
        loso = json.loads((base / "eval" / "loso.json").read_text())
        assert loso["overall_mae"] == pytest.approx(float(table[-1]["mae"]))
        assert (base / "eval" / "model.json").exists()
        assert {r["subject"] for r in rows(base / "eval" / "rfe_traces.csv")} == {"S01", "S02", "S03"}

    def test_piping_matches_single_shot(self, small_run, tmp_path):
        base, cfg = small_run
        assert run("extract-features", "--data", base / "bench", "--out-dir", tmp_path / "fx") == 0
        assert (tmp_path / "fx" / "features.csv").read_bytes() == \
            (base / "eval" / "features.csv").read_bytes()
        assert run("evaluate", "--features", tmp_path / "fx" / "features.csv", "--config", cfg,
                   "--out-dir", tmp_path / "ev") == 0
        for name in ("model.json", "loso.json", "loso_per_subject.csv", "predictions.csv"):
            assert (tmp_path / "ev" / name).read_bytes() == (base / "eval" / name).read_bytes()

    def test_rfe_train_infer(self, small_run, tmp_path):
        base, cfg = small_run
        feats = base / "eval" / "features.csv"
        assert run("rfe", "--features", feats, "--config", cfg, "--out-dir", tmp_path / "r") == 0
        trace = rows(tmp_path / "r" / "rfe_trace.csv")
        assert [int(r["n_features"]) for r in trace] == list(range(75, 0, -1))
        assert run("train", "--features", feats, "--selected", tmp_path / "r" / "rfe_selected.json",
                   "--config", cfg, "--out-dir", tmp_path / "t") == 0
        assert run("infer", "--model", tmp_path / "t" / "model.json", "--session",
                   base / "bench" / "sessions" / "S01.jsonl", "--subject-zero", 0,
                   "--out-dir", tmp_path / "i") == 0
        pred = rows(tmp_path / "i" / "predictions.csv")
        assert len(pred) > 20
        assert all(-180 <= float(r["head_yaw"]) < 180 for r in pred)

    def test_report(self, small_run, tmp_path):
        base, _ = small_run
        assert run("report", "--run", base / "eval", "--out-dir", tmp_path) == 0
        for name in ("rfe_curve.csv", "rfe_curve.png", "per_subject_mae.csv",
                     "per_subject_mae.png", "report.json"):
            assert (tmp_path / name).exists()
        assert (tmp_path / "rfe_curve.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_report_needs_inputs(self, tmp_path):
        assert run("report", "--run", tmp_path, "--out-dir", tmp_path / "o") == 2


def test_fit_body_sweep(tmp_path):
    assert run("synth", "--sweep", "--noise", 0, "--outliers", 0, "--out-dir", tmp_path) == 0
    assert run("fit-body", "--session", tmp_path / "sweep.jsonl", "--truth",
               tmp_path / "sweep_truth.csv", "--out-dir", tmp_path / "fb") == 0
    summary = json.loads((tmp_path / "fb" / "body_yaw_summary.json").read_text())
    assert summary["frames"] == 36 and summary["mae"] <= 3.0


def test_preprocess_report(tmp_path):
    assert run("synth", "--sweep", "--step", 60, "--out-dir", tmp_path) == 0
    assert run("preprocess", "--session", tmp_path / "sweep.jsonl", "--out-dir", tmp_path / "p") == 0
    table = rows(tmp_path / "p" / "frames.csv")
    assert len(table) == 6 and all(r["status"] == "ok" for r in table)


def test_analyze_conversation(tmp_path, capsys):
    assert run("synth", "--conversation", "--duration", 120, "--out-dir", tmp_path) == 0
    capsys.readouterr()
    assert run("analyze", tmp_path / "conversation.json", "--out-dir", tmp_path / "a") == 0
    summary = json.loads(capsys.readouterr().out)
    expected = json.loads((tmp_path / "conversation_expected.json").read_text())
    assert summary["matches_expected"] is True
    assert summary["contacts"] == expected["n_contacts"]
    assert summary["exclusions"] == expected["n_exclusions"]


def test_analyze_study(tmp_path):
    assert run("synth", "--study", "--per-group", 3, "--duration", 90, "--out-dir", tmp_path) == 0
    assert run("analyze", tmp_path / "manifest.json", "--out-dir", tmp_path / "a") == 0
    cmp = rows(tmp_path / "a" / "group_comparison.csv")
    assert cmp[0]["statistic"] == "Average duration of contact"
    assert all(0 <= float(r["p"]) <= 1 for r in cmp)
    assert run("report", "--run", tmp_path / "a", "--out-dir", tmp_path / "r") == 0
    assert (tmp_path / "r" / "group_means.png").exists()


def test_analyze_with_model(small_run, tmp_path):
    base, _ = small_run
    script = tmp_path / "script.json"
    script.write_text(json.dumps([[6, "I1", "i1"], [6, "I2", "i2"]]))
    assert run("synth", "--conversation", "--script", script, "--clouds", "--out-dir", tmp_path) == 0
    assert run("analyze", tmp_path / "conversation.json", "--model", base / "eval" / "model.json",
               "--out-dir", tmp_path / "a") == 0
    out = json.loads((tmp_path / "a" / "analysis.json").read_text())
    assert out["sessions"][0]["n_frames"] > 0
