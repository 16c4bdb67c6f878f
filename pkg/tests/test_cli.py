import json

import numpy as np
import pytest

from framesampler import save_embeddings
from framesampler.cli import main
from framesampler.evaluation import save_qa_records, save_replies

from conftest import random_unit_sequence
from test_evaluation import make_record


@pytest.fixture
def emb_file(tmp_path, rng):
    seq = random_unit_sequence(rng, 20, 6, duration_s=300.0, video_id="clidemo")
    path = tmp_path / "clidemo.emb"
    save_embeddings(seq, path)
    return path


class TestSelectCommand:
    def test_ratio_selects_quarter(self, emb_file, tmp_path, capsys):
        out = tmp_path / "sel.json"
        code = main(["select", "--embeddings", str(emb_file), "--ratio", "0.25", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert len(payload["indices"]) == 5
        assert payload["k"] == 5 and payload["n"] == 20
        assert len(payload["timestamps_s"]) == 5

    def test_ratio_one_returns_all(self, emb_file, capsys):
        code = main(["select", "--embeddings", str(emb_file), "--ratio", "1.0"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["indices"] == list(range(20))

    def test_k_zero_is_usage_error(self, emb_file, capsys):
        assert main(["select", "--embeddings", str(emb_file), "--k", "0"]) == 2

    def test_both_k_and_ratio_rejected(self, emb_file):
        assert main(["select", "--embeddings", str(emb_file), "--k", "3", "--ratio", "0.5"]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["select", "--embeddings", str(tmp_path / "nope.emb"), "--k", "3"]) == 2

    def test_deterministic_rewrite(self, emb_file, tmp_path):
        out = tmp_path / "sel.json"
        main(["select", "--embeddings", str(emb_file), "--k", "4", "--out", str(out)])
        first = out.read_bytes()
        main(["select", "--embeddings", str(emb_file), "--k", "4", "--out", str(out)])
        assert out.read_bytes() == first

    def test_180_frames_quarter_ratio_gives_45(self, tmp_path, rng, capsys):
        seq = random_unit_sequence(rng, 180, 8, duration_s=2700.0)
        path = tmp_path / "full.emb"
        save_embeddings(seq, path)
        code = main([
            "select", "--embeddings", str(path), "--ratio", "0.25",
            "--penalty-strength", "10.0", "--penalty-exponent", "0.3",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["indices"]) == 45


class TestPlanCommand:
    def test_fixed_localizer_plan(self, emb_file, tmp_path):
        out = tmp_path / "plan.json"
        code = main([
            "plan", "--embeddings", str(emb_file), "--ratio", "0.5",
            "--localizer", "fixed", "--segments", "1,3", "--stage2-fps", "0.5",
            "--out", str(out),
        ])
        assert code == 0
        plan = json.loads(out.read_text())
        assert plan["selected"] == [1, 3]
        assert plan["budget"]["stage1_frames"] == 10
        assert plan["budget"]["total_frames"] == plan["budget"]["stage1_frames"] + plan["budget"]["stage2_frames"]

    def test_oracle_localizer_covers_gt(self, emb_file, tmp_path):
        out = tmp_path / "plan.json"
        code = main([
            "plan", "--embeddings", str(emb_file), "--ratio", "0.5",
            "--localizer", "oracle", "--gt", "100,130", "--max-selected", "4",
            "--out", str(out), "--timeline", str(tmp_path / "plan.svg"),
        ])
        assert code == 0
        plan = json.loads(out.read_text())
        spans = [
            (s["start_s"], s["end_s"]) for s in plan["segments"] if s["index"] in plan["selected"]
        ]
        assert any(s <= 100 < e for s, e in spans)
        assert (tmp_path / "plan.svg").exists()

    def test_keep_ratio_below_one_needs_embeddings(self, tmp_path):
        code = main([
            "plan", "--duration", "600", "--ratio", "0.5",
            "--localizer", "mock", "--out", str(tmp_path / "p.json"),
        ])
        assert code == 2

    def test_duration_only_full_grid(self, tmp_path):
        out = tmp_path / "p.json"
        code = main([
            "plan", "--duration", "600", "--ratio", "1.0",
            "--localizer", "mock", "--segments", "0", "--out", str(out),
        ])
        assert code == 0
        plan = json.loads(out.read_text())
        assert plan["budget"]["stage1_frames"] == 40

    def test_fixed_localizer_empty_selection(self, emb_file, tmp_path):
        out = tmp_path / "p.json"
        code = main([
            "plan", "--embeddings", str(emb_file), "--ratio", "0.5",
            "--localizer", "fixed", "--segments", "", "--out", str(out),
        ])
        assert code == 0
        plan = json.loads(out.read_text())
        assert plan["selected"] == []
        assert plan["stage2"]["timestamps"] == []

    def test_extraction_command_template(self, emb_file, tmp_path):
        out = tmp_path / "p.json"
        cmds = tmp_path / "extract.txt"
        code = main([
            "plan", "--embeddings", str(emb_file), "--ratio", "0.5",
            "--localizer", "fixed", "--segments", "1", "--out", str(out),
            "--extract-template", "decode -ss {t_s} -i {video_path} {out_path}",
            "--video-path", "movie.mp4", "--extract-out", str(cmds),
        ])
        assert code == 0
        plan = json.loads(out.read_text())
        lines = cmds.read_text().splitlines()
        assert len(lines) == plan["budget"]["total_frames"]
        assert lines[0].startswith("decode -ss ")
        assert "movie.mp4" in lines[0]


class TestPartitionCommand:
    def test_partition_json(self, capsys):
        code = main(["partition", "--keyframes", "60,180,300", "--duration", "360"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload == [
            {"index": 0, "start_s": 0.0, "end_s": 120.0},
            {"index": 1, "start_s": 120.0, "end_s": 240.0},
            {"index": 2, "start_s": 240.0, "end_s": 360.0},
        ]

    def test_bad_keyframes_exit_2(self):
        assert main(["partition", "--keyframes", "10,10", "--duration", "60"]) == 2


class TestNsdCommand:
    def test_windows(self, capsys):
        code = main(["nsd", "--windows", "0,2;10,15"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["nsd_fps"] == 0.5

    def test_zero_length_window(self):
        assert main(["nsd", "--windows", "5,5"]) == 2


class TestEvaluateCommand:
    def test_scores_fixture(self, tmp_path, capsys):
        records = [make_record(i, answer="B") for i in range(4)]
        qa = tmp_path / "qa.jsonl"
        save_qa_records(records, qa)
        replies = {r.id: "(B)" if i < 3 else "(A)" for i, r in enumerate(records)}
        rp = tmp_path / "replies.jsonl"
        save_replies(replies, rp)
        prefix = tmp_path / "report"
        code = main(["evaluate", "--qa", str(qa), "--replies", str(rp), "--out-prefix", str(prefix)])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["accuracy"] == 0.75
        assert (tmp_path / "report.txt").exists()

    def test_empty_replies_error(self, tmp_path):
        records = [make_record(0)]
        qa = tmp_path / "qa.jsonl"
        save_qa_records(records, qa)
        rp = tmp_path / "replies.jsonl"
        rp.write_text("")
        code = main(["evaluate", "--qa", str(qa), "--replies", str(rp), "--out-prefix", str(tmp_path / "r")])
        assert code == 2


class TestSimulateCommand:
    def test_simulate_writes_everything(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main([
            "simulate", "--items", "2", "--seed", "5", "--out", str(out),
            "--localizer", "oracle", "--answerer", "oracle",
        ])
        assert code == 0
        assert (out / "qa.jsonl").exists()
        assert (out / "replies.jsonl").exists()
        assert (out / "report.json").exists()
        assert len(list((out / "plans").glob("*.json"))) == 2
        report = json.loads((out / "report.json").read_text())
        assert report["accuracy"] == 1.0
        assert report["mean_coverage"] == 1.0

    def test_no_plans_mode(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "simulate", "--items", "3", "--seed", "5", "--out", str(out),
            "--answerer", "random", "--no-plans",
        ])
        assert code == 0
        assert not (out / "plans").exists()

    def test_jobs_give_identical_results(self, tmp_path):
        first = tmp_path / "serial"
        second = tmp_path / "parallel"
        main(["simulate", "--items", "4", "--seed", "11", "--out", str(first),
              "--localizer", "oracle"])
        main(["simulate", "--items", "4", "--seed", "11", "--jobs", "4", "--out", str(second),
              "--localizer", "oracle"])
        for name in ["qa.jsonl", "replies.jsonl", "report.json", "report.txt"]:
            assert (first / name).read_bytes() == (second / name).read_bytes()


class TestConfigPrecedence:
    def test_flags_beat_env_beats_file(self, emb_file, tmp_path, monkeypatch, capsys):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"penalty_strength": 5.0}))

        def selected(args):
            code = main(args)
            assert code == 0
            return json.loads(capsys.readouterr().out)

        base = ["select", "--embeddings", str(emb_file), "--k", "4"]

        file_only = selected(base + ["--config", str(config)])
        monkeypatch.setenv("FRAMESAMPLER_PENALTY_STRENGTH", "50.0")
        env_over_file = selected(base + ["--config", str(config)])
        flag_over_env = selected(base + ["--config", str(config), "--penalty-strength", "5.0"])

        # strength 50 vs 5 must change the objective; the flag restores it
        assert env_over_file["objective"] != file_only["objective"]
        assert flag_over_env == file_only

    def test_config_in_env(self, emb_file, tmp_path, monkeypatch, capsys):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"keep_ratio": 0.5}))
        monkeypatch.setenv("FRAMESAMPLER_CONFIG", str(config))
        code = main(["select", "--embeddings", str(emb_file), "--ratio", "0.5"])
        assert code == 0

    def test_bad_config_file(self, emb_file, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text("{not json")
        assert main(["select", "--embeddings", str(emb_file), "--k", "2", "--config", str(config)]) == 2
