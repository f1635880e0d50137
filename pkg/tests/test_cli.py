import json
import os
import sys

import pytest

from banditmix.cli import main

SMALL_CONFIG = {
    "bandit": {"total_steps": 30, "update_interval": 10, "batch_size": 8},
    "registry": {"arms": {"a": 500, "b": 1500, "c": 3000}},
    "world": {"noise_scale": 0.1},
    "schedule": {"base_rate": 0.1},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return path


def write_config(tmp_path, name, **overrides):
    obj = json.loads(json.dumps(SMALL_CONFIG))
    for key, value in overrides.items():
        if isinstance(value, dict) and key in obj:
            obj[key].update(value)
        else:
            obj[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


class TestValidate:
    def test_ok_line(self, config_path, capsys):
        assert main(["validate", "--config", str(config_path)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("ok: 3 arms, 30 steps, policy bandit (delta_loss), config ")

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = write_config(tmp_path, "bad.json", bandit={"gamma": 5.0})
        assert main(["validate", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert err.startswith("config error:")

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["validate", "--config", str(tmp_path / "absent.json")]) == 2


class TestRun:
    def test_writes_artifacts_and_reports(self, config_path, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main(["run", "--config", str(config_path), "--out", str(out_dir)])
        assert code == 0
        out = capsys.readouterr().out
        assert "run complete: 30 steps, seed 0," in out
        assert "final mean loss:" in out
        assert (out_dir / "trace.jsonl").exists()
        assert (out_dir / "summary.json").exists()
        assert (out_dir / "world.json").exists()

    def test_seed_flag_overrides(self, config_path, tmp_path, capsys):
        out_dir = tmp_path / "out"
        main(["run", "--config", str(config_path), "--seed", "42", "--out", str(out_dir)])
        out = capsys.readouterr().out
        assert "seed 42" in out
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["seed"] == 42

    def test_identical_invocations_byte_identical_traces(self, config_path, tmp_path):
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", str(config_path), "--seed", "7", "--out", str(dir_a)])
        main(["run", "--config", str(config_path), "--seed", "7", "--out", str(dir_b)])
        assert (dir_a / "trace.jsonl").read_bytes() == (dir_b / "trace.jsonl").read_bytes()

    def test_env_var_output_dir(self, config_path, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("BANDITMIX_OUTPUT_DIR", str(tmp_path / "envout"))
        assert main(["run", "--config", str(config_path)]) == 0
        assert (tmp_path / "envout" / "trace.jsonl").exists()


class TestCompare:
    def test_table_lists_each_policy(self, tmp_path, capsys):
        paths = [
            write_config(tmp_path, "bandit.json"),
            write_config(tmp_path, "uniform.json", policy={"variant": "uniform"}),
        ]
        code = main(["compare", "--configs", *map(str, paths), "--seed", "0"])
        assert code == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0].split() == [
            "config", "policy", "final_mean_loss", "coverage_variance", "mean_step_tv"
        ]
        assert lines[2].split()[:2] == ["#1", "bandit"]
        assert lines[3].split()[:2] == ["#2", "uniform"]

    def test_mismatched_worlds_exit_2(self, tmp_path, capsys):
        paths = [
            write_config(tmp_path, "one.json"),
            write_config(tmp_path, "two.json", world={"noise_scale": 0.9}),
        ]
        assert main(["compare", "--configs", *map(str, paths), "--seed", "0"]) == 2


class TestSweep:
    def test_tables_and_skips(self, tmp_path, capsys):
        config = write_config(tmp_path, "base.json")
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"beta": [1.0, 4.0], "gamma": [0.3, 7.0]}))
        code = main(
            ["sweep", "--config", str(config), "--grid", str(grid), "--seeds", "2"]
        )
        assert code == 0
        captured = capsys.readouterr()
        # two valid grid points, two seeds each
        assert captured.out.count("beta=1.0 gamma=0.3") == 3  # 2 rows + 1 aggregate
        assert "skipped_point" in captured.out
        assert "warning: skipped grid point" in captured.err

    def test_unsweepable_key_exits_2(self, tmp_path, capsys):
        config = write_config(tmp_path, "base.json")
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"batch_size": [8, 16]}))
        assert (
            main(["sweep", "--config", str(config), "--grid", str(grid), "--seeds", "1"]) == 2
        )

    def test_malformed_grid_exits_2(self, tmp_path):
        config = write_config(tmp_path, "base.json")
        grid = tmp_path / "grid.json"
        grid.write_text("[1, 2, 3]")
        assert (
            main(["sweep", "--config", str(config), "--grid", str(grid), "--seeds", "1"]) == 2
        )


class TestExport:
    def run_and_export(self, tmp_path, capsys, kind):
        config = write_config(tmp_path, "exp.json")
        out_dir = tmp_path / "out"
        main(["run", "--config", str(config), "--out", str(out_dir)])
        capsys.readouterr()
        code = main(["export", "--trace", str(out_dir / "trace.jsonl"), "--kind", kind])
        assert code == 0
        return capsys.readouterr().out

    def test_proportions_csv(self, tmp_path, capsys):
        out = self.run_and_export(tmp_path, capsys, "proportions_over_time")
        lines = out.strip().splitlines()
        assert lines[0] == "step,a,b,c"
        assert len(lines) == 31
        for line in lines[1:]:
            cells = line.split(",")
            assert abs(sum(float(c) for c in cells[1:]) - 1.0) < 1e-9

    def test_coverage_csv_counts_are_integers(self, tmp_path, capsys):
        out = self.run_and_export(tmp_path, capsys, "instance_coverage")
        last = out.strip().splitlines()[-1].split(",")
        assert sum(int(c) for c in last[1:]) == 30 * 8

    def test_unknown_kind_rejected_by_parser(self, tmp_path, capsys):
        config = write_config(tmp_path, "exp.json")
        out_dir = tmp_path / "out"
        main(["run", "--config", str(config), "--out", str(out_dir)])
        with pytest.raises(SystemExit):
            main(["export", "--trace", str(out_dir / "trace.jsonl"), "--kind", "pie"])

    def test_missing_trace_exits_3(self, tmp_path, capsys):
        assert main(["export", "--trace", str(tmp_path / "no.jsonl"), "--kind", "q_over_time"]) == 3

    def test_broken_pipe_exits_quietly(self, tmp_path, capsys, monkeypatch):
        # export | head must not report an error when head closes the pipe.
        config = write_config(tmp_path, "exp.json")
        out_dir = tmp_path / "out"
        main(["run", "--config", str(config), "--out", str(out_dir)])
        capsys.readouterr()
        read_fd, write_fd = os.pipe()
        os.close(read_fd)
        sink = os.fdopen(write_fd, "w", buffering=1)
        monkeypatch.setattr(sys, "stdout", sink)
        code = main(["export", "--trace", str(out_dir / "trace.jsonl"), "--kind", "q_over_time"])
        monkeypatch.undo()
        sink.close()
        assert code == 0
        assert capsys.readouterr().err == ""
