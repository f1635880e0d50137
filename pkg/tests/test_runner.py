import json

import numpy as np
import pytest

from banditmix.config import ConfigError, ExperimentConfig
from banditmix.registry import builtin_registry
from banditmix.runner import (
    SUMMARY_FILENAME,
    TRACE_FILENAME,
    WORLD_FILENAME,
    compare_experiments,
    run_experiment,
    sweep_experiments,
)
from banditmix.trace import read_trace


def small_cfg(**overrides):
    obj = {
        "bandit": {"total_steps": 40, "update_interval": 10, "batch_size": 16},
        "registry": {"arms": {"a": 1000, "b": 3000, "c": 6000}},
        "world": {"noise_scale": 0.1},
        "schedule": {"base_rate": 0.1},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and key in obj:
            obj[key].update(value)
        else:
            obj[key] = value
    return ExperimentConfig.from_dict(obj)


class TestRunExperiment:
    def test_one_record_per_step(self):
        result = run_experiment(small_cfg())
        assert len(result.records) == 40
        assert [r.step for r in result.records] == list(range(1, 41))

    def test_counts_conserve_batch_size(self):
        result = run_experiment(small_cfg())
        for r in result.records:
            assert sum(r.cumulative_counts) == r.step * 16

    def test_first_record_is_the_anchored_law_at_zero_estimates(self):
        result = run_experiment(
            ExperimentConfig.from_dict({"bandit": {"total_steps": 1, "update_interval": 1}})
        )
        registry = builtin_registry("tulu_v2")
        expected = (1.0 - 0.3) * (registry.prior / np.sum(registry.prior)) + 0.3 / 16
        assert np.array_equal(np.asarray(result.records[0].probabilities), expected)

    def test_reward_rounds_land_on_interval_steps(self):
        result = run_experiment(small_cfg())
        for r in result.records:
            if r.step % 10 == 0:
                assert r.rewards is not None and len(r.rewards) == 3
            else:
                assert r.rewards is None

    def test_record_probabilities_predate_the_round(self):
        # the distribution logged at a round step is the one the batch was
        # drawn from; the updated one first applies at the next step
        result = run_experiment(small_cfg())
        before = result.records[8].probabilities  # step 9
        at_round = result.records[9].probabilities  # step 10, round runs after
        after = result.records[10].probabilities  # step 11
        assert at_round == before
        assert after != at_round

    def test_estimates_recorded_after_the_round(self):
        result = run_experiment(small_cfg())
        assert result.records[9].q != (0.0, 0.0, 0.0)
        assert result.records[8].q == (0.0, 0.0, 0.0)

    def test_non_adaptive_policy_never_rounds(self):
        result = run_experiment(small_cfg(policy={"variant": "uniform"}))
        assert all(r.rewards is None for r in result.records)
        assert all(r.q == (0.0, 0.0, 0.0) for r in result.records)

    def test_seed_override(self):
        base = small_cfg()
        a = run_experiment(base, seed=5)
        b = run_experiment(base, seed=5)
        c = run_experiment(base, seed=6)
        assert a.summary == b.summary
        assert a.summary != c.summary

    def test_same_seed_reproduces_records_exactly(self):
        a = run_experiment(small_cfg(), seed=3)
        b = run_experiment(small_cfg(), seed=3)
        assert a.records == b.records

    def test_final_mean_loss_matches_world(self):
        result = run_experiment(small_cfg())
        assert result.final_mean_loss == pytest.approx(
            float(np.mean(result.world.loss_vector))
        )
        assert result.summary.final_losses == tuple(result.world.loss_vector.tolist())

    def test_training_actually_reduces_loss(self):
        result = run_experiment(small_cfg())
        assert result.final_mean_loss < 3.0

    def test_out_dir_writes_all_artifacts(self, tmp_path):
        run_experiment(small_cfg(), out_dir=tmp_path)
        assert (tmp_path / TRACE_FILENAME).exists()
        assert (tmp_path / SUMMARY_FILENAME).exists()
        assert (tmp_path / WORLD_FILENAME).exists()
        header, records = read_trace(tmp_path / TRACE_FILENAME)
        assert header["arm_names"] == ["a", "b", "c"]
        assert len(records) == 40
        summary = json.loads((tmp_path / SUMMARY_FILENAME).read_text())
        assert summary["steps"] == 40

    def test_written_trace_equals_in_memory_records(self, tmp_path):
        result = run_experiment(small_cfg(), out_dir=tmp_path)
        _, records = read_trace(tmp_path / TRACE_FILENAME)
        assert records == result.records

    def test_zero_step_run(self):
        cfg = small_cfg(bandit={"total_steps": 0})
        result = run_experiment(cfg)
        assert result.records == []
        assert result.summary.steps == 0
        assert result.summary.coverage_ratio == (0.0, 0.0, 0.0)

    def test_uniform_coverage_tracks_inverse_counts(self):
        # equal draws per arm, so coverage ratios scale like 1 / instances
        result = run_experiment(
            small_cfg(policy={"variant": "uniform"}, bandit={"total_steps": 300})
        )
        ratio = np.asarray(result.summary.coverage_ratio)
        counts = np.array([1000.0, 3000.0, 6000.0])
        scaled = ratio * counts
        expected = 300 * 16 / 3
        np.testing.assert_allclose(scaled, expected, rtol=0.1)


class TestCompare:
    def variants(self):
        return [
            small_cfg(),
            small_cfg(policy={"variant": "uniform"}),
            small_cfg(policy={"variant": "proportional"}),
        ]

    def test_rows_one_per_config(self):
        rows, results = compare_experiments(self.variants(), seed=0)
        assert [r.variant for r in rows] == ["bandit", "uniform", "proportional"]
        assert len(results) == 3

    def test_shared_world_enforced(self):
        configs = [small_cfg(), small_cfg(world={"noise_scale": 0.5})]
        with pytest.raises(ConfigError, match="world"):
            compare_experiments(configs, seed=0)

    def test_shared_registry_enforced(self):
        configs = [small_cfg(), small_cfg(registry={"arms": {"x": 10, "y": 10}})]
        with pytest.raises(ConfigError, match="registry"):
            compare_experiments(configs, seed=0)

    def test_shared_step_budget_enforced(self):
        configs = [small_cfg(), small_cfg(bandit={"total_steps": 20})]
        with pytest.raises(ConfigError, match="steps"):
            compare_experiments(configs, seed=0)

    def test_seed_applied_to_all(self):
        rows_a, _ = compare_experiments(self.variants(), seed=1)
        rows_b, _ = compare_experiments(self.variants(), seed=1)
        assert rows_a == rows_b

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compare_experiments([], seed=0)


class TestSweep:
    def test_grid_product_with_seeds(self):
        result = sweep_experiments(
            small_cfg(), {"beta": [1.0, 4.0], "gamma": [0.3]}, seeds=2
        )
        assert len(result.aggregates) == 2
        assert len(result.rows) == 4
        assert result.skipped == []
        assert {row.seed for row in result.rows} == {0, 1}

    def test_rows_carry_their_params(self):
        result = sweep_experiments(small_cfg(), {"beta": [2.0]}, seeds=1)
        assert result.rows[0].params == (("beta", 2.0),)

    def test_aggregate_stats(self):
        result = sweep_experiments(small_cfg(), {"beta": [4.0]}, seeds=3)
        agg = result.aggregates[0]
        losses = [row.final_mean_loss for row in result.rows]
        assert agg.runs == 3
        assert agg.mean_final_loss == pytest.approx(np.mean(losses))
        assert agg.std_final_loss == pytest.approx(np.std(losses))

    def test_invalid_point_skipped_not_fatal(self):
        result = sweep_experiments(small_cfg(), {"gamma": [0.3, 2.0]}, seeds=1)
        assert len(result.aggregates) == 1
        assert len(result.skipped) == 1
        assert result.skipped[0][0] == (("gamma", 2.0),)

    def test_unknown_key_is_an_upfront_error(self):
        with pytest.raises(ConfigError, match="grid.batch_size"):
            sweep_experiments(small_cfg(), {"batch_size": [64]}, seeds=1)

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            sweep_experiments(small_cfg(), {}, seeds=1)

    def test_bad_seed_count_rejected(self):
        with pytest.raises(ConfigError):
            sweep_experiments(small_cfg(), {"beta": [1.0]}, seeds=0)

    def test_nonlist_grid_values_rejected(self):
        with pytest.raises(ConfigError, match="grid.beta"):
            sweep_experiments(small_cfg(), {"beta": 4.0}, seeds=1)

    def test_base_seed_offsets_runs(self):
        cfg = small_cfg(seed=10)
        result = sweep_experiments(cfg, {"beta": [4.0]}, seeds=2)
        assert {row.seed for row in result.rows} == {10, 11}
