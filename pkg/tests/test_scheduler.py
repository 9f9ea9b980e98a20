"""Tests for plan search, plans and plan execution"""

import itertools

import numpy as np
import pytest

from cojoin.config.schema import Algorithm, Architecture, EngineConfig, Scheme, TableMode
from cojoin.engine.costmodel import CostParams, SeriesModel
from cojoin.engine.scheduler import (
    Plan,
    basic_unit,
    execute,
    grid,
    plan_config,
    plan_join,
    predict_plan,
    run_join,
    search_dd,
    search_ol,
    search_pl,
    search_series,
)
from cojoin.engine.steps import StepId, pair_multiset, reference_join
from cojoin.engine.workload import build_join_workload, partition_workload
from cojoin.errors import PlanError


def _correct(report, R, S) -> bool:
    return np.array_equal(report.result.multiset(), pair_multiset(reference_join(R, S)))


def _two_step_params(profiles) -> CostParams:
    cpu, gpu = profiles
    return CostParams(steps=(StepId.B1, StepId.P3), x=[10_000, 10_000], cpu=cpu, gpu=gpu)


def _even_plan(table_mode=TableMode.SHARED, architecture=Architecture.COUPLED) -> Plan:
    return Plan(
        Scheme.DD,
        Algorithm.SHJ,
        ratios={"build": [0.5] * 4, "probe": [0.5] * 4},
        table_mode=table_mode,
        architecture=architecture,
    )


class TestGrid:
    """Test the ratio grid"""

    def test_default_delta(self):
        """delta = 0.02 gives 51 points from 0 to 1"""
        g = grid(0.02)
        assert g.size == 51
        assert g[0] == 0.0
        assert g[-1] == 1.0

    def test_closed_with_one(self):
        """A delta that does not divide 1 still ends at 1"""
        assert grid(0.3).tolist() == [0.0, 0.3, 0.6, 0.9, 1.0]

    def test_invalid_delta(self):
        """delta must lie in (0, 1]"""
        with pytest.raises(ValueError):
            grid(0.0)
        with pytest.raises(ValueError):
            grid(1.5)


class TestSearch:
    """Test DD, OL and PL ratio searches"""

    def test_dd_is_constant(self, profiles):
        """DD gives every step the same share"""
        found = search_dd(_two_step_params(profiles), 0.25, "p")
        assert len(set(found.ratios)) == 1
        assert found.evaluated == 5

    def test_ol_coupled_picks_cheaper_device(self, profiles):
        """Each step goes whole to the cheaper device"""
        params = _two_step_params(profiles)
        model = SeriesModel(params)
        found = search_ol(params)
        for i, r in enumerate(found.ratios):
            cpu = model.comp_cpu[i] + model.mem_cpu[i]
            gpu = model.comp_gpu[i] + model.mem_gpu[i]
            assert r == (1.0 if cpu < gpu else 0.0)

    def test_pl_finds_grid_optimum(self, profiles):
        """Exhaustive and pruned PL agree with brute force"""
        params = _two_step_params(profiles)
        g = grid(0.25)
        candidates = np.array(list(itertools.product(g, repeat=2)))
        best = SeriesModel(params).evaluate(candidates).min()

        assert search_pl(params, 0.25, exhaustive=True).predicted == pytest.approx(best)
        assert search_pl(params, 0.25).predicted == pytest.approx(best)

    def test_pl_dominates_dd_and_ol(self, profiles):
        """PL is never worse than DD or OL"""
        params = _two_step_params(profiles)
        dd = search_dd(params, 0.25)
        ol = search_ol(params)
        pl = search_pl(params, 0.25, incumbent=dd if dd.predicted <= ol.predicted else ol)
        assert pl.predicted <= min(dd.predicted, ol.predicted) + 1e-15

    def test_pl_budget(self, profiles):
        """Exceeding the budget keeps the best prefixes and flags the result"""
        cpu, gpu = profiles
        params = CostParams.from_workload(partition_workload(4096, "partition_r.0"), cpu, gpu)
        found = search_pl(params, 0.1, budget=50, exhaustive=True)
        assert found.budget_exceeded
        assert len(found.ratios) == 3
        assert np.isfinite(found.predicted)

    def test_series_dominance_on_join(self, small_join, config, profiles):
        """Per phase, PL <= min(DD, OL)"""
        cpu, gpu = profiles
        R, S = small_join
        workload = build_join_workload(Algorithm.PHJ, R, S, config)
        for w in workload.phases:
            dd = search_series(Scheme.DD, w, cpu, gpu, config).predicted
            ol = search_series(Scheme.OL, w, cpu, gpu, config).predicted
            pl = search_series(Scheme.PL, w, cpu, gpu, config).predicted
            assert pl <= min(dd, ol) * (1 + 1e-9)

    def test_single_device_schemes(self, small_join, config, profiles):
        """cpu and gpu schemes fix the shares"""
        cpu, gpu = profiles
        R, S = small_join
        w = build_join_workload(Algorithm.SHJ, R, S, config).phase("probe")
        assert search_series(Scheme.CPU, w, cpu, gpu, config).ratios == [1.0] * 4
        assert search_series(Scheme.GPU, w, cpu, gpu, config).ratios == [0.0] * 4

    def test_empty_series(self, config, profiles):
        """A series without items costs nothing"""
        cpu, gpu = profiles
        found = search_series(Scheme.PL, partition_workload(0, "partition_r.0"), cpu, gpu, config)
        assert found.predicted == 0.0
        assert found.ratios == [1.0] * 3


class TestPlan:
    """Test plan validation and the plan file"""

    def test_basic_unit_needs_chunk(self):
        """basicunit requires a chunk size, other schemes forbid one"""
        with pytest.raises(PlanError):
            Plan(Scheme.BASIC_UNIT)
        with pytest.raises(PlanError):
            Plan(Scheme.DD, chunk_size=64)
        assert Plan(Scheme.BASIC_UNIT, chunk_size=64).chunk_size == 64

    @pytest.mark.parametrize(
        "scheme,ratios",
        [
            (Scheme.PL, [0.5, 1.2]),
            (Scheme.CPU, [1.0, 0.5]),
            (Scheme.GPU, [0.0, 1.0]),
            (Scheme.OL, [0.0, 0.5]),
            (Scheme.DD, [0.2, 0.3]),
        ],
    )
    def test_shape_violations(self, scheme, ratios):
        """Ratios must fit the scheme"""
        with pytest.raises(PlanError):
            Plan(scheme, ratios={"build": ratios})

    def test_pl_accepts_any_grid_vector(self):
        """PL ratios vary freely within [0, 1]"""
        plan = Plan(Scheme.PL, ratios={"build": [0.0, 0.4, 1.0, 0.6]})
        assert plan.ratios["build"][1] == 0.4

    def test_text_round_trip(self):
        """to_text parses back to the same plan"""
        plan = Plan(
            Scheme.PL,
            Algorithm.PHJ,
            ratios={"partition_r.0": [0.1, 0.2, 0.3], "build": [1.0, 0.0, 0.5, 0.25]},
            table_mode=TableMode.SEPARATE,
            architecture=Architecture.DISCRETE,
        )
        loaded = Plan.from_text(plan.to_text())
        assert loaded.scheme is Scheme.PL
        assert loaded.algorithm is Algorithm.PHJ
        assert loaded.ratios == plan.ratios
        assert loaded.table_mode is TableMode.SEPARATE
        assert loaded.architecture is Architecture.DISCRETE

    def test_save_load(self, temp_dir):
        """Plans survive a file round trip"""
        path = temp_dir / "plans" / "bu.plan"
        Plan(Scheme.BASIC_UNIT, chunk_size=128).save(path)
        assert Plan.load(path).chunk_size == 128

    @pytest.mark.parametrize(
        "text",
        [
            "algorithm=shj\n",
            "scheme=pl\nratios.build=a b\n",
            "scheme=bogus\n",
            "scheme=pl\njust words\n",
        ],
    )
    def test_bad_text(self, text):
        """Malformed plan files raise PlanError"""
        with pytest.raises(PlanError):
            Plan.from_text(text)

    def test_check_against_workload(self, small_join, config):
        """A plan must name every series of the join"""
        R, S = small_join
        workload = build_join_workload(Algorithm.SHJ, R, S, config)
        with pytest.raises(PlanError, match="do not match"):
            Plan(Scheme.DD, ratios={"build": [0.5] * 4}).check_against(workload)
        _even_plan().check_against(workload)


class TestPlanJoin:
    """Test whole-join planning"""

    def test_plan_covers_every_phase(self, small_join, config, profiles):
        """Each phase gets ratios and a prediction"""
        cpu, gpu = profiles
        R, S = small_join
        workload = build_join_workload(Algorithm.PHJ, R, S, config)
        plan = plan_join(Scheme.PL, workload, cpu, gpu, config)
        assert list(plan.ratios) == workload.names
        assert plan.total_predicted > 0

    def test_predict_plan_matches_search(self, small_join, config, profiles):
        """Estimates of the chosen ratios equal the searched predictions"""
        cpu, gpu = profiles
        R, S = small_join
        workload = build_join_workload(Algorithm.SHJ, R, S, config)
        plan = plan_join(Scheme.DD, workload, cpu, gpu, config)
        estimates = predict_plan(plan, workload, cpu, gpu, config)
        for phase, est in estimates.items():
            assert est.T == pytest.approx(plan.predicted[phase])

    def test_basic_unit_plan(self, small_join, config, profiles):
        """basicunit plans carry a chunk size and no ratios"""
        cpu, gpu = profiles
        R, S = small_join
        workload = build_join_workload(Algorithm.SHJ, R, S, config)
        plan = plan_join(Scheme.BASIC_UNIT, workload, cpu, gpu, config, chunk_size=300)
        assert plan.chunk_size == 300
        assert plan.ratios == {}
        with pytest.raises(PlanError):
            predict_plan(plan, workload, cpu, gpu, config)

    def test_coarse_needs_coarse_workload(self, small_join, config, profiles):
        """coarsepl cannot plan a fine-step workload"""
        cpu, gpu = profiles
        R, S = small_join
        workload = build_join_workload(Algorithm.PHJ, R, S, config)
        with pytest.raises(PlanError, match="partition-pair"):
            plan_join(Scheme.COARSE_PL, workload, cpu, gpu, config)


class TestRunJoin:
    """Test executed joins against the oracle"""

    @pytest.mark.parametrize("scheme", [Scheme.CPU, Scheme.GPU, Scheme.OL, Scheme.DD, Scheme.PL])
    def test_shj_schemes(self, small_join, config, scheme):
        """Every scheme computes the same join"""
        R, S = small_join
        report = run_join(Algorithm.SHJ, scheme, R, S, config)
        assert _correct(report, R, S)
        assert report.result_count == report.matches

    @pytest.mark.parametrize("scheme", [Scheme.DD, Scheme.PL])
    def test_phj_schemes(self, small_join, config, scheme):
        """Partitioned joins through the threads match the oracle"""
        R, S = small_join
        report = run_join(Algorithm.PHJ, scheme, R, S, config)
        assert _correct(report, R, S)
        assert report.partition_time > 0

    def test_coarse_pl(self, small_join, config):
        """One partition pair per step"""
        R, S = small_join
        report = run_join(Algorithm.PHJ, Scheme.COARSE_PL, R, S, config)
        assert _correct(report, R, S)
        assert report.join_time > 0
        assert report.build_time == 0.0

    def test_basic_unit(self, small_join, config):
        """Dynamic chunks on both threads"""
        R, S = small_join
        report = basic_unit(R, S, 256, config)
        assert _correct(report, R, S)
        assert report.plan.chunk_size == 256
        assert 0.0 < report.realized_ratio <= 1.0

    def test_basic_unit_invalid_chunk(self, small_join, config):
        """Chunk size must be positive"""
        R, S = small_join
        with pytest.raises(ValueError):
            basic_unit(R, S, 0, config)

    def test_separate_tables_merge(self, small_join, config):
        """Separate tables add a CPU merge phase"""
        R, S = small_join
        report = execute(_even_plan(TableMode.SEPARATE), R, S, config)
        assert _correct(report, R, S)
        assert [p.phase for p in report.phases] == ["build", "merge", "probe"]
        assert report.merged_key_nodes > 0
        assert report.merge_time > 0

    def test_discrete_transfers(self, small_join, config):
        """A discrete plan pays for the link"""
        R, S = small_join
        coupled = execute(_even_plan(), R, S, config, semantic=False)
        discrete = execute(_even_plan(architecture=Architecture.DISCRETE), R, S, config, semantic=False)
        assert coupled.transfer == 0.0
        assert discrete.transfer > 0.0
        assert discrete.gpu_time > coupled.gpu_time

    def test_discrete_pl(self, small_join, config):
        """PL plans searched for the discrete link still join correctly"""
        R, S = small_join
        config.architecture = Architecture.DISCRETE
        report = run_join(Algorithm.SHJ, Scheme.PL, R, S, config)
        assert report.plan.architecture is Architecture.DISCRETE
        assert _correct(report, R, S)

    def test_grouped_probe(self, small_join, config):
        """Workload grouping reorders the probe without changing the result"""
        R, S = small_join
        config.scheduler.groups = 4
        assert _correct(run_join(Algorithm.SHJ, Scheme.PL, R, S, config), R, S)

    def test_basic_allocator_costs_more_grants(self, uniform_join, config):
        """Per-item allocation issues more global operations than blocks"""
        R, S = uniform_join
        blocked = execute(_even_plan(), R, S, config)
        config.allocator.block_size = 0
        basic = execute(_even_plan(), R, S, config)
        assert _correct(basic, R, S)
        assert basic.arena_ops > blocked.arena_ops
        assert basic.global_ops > blocked.global_ops

    def test_timing_only(self, small_join, config):
        """Without the semantic run only the static match count is known"""
        R, S = small_join
        report = run_join(Algorithm.SHJ, Scheme.DD, R, S, config, semantic=False)
        assert report.result is None
        assert report.result_count == len(reference_join(R, S))

    def test_given_plan_wins(self, small_join, config):
        """A supplied plan overrides scheme and algorithm"""
        R, S = small_join
        report = run_join(Algorithm.PHJ, Scheme.PL, R, S, config, plan=_even_plan(), semantic=False)
        assert report.plan.scheme is Scheme.DD
        assert report.algorithm is Algorithm.SHJ

    def test_given_plan_modes_win(self, small_join, config):
        """A replayed separate/discrete plan runs as one under a shared/coupled config"""
        R, S = small_join
        plan = _even_plan(TableMode.SEPARATE, Architecture.DISCRETE)
        report = run_join(Algorithm.PHJ, Scheme.PL, R, S, config, plan=plan)
        assert _correct(report, R, S)
        assert [p.phase for p in report.phases] == ["build", "merge", "probe"]
        assert report.merged_key_nodes > 0
        assert report.transfer > 0.0
        assert config.table_mode is TableMode.SHARED
        assert config.architecture is Architecture.COUPLED

    def test_plan_config(self, config):
        """plan_config copies only when the plan's modes differ"""
        assert plan_config(config, _even_plan()) is config
        replay = plan_config(config, _even_plan(TableMode.SEPARATE, Architecture.DISCRETE))
        assert replay is not config
        assert replay.table_mode is TableMode.SEPARATE
        assert replay.architecture is Architecture.DISCRETE
        assert replay.scheduler.delta == config.scheduler.delta
        assert config.table_mode is TableMode.SHARED


class TestExecutionReport:
    """Test the report's breakdown"""

    def test_breakdown_sums(self, small_join, config):
        """Phase times add up to the measured total"""
        R, S = small_join
        report = run_join(Algorithm.SHJ, Scheme.PL, R, S, config, semantic=False)
        assert report.measured == pytest.approx(report.build_time + report.probe_time)
        assert report.lock_overhead == pytest.approx(report.measured - report.predicted)
        assert report.relative_error >= 0.0
        assert report.phase("build").ratios == report.plan.ratios["build"]

    def test_step_times(self, small_join, config):
        """Busy time is keyed by device and step"""
        R, S = small_join
        report = run_join(Algorithm.SHJ, Scheme.CPU, R, S, config, semantic=False)
        steps = report.step_times()
        assert set(steps) >= {"cpu.b1", "cpu.p4"}
        assert not any(k.startswith("gpu.") and v > 0 for k, v in steps.items())
        assert report.gpu_time == 0.0
        assert report.realized_ratio == 1.0

    def test_unknown_phase(self, small_join, config):
        """Missing phases raise KeyError"""
        R, S = small_join
        report = run_join(Algorithm.SHJ, Scheme.CPU, R, S, config, semantic=False)
        with pytest.raises(KeyError):
            report.phase("partition_r.0")

    def test_default_config(self, small_join):
        """run_join works with the default configuration and canned devices"""
        R, S = small_join
        report = run_join(Algorithm.SHJ, Scheme.DD, R, S, EngineConfig(), semantic=False)
        assert report.measured > 0
