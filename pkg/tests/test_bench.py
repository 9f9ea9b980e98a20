"""Tests for the experiment harness"""

import numpy as np
import pytest

from cojoin.bench.inputs import JoinInputs
from cojoin.bench.largejoin import choose_partition_bits, largejoin, linear_fit, pair_bytes
from cojoin.bench.lockbench import DISTRIBUTIONS, draw_slots, lockbench, lockbench_grid
from cojoin.bench.montecarlo import SEARCHED_RUN, montecarlo
from cojoin.bench.report import ResultRow, mark_argmin, read_csv, write_rows
from cojoin.bench.sweep import SweepAxis, default_values, sweep
from cojoin.config.schema import EngineConfig, Scheme
from cojoin.data.relation import gen_probe, gen_uniform, write_bin
from cojoin.engine.steps import pair_multiset, reference_join
from cojoin.errors import BufferOverflowError


@pytest.fixture
def inputs() -> JoinInputs:
    return JoinInputs(r_size=1500, s_size=1500, s_percent=10, selectivity=0.8, seed=5)


class TestJoinInputs:
    """Test generated experiment inputs"""

    def test_load_is_deterministic(self, inputs):
        """The same parameters give the same relations"""
        R1, S1 = inputs.load()
        R2, S2 = inputs.load()
        assert R1 == R2
        assert S1 == S2
        assert len(R1) == 1500

    def test_files(self, temp_dir):
        """Relation files take precedence over generation"""
        R = gen_uniform(10, seed=1)
        S = gen_probe(R, 12, 1.0, seed=2)
        write_bin(temp_dir / "r.bin", R)
        write_bin(temp_dir / "s.bin", S)
        files = JoinInputs(r_path=temp_dir / "r.bin", s_path=temp_dir / "s.bin")
        assert files.from_files
        assert files.load() == (R, S)
        assert "r.bin" in files.describe()


class TestSweep:
    """Test one-axis sweeps"""

    def test_ratio_axis(self, inputs, config):
        """One row per fixed ratio, the fastest marked"""
        rows = sweep(SweepAxis.RATIO, inputs, config=config, values=[0.0, 0.5, 1.0])
        assert [r.param for r in rows] == ["ratio=0", "ratio=0.5", "ratio=1"]
        assert sum(r.argmin for r in rows) == 1
        best = min(rows, key=lambda r: r.measured)
        assert best.argmin
        assert rows[2].realized_ratio == 1.0
        assert len({r.results for r in rows}) == 1

    def test_ratio_out_of_range(self, inputs, config):
        """Ratios must lie in [0, 1]"""
        with pytest.raises(ValueError):
            sweep(SweepAxis.RATIO, inputs, config=config, values=[1.5])

    def test_empty_values(self, inputs, config):
        """A sweep needs at least one point"""
        with pytest.raises(ValueError):
            sweep(SweepAxis.GROUPS, inputs, config=config, values=[])

    def test_block_size_axis(self, inputs, config):
        """Smaller blocks need more global grants"""
        rows = sweep(SweepAxis.BLOCK_SIZE, inputs, config=config, values=[64, 4096])
        assert [r.block_size for r in rows] == [64, 4096]
        assert rows[0].global_ops > rows[1].global_ops

    def test_selectivity_axis(self, inputs, config):
        """Higher selectivity yields more results"""
        rows = sweep(SweepAxis.SELECTIVITY, inputs, scheme=Scheme.DD, config=config, values=[0.25, 1.0])
        assert rows[0].results < rows[1].results

    def test_build_size_axis(self, inputs, config):
        """Build sizes default to fractions of the probe size"""
        assert default_values(SweepAxis.BUILD_SIZE, inputs, config) == [187.0, 375.0, 750.0, 1500.0]
        rows = sweep(SweepAxis.BUILD_SIZE, inputs, scheme=Scheme.DD, config=config, values=[375, 1500])
        assert [r.r_size for r in rows] == [375, 1500]

    def test_groups_axis(self, inputs, config):
        """Groups are recorded per row"""
        rows = sweep(SweepAxis.GROUPS, inputs, scheme=Scheme.DD, config=config, values=[1, 4])
        assert [r.groups for r in rows] == [1, 4]
        assert rows[0].results == rows[1].results

    def test_default_ratio_grid(self, inputs, config):
        """The ratio axis defaults to the search grid"""
        assert len(default_values(SweepAxis.RATIO, inputs, config)) == 11


class TestMonteCarlo:
    """Test random-ratio validation"""

    def test_runs_sorted_with_cdf(self, inputs, config):
        """Runs are sorted by measured time with an empirical CDF"""
        result = montecarlo(inputs, runs=20, phase="build", config=config, seed=1)
        measured = [r.measured for r in result.runs]
        assert measured == sorted(measured)
        assert result.runs[-1].cdf == 1.0
        assert result.phases == ["build"]

    def test_searched_plan_beats_random_predictions(self, inputs, config):
        """The searched plan minimizes the model over the grid"""
        result = montecarlo(inputs, runs=30, phase="probe", config=config, seed=2)
        best_random = min(r.predicted for r in result.runs)
        assert result.searched.predicted <= best_random * (1 + 1e-9)
        assert 0.0 <= result.percentile <= 1.0
        assert 0.0 <= result.within_tolerance <= 1.0

    def test_rows_end_with_searched(self, inputs, config):
        """The summary row follows the CDF rows"""
        result = montecarlo(inputs, runs=5, phase="build", config=config, seed=3)
        rows = result.rows()
        assert len(rows) == 6
        assert rows[-1]["run"] == SEARCHED_RUN
        assert rows[-1]["cdf"] == result.percentile
        assert rows[0]["ratios"].startswith("build:")

    def test_seeded_draws(self, inputs, config):
        """The same seed draws the same ratios"""
        a = montecarlo(inputs, runs=5, phase="build", config=config, seed=9)
        b = montecarlo(inputs, runs=5, phase="build", config=config, seed=9)
        assert [r.ratios for r in a.runs] == [r.ratios for r in b.runs]

    def test_quantile(self, inputs, config):
        """Quantiles lie within the measured range"""
        result = montecarlo(inputs, runs=10, phase="build", config=config, seed=4)
        q = result.measured_quantile(0.5)
        assert result.runs[0].measured <= q <= result.runs[-1].measured

    def test_invalid(self, inputs, config):
        """Run count and phase are validated"""
        with pytest.raises(ValueError):
            montecarlo(inputs, runs=0, config=config)
        with pytest.raises(ValueError, match="unknown phase"):
            montecarlo(inputs, runs=2, phase="merge", config=config)


class TestLockBench:
    """Test the latch micro-benchmark"""

    @pytest.mark.parametrize("distribution", sorted(DISTRIBUTIONS))
    def test_increments_conserved(self, distribution):
        """Every increment lands exactly once"""
        row = lockbench(16, 4, 2000, distribution, seed=1)
        assert row.total == 2000
        assert row.torn == 0
        assert row.conserved
        assert row.elapsed >= 0.0

    def test_single_counter(self):
        """All threads contend for one latch"""
        row = lockbench(1, 3, 300, check=False)
        assert row.total == 300
        assert row.samples == 0

    def test_draw_slots(self):
        """Slots are in range and reproducible"""
        a = draw_slots(8, 500, 25, seed=3)
        assert a.min() >= 0 and a.max() < 8
        assert a.size == 500
        assert np.array_equal(a, draw_slots(8, 500, 25, seed=3))

    def test_invalid(self):
        """Sizes must be positive and distributions known"""
        with pytest.raises(ValueError):
            lockbench(0, 1, 1)
        with pytest.raises(ValueError):
            lockbench(4, 1, 10, "zipf")

    def test_grid(self):
        """One row per size and distribution"""
        rows = lockbench_grid([4, 8], 2, 100)
        assert len(rows) == 2 * len(DISTRIBUTIONS)
        assert all(r.conserved for r in rows)


class TestLargeJoin:
    """Test joins larger than the buffer"""

    def test_in_buffer(self, small_join, config):
        """Inputs that fit are joined directly"""
        R, S = small_join
        report = largejoin(R, S, scheme=Scheme.DD, config=config)
        assert report.in_buffer
        assert report.copy_time == 0.0
        assert np.array_equal(pair_multiset(report.result_pairs), pair_multiset(reference_join(R, S)))

    def test_out_of_buffer(self, config):
        """Partitioned, spilled and joined pair by pair"""
        R = gen_uniform(16384, seed=21)
        S = gen_probe(R, 16384, 1.0, seed=22)
        report = largejoin(R, S, scheme=Scheme.DD, config=config, buffer_limit=64 * 1024, chunk_tuples=4096)

        assert not report.in_buffer
        assert report.partition_bits == 6
        assert report.pairs == 64
        assert report.chunks == 8
        assert report.spilled_bytes == 8 * (16384 + 16384)
        assert report.copy_time > 0 and report.partition_time > 0 and report.join_time > 0
        assert report.total == pytest.approx(report.copy_time + report.partition_time + report.join_time)
        assert report.results == len(reference_join(R, S))
        assert np.array_equal(pair_multiset(report.result_pairs), pair_multiset(reference_join(R, S)))

    def test_overflow(self, config):
        """Too few partition bits for the buffer"""
        config.partition.pass_bits = 1
        config.partition.passes = 1
        R = gen_uniform(4096, seed=1)
        S = gen_probe(R, 4096, 1.0, seed=2)
        with pytest.raises(BufferOverflowError) as exc:
            largejoin(R, S, config=config, buffer_limit=1024, semantic=False)
        assert "--passes" in exc.value.suggestion

    def test_choose_bits(self):
        """The first multiple of pass_bits that fits is chosen"""
        R = gen_uniform(2048, seed=3)
        S = gen_probe(R, 2048, 1.0, seed=4)
        whole = pair_bytes(R.keys, S.keys)
        assert choose_partition_bits(R, S, whole, 2, 3) == 2
        with pytest.raises(ValueError):
            choose_partition_bits(R, S, whole, 0, 1)

    def test_pair_bytes(self):
        """Tuples, table nodes and output pairs"""
        keys = np.array([1, 1, 2], dtype=np.uint32)
        # 5 tuples, 2 key nodes + 3 rid nodes, 3 output pairs
        assert pair_bytes(keys, np.array([1, 2], dtype=np.uint32)) == 8 * 5 + (2 * 16 + 3 * 8) + 8 * 3

    def test_linear_fit(self):
        """A perfect line has r^2 = 1"""
        slope, intercept, r2 = linear_fit([1, 2, 3], [2, 4, 6])
        assert slope == pytest.approx(2.0)
        assert intercept == pytest.approx(0.0, abs=1e-12)
        assert r2 == pytest.approx(1.0)


class TestReport:
    """Test result rows and their CSV form"""

    def test_non_finite_rejected(self):
        """NaN and inf are not valid measurements"""
        with pytest.raises(ValueError, match="measured"):
            ResultRow("x", measured=float("nan"))
        with pytest.raises(ValueError):
            ResultRow("x", stall=float("inf"))

    def test_header(self):
        """The header lists every field in order"""
        header = ResultRow.header()
        assert header[0] == "experiment"
        assert header[-1] == "argmin"
        assert "rel_error" in header

    def test_mark_argmin(self):
        """The first fastest row is marked"""
        rows = [ResultRow("x", measured=v) for v in (3.0, 1.0, 1.0)]
        assert mark_argmin(rows) == 1
        assert [r.argmin for r in rows] == [False, True, False]
        assert mark_argmin([]) is None

    def test_csv_round_trip(self, temp_dir):
        """Floats keep full precision and flags become 0/1"""
        rows = [ResultRow("x", measured=0.1 + 0.2, results=7), ResultRow("x", measured=1e-9)]
        mark_argmin(rows)
        path = write_rows(temp_dir / "out" / "rows.csv", rows)
        got = read_csv(path)
        assert float(got[0]["measured"]) == 0.1 + 0.2
        assert got[0]["results"] == "7"
        assert [g["argmin"] for g in got] == ["0", "1"]

    def test_from_report(self, inputs):
        """Rows flatten the plan and timing"""
        config = EngineConfig()
        rows = sweep(SweepAxis.RATIO, inputs, config=config, values=[0.5])
        row = rows[0]
        assert row.scheme == "dd"
        assert row.algorithm == "shj"
        assert row.measured == pytest.approx(row.build + row.probe)
        assert row.block_size == 2048
