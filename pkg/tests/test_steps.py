"""Tests for the fine-grained step kernels and serial joins"""

import numpy as np
import pytest

from cojoin.data.relation import Relation, gen_probe, gen_skewed, gen_uniform
from cojoin.engine.steps import (
    BUILD_STEPS,
    FINE_STEPS,
    PROBE_STEPS,
    JoinResult,
    StepContext,
    StepId,
    StepSeries,
    block_or_basic,
    coarse_step_join,
    group_by_workload,
    join_into,
    match_counts,
    new_result,
    new_table,
    pair_multiset,
    partition_ids,
    partition_pass,
    phj_join,
    radix_partition,
    reference_join,
    run_series,
    run_step,
    shj_join,
    wavefront_divergence,
)
from cojoin.memory.allocator import Arena, GroupAllocator


def _tiny_join() -> tuple[Relation, Relation]:
    R = Relation(np.arange(6), np.array([4, 7, 4, 9, 1, 4]))
    S = Relation(np.arange(5), np.array([4, 2, 9, 4, 1]))
    return R, S


def membership_consistent(parts) -> bool:
    offsets = parts.offsets()
    membership = parts.membership()
    return all(
        offsets[membership[rid]] <= pos < offsets[membership[rid] + 1]
        for pos, rid in enumerate(parts.concat().rids.tolist())
    )


class TestStepSeries:
    """Test step series bookkeeping"""

    def test_item_counts_must_match(self):
        """One item count per step"""
        with pytest.raises(ValueError, match="item counts"):
            StepSeries("build", BUILD_STEPS, [10, 10])

    def test_uniform(self):
        """Fine steps map items one to one"""
        series = StepSeries.uniform("probe", PROBE_STEPS, 100)
        assert series.n == 4
        assert series.x == [100] * 4

    def test_step_labels(self):
        """Labels are the upper-case ids"""
        assert [s.label for s in BUILD_STEPS] == ["B1", "B2", "B3", "B4"]
        assert len(FINE_STEPS) == 11

    def test_block_or_basic(self):
        """Block size 0 selects the basic allocator"""
        assert block_or_basic(0) is None
        assert block_or_basic(2048) == 2048


class TestReferenceJoin:
    """Test the sort-based oracle"""

    def test_matches_nested_loop(self, nested_loop):
        """Every (r, s) with equal keys, duplicates included"""
        R, S = _tiny_join()
        got = sorted(map(tuple, reference_join(R, S).tolist()))
        assert got == nested_loop(R, S)
        assert len(got) == 3 + 3 + 1 + 1

    def test_empty(self):
        """No matches give an empty (0, 2) array"""
        R = Relation(np.arange(2), np.array([1, 2]))
        S = Relation(np.arange(2), np.array([3, 4]))
        assert reference_join(R, S).shape == (0, 2)

    def test_match_counts(self):
        """Build tuples matching each probe key"""
        R, S = _tiny_join()
        assert match_counts(R.keys, S.keys).tolist() == [3, 0, 1, 3, 1]


class TestStepKernels:
    """Test individual kernels on one side"""

    def test_build_then_probe(self):
        """Running B1..B4 then P1..P4 yields the join"""
        R, S = _tiny_join()
        table = new_table(R.keys)
        result = new_result(R.keys, S.keys)
        run_series(BUILD_STEPS, StepContext.for_build(R, table))
        run_series(PROBE_STEPS, StepContext.for_probe(S, table, result))
        assert np.array_equal(result.multiset(), pair_multiset(reference_join(R, S)))

    def test_split_between_sides(self):
        """A step split at any item boundary composes to the same table"""
        R = gen_skewed(300, 30, seed=1)
        table = new_table(R.keys)
        ctx = StepContext.for_build(R, table)
        items = np.arange(len(R), dtype=np.int64)
        for step, cut in zip(BUILD_STEPS, (0, 100, 250, 300)):
            run_step(step, items[:cut], ctx, side=0)
            run_step(step, items[cut:], ctx, side=1)
        assert sorted(table.items()) == sorted(zip(R.keys.tolist(), R.rids.tolist()))

    def test_b3_units_count_visits(self):
        """B3 reports key nodes visited per item"""
        R = Relation(np.arange(3), np.array([5, 5, 5]))
        table = new_table(R.keys)
        ctx = StepContext.for_build(R, table)
        items = np.arange(3, dtype=np.int64)
        run_step(StepId.B1, items, ctx)
        run_step(StepId.B2, items, ctx)
        run = run_step(StepId.B3, items, ctx)
        # The first item creates the node, the others find it at the head
        assert run.units.tolist() == [1.0, 1.0, 1.0]
        assert run.items == 3

    def test_pair_has_no_item_kernel(self):
        """The coarse pair step is not an item kernel"""
        R, _ = _tiny_join()
        ctx = StepContext.for_build(R, new_table(R.keys))
        with pytest.raises(ValueError, match="no item kernel"):
            run_step(StepId.PAIR, np.arange(2), ctx)

    def test_step_cost_with_device(self, profiles):
        """Passing a profile returns the step's logical cost"""
        cpu, _ = profiles
        R, _ = _tiny_join()
        ctx = StepContext.for_build(R, new_table(R.keys))
        run = run_step(StepId.B1, np.arange(len(R)), ctx, device=cpu)
        assert run.cost == pytest.approx(cpu.step_time(StepId.B1, np.ones(len(R))))
        assert run.cost > 0

    def test_join_result_emit(self):
        """emit writes one pair per build rid"""
        result = JoinResult(Arena(4096))
        alloc = GroupAllocator(result.arena, 64)
        result.emit(alloc, [1, 2, 3], 9)
        result.emit(alloc, [], 10)
        result.emit(alloc, [4], 11)
        assert len(result) == 4
        assert result.pairs().tolist() == [[1, 9], [2, 9], [3, 9], [4, 11]]


class TestSerialJoins:
    """Test SHJ, PHJ and the coarse-step join on one side"""

    def test_shj(self, small_join):
        """SHJ equals the oracle"""
        R, S = small_join
        assert np.array_equal(shj_join(R, S).multiset(), pair_multiset(reference_join(R, S)))

    def test_shj_basic_allocator(self, small_join):
        """The per-item allocator gives the same result"""
        R, S = small_join
        result = shj_join(R, S, block_size=None)
        assert np.array_equal(result.multiset(), pair_multiset(reference_join(R, S)))

    def test_phj(self, small_join):
        """PHJ with two passes equals the oracle"""
        R, S = small_join
        result = phj_join(R, S, pass_bits=3, passes=2)
        assert np.array_equal(result.multiset(), pair_multiset(reference_join(R, S)))

    def test_coarse_step_join(self, small_join):
        """Pair-at-a-time PHJ equals the oracle"""
        R, S = small_join
        result = coarse_step_join(R, S, pass_bits=2, passes=2)
        assert np.array_equal(result.multiset(), pair_multiset(reference_join(R, S)))

    def test_empty_inputs(self):
        """Empty relations join to nothing"""
        R = gen_uniform(100, seed=1)
        assert len(shj_join(Relation.empty(), R)) == 0
        assert len(shj_join(R, Relation.empty())) == 0


class TestRadixPartition:
    """Test multi-pass radix partitioning"""

    def test_two_passes_of_four_bits(self):
        """256 partitions, each holding the keys with its low 8 hash bits"""
        rel = gen_uniform(5000, seed=4)
        parts = radix_partition(rel, pass_bits=4, passes=2)
        assert parts.P == 256
        assert parts.sizes().sum() == 5000
        for j, part in enumerate(parts.parts):
            assert (partition_ids(part.keys, 8) == j).all()

    def test_order_kept_inside_partition(self):
        """Tuples keep their input order within a partition"""
        rel = gen_uniform(2000, seed=5)
        parts = radix_partition(rel, pass_bits=3, passes=2)
        for part in parts.parts:
            assert (np.diff(part.rids.astype(np.int64)) > 0).all()

    def test_permutation(self):
        """Partitioning moves tuples without losing or copying any"""
        rel = gen_skewed(3000, 25, seed=6)
        flat = radix_partition(rel, pass_bits=5, passes=1).concat()
        assert sorted(flat.rids.tolist()) == list(range(3000))
        assert membership_consistent(radix_partition(rel, 5, 1))

    def test_no_partitioning(self):
        """Zero bits or passes leave the relation whole"""
        rel = gen_uniform(10, seed=1)
        assert radix_partition(rel, 0, 2).P == 1
        assert radix_partition(rel, 4, 0).parts[0] == rel

    def test_too_many_bits(self):
        """pass_bits * passes is limited to the hash width"""
        with pytest.raises(ValueError):
            radix_partition(gen_uniform(10, seed=1), 12, 3)

    def test_pass_splits_each_partition(self):
        """A later pass only refines the partitions of the pass before"""
        rel = gen_uniform(4000, seed=9)
        first = partition_pass([rel], 4, shift=4)
        second = partition_pass(first, 4, shift=0)
        assert len(first) == 16
        assert len(second) == 256
        for j, part in enumerate(second):
            parent = set(first[j >> 4].rids.tolist())
            assert set(part.rids.tolist()) <= parent
            assert (partition_ids(part.keys, 8) == j).all()

    def test_pass_skips_empty_partitions(self):
        """Empty parents yield empty sub-partitions"""
        rel = gen_uniform(50, seed=2)
        parts = partition_pass([Relation.empty(), rel], 2, shift=0)
        assert len(parts) == 8
        assert all(len(p) == 0 for p in parts[:4])
        assert sum(len(p) for p in parts[4:]) == 50

    def test_final_layout_in_partition_order(self):
        """Concatenated partitions are sorted by their low hash bits"""
        rel = gen_skewed(3000, 25, seed=6)
        flat = radix_partition(rel, pass_bits=3, passes=3).concat()
        ids = partition_ids(flat.keys, 9)
        assert (np.diff(ids) >= 0).all()


class TestPartitionTables:
    """Test hash tables built over a single radix partition"""

    @pytest.fixture
    def largest_partition(self):
        keys = np.unique(gen_uniform(65536, seed=42).keys)
        ids = partition_ids(keys, 12)
        return keys[ids == np.bincount(ids).argmax()]

    def test_low_bits_collapse_without_shift(self, largest_partition):
        """Keys of one partition share the low hash bits"""
        table = new_table(largest_partition)
        assert np.unique(table.buckets_of(largest_partition)).size == 1

    def test_shift_spreads_keys(self, largest_partition):
        """Skipping the partition bits spreads the keys over the buckets"""
        keys = largest_partition
        table = new_table(keys, hash_shift=12)
        buckets = table.buckets_of(keys)
        assert table.num_buckets >= keys.size
        assert np.unique(buckets).size >= keys.size // 2
        assert np.bincount(buckets).max() <= 6

    def test_pair_join_with_shift(self, small_join, nested_loop):
        """Pair joins over spread tables still find every match"""
        R, S = small_join
        result = coarse_step_join(R, S, pass_bits=3, passes=2)
        got = sorted(map(tuple, result.pairs().tolist()))
        assert got == nested_loop(R, S)

    def test_pair_join_key_list_lengths(self):
        """A partition pair's key lists stay short"""
        R = gen_uniform(8192, seed=3)
        parts = radix_partition(R, pass_bits=3, passes=2)
        part = max(parts.parts, key=len)
        table = new_table(part.keys, block_size=None, hash_shift=6)
        join_into(part, part, table, new_result(part.keys, part.keys, block_size=None), block_size=None)
        assert int(table.key_counts.max()) <= 8
        assert np.count_nonzero(table.key_counts) >= len(np.unique(part.keys)) // 2


class TestWorkloadGrouping:
    """Test divergence reduction by grouping"""

    def test_grouping_removes_divergence(self):
        """Alternating heavy and light items are regrouped into uniform wavefronts"""
        items = np.arange(4)
        measure = np.array([9.0, 1.0, 9.0, 1.0])
        assert wavefront_divergence(measure, 2) == pytest.approx(8.0)

        order = group_by_workload(items, measure, 2)
        assert order.tolist() == [1, 3, 0, 2]
        assert wavefront_divergence(measure[order], 2) == pytest.approx(0.0)

    def test_single_group_is_identity(self):
        """One group keeps the order"""
        items = np.arange(5)
        assert group_by_workload(items, np.array([5.0, 4, 3, 2, 1]), 1).tolist() == [0, 1, 2, 3, 4]

    def test_invalid_arguments(self):
        """Group count and measure length are validated"""
        with pytest.raises(ValueError):
            group_by_workload(np.arange(3), np.ones(3), 0)
        with pytest.raises(ValueError):
            group_by_workload(np.arange(3), np.ones(2), 2)

    def test_grouping_is_permutation(self):
        """Grouped items are a permutation of the input"""
        R = gen_uniform(500, key_range=(0, 400), seed=2)
        S = gen_probe(R, 700, 0.8, seed=3)
        counts = match_counts(R.keys, S.keys).astype(float)
        order = group_by_workload(np.arange(700), counts, 4)
        assert sorted(order.tolist()) == list(range(700))
        assert wavefront_divergence(counts[order], 64) <= wavefront_divergence(counts, 64)
