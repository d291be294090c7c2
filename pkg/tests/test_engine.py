import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridrocket import (
    CapacityError,
    GenOptions,
    GridLimits,
    generate_bank,
    plan_batches,
    plan_shards,
    reduce_cell,
    transform,
    transform_reference,
    transform_sharded,
    transform_with_stats,
)
from gridrocket.engine import bytes_per_instance, expected_dot_products

from conftest import random_config
from oracle import naive_transform


class TestPlanBatches:
    def test_grid_y_limit_looping(self):
        plan = plan_batches(70000, 100, GridLimits(memory_budget_bytes=1 << 40))
        assert [count for _, count in plan.batches] == [65535, 4465]
        assert plan.batches[0] == (0, 65535)
        assert plan.batches[1] == (65535, 4465)

    def test_single_batch_under_limits(self):
        plan = plan_batches(10, 100, GridLimits(memory_budget_bytes=1 << 40))
        assert plan.batches == [(0, 10)]

    def test_memory_bound_batches(self):
        plan = plan_batches(100, 10, GridLimits(memory_budget_bytes=79))
        assert [count for _, count in plan.batches] == [7] * 14 + [2]

    def test_instance_too_large(self):
        with pytest.raises(CapacityError):
            plan_batches(5, 1000, GridLimits(memory_budget_bytes=999))

    @given(
        n=st.integers(min_value=0, max_value=5000),
        bpi=st.integers(min_value=1, max_value=64),
        max_y=st.integers(min_value=1, max_value=512),
        budget_units=st.integers(min_value=1, max_value=2048),
    )
    @settings(max_examples=100, deadline=None)
    def test_batches_partition_instances(self, n, bpi, max_y, budget_units):
        limits = GridLimits(max_y=max_y, memory_budget_bytes=bpi * budget_units)
        plan = plan_batches(n, bpi, limits)
        cursor = 0
        cap = min(max_y, budget_units)
        for start, count in plan.batches:
            assert start == cursor
            assert 1 <= count <= cap
            cursor += count
        assert cursor == n


class TestPlanShards:
    def test_near_equal_split(self):
        assert [c for _, c in plan_shards(10, 3)] == [4, 3, 3]

    def test_more_devices_than_instances(self):
        sizes = [c for _, c in plan_shards(2, 3)]
        assert sizes == [1, 1, 0]

    @given(
        n=st.integers(min_value=0, max_value=10000), k=st.integers(min_value=1, max_value=64)
    )
    @settings(max_examples=100, deadline=None)
    def test_partition_and_balance(self, n, k):
        shards = plan_shards(n, k)
        assert len(shards) == k
        sizes = [c for _, c in shards]
        assert sum(sizes) == n
        assert max(sizes) - min(sizes) <= 1
        cursor = 0
        for start, count in shards:
            assert start == cursor
            cursor += count


class TestReduceCell:
    def test_empty_is_identity(self):
        acc = reduce_cell([])
        assert acc.ppv_count == 0
        assert acc.running_max == float("-inf")

    def test_counts_and_max(self):
        acc = reduce_cell([(True, 1.0), (False, -1.0), (True, 2.0)])
        assert acc.ppv_count == 2
        assert acc.running_max == 2.0

    @given(
        st.lists(
            st.tuples(st.booleans(), st.floats(allow_nan=False, allow_infinity=False)),
            max_size=30,
        ),
        st.randoms(),
    )
    @settings(max_examples=100, deadline=None)
    def test_order_independent(self, updates, rnd):
        shuffled = list(updates)
        rnd.shuffle(shuffled)
        a = reduce_cell(updates)
        b = reduce_cell(shuffled)
        assert a.ppv_count == b.ppv_count
        assert a.running_max == b.running_max

    def test_merge_equals_concat(self):
        left = reduce_cell([(True, 0.5), (False, -2.0)])
        right = reduce_cell([(True, 3.5)])
        merged = left.merge(right)
        both = reduce_cell([(True, 0.5), (False, -2.0), (True, 3.5)])
        assert merged.ppv_count == both.ppv_count
        assert merged.running_max == both.running_max


class TestTransformEquivalence:
    def test_serial_worker_matches_reference_single(self, small_bank, small_values):
        eng = transform(small_values, small_bank, limits=GridLimits(workers_per_cell=1))
        ref = transform_reference(small_values, small_bank, precision="single")
        assert eng.values.tobytes() == ref.values.tobytes()

    def test_worker_counts_all_bit_equal(self):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(40)))
        values = rng.standard_normal((20, 1, 128))
        bank = generate_bank(128, 1, 50, GenOptions(seed=41))
        ref = transform_reference(values, bank, precision="single")
        for workers in (2, 16, 1024):
            eng = transform(values, bank, limits=GridLimits(workers_per_cell=workers))
            assert eng.values.tobytes() == ref.values.tobytes()

    def test_batching_is_pure_partition(self, small_bank, small_values):
        whole = transform(small_values, small_bank, precision="double")
        batched = transform(
            small_values, small_bank, limits=GridLimits(max_y=7), precision="double"
        )
        assert whole.values.tobytes() == batched.values.tobytes()

    def test_double_matches_naive_oracle(self):
        values, bank = random_config(100)
        eng = transform(values, bank, precision="double")
        assert eng.values.tobytes() == naive_transform(values, bank).tobytes()

    def test_mpv_schedule_invariance(self):
        values, bank = random_config(200)
        ref = transform_reference(values, bank, include_mpv=True, precision="single")
        for limits in (
            GridLimits(workers_per_cell=1),
            GridLimits(workers_per_cell=16, max_y=3),
            GridLimits(workers_per_cell=1024),
        ):
            eng = transform(values, bank, limits=limits, include_mpv=True)
            assert eng.values.tobytes() == ref.values.tobytes()

    def test_mpv_double_matches_oracle(self):
        values, bank = random_config(201)
        eng = transform(values, bank, include_mpv=True, precision="double")
        assert eng.values.tobytes() == naive_transform(values, bank, include_mpv=True).tobytes()


class TestSharding:
    def test_one_device_identity(self, small_bank, small_values):
        assert (
            transform_sharded(small_values, small_bank, 1).values.tobytes()
            == transform(small_values, small_bank).values.tobytes()
        )

    def test_four_devices_bit_identical(self):
        values, bank = random_config(300)
        single = transform(values, bank)
        sharded = transform_sharded(values, bank, 4)
        assert single.values.tobytes() == sharded.values.tobytes()

    def test_zero_instances(self, small_bank):
        out = transform_sharded(np.zeros((0, 1, 64)), small_bank, 3)
        assert out.values.shape == (0, 40)


class TestValidationAndStats:
    def test_shape_mismatches(self, small_bank):
        with pytest.raises(ValueError):
            transform(np.zeros((2, 2, 64)), small_bank)
        with pytest.raises(ValueError):
            transform(np.zeros((2, 1, 32)), small_bank)

    def test_non_finite_rejected(self, small_bank):
        bad = np.zeros((2, 1, 64))
        bad[1, 0, 5] = np.inf
        with pytest.raises(ValueError):
            transform(bad, small_bank)

    def test_kernel_count_capacity(self, small_bank, small_values):
        with pytest.raises(CapacityError):
            transform(small_values, small_bank, limits=GridLimits(max_x=3))

    def test_work_conservation(self, small_bank, small_values):
        _, stats = transform_with_stats(small_values, small_bank)
        assert stats.total_dot_products == expected_dot_products(small_bank, 6)
        _, batched_stats = transform_with_stats(
            small_values, small_bank, limits=GridLimits(max_y=2, workers_per_cell=7)
        )
        assert batched_stats.total_dot_products == stats.total_dot_products
        assert batched_stats.n_batches == 3

    def test_bytes_per_instance_formula(self):
        assert bytes_per_instance(3, 1000) == 12000


class TestPrecisionDivergence:
    def test_max_close_across_precisions(self):
        values, bank = random_config(500)
        single = transform(values, bank, precision="single")
        double = transform(values, bank, precision="double")
        m32 = single.feature("max").astype(np.float64)
        m64 = double.feature("max")
        assert np.allclose(m32, m64, rtol=1e-4, atol=1e-7)
