"""Data-parallel transform engine.

The engine mirrors a GPU-style grid decomposition: every (kernel,
instance) pair is one independent cell, kernels map to the grid x
dimension and instances to the y dimension.  Instances are processed in
batches bounded by the y-dimension limit and by a memory budget, cells
are processed by a parallel worker pool, and within a cell the
dot-product positions are assigned to up to ``workers_per_cell`` strided
workers (worker ``w`` handles positions ``w, w + W, w + 2W, ...``).  Cell
results are reduced through order-independent monoids (positive count and
running max), so features are bit-identical for every schedule: any
worker count, batch size, or shard split.

Multi-device execution is modeled by sharding instances into near-equal
contiguous ranges; each shard runs in isolation and the merge is an
ordered concatenation of rows.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .features import FeatureMatrix, precision_dtype
from .kernels import KernelBank

SINGLE_BYTES = 4


class CapacityError(RuntimeError):
    """A work item cannot be scheduled within the configured limits."""


@dataclass
class GridLimits:
    """Grid-shape and memory constraints of the execution model."""

    max_x: int = 2**31 - 1
    max_y: int = 65535
    workers_per_cell: int = 1024
    memory_budget_bytes: int = 1 << 30

    def __post_init__(self):
        for name in ("max_x", "max_y", "workers_per_cell", "memory_budget_bytes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class EnginePlan:
    """Batch and shard schedule for one transform invocation."""

    batches: list
    shards: list
    bytes_per_instance: int


@dataclass
class CellAccumulator:
    """Reduction state of one (kernel, instance) cell.

    Both updates are commutative monoids (integer add, max), so
    accumulation order never matters.
    """

    ppv_count: int = 0
    running_max: float = float("-inf")

    def update(self, is_positive: bool, dot_value: float) -> None:
        if is_positive:
            self.ppv_count += 1
        if dot_value > self.running_max:
            self.running_max = dot_value

    def merge(self, other: "CellAccumulator") -> "CellAccumulator":
        return CellAccumulator(
            ppv_count=self.ppv_count + other.ppv_count,
            running_max=max(self.running_max, other.running_max),
        )


@dataclass
class TransformStats:
    """Execution accounting for one transform call."""

    total_dot_products: int = 0
    n_batches: int = 0
    n_shards: int = 1


def reduce_cell(updates) -> CellAccumulator:
    """Fold (is_positive, dot_value) updates into a CellAccumulator."""
    acc = CellAccumulator()
    for is_positive, dot_value in updates:
        acc.update(is_positive, dot_value)
    return acc


def bytes_per_instance(n_channels: int, l_series: int) -> int:
    """Planning size of one instance: single-precision values per channel."""
    return int(n_channels) * int(l_series) * SINGLE_BYTES


def plan_batches(n_instances: int, bytes_per_instance: int, limits: GridLimits) -> EnginePlan:
    """Partition instances into ordered batches under grid and memory limits."""
    if n_instances < 0:
        raise ValueError("n_instances must be non-negative")
    if bytes_per_instance < 1:
        raise ValueError("bytes_per_instance must be positive")
    fits = limits.memory_budget_bytes // bytes_per_instance
    if fits < 1:
        raise CapacityError(
            f"one instance needs {bytes_per_instance} bytes but the budget is "
            f"{limits.memory_budget_bytes}"
        )
    size = min(limits.max_y, int(fits))
    batches = [(start, min(size, n_instances - start)) for start in range(0, n_instances, size)]
    return EnginePlan(
        batches=batches, shards=[(0, n_instances)], bytes_per_instance=bytes_per_instance
    )


def plan_shards(n_instances: int, n_devices: int) -> list:
    """Split instances into n_devices contiguous near-equal ranges."""
    if n_devices < 1:
        raise ValueError("n_devices must be positive")
    base, extra = divmod(n_instances, n_devices)
    shards = []
    start = 0
    for d in range(n_devices):
        size = base + (1 if d < extra else 0)
        shards.append((start, size))
        start += size
    return shards


def total_positions(bank: KernelBank) -> int:
    """Sum of dot-product positions over the bank for one instance."""
    span = (bank.lengths.astype(np.int64) - 1) * bank.dilations
    l_out = bank.l_series + 2 * bank.paddings.astype(np.int64) - span
    return int(l_out.sum())


def expected_dot_products(bank: KernelBank, n_instances: int) -> int:
    return total_positions(bank) * int(n_instances)


@njit(cache=True, parallel=True)
def _run_batch(
    x, lengths, dilations, paddings, biases, wflat, woff, chidx, choff, chcnt, workers, fpk, out, row0
):
    n_inst = x.shape[0]
    l_series = x.shape[2]
    n_kernels = lengths.shape[0]
    zero = wflat[0] - wflat[0]
    executed = 0
    for cell in prange(n_inst * n_kernels):
        i = cell // n_kernels
        k = cell - i * n_kernels
        l_kernel = lengths[k]
        d = dilations[k]
        p = paddings[k]
        l_out = l_series + 2 * p - (l_kernel - 1) * d
        nc = chcnt[k]
        wbase = woff[k]
        cbase = choff[k]
        count = 0
        running_max = -np.inf
        done = 0
        for w in range(workers):
            for t in range(w, l_out, workers):
                acc = zero
                for c in range(nc):
                    ch = chidx[cbase + c]
                    row = wbase + c * l_kernel
                    for j in range(l_kernel):
                        idx = t - p + j * d
                        if 0 <= idx < l_series:
                            acc += wflat[row + j] * x[i, ch, idx]
                acc += biases[k]
                if acc > 0:
                    count += 1
                if acc > running_max:
                    running_max = acc
                done += 1
        col = k * fpk
        out[row0 + i, col] = count / l_out
        out[row0 + i, col + 1] = running_max
        executed += done
    return executed


@njit(cache=True, parallel=True)
def _run_batch_mpv(
    x, lengths, dilations, paddings, biases, wflat, woff, chidx, choff, chcnt, workers, fpk, out, row0
):
    n_inst = x.shape[0]
    l_series = x.shape[2]
    n_kernels = lengths.shape[0]
    zero = wflat[0] - wflat[0]
    executed = 0
    for cell in prange(n_inst * n_kernels):
        i = cell // n_kernels
        k = cell - i * n_kernels
        l_kernel = lengths[k]
        d = dilations[k]
        p = paddings[k]
        l_out = l_series + 2 * p - (l_kernel - 1) * d
        nc = chcnt[k]
        wbase = woff[k]
        cbase = choff[k]
        # Dot values are kept so the positive sum can be folded in ascending
        # position order at finalization; float addition is not commutative
        # at the bit level, so the sum order must not depend on the schedule.
        vals = np.empty(l_out, wflat.dtype)
        count = 0
        running_max = -np.inf
        done = 0
        for w in range(workers):
            for t in range(w, l_out, workers):
                acc = zero
                for c in range(nc):
                    ch = chidx[cbase + c]
                    row = wbase + c * l_kernel
                    for j in range(l_kernel):
                        idx = t - p + j * d
                        if 0 <= idx < l_series:
                            acc += wflat[row + j] * x[i, ch, idx]
                acc += biases[k]
                if acc > 0:
                    count += 1
                if acc > running_max:
                    running_max = acc
                vals[t] = acc
                done += 1
        col = k * fpk
        out[row0 + i, col] = count / l_out
        out[row0 + i, col + 1] = running_max
        if count > 0:
            psum = zero
            for t in range(l_out):
                v = vals[t]
                if v > 0:
                    psum += v
            out[row0 + i, col + 2] = np.float64(psum) / np.float64(count)
        else:
            out[row0 + i, col + 2] = 0.0
        executed += done
    return executed


def _check_shapes(values: np.ndarray, bank: KernelBank, limits: GridLimits) -> None:
    if values.ndim != 3:
        raise ValueError("expected values of shape (n_instances, n_channels, l_series)")
    if values.shape[1] != bank.n_channels:
        raise ValueError(
            f"dataset has {values.shape[1]} channels, bank was generated for {bank.n_channels}"
        )
    if values.shape[2] != bank.l_series:
        raise ValueError(
            f"series length {values.shape[2]} does not match bank l_series {bank.l_series}"
        )
    if bank.count > limits.max_x:
        raise CapacityError(
            f"{bank.count} kernels exceed the grid x-dimension limit {limits.max_x}"
        )
    if not np.isfinite(values).all():
        raise ValueError("dataset contains non-finite values")


def _run_range(x, bank, limits, include_mpv, out, row0, stats):
    """Run the batched grid over one contiguous instance range."""
    plan = plan_batches(x.shape[0], bytes_per_instance(x.shape[1], x.shape[2]), limits)
    dtype = x.dtype
    biases = bank.biases.astype(dtype)
    wflat = bank.weights.astype(dtype)
    kernel = _run_batch_mpv if include_mpv else _run_batch
    fpk = 3 if include_mpv else 2
    for start, count in plan.batches:
        stats.total_dot_products += kernel(
            x[start : start + count],
            bank.lengths,
            bank.dilations,
            bank.paddings,
            biases,
            wflat,
            bank.weight_offsets,
            bank.channel_indices,
            bank.channel_offsets,
            bank.channel_counts,
            limits.workers_per_cell,
            fpk,
            out,
            row0 + start,
        )
        stats.n_batches += 1


def transform_with_stats(
    data,
    bank: KernelBank,
    limits: GridLimits | None = None,
    include_mpv: bool = False,
    precision: str = "single",
):
    """Like :func:`transform` but also returns execution accounting."""
    if limits is None:
        limits = GridLimits()
    values = np.asarray(getattr(data, "values", data))
    _check_shapes(values, bank, limits)
    dtype = precision_dtype(precision)
    fpk = 3 if include_mpv else 2
    x = np.ascontiguousarray(values, dtype=dtype)
    out = np.empty((values.shape[0], bank.count * fpk), dtype=dtype)
    stats = TransformStats()
    if values.shape[0]:
        _run_range(x, bank, limits, include_mpv, out, 0, stats)
    matrix = FeatureMatrix(
        values=out, n_kernels=bank.count, features_per_kernel=fpk, precision=precision
    )
    return matrix, stats


def transform(
    data,
    bank: KernelBank,
    limits: GridLimits | None = None,
    include_mpv: bool = False,
    precision: str = "single",
) -> FeatureMatrix:
    """Transform all instances with all kernels on the parallel grid."""
    matrix, _ = transform_with_stats(data, bank, limits, include_mpv, precision)
    return matrix


def transform_sharded(
    data,
    bank: KernelBank,
    n_devices: int,
    limits: GridLimits | None = None,
    include_mpv: bool = False,
    precision: str = "single",
) -> FeatureMatrix:
    """Split instances across devices, transform each shard, merge in order.

    Each shard models one device's private process: shards share no
    mutable state and their row blocks are concatenated in the original
    instance order, so the result is identical to a single-device run.
    """
    if limits is None:
        limits = GridLimits()
    values = np.asarray(getattr(data, "values", data))
    _check_shapes(values, bank, limits)
    dtype = precision_dtype(precision)
    fpk = 3 if include_mpv else 2
    x = np.ascontiguousarray(values, dtype=dtype)
    out = np.empty((values.shape[0], bank.count * fpk), dtype=dtype)
    stats = TransformStats(n_shards=n_devices)
    for start, count in plan_shards(values.shape[0], n_devices):
        if count:
            _run_range(x[start : start + count], bank, limits, include_mpv, out, start, stats)
    return FeatureMatrix(
        values=out, n_kernels=bank.count, features_per_kernel=fpk, precision=precision
    )
