"""Serial reference implementation of the dilated convolution and pooling.

This module is the correctness oracle for the parallel engine.  Its
arithmetic contract is shared with the engine so results can be compared
bit for bit at equal precision:

* taps accumulate left to right over selected channels ascending, tap
  index ascending within each channel, all in the compute dtype;
* the bias is added after the last tap;
* out-of-range taps are skipped (virtual zero padding);
* ppv is the exact positive count divided in float64 by the number of
  dot-product positions, then stored in the compute dtype;
* max is a pure selection over dot-product values;
* the mean-of-positives sum accumulates in the compute dtype in ascending
  position order and is divided in float64 at finalization (0 when no
  output is positive).
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .features import FeatureMatrix, precision_dtype
from .kernels import KernelBank


@dataclass
class FeatureTriple:
    """Pooled features of one (series, kernel) pair."""

    ppv: float
    max: float
    mpv: float = 0.0


def output_length(l_series: int, l_kernel: int, dilation: int, padding: int) -> int:
    """Number of dot-product positions for one kernel over one series."""
    span = (l_kernel - 1) * dilation
    l_out = l_series + 2 * padding - span
    if l_out < 1:
        raise ValueError(
            f"kernel span {span} exceeds padded series length {l_series + 2 * padding}"
        )
    return l_out


def _normalize_kernel(series, weights, channel_indices):
    series = np.asarray(series)
    if series.ndim == 1:
        series = series[np.newaxis, :]
    if series.ndim != 2:
        raise ValueError("series must be 1-D or (n_channels, l_series)")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim == 1:
        weights = weights[np.newaxis, :]
    if channel_indices is None:
        if weights.shape[0] != 1:
            raise ValueError("multi-channel weights need explicit channel indices")
        channel_indices = np.zeros(1, dtype=np.int32)
    channel_indices = np.asarray(channel_indices, dtype=np.int32)
    if channel_indices.shape[0] != weights.shape[0]:
        raise ValueError("one weight row per selected channel is required")
    if channel_indices.size and (
        channel_indices.min() < 0 or channel_indices.max() >= series.shape[0]
    ):
        raise ValueError("channel index out of range")
    return series, weights, channel_indices


def dot_at(
    series,
    weights,
    bias: float,
    dilation: int,
    padding: int,
    position: int,
    channel_indices=None,
) -> float:
    """One dot product of the kernel against the (virtually padded) series.

    Reads tap ``j`` of selected channel ``c`` at series index
    ``position - padding + j * dilation``; indices outside the series
    contribute nothing.
    """
    series, weights, channel_indices = _normalize_kernel(series, weights, channel_indices)
    l_series = series.shape[1]
    l_out = output_length(l_series, weights.shape[1], dilation, padding)
    if not 0 <= position < l_out:
        raise ValueError(f"position {position} outside [0, {l_out})")
    acc = 0.0
    for c in range(weights.shape[0]):
        ch = channel_indices[c]
        for j in range(weights.shape[1]):
            idx = position - padding + j * dilation
            if 0 <= idx < l_series:
                acc += float(weights[c, j]) * float(series[ch, idx])
    return acc + float(bias)


@njit(cache=True)
def _fill_values(x, w, chidx, l_kernel, bias, dilation, padding, out):
    # x: (n_channels, l_series); w: flat channel-major taps; out: (l_out,).
    l_series = x.shape[1]
    nc = chidx.shape[0]
    zero = w[0] - w[0]
    for t in range(out.shape[0]):
        acc = zero
        for c in range(nc):
            ch = chidx[c]
            row = c * l_kernel
            for j in range(l_kernel):
                idx = t - padding + j * dilation
                if 0 <= idx < l_series:
                    acc += w[row + j] * x[ch, idx]
        acc += bias
        out[t] = acc


def convolve(
    series,
    weights,
    bias: float,
    dilation: int,
    padding: int,
    channel_indices=None,
    dtype=np.float64,
) -> np.ndarray:
    """Full vector of dot-product values in the requested dtype."""
    series, weights, channel_indices = _normalize_kernel(series, weights, channel_indices)
    dtype = np.dtype(dtype)
    l_out = output_length(series.shape[1], weights.shape[1], dilation, padding)
    x = np.ascontiguousarray(series, dtype=dtype)
    w = np.ascontiguousarray(weights.ravel(), dtype=dtype)
    out = np.empty(l_out, dtype=dtype)
    _fill_values(
        x, w, channel_indices, weights.shape[1], dtype.type(bias), dilation, padding, out
    )
    return out


def apply_kernel(
    series,
    weights,
    bias: float,
    dilation: int,
    padding: int,
    channel_indices=None,
    include_mpv: bool = False,
    dtype=np.float64,
) -> FeatureTriple:
    """Pool one kernel's convolution into (ppv, max(, mpv))."""
    series = np.asarray(series)
    if not np.isfinite(series).all():
        raise ValueError("series contains non-finite values")
    vals = convolve(series, weights, bias, dilation, padding, channel_indices, dtype)
    l_out = vals.shape[0]
    positive = vals > 0
    count = int(np.count_nonzero(positive))
    ppv = float(vals.dtype.type(np.float64(count) / np.float64(l_out)))
    vmax = float(vals.max())
    mpv = 0.0
    if include_mpv and count:
        psum = vals.dtype.type(0.0)
        for v in vals[positive]:
            psum = vals.dtype.type(psum + v)
        mpv = float(vals.dtype.type(np.float64(psum) / np.float64(count)))
    return FeatureTriple(ppv=ppv, max=vmax, mpv=mpv)


@njit(cache=True)
def _transform_serial(
    x, lengths, dilations, paddings, biases, wflat, woff, chidx, choff, chcnt, fpk, include_mpv, out
):
    n_series = x.shape[0]
    l_series = x.shape[2]
    n_kernels = lengths.shape[0]
    zero = wflat[0] - wflat[0]
    for i in range(n_series):
        for k in range(n_kernels):
            l_kernel = lengths[k]
            d = dilations[k]
            p = paddings[k]
            l_out = l_series + 2 * p - (l_kernel - 1) * d
            nc = chcnt[k]
            wbase = woff[k]
            cbase = choff[k]
            vals = np.empty(l_out, wflat.dtype)
            for t in range(l_out):
                acc = zero
                for c in range(nc):
                    ch = chidx[cbase + c]
                    row = wbase + c * l_kernel
                    for j in range(l_kernel):
                        idx = t - p + j * d
                        if 0 <= idx < l_series:
                            acc += wflat[row + j] * x[i, ch, idx]
                acc += biases[k]
                vals[t] = acc
            count = 0
            running_max = -np.inf
            for t in range(l_out):
                v = vals[t]
                if v > 0:
                    count += 1
                if v > running_max:
                    running_max = v
            col = k * fpk
            out[i, col] = count / l_out
            out[i, col + 1] = running_max
            if include_mpv:
                psum = zero
                for t in range(l_out):
                    v = vals[t]
                    if v > 0:
                        psum += v
                if count > 0:
                    out[i, col + 2] = np.float64(psum) / np.float64(count)
                else:
                    out[i, col + 2] = 0.0


def transform_reference(
    data, bank: KernelBank, include_mpv: bool = False, precision: str = "double"
) -> FeatureMatrix:
    """Transform every series with every kernel, serially.

    ``data`` is a Dataset or a (n_instances, n_channels, l_series) array.
    """
    values = np.asarray(getattr(data, "values", data))
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
    if not np.isfinite(values).all():
        raise ValueError("dataset contains non-finite values")
    dtype = precision_dtype(precision)
    fpk = 3 if include_mpv else 2
    x = np.ascontiguousarray(values, dtype=dtype)
    out = np.empty((values.shape[0], bank.count * fpk), dtype=dtype)
    if values.shape[0]:
        _transform_serial(
            x,
            bank.lengths,
            bank.dilations,
            bank.paddings,
            bank.biases.astype(dtype),
            bank.weights.astype(dtype),
            bank.weight_offsets,
            bank.channel_indices,
            bank.channel_offsets,
            bank.channel_counts,
            fpk,
            include_mpv,
            out,
        )
    return FeatureMatrix(
        values=out, n_kernels=bank.count, features_per_kernel=fpk, precision=precision
    )
