"""Seeded generation of random convolutional kernel banks.

Kernels are drawn from a counter-based Philox (4x64) generator wrapped in
``numpy.random.Generator``, so the same seed always reproduces the same
bank bit for bit.  The per-kernel draw order is part of the bank format
contract:

1. length, uniform over ``{7, 9, 11}``
2. channel subset (only when the bank targets more than one channel)
3. weights, standard normal, ``length * n_selected_channels`` values,
   mean-centered across the whole kernel when ``center_weights`` is set
4. bias, uniform on ``[-1, 1]``
5. dilation, ``floor(2**x)`` with ``x ~ Uniform(0, A)``
6. padding, centered with probability one half, otherwise zero
"""

import json
from dataclasses import dataclass

import numpy as np

from ._binio import (
    read_array,
    read_header,
    read_values,
    write_array,
    write_header,
    write_values,
)

CANDIDATE_LENGTHS = (7, 9, 11)

_BANK_MAGIC = b"RKBK"
_BANK_VERSION = 1


@dataclass
class GenOptions:
    """Knobs for bank generation.

    ``center_weights`` subtracts the mean from each kernel's weights;
    ``include_mpv`` is recorded so downstream consumers know the bank was
    produced for three-feature output.
    """

    center_weights: bool = True
    include_mpv: bool = False
    seed: int = 0


@dataclass
class KernelBank:
    """Columnar store of generated kernel parameters.

    ``weights`` and ``channel_indices`` are flat arrays; per-kernel slices
    are located through ``weight_offsets`` / ``channel_offsets``.  Weight
    values for kernel ``k`` are laid out channel-major: the ``j``-th tap of
    selected-channel slot ``c`` lives at ``weight_offsets[k] + c * lengths[k] + j``.
    Channel indices are stored sorted ascending per kernel.
    """

    count: int
    l_series: int
    n_channels: int
    lengths: np.ndarray
    weights: np.ndarray
    biases: np.ndarray
    dilations: np.ndarray
    paddings: np.ndarray
    channel_counts: np.ndarray
    channel_indices: np.ndarray
    seed: int
    center_weights: bool = True
    include_mpv: bool = False

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=np.int32)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        self.dilations = np.asarray(self.dilations, dtype=np.int32)
        self.paddings = np.asarray(self.paddings, dtype=np.int32)
        self.channel_counts = np.asarray(self.channel_counts, dtype=np.int32)
        self.channel_indices = np.asarray(self.channel_indices, dtype=np.int32)
        per_kernel = self.lengths.astype(np.int64) * self.channel_counts
        self.weight_offsets = np.concatenate(([0], np.cumsum(per_kernel)))[:-1]
        self.channel_offsets = np.concatenate(
            ([0], np.cumsum(self.channel_counts.astype(np.int64)))
        )[:-1]

    def kernel_weights(self, k: int) -> np.ndarray:
        """Weights of kernel ``k`` as a (n_selected_channels, length) view."""
        start = self.weight_offsets[k]
        nc = int(self.channel_counts[k])
        lk = int(self.lengths[k])
        return self.weights[start : start + nc * lk].reshape(nc, lk)

    def kernel_channels(self, k: int) -> np.ndarray:
        start = self.channel_offsets[k]
        return self.channel_indices[start : start + int(self.channel_counts[k])]

    def validate(self) -> None:
        """Check the structural invariants of the bank; raise ValueError on breakage."""
        if self.count < 1:
            raise ValueError("bank must contain at least one kernel")
        if not np.isin(self.lengths, CANDIDATE_LENGTHS).all():
            raise ValueError("kernel lengths must be in {7, 9, 11}")
        if np.any(self.biases < -1.0) or np.any(self.biases > 1.0):
            raise ValueError("biases must lie in [-1, 1]")
        if np.any(self.dilations < 1):
            raise ValueError("dilations must be >= 1")
        if np.any((self.lengths - 1) * self.dilations.astype(np.int64) > self.l_series - 1):
            raise ValueError("dilation exceeds the series-length bound")
        centered = (self.lengths - 1) * self.dilations // 2
        if not np.all((self.paddings == 0) | (self.paddings == centered)):
            raise ValueError("padding must be 0 or centered")
        if np.any(self.channel_counts < 1) or np.any(self.channel_counts > self.n_channels):
            raise ValueError("channel counts out of range")
        if self.channel_indices.size and (
            self.channel_indices.min() < 0 or self.channel_indices.max() >= self.n_channels
        ):
            raise ValueError("channel indices out of range")
        for k in range(self.count):
            idx = self.kernel_channels(k)
            if np.unique(idx).size != idx.size:
                raise ValueError(f"kernel {k} repeats channel indices")

    def save(self, path) -> None:
        """Write the bank as a versioned little-endian binary file."""
        with open(path, "wb") as f:
            write_header(f, _BANK_MAGIC, _BANK_VERSION)
            flags = (1 if self.center_weights else 0) | (2 if self.include_mpv else 0)
            write_values(
                f, "QQQQB", self.count, self.l_series, self.n_channels, self.seed, flags
            )
            write_array(f, self.lengths)
            # Weights precede channel_counts in field order, so their element
            # count cannot be recovered from earlier fields; store it inline.
            write_values(f, "Q", self.weights.size)
            write_array(f, self.weights)
            for arr in (
                self.biases,
                self.dilations,
                self.paddings,
                self.channel_counts,
                self.channel_indices,
            ):
                write_array(f, arr)

    @classmethod
    def load(cls, path) -> "KernelBank":
        with open(path, "rb") as f:
            read_header(f, _BANK_MAGIC, _BANK_VERSION)
            count, l_series, n_channels, seed, flags = read_values(f, "QQQQB")
            lengths = read_array(f, np.int32, count)
            (n_weights,) = read_values(f, "Q")
            weights = read_array(f, np.float64, n_weights)
            biases = read_array(f, np.float64, count)
            dilations = read_array(f, np.int32, count)
            paddings = read_array(f, np.int32, count)
            channel_counts = read_array(f, np.int32, count)
            n_idx = int(channel_counts.astype(np.int64).sum())
            channel_indices = read_array(f, np.int32, n_idx)
        bank = cls(
            count=int(count),
            l_series=int(l_series),
            n_channels=int(n_channels),
            lengths=lengths,
            weights=weights,
            biases=biases,
            dilations=dilations,
            paddings=paddings,
            channel_counts=channel_counts,
            channel_indices=channel_indices,
            seed=int(seed),
            center_weights=bool(flags & 1),
            include_mpv=bool(flags & 2),
        )
        bank.validate()
        return bank

    def to_json(self) -> dict:
        """Debug-friendly plain-dict rendering of the bank."""
        return {
            "count": self.count,
            "l_series": self.l_series,
            "n_channels": self.n_channels,
            "seed": self.seed,
            "center_weights": self.center_weights,
            "include_mpv": self.include_mpv,
            "lengths": self.lengths.tolist(),
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "dilations": self.dilations.tolist(),
            "paddings": self.paddings.tolist(),
            "channel_counts": self.channel_counts.tolist(),
            "channel_indices": self.channel_indices.tolist(),
        }

    def dump_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)


def dilation_exponent_bound(l_series: int, l_kernel: int) -> float:
    """Largest exponent A such that a kernel dilated by floor(2**A) still fits.

    Returns ``log2((l_series - 1) / (l_kernel - 1))``.  Any dilation
    ``d <= floor(2**A)`` satisfies ``(l_kernel - 1) * d <= l_series - 1``.
    """
    if l_series < l_kernel:
        raise ValueError(
            f"series of length {l_series} cannot host a kernel of length {l_kernel}"
        )
    return float(np.log2((l_series - 1) / (l_kernel - 1)))


def sample_dilation(rng, exponent_bound: float) -> int:
    """Draw ``floor(2**x)`` with ``x ~ Uniform(0, exponent_bound)``."""
    x = rng.uniform(0.0, exponent_bound)
    return int(2.0**x)


def sample_padding(rng, l_kernel: int, dilation: int) -> int:
    """Centered zero padding with probability one half, else no padding."""
    if rng.random() < 0.5:
        return (l_kernel - 1) * dilation // 2
    return 0


def sample_channels(rng, n_channels: int):
    """Pick how many and which channels a kernel reads.

    The count follows ``floor(2**u)`` with ``u ~ Uniform(0, log2(n_channels))``,
    clamped to ``[1, n_channels]``; indices are a uniform sample without
    replacement, returned sorted ascending.
    """
    u = rng.uniform(0.0, float(np.log2(n_channels)))
    count = min(max(int(2.0**u), 1), n_channels)
    indices = np.sort(rng.choice(n_channels, size=count, replace=False)).astype(np.int32)
    return count, indices


def generate_bank(
    l_series: int, n_channels: int, count: int, options: GenOptions | None = None
) -> KernelBank:
    """Generate ``count`` random kernels for series of length ``l_series``.

    Deterministic in ``options.seed``.  Requires ``l_series >= 11`` so that
    every candidate kernel length fits at dilation 1.
    """
    if options is None:
        options = GenOptions()
    if l_series < max(CANDIDATE_LENGTHS):
        raise ValueError(f"l_series must be >= {max(CANDIDATE_LENGTHS)}, got {l_series}")
    if count < 1:
        raise ValueError("count must be >= 1")
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")

    rng = np.random.Generator(np.random.Philox(key=np.uint64(options.seed)))

    lengths = np.empty(count, dtype=np.int32)
    biases = np.empty(count, dtype=np.float64)
    dilations = np.empty(count, dtype=np.int32)
    paddings = np.empty(count, dtype=np.int32)
    channel_counts = np.empty(count, dtype=np.int32)
    weight_chunks = []
    index_chunks = []

    for k in range(count):
        length = CANDIDATE_LENGTHS[rng.integers(0, len(CANDIDATE_LENGTHS))]
        if n_channels > 1:
            n_sel, indices = sample_channels(rng, n_channels)
        else:
            n_sel, indices = 1, np.zeros(1, dtype=np.int32)
        w = rng.standard_normal(n_sel * length)
        if options.center_weights:
            w = w - w.mean()
        bias = rng.uniform(-1.0, 1.0)
        bound = dilation_exponent_bound(l_series, length)
        d = sample_dilation(rng, bound)
        p = sample_padding(rng, length, d)

        lengths[k] = length
        biases[k] = bias
        dilations[k] = d
        paddings[k] = p
        channel_counts[k] = n_sel
        weight_chunks.append(w)
        index_chunks.append(indices)

    bank = KernelBank(
        count=count,
        l_series=l_series,
        n_channels=n_channels,
        lengths=lengths,
        weights=np.concatenate(weight_chunks),
        biases=biases,
        dilations=dilations,
        paddings=paddings,
        channel_counts=channel_counts,
        channel_indices=np.concatenate(index_chunks),
        seed=options.seed,
        center_weights=options.center_weights,
        include_mpv=options.include_mpv,
    )
    bank.validate()
    return bank
