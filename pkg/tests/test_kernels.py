import numpy as np
import pytest
from scipy.stats import chisquare

from gridrocket import (
    GenOptions,
    KernelBank,
    dilation_exponent_bound,
    generate_bank,
    sample_channels,
    sample_dilation,
    sample_padding,
)


class StubRng:
    """Fixed-draw stand-in for a numpy Generator."""

    def __init__(self, uniform=0.0, random_value=0.0):
        self.uniform_value = uniform
        self.random_value = random_value

    def uniform(self, low, high):
        return self.uniform_value

    def random(self):
        return self.random_value

    def choice(self, n, size, replace):
        assert not replace
        return np.arange(size)


class TestDilationExponentBound:
    def test_equal_lengths_give_zero(self):
        assert dilation_exponent_bound(7, 7) == 0.0

    def test_formula_values(self):
        assert dilation_exponent_bound(100, 7) == pytest.approx(4.044394119358453, abs=1e-12)
        assert dilation_exponent_bound(1000, 11) == pytest.approx(6.642412772905056, abs=1e-12)

    def test_kernel_too_long_rejected(self):
        with pytest.raises(ValueError):
            dilation_exponent_bound(6, 7)

    def test_floor_bound_guarantee(self):
        for l_series in range(11, 400, 7):
            for l_kernel in (7, 9, 11):
                bound = dilation_exponent_bound(l_series, l_kernel)
                d_max = int(2.0**bound)
                assert (l_kernel - 1) * d_max <= l_series - 1


class TestSampleDilation:
    def test_zero_exponent(self):
        assert sample_dilation(StubRng(uniform=0.0), 4.0) == 1

    def test_at_bound(self):
        d = sample_dilation(StubRng(uniform=4.044394119358453), 4.044394119358453)
        assert d == 16
        assert (7 - 1) * d <= 99

    def test_fractional_exponent(self):
        assert sample_dilation(StubRng(uniform=3.2), 4.0) == 9


class TestSamplePadding:
    def test_padded_branch(self):
        assert sample_padding(StubRng(random_value=0.0), 9, 3) == 12
        assert sample_padding(StubRng(random_value=0.0), 11, 4) == 20

    def test_unpadded_branch(self):
        assert sample_padding(StubRng(random_value=0.9), 7, 1) == 0


class TestSampleChannels:
    def test_single_channel(self):
        count, indices = sample_channels(
            np.random.Generator(np.random.Philox(key=np.uint64(0))), 1
        )
        assert count == 1
        assert indices.tolist() == [0]

    def test_full_subset_at_bound(self):
        count, indices = sample_channels(StubRng(uniform=3.0), 8)
        assert count == 8
        assert sorted(indices.tolist()) == list(range(8))

    def test_fractional_count(self):
        count, indices = sample_channels(StubRng(uniform=1.7), 5)
        assert count == 3
        assert len(set(indices.tolist())) == 3
        assert all(0 <= i < 5 for i in indices)

    def test_indices_sorted_and_distinct(self):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(3)))
        for _ in range(200):
            count, indices = sample_channels(rng, 6)
            assert 1 <= count <= 6
            assert list(indices) == sorted(set(indices.tolist()))


class TestGenerateBank:
    def test_field_domains(self):
        bank = generate_bank(100, 1, 1000, GenOptions(seed=42))
        assert set(np.unique(bank.lengths)) <= {7, 9, 11}
        assert bank.biases.min() >= -1.0 and bank.biases.max() <= 1.0
        assert bank.dilations.min() >= 1
        assert np.all((bank.lengths - 1) * bank.dilations <= 99)

    def test_same_seed_bit_identical(self):
        a = generate_bank(128, 3, 200, GenOptions(seed=9))
        b = generate_bank(128, 3, 200, GenOptions(seed=9))
        for field in ("lengths", "weights", "biases", "dilations", "paddings",
                      "channel_counts", "channel_indices"):
            assert getattr(a, field).tobytes() == getattr(b, field).tobytes()

    def test_seed_changes_bank(self):
        a = generate_bank(128, 1, 50, GenOptions(seed=1))
        b = generate_bank(128, 1, 50, GenOptions(seed=2))
        assert a.weights.tobytes() != b.weights.tobytes()

    def test_centering(self):
        bank = generate_bank(64, 2, 300, GenOptions(seed=4, center_weights=True))
        for k in range(bank.count):
            assert abs(bank.kernel_weights(k).mean()) < 1e-6

    def test_centering_disabled(self):
        bank = generate_bank(64, 1, 300, GenOptions(seed=4, center_weights=False))
        means = [abs(bank.kernel_weights(k).mean()) for k in range(bank.count)]
        assert max(means) > 1e-3

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            generate_bank(10, 1, 5)
        with pytest.raises(ValueError):
            generate_bank(100, 1, 0)

    def test_multivariate_channels_valid(self):
        bank = generate_bank(64, 5, 400, GenOptions(seed=12))
        assert bank.channel_counts.min() >= 1
        assert bank.channel_counts.max() <= 5
        for k in range(bank.count):
            idx = bank.kernel_channels(k).tolist()
            assert idx == sorted(set(idx))
            assert all(0 <= i < 5 for i in idx)


class TestDistributions:
    def test_length_uniformity_chi_square(self):
        bank = generate_bank(1000, 1, 3000, GenOptions(seed=77))
        counts = [int(np.sum(bank.lengths == l)) for l in (7, 9, 11)]
        assert chisquare(counts).pvalue > 0.001

    def test_bias_mean_near_zero(self):
        bank = generate_bank(1000, 1, 10000, GenOptions(seed=78))
        assert -0.05 <= bank.biases.mean() <= 0.05

    def test_unpadded_kernels_have_a_position(self):
        bank = generate_bank(300, 1, 3000, GenOptions(seed=79))
        l_out = 300 - (bank.lengths.astype(np.int64) - 1) * bank.dilations
        assert np.all(l_out >= 1)


class TestBankIO:
    def test_roundtrip(self, tmp_path):
        bank = generate_bank(128, 3, 60, GenOptions(seed=5, center_weights=False))
        path = tmp_path / "bank.bin"
        bank.save(path)
        loaded = KernelBank.load(path)
        assert loaded.count == bank.count
        assert loaded.l_series == bank.l_series
        assert loaded.n_channels == bank.n_channels
        assert loaded.seed == bank.seed
        assert loaded.center_weights is False
        for field in ("lengths", "weights", "biases", "dilations", "paddings",
                      "channel_counts", "channel_indices"):
            assert getattr(loaded, field).tobytes() == getattr(bank, field).tobytes()

    def test_json_dump(self, tmp_path):
        import json

        bank = generate_bank(32, 1, 3, GenOptions(seed=6))
        path = tmp_path / "bank.json"
        bank.dump_json(path)
        payload = json.loads(path.read_text())
        assert payload["count"] == 3
        assert len(payload["biases"]) == 3

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError):
            KernelBank.load(path)
