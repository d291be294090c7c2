import json

import pytest

from gridrocket import GridLimits
from gridrocket.bench import (
    BenchRow,
    attach_comparison,
    doubling_ratios,
    per_watt_gain,
    read_csv,
    read_json,
    run_grid,
    write_csv,
    write_json,
)


class TestPerWattArithmetic:
    def test_reported_efficiency_case(self):
        assert per_watt_gain(19.3, 350.0, 200.0) == pytest.approx(11.0, abs=0.1)

    def test_equal_power_is_identity(self):
        assert per_watt_gain(4.0, 250.0, 250.0) == 4.0

    def test_rejects_bad_watts(self):
        with pytest.raises(ValueError):
            per_watt_gain(2.0, 0.0, 100.0)


class TestRunGrid:
    def test_single_point_grid(self):
        rows = run_grid(
            standard={"n_instances": 4, "l_series": 64, "n_kernels": 8},
            variations={"n_kernels": [8]},
            seed=1,
        )
        assert len(rows) == 1
        row = rows[0]
        assert row.varied == "n_kernels"
        assert row.wall_seconds > 0
        assert row.dot_products > 0
        assert row.dot_products_per_second > 0
        assert row.error == ""

    def test_capacity_error_recorded_not_fatal(self):
        rows = run_grid(
            standard={"n_instances": 4, "l_series": 64, "n_kernels": 4},
            variations={"n_instances": [4, 8]},
            seed=1,
            limits=GridLimits(memory_budget_bytes=16),
        )
        assert len(rows) == 2
        assert all(row.error for row in rows)
        assert all(row.wall_seconds == 0.0 for row in rows)

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ValueError):
            run_grid(variations={"frequency": [1]})


class TestComparison:
    def _rows(self):
        ours = [BenchRow("n_instances", 10, 64, 8, wall_seconds=0.5, dot_products=100)]
        base = [BenchRow("n_instances", 10, 64, 8, wall_seconds=9.65, dot_products=100)]
        return ours, base

    def test_speedup_and_per_watt(self):
        ours, base = self._rows()
        attach_comparison(ours, base, watts_a=350.0, watts_b=200.0)
        assert ours[0].speedup == pytest.approx(19.3)
        assert ours[0].per_watt_gain == pytest.approx(11.0285714, abs=1e-6)

    def test_unmatched_points_left_alone(self):
        ours, _ = self._rows()
        attach_comparison(ours, [], watts_a=1.0, watts_b=1.0)
        assert ours[0].speedup is None

    def test_speedup_without_watts(self):
        ours, base = self._rows()
        attach_comparison(ours, base)
        assert ours[0].speedup == pytest.approx(19.3)
        assert ours[0].per_watt_gain is None


class TestSerialization:
    def _rows(self):
        return [
            BenchRow(
                "l_series",
                100,
                250,
                1000,
                wall_seconds=0.123456789,
                dot_products=12345,
                dot_products_per_second=1e5,
                speedup=2.5,
                nominal_watts_a=350.0,
                nominal_watts_b=200.0,
                per_watt_gain=per_watt_gain(2.5, 350.0, 200.0),
            ),
            BenchRow("l_series", 100, 500, 1000, error="budget too small"),
        ]

    def test_csv_roundtrip_lossless(self, tmp_path):
        rows = self._rows()
        path = tmp_path / "bench.csv"
        write_csv(rows, path)
        assert read_csv(path) == rows

    def test_json_roundtrip_lossless(self, tmp_path):
        rows = self._rows()
        path = tmp_path / "bench.json"
        write_json(rows, path)
        assert read_json(path) == rows

    def test_json_mirrors_csv(self, tmp_path):
        rows = self._rows()
        write_csv(rows, tmp_path / "bench.csv")
        write_json(rows, tmp_path / "bench.json")
        assert read_csv(tmp_path / "bench.csv") == read_json(tmp_path / "bench.json")

    def test_csv_header_stable(self, tmp_path):
        write_csv([], tmp_path / "bench.csv")
        header = (tmp_path / "bench.csv").read_text().splitlines()[0]
        assert header == (
            "varied,n_instances,l_series,n_kernels,wall_seconds,dot_products,"
            "dot_products_per_second,speedup,nominal_watts_a,nominal_watts_b,"
            "per_watt_gain,error"
        )

    def test_json_schema_version(self, tmp_path):
        write_json([], tmp_path / "bench.json")
        payload = json.loads((tmp_path / "bench.json").read_text())
        assert payload["schema_version"] == 1


class TestDoublingRatios:
    def test_ratios_computed_per_parameter(self):
        rows = [
            BenchRow("n_kernels", 10, 64, 100, wall_seconds=1.0),
            BenchRow("n_kernels", 10, 64, 200, wall_seconds=2.1),
            BenchRow("n_kernels", 10, 64, 400, wall_seconds=4.0),
        ]
        ratios = doubling_ratios(rows)["n_kernels"]
        assert ratios[0] == (100, 200, pytest.approx(2.1))
        assert ratios[1] == (200, 400, pytest.approx(4.0 / 2.1))
