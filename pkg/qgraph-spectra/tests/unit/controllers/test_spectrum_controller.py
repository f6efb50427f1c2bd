"""
Unit tests for the SpectrumController class.
"""

import csv
import io
import json
import math
from unittest.mock import patch

import pytest

from controllers import ControllerError
from controllers.spectrum import REFERENCE_COLUMNS, SCAN_COLUMNS, SWEEP_COLUMNS, SpectrumController
from lib.graph import save_graph
from lib.nep import CONVERGED
from lib.spectrum import CSV_COLUMNS, UNCOVERED_BRACKET, UNRESOLVED, SpectrumEntry, SpectrumResult


@pytest.fixture
def path_file(tmp_path, path_graph):
    target = tmp_path / "path.json"
    save_graph(path_graph, target)
    return str(target)


@pytest.fixture
def decimal_file(tmp_path):
    target = tmp_path / "decimal.json"
    target.write_text(json.dumps({"n": 3, "edges": [[0, 1], [1, 2]], "lengths": [0.9, 1.2]}))
    return str(target)


def _csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSpectrum:

    def test_path_spectrum_to_file(self, tmp_path, path_file):
        target = tmp_path / "out" / "spectrum.csv"
        message = SpectrumController().spectrum(path_file, Q=3, h=0.25, output_file=str(target),
                                                format_type="table")
        assert message == f"Spectrum exported successfully to {target}"
        rows = _csv_rows(target.read_text())
        assert list(rows[0]) == CSV_COLUMNS
        converged = [float(row["lambda"]) for row in rows if row["index"]]
        expected = [0.0, (math.pi / 3) ** 2, (2 * math.pi / 3) ** 2]
        assert converged == pytest.approx(expected, abs=1e-8)

    def test_json_output(self, path_file):
        data = json.loads(SpectrumController().spectrum(path_file, Q=2, h=0.5, format_type="json"))
        assert data["Q"] == 2
        assert data["eigenvalues"] == pytest.approx([0.0, (math.pi / 3) ** 2], abs=1e-8)

    def test_reference_spectrum(self, decimal_file):
        result = SpectrumController().spectrum(decimal_file, Q=3, exact_digits=1, format_type="csv")
        rows = _csv_rows(result)
        assert list(rows[0]) == REFERENCE_COLUMNS
        vertex = [float(row["lambda"]) for row in rows if row["flag"] == "vertex"]
        assert vertex == pytest.approx([(k * math.pi / 2.1) ** 2 for k in range(3)], abs=1e-8)

    def test_h_or_exact_digits_required(self, path_file):
        with pytest.raises(ControllerError, match="exactly one"):
            SpectrumController().spectrum(path_file, Q=3)
        with pytest.raises(ControllerError, match="exactly one"):
            SpectrumController().spectrum(path_file, Q=3, h=0.5, exact_digits=0)

    def test_h_larger_than_shortest_edge(self, path_file):
        with pytest.raises(ControllerError, match="shortest edge"):
            SpectrumController().spectrum(path_file, Q=3, h=1.5)

    def test_off_grid_reference(self, decimal_file):
        with pytest.raises(ControllerError, match="reference spectrum"):
            SpectrumController().spectrum(decimal_file, Q=3, exact_digits=0)

    def test_missing_graph_file(self, tmp_path):
        with pytest.raises(ControllerError, match="Cannot read graph file"):
            SpectrumController().spectrum(str(tmp_path / "absent.json"), Q=3, h=0.5)

    @patch('controllers.spectrum.compute_spectrum')
    def test_passes_config_options(self, mock_compute, tmp_path, path_file):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"nep": {"rcond_tol": 1e-12, "maxit": 20},
                                      "spectrum": {"guess_padding": 1}}))
        mock_compute.return_value = SpectrumResult(Q=2, h=0.5)
        SpectrumController(str(config)).spectrum(path_file, Q=2, h=0.5, format_type="json")
        kwargs = mock_compute.call_args.kwargs
        assert kwargs["rcond_tol"] == 1e-12
        assert kwargs["maxit"] == 20
        assert kwargs["guess_padding"] == 1
        assert kwargs["pole_guard"] == 1e-8

    @patch('controllers.spectrum.compute_spectrum')
    def test_warns_on_uncovered_interval(self, mock_compute, path_file, caplog):
        entries = [SpectrumEntry(value=0.0, init=0.0, lower=0.0, upper=0.0, iterations=0, rcond=None,
                                 status=CONVERGED, index=1),
                   SpectrumEntry(value=4.0, init=4.0, lower=3.9, upper=4.1, iterations=3, rcond=1e-12,
                                 status=CONVERGED, index=2)]
        missed = [SpectrumEntry(value=1.1, init=1.1, lower=1.0, upper=1.2, iterations=3, rcond=1e-12,
                                status=UNRESOLVED, flags=[UNCOVERED_BRACKET])]
        mock_compute.return_value = SpectrumResult(Q=2, h=0.5, entries=entries, missed=missed)
        with caplog.at_level("WARNING", logger="controllers.spectrum"):
            SpectrumController().spectrum(path_file, Q=2, h=0.5, format_type="json")
        assert "2 of 2 eigenvalues, 1 intervals without an eigenvalue" in caplog.text


class TestSweep:

    def test_errors_against_reference(self, decimal_file):
        result = SpectrumController().sweep(decimal_file, Q=3, j_min=1, j_max=4, exact_digits=1,
                                            format_type="csv")
        rows = _csv_rows(result)
        assert list(rows[0]) == SWEEP_COLUMNS
        # h = 0.5 already fits under the 0.9 edge, so all four levels run
        assert sorted({int(row["J"]) for row in rows}) == [1, 2, 3, 4]
        for row in rows:
            assert float(row["lambda_ceil"]) <= float(row["lambda_ref"]) + 1e-9
            assert float(row["lambda_ref"]) <= float(row["lambda_floor"]) + 1e-9
            assert row["bracket_inverted"] == "False"
        first = [row for row in rows if row["J"] == "1" and row["q"] == "1"][0]
        assert float(first["dist_floor"]) == pytest.approx(math.sqrt(0.2))

    def test_grid_exact_lengths_have_zero_error(self, path_file):
        rows = _csv_rows(SpectrumController().sweep(path_file, Q=3, j_min=0, j_max=3, exact_digits=0,
                                                    format_type="csv"))
        assert all(float(row["err_floor"]) < 1e-8 for row in rows)
        assert all(float(row["err_ceil"]) < 1e-8 for row in rows)

    def test_without_reference(self, decimal_file):
        rows = _csv_rows(SpectrumController().sweep(decimal_file, Q=2, j_min=2, j_max=3, format_type="csv"))
        assert all(row["lambda_ref"] == "" for row in rows)

    def test_nested_matches_direct(self, decimal_file):
        controller = SpectrumController()
        direct = json.loads(controller.sweep(decimal_file, Q=3, j_min=3, j_max=5, format_type="json"))
        nested = json.loads(controller.sweep(decimal_file, Q=3, j_min=3, j_max=5, nested=True,
                                             format_type="json"))
        assert nested["nested"] is True
        for a, b in zip(direct["rows"], nested["rows"]):
            assert b["lambda_floor"] == pytest.approx(a["lambda_floor"], abs=1e-7)
            assert b["lambda_ceil"] == pytest.approx(a["lambda_ceil"], abs=1e-7)

    def test_skips_levels_above_shortest_edge(self, decimal_file):
        data = json.loads(SpectrumController().sweep(decimal_file, Q=2, j_min=0, j_max=1, format_type="json"))
        assert data["levels"] == [1]


class TestScan:

    def test_table_reports_minimum(self, path_file):
        result = SpectrumController().scan(path_file, 0.5, 1.5, 201, format_type="table")
        assert "Smallest rcond" in result
        minimum = float(result.rsplit("at z=", 1)[1])
        assert minimum == pytest.approx((math.pi / 3) ** 2, abs=0.01)

    def test_csv(self, path_file):
        rows = _csv_rows(SpectrumController().scan(path_file, 0.5, 5.0, 100, format_type="csv"))
        assert list(rows[0]) == SCAN_COLUMNS
        assert len(rows) == 100

    def test_invalid_range(self, path_file):
        with pytest.raises(ControllerError):
            SpectrumController().scan(path_file, 0.0, 1.0, 10)
