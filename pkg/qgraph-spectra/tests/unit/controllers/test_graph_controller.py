"""
Unit tests for the GraphController class.
"""

import json

import pytest

from controllers import ControllerError
from controllers.graph import GraphController
from lib.graph import load_graph


class TestGraphController:

    def test_generate_star_table(self):
        """Five-vertex star with 3-decimal lengths in [1, 2]."""
        result = GraphController().generate("star", n=5, seed=7, length_range=(1.0, 2.0), decimals=3)
        assert "Graph with 5 vertices and 4 edges" in result
        assert "+--" in result

    def test_generate_writes_graph_file(self, tmp_path):
        target = tmp_path / "ba.json"
        result = GraphController().generate("ba", n=50, k=2, seed=3, output_file=str(target))
        assert f"Saved to {target}" in result
        graph = load_graph(target)
        assert graph.m == 96

    def test_generate_degenerate_interval(self):
        data = json.loads(GraphController().generate("cycle", n=4, length_range=(1.0, 1.0),
                                                     format_type="json"))
        assert data["lengths"] == [1.0, 1.0, 1.0, 1.0]

    def test_generate_csv(self):
        result = GraphController().generate("path", n=3, format_type="csv")
        lines = result.splitlines()
        assert lines[0] == "edge,u,v,length"
        assert len(lines) == 3

    def test_defaults_from_config(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"generate": {"length_low": 3.0, "length_high": 4.0, "decimals": 1}}))
        data = json.loads(GraphController(str(config)).generate("star", n=4, format_type="json"))
        assert all(3.0 <= length <= 4.0 for length in data["lengths"])
        assert all(round(length, 1) == length for length in data["lengths"])

    def test_invalid_parameters(self):
        with pytest.raises(ControllerError, match="Error generating graph"):
            GraphController().generate("cycle", n=2)

    def test_missing_config(self, tmp_path):
        with pytest.raises(ControllerError, match="Cannot load configuration"):
            GraphController(str(tmp_path / "absent.json"))
