"""
Configuration for pytest.
"""

import math
import sys
from pathlib import Path

import pytest

# Add the qgraph-spectra directory to the Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from lib.graph import metric_graph  # noqa: E402


@pytest.fixture
def path_graph():
    """Path v0-v1-v2 with lengths (1, 2); cleans to an interval of length 3."""
    return metric_graph(3, [(0, 1), (1, 2)], [1.0, 2.0])


@pytest.fixture
def star_graph():
    """Equilateral star K_{1,3} with unit edges."""
    return metric_graph(4, [(0, 1), (0, 2), (0, 3)], [1.0, 1.0, 1.0])


@pytest.fixture
def single_edge():
    return metric_graph(2, [(0, 1)], [1.0])


@pytest.fixture
def interval_eigenvalues():
    """Vertex eigenvalues (k pi / 3)^2 of the path fixture, k not a multiple of 3."""
    return [(k * math.pi / 3.0) ** 2 for k in range(0, 12) if k == 0 or k % 3 != 0]
