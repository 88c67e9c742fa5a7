from __future__ import annotations

import itertools
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from wmlab.degeneration import assemble, gen_combinatorial, gen_curve_cycle  # noqa: E402

TETRAHEDRON = [list(t) for t in itertools.combinations(range(4), 3)]


@pytest.fixture(scope="session")
def curve3():
    return assemble(*gen_curve_cycle(3, [0, 0, 0]))


@pytest.fixture(scope="session")
def tetrahedron():
    return assemble(*gen_combinatorial(TETRAHEDRON, 2))
