import numpy as np
import pytest

from pottsmc.lattice import TorusSpec, build_torus, make_graph


def single_edge():
    return make_graph(2, [(0, 1)])


def path(n):
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n):
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def star(n):
    return make_graph(n, [(0, i) for i in range(1, n)])


@pytest.fixture(scope="session")
def torus32():
    return TorusSpec(3, 2)


@pytest.fixture(scope="session")
def torus32_graph(torus32):
    return build_torus(torus32)
