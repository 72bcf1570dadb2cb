"""Small bundled k-graphs used by the tests, scripts and CLI examples."""

from .kgraph import KGraph, validate_kgraph

#: one vertex, two loops of each of two colors
LAMBDA2 = {"k": 2, "num_vertices": 1, "matrices": [[[2]], [[2]]]}

#: two vertices, A_1 all-ones, A_2 = 2I
EX_B = {"k": 2, "num_vertices": 2, "matrices": [[[1, 1], [1, 1]], [[2, 0], [0, 2]]]}

#: two vertices, A = A_1 A_2 has period 2
EX_PERIODIC = {"k": 2, "num_vertices": 2, "matrices": [[[0, 2], [2, 0]], [[2, 0], [0, 2]]]}

#: vertex 0 receives a single color-1 edge, so diameters fall below weights
EX_THIN = {"k": 2, "num_vertices": 2, "matrices": [[[0, 1], [1, 1]], [[2, 0], [0, 2]]]}


def load(doc: dict) -> KGraph:
    return validate_kgraph(doc["k"], doc["num_vertices"], doc["matrices"])


def lambda2() -> KGraph:
    return load(LAMBDA2)


def ex_b() -> KGraph:
    return load(EX_B)
