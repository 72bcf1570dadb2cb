import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kbratteli.bratteli import (
    BratteliPath,
    count_paths,
    diam_bruteforce,
    distance,
    enumerate_paths,
    format_path,
    level_measures,
    measure_M,
    parse_path,
    path_space,
    weight_delta,
)
from kbratteli.errors import DeltaOutOfRange, DepthMismatch, HypothesisViolated, InvalidPath, Overflow, TooLarge
from kbratteli.kgraph import perron_data

from conftest import commuting_kgraphs


def random_path(g, length, rng):
    p = BratteliPath(rng.randrange(g.num_vertices))
    for n in range(1, length + 1):
        row = g.matrices[g.color(n)][p.source]
        edges = [(w, j) for w in range(g.num_vertices) for j in range(row[w])]
        p = p.extend(rng.choice(edges))
    return p


def test_count_examples(l2, exb):
    g, pd = l2
    assert count_paths(g, pd, 3) == 8
    assert count_paths(g, pd, 0) == 1
    g, pd = exb
    assert count_paths(g, pd, 1) == 4
    assert count_paths(g, pd, 0) == 2


def test_count_overflow(l2):
    g, pd = l2
    assert count_paths(g, pd, 62) == 2**62
    with pytest.raises(Overflow):
        count_paths(g, pd, 64)


def test_enumerate_examples(l2, exb):
    g, _ = l2
    assert enumerate_paths(g, 1) == [BratteliPath(0, ((0, 0),)), BratteliPath(0, ((0, 1),))]
    g, _ = exb
    prefix = BratteliPath(0, ((1, 0),))
    assert enumerate_paths(g, 2, prefix) == [prefix.extend((1, 0)), prefix.extend((1, 1))]


def test_enumeration_cap(l2):
    g, _ = l2
    with pytest.raises(TooLarge):
        enumerate_paths(g, 12, cap=1000)


@pytest.mark.parametrize("n", range(6))
def test_enumeration_matches_count(bundled, n):
    g, pd = bundled
    paths = enumerate_paths(g, n)
    assert len(paths) == count_paths(g, pd, n)
    assert paths == sorted(paths)
    assert len(set(paths)) == len(paths)


def test_path_literals():
    p = parse_path("1:(0,1)/(1,0)")
    assert p == BratteliPath(1, ((0, 1), (1, 0)))
    assert format_path(p) == "1:(0,1)/(1,0)"
    assert parse_path(" 0 ") == BratteliPath(0)
    for bad in ("", "a", "0:", "0:(1)", "0:(1,0)/", "0:(1,0)x"):
        with pytest.raises(InvalidPath):
            parse_path(bad)


def test_invalid_path_against_graph(exb):
    g, _ = exb
    with pytest.raises(InvalidPath):
        parse_path("0:(0,1)", g)  # A_1(0,0) = 1, so only copy 0 exists
    with pytest.raises(InvalidPath):
        parse_path("2", g)


@given(st.integers(0, 3), st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=6))
def test_literal_roundtrip(root, steps):
    p = BratteliPath(root, tuple(steps))
    assert parse_path(format_path(p)) == p


def test_weight_examples(l2, exb):
    g, pd = l2
    for delta in (0.3, 0.5, 0.8):
        for n in range(5):
            p = enumerate_paths(g, n)[0]
            assert weight_delta(g, pd, p, delta) == pytest.approx(2.0 ** (-n / delta), rel=1e-12)
    g, pd = exb
    assert weight_delta(g, pd, BratteliPath(1, ((0, 0),)), 0.5) == pytest.approx(0.125, rel=1e-12)
    with pytest.raises(DeltaOutOfRange):
        weight_delta(g, pd, BratteliPath(0), 1.0)


def test_weight_requires_hypothesis(thin):
    g, pd = thin
    with pytest.raises(HypothesisViolated):
        weight_delta(g, pd, BratteliPath(0), 0.5)
    assert weight_delta(g, pd, BratteliPath(0), 0.5, require_hypothesis=False) > 0


def test_measure_examples(l2, exb):
    g, pd = l2
    for n in range(6):
        assert measure_M(g, pd, enumerate_paths(g, n)[-1]) == pytest.approx(2.0**-n, rel=1e-12)
    g, pd = exb
    assert measure_M(g, pd, BratteliPath(0)) == pytest.approx(0.5)


@given(commuting_kgraphs(), st.integers(0, 5))
def test_measure_is_probability(g, n):
    pd = perron_data(g)
    assert math.fsum(level_measures(g, pd, n)) == pytest.approx(1.0, abs=1e-12)


@given(commuting_kgraphs(), st.integers(0, 4))
def test_one_level_additivity(g, n):
    pd = perron_data(g)
    ps = path_space(g)
    parent = level_measures(g, pd, n)
    child = level_measures(g, pd, n + 1)
    np.testing.assert_allclose(np.add.reduceat(child, ps.child_ptr[n][:-1]), parent, rtol=1e-12)


@given(commuting_kgraphs(), st.floats(0.05, 0.95))
def test_vertex_weights_sum_to_one(g, delta):
    pd = perron_data(g)
    assert math.fsum(weight_delta(g, pd, BratteliPath(v), delta) for v in range(g.num_vertices)) == pytest.approx(1.0, abs=1e-15)


@given(commuting_kgraphs(), st.integers(0, 6), st.floats(0.05, 0.95))
def test_weights_decrease_along_extensions(g, n, delta):
    pd = perron_data(g)
    rng = random.Random(n)
    p = random_path(g, n + 1, rng)
    assert weight_delta(g, pd, p, delta) < weight_delta(g, pd, p.prefix(n), delta)


def test_distance_examples(l2):
    g, pd = l2
    a, b = enumerate_paths(g, 1)
    assert distance(g, pd, a, b, 0.5) == pytest.approx(1.0)
    assert distance(g, pd, a, a, 0.5) == 0.0
    with pytest.raises(DepthMismatch):
        distance(g, pd, a, BratteliPath(0), 0.5)


def test_distance_across_roots(exb):
    g, pd = exb
    assert distance(g, pd, BratteliPath(0), BratteliPath(1), 0.5) == 1.0


@given(st.integers(0, 10_000), st.floats(0.1, 0.9))
def test_strong_triangle_inequality(exb, seed, delta):
    g, pd = exb
    rng = random.Random(seed)
    a, b, c = (random_path(g, 8, rng) for _ in range(3))
    d = lambda x, y: distance(g, pd, x, y, delta)
    assert d(a, c) <= max(d(a, b), d(b, c))
    assert d(a, b) == d(b, a)


def test_diam_examples(l2, thin):
    g, pd = l2
    p = enumerate_paths(g, 2)[0]
    assert diam_bruteforce(g, pd, p, 2, 0.5) == pytest.approx(2.0**-4, rel=1e-12)
    assert diam_bruteforce(g, pd, p, 2, 0.5) == weight_delta(g, pd, p, 0.5)
    g, pd = thin
    p = BratteliPath(0)
    assert diam_bruteforce(g, pd, p, 3, 0.5) < weight_delta(g, pd, p, 0.5, require_hypothesis=False)


def test_diam_monotone_in_extra_depth(thin, exb):
    # deeper brute force sees more pairs, so the estimate can only grow
    g, pd = thin
    p = BratteliPath(0)
    vals = [diam_bruteforce(g, pd, p, e, 0.5) for e in (1, 2, 3, 4)]
    assert vals[0] == 0.0
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < weight_delta(g, pd, p, 0.5, require_hypothesis=False)
    g, pd = exb
    vals = [diam_bruteforce(g, pd, p, e, 0.5) for e in (1, 2, 3)]
    assert vals == [weight_delta(g, pd, p, 0.5)] * 3


def test_block_and_ancestors(exb):
    g, _ = exb
    ps = path_space(g)
    p = BratteliPath(1, ((0, 0),))
    lo, hi = ps.block(p, 3)
    ext = ps.paths(3)[lo:hi]
    assert ext and all(q.prefix(1) == p for q in ext)
    anc = ps.ancestor_index(3, 1)
    assert all(ps.paths(1)[anc[i]] == q.prefix(1) for i, q in enumerate(ps.paths(3)))
