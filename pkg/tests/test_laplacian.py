import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from kbratteli.bratteli import BratteliPath, enumerate_paths, level_measures, measure_M, weight_delta
from kbratteli.cylinder import constant, indicator, inner_product, refine
from kbratteli.errors import EmptyExt1, HypothesisViolated
from kbratteli.kgraph import perron_data, validate_kgraph
from kbratteli.laplacian import (
    CONSTANTS,
    RAW_SIGN,
    ROOT,
    F_coeff,
    G_coeff,
    assemble_delta,
    eigenspace_basis,
    ext1_pairs,
    extracted_eigenvalue,
    lambda_gamma,
    laplace_coeff,
    nodes_up_to,
    verify_eigenpairs,
)

from conftest import commuting_kgraphs


def delta_on_indicator_oracle(g, pd, eta, s, delta):
    """Term-by-term expansion of the operator on one cylinder, at depth |eta|.

    The pairs (gamma, child) run over (root, [r(eta)]) and then
    (eta(0, i), eta(0, i + 1)) for i < |eta|.
    """
    N = len(eta)
    paths = enumerate_paths(g, N)
    M = level_measures(g, pd, N)
    chi_eta = np.array([p == eta for p in paths], dtype=float)
    levels = [(ROOT, BratteliPath(eta.root))] if g.num_vertices > 1 else []
    levels += [(eta.prefix(i), eta.prefix(i + 1)) for i in range(N)]
    out = np.zeros(len(paths))
    for gamma, child in levels:
        c = laplace_coeff(g, pd, gamma, s, delta)
        in_gamma = np.array([gamma is ROOT or p.prefix(len(gamma)) == gamma for p in paths])
        in_child = np.array([p.prefix(len(child)) == child for p in paths])
        ring = (in_gamma & ~in_child).astype(float)
        out -= c * (float(ring @ M) * chi_eta - measure_M(g, pd, eta) * ring)
    return out


def test_ext1_examples(l2, exb):
    g, _ = l2
    assert len(ext1_pairs(g, BratteliPath(0))) == 2
    g, _ = exb
    assert ext1_pairs(g, ROOT) == [(0, 1), (1, 0)]
    assert len(ext1_pairs(g, BratteliPath(0))) == 2


def test_ext1_empty(thin):
    g, _ = thin
    with pytest.raises(EmptyExt1):
        ext1_pairs(g, BratteliPath(0))
    with pytest.raises(EmptyExt1):
        ext1_pairs(g.__class__(1, 1, (((1,),),)), ROOT)


def test_F_G_examples(l2, exb):
    g, pd = l2
    v = BratteliPath(0)
    assert F_coeff(g, pd, v) == pytest.approx(2.0)
    for s in (0.5, 1.0, 2.0):
        assert G_coeff(g, pd, v, s, 0.5) == pytest.approx(1.0)
        e = enumerate_paths(g, 1)[0]
        assert F_coeff(g, pd, e) == pytest.approx(8.0)
        assert G_coeff(g, pd, e, s, 0.5) == pytest.approx(4.0 * 2.0 ** (-2.0 * (2.0 - s)))
    g, pd = exb
    assert F_coeff(g, pd, ROOT) == pytest.approx(2.0)
    assert G_coeff(g, pd, ROOT, 0.5, 0.5) == pytest.approx(1.0)
    assert G_coeff(g, pd, ROOT, 2.0, 0.5) == pytest.approx(1.0)


def test_laplace_coeff_is_operator_coefficient(exb):
    g, pd = exb
    lam = enumerate_paths(g, 2)[1]
    w = weight_delta(g, pd, lam, 0.3)
    assert laplace_coeff(g, pd, lam, 1.7, 0.3) == pytest.approx(2 * F_coeff(g, pd, lam) * w ** (1.7 - 2))


def test_hypothesis_required(thin):
    g, pd = thin
    with pytest.raises(HypothesisViolated):
        assemble_delta(g, pd, 0.5, 1.0, 2)


def test_lambda_special_nodes(exb):
    g, pd = exb
    assert lambda_gamma(g, pd, CONSTANTS, 1.0, 0.5) == 0.0
    assert lambda_gamma(g, pd, ROOT, 1.0, 0.5) == pytest.approx(4.0)


def test_eigenspace_basis_examples(l2, exb):
    g, pd = l2
    (f,) = eigenspace_basis(g, pd, BratteliPath(0))
    assert f.depth == 1 and f.coeffs.tolist() == pytest.approx([2.0, -2.0])
    g, pd = exb
    for lam in [BratteliPath(0)] + enumerate_paths(g, 1) + enumerate_paths(g, 2):
        basis = eigenspace_basis(g, pd, lam)
        row = g.matrices[g.color(len(lam) + 1)][lam.source]
        assert len(basis) == sum(row) - 1
        for h in basis:
            assert inner_product(g, pd, h, constant(g)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("depth", [1, 2, 3])
def test_assembled_matrix_matches_term_oracle(bundled, s, depth):
    g, pd = bundled
    L = assemble_delta(g, pd, 0.5, s, depth)
    for j, eta in enumerate(enumerate_paths(g, depth)):
        np.testing.assert_allclose(L[:, j], delta_on_indicator_oracle(g, pd, eta, s, 0.5), rtol=1e-12, atol=1e-12)


def test_E0_hand_computation(exb):
    g, pd = exb
    L = assemble_delta(g, pd, 0.5, 1.3, 1)
    (f,) = eigenspace_basis(g, pd, ROOT)
    f1 = refine(f, 1).coeffs
    np.testing.assert_allclose(L @ f1, -4.0 * f1, atol=1e-12)
    assert extracted_eigenvalue(g, pd, ROOT, 0.5, 0.5, 3) == pytest.approx(4.0, abs=1e-8)


def test_constants_in_kernel(bundled):
    g, pd = bundled
    L = assemble_delta(g, pd, 0.5, 2.0, 3)
    np.testing.assert_allclose(L @ refine(constant(g), 3).coeffs, 0.0, atol=1e-10)


@pytest.mark.parametrize("depth", [1, 2, 3, 4])
def test_self_adjoint_and_kernel(bundled, depth):
    g, pd = bundled
    for s in (0.5, 2.0):
        L = assemble_delta(g, pd, 0.5, s, depth)
        WL = level_measures(g, pd, depth)[:, None] * L
        assert np.max(np.abs(WL - WL.T)) <= 1e-10 * np.max(np.abs(WL))
        ev = np.sort(np.abs(np.linalg.eigvals(L)))
        assert ev[0] < 1e-8 * ev[-1]
        assert ev[1] > 1e-3


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_eigenpairs(bundled, s):
    g, pd = bundled
    rep = verify_eigenpairs(g, pd, 0.5, (s,), 3)
    assert rep.max_residual <= 1e-8
    assert rep.max_gram_offdiag <= 1e-10
    assert rep.complete
    assert rep.raw_sign == RAW_SIGN


def test_closed_form_matches_extracted(bundled):
    g, pd = bundled
    for node in nodes_up_to(g, 2):
        if not eigenspace_basis(g, pd, node):
            continue
        for s in (0.5, 2.0):
            lam = lambda_gamma(g, pd, node, s, 0.5)
            assert extracted_eigenvalue(g, pd, node, s, 0.5, 3) == pytest.approx(lam, rel=1e-8, abs=1e-8)


def test_lambda2_first_level_value(l2):
    # c(v) M(v) ... by hand: root term absent, c(v)=4, c(e)=2*8*(1/4)^{s-2}
    g, pd = l2
    e = enumerate_paths(g, 1)[0]
    for s in (0.5, 2.0):
        expected = 4.0 * (1 - 0.5) + 16.0 * 0.25 ** (s - 2) * 0.5
        assert lambda_gamma(g, pd, e, s, 0.5) == pytest.approx(expected, rel=1e-12)


def test_completeness_dimension_count(bundled):
    g, pd = bundled
    total = sum(len(eigenspace_basis(g, pd, n)) for n in nodes_up_to(g, 2))
    assert total == len(enumerate_paths(g, 3))


@settings(max_examples=10)
@given(commuting_kgraphs(max_vertices=2), st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([0.3, 0.5, 0.8]))
@example(validate_kgraph(2, 2, [[[1, 1], [1, 2]], [[2, 1], [1, 3]]]), 0.5, 0.3)
def test_eigenpairs_random_graphs(g, s, delta):
    # eigenvalues can reach 1e7 here, so roundoff in L @ f scales with the operator norm
    pd = perron_data(g)
    rep = verify_eigenpairs(g, pd, delta, (s,), 3)
    norm = max(1.0, max(r["lambda"] for r in rep.residuals))
    assert rep.max_residual / norm <= 1e-12
    assert rep.max_gram_offdiag <= 1e-10
    assert rep.complete
