"""Cuntz-Krieger operators, mother functions and the wavelet decomposition.

``S_λ`` is implemented for square paths only (length ``nk``): prefixing by
such a path shifts depths by a multiple of ``k`` and so preserves the color
pattern of the remaining levels.  On cylinders

    S_λ χ_[η] = ρ^{n/2} χ_[λη]        (r(η) = s(λ)),

with ``ρ = ρ_1 ... ρ_k``.  The adjoint under the ``M`` pairing undoes the
prefix and multiplies by ``ρ^{-n/2}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bratteli import BratteliPath, check_path, enumerate_paths, level_measures, path_space
from .cylinder import CylinderFunction, indicator, inner_product, refine  # noqa: F401  (re-exported)
from .errors import HypothesisViolated, NotSquarePath, RefinementFailure
from .kgraph import KGraph, PerronData
from .laplacian import CONSTANTS, ROOT, eigenspace_basis, weighted_rank

RANK_REL = 1e-9


def square_degree(g: KGraph, lam: BratteliPath) -> int:
    """``n`` such that ``d(λ) = (n, ..., n)``."""
    check_path(g, lam)
    n, r = divmod(len(lam), g.k)
    if r:
        raise NotSquarePath(f"path of length {len(lam)} is not a multiple of k={g.k}")
    return n


def _S_coeffs(g: KGraph, pd: PerronData, lam: BratteliPath, C: np.ndarray, depth: int) -> np.ndarray:
    # C: (paths at depth, columns)
    n = square_degree(g, lam)
    ps = path_space(g)
    out_depth = depth + len(lam)
    out = np.zeros((len(ps.paths(out_depth)),) + C.shape[1:])
    lo, hi = ps.block(lam, out_depth)
    slo, shi = ps.block(BratteliPath(lam.source), depth)
    out[lo:hi] = pd.rho_prod ** (n / 2) * C[slo:shi]
    return out


def _S_adj_coeffs(g: KGraph, pd: PerronData, lam: BratteliPath, C: np.ndarray, depth: int) -> np.ndarray:
    n = square_degree(g, lam)
    ps = path_space(g)
    out_depth = depth - len(lam)
    out = np.zeros((len(ps.paths(out_depth)),) + C.shape[1:])
    lo, hi = ps.block(lam, depth)
    slo, shi = ps.block(BratteliPath(lam.source), out_depth)
    out[slo:shi] = pd.rho_prod ** (-n / 2) * C[lo:hi]
    return out


def apply_S(g: KGraph, pd: PerronData, lam: BratteliPath, f: CylinderFunction) -> CylinderFunction:
    return CylinderFunction(g, f.depth + len(lam), _S_coeffs(g, pd, lam, f.coeffs, f.depth))


def apply_S_adjoint(g: KGraph, pd: PerronData, lam: BratteliPath, f: CylinderFunction) -> CylinderFunction:
    if f.depth < len(lam):
        f = refine(f, len(lam))
    return CylinderFunction(g, f.depth - len(lam), _S_adj_coeffs(g, pd, lam, f.coeffs, f.depth))


def mother_functions(g: KGraph, pd: PerronData, v: int) -> list[CylinderFunction]:
    """``f^{i,v} = χ_[λ_0]/M([λ_0]) - χ_[λ_i]/M([λ_i])`` over ``D_v = vΛ^{(1,...,1)}``."""
    D = enumerate_paths(g, g.k, BratteliPath(v))
    if len(D) < 2:
        return []
    M = [float(pd.x[p.source]) / pd.scale(g.k) for p in D]
    first = indicator(g, D[0]) * (1.0 / M[0])
    return [first - indicator(g, p) * (1.0 / m) for p, m in zip(D[1:], M[1:])]


def scaling_basis(g: KGraph, pd: PerronData, n: int) -> list[CylinderFunction]:
    depth = n * g.k
    return [indicator(g, p) for p in path_space(g).paths(depth)]


def wavelet_basis(g: KGraph, pd: PerronData, n: int) -> list[CylinderFunction]:
    """The set ``S_n = {S_λ f^{i,s(λ)} : d(λ) = (n, ..., n)}``."""
    mothers = {v: mother_functions(g, pd, v) for v in range(g.num_vertices)}
    out = []
    for lam in path_space(g).paths(n * g.k):
        out.extend(apply_S(g, pd, lam, f) for f in mothers[lam.source])
    return out


def gram_matrix(g: KGraph, pd: PerronData, funcs) -> np.ndarray:
    B, M = _stack(g, pd, funcs)
    return B.T @ (M[:, None] * B)


def _stack(g, pd, funcs, depth=None):
    if depth is None:
        depth = max(f.depth for f in funcs)
    B = np.column_stack([refine(f, depth).coeffs for f in funcs])
    return B, level_measures(g, pd, depth)


def span_residuals(basis: np.ndarray, vectors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Relative ``M``-norm distance of each column of ``vectors`` from ``span(basis)``."""
    w = np.sqrt(weights)[:, None]
    Bw, Vw = w * basis, w * vectors
    coef, *_ = np.linalg.lstsq(Bw, Vw, rcond=RANK_REL)
    R = Vw - Bw @ coef
    return np.linalg.norm(R, axis=0) / np.maximum(np.linalg.norm(Vw, axis=0), 1e-300)


@dataclass
class RefinementReport:
    n: int
    v0_rank: int
    v0_residual: float
    dim_W: int
    dim_E: int
    rank_W: int
    rank_E: int
    residual_E_in_W: float
    residual_W_in_E: float
    orthogonality_W_V: float
    extra: dict = field(default_factory=dict)


def _span_check(label_prefix, labels, basis, vectors, weights, tol):
    res = span_residuals(basis, vectors, weights) if vectors.shape[1] else np.zeros(0)
    if res.size and res.max() > tol:
        i = int(np.argmax(res))
        raise RefinementFailure(f"{label_prefix} {labels[i]} is not in the expected span",
                                function=labels[i], residual=float(res[i]))
    return float(res.max()) if res.size else 0.0


def verify_refinement(g: KGraph, pd: PerronData, delta: float, n: int, tol: float = 1e-8) -> RefinementReport:
    """Check ``V_0 = E_{-1} ⊕ E_0`` and ``W_n = span{E_γ : nk <= |γ| < (n+1)k}``."""
    if not pd.product_irreducible:
        raise HypothesisViolated("the refinement theorem needs A = A_1 ... A_k irreducible")
    if not pd.hypothesis_3_2:
        raise HypothesisViolated("the refinement theorem needs two edges of each color at every vertex")
    if n < 0:
        raise ValueError("n must be nonnegative")
    k = g.k
    ps = path_space(g)

    # (a) V_0
    v0_funcs = eigenspace_basis(g, pd, CONSTANTS) + eigenspace_basis(g, pd, ROOT)
    E0, M0 = _stack(g, pd, v0_funcs, 0)
    V0 = np.eye(g.num_vertices)
    v_labels = [f"chi[{v}]" for v in range(g.num_vertices)]
    r1 = _span_check("V_0 function", v_labels, E0, V0, M0, tol)
    r2 = _span_check("E_0 function", [f"E0[{i}]" for i in range(E0.shape[1])], V0, E0, M0, tol)
    v0_rank = weighted_rank(E0, M0, RANK_REL)
    if v0_rank != g.num_vertices:
        raise RefinementFailure(f"E_-1 + E_0 has rank {v0_rank}, expected {g.num_vertices}",
                                function="V_0", residual=float(g.num_vertices - v0_rank))

    # (b) W_n
    depth = (n + 1) * k
    W_funcs = wavelet_basis(g, pd, n)
    E_funcs, E_labels = [], []
    for length in range(n * k, (n + 1) * k):
        for gamma in ps.paths(length):
            for i, f in enumerate(eigenspace_basis(g, pd, gamma)):
                E_funcs.append(f)
                E_labels.append(f"E[{gamma}]#{i}")
    W_labels = [f"S_n[{i}]" for i in range(len(W_funcs))]
    Wm, M = _stack(g, pd, W_funcs, depth) if W_funcs else (np.zeros((len(ps.paths(depth)), 0)), level_measures(g, pd, depth))
    Em = _stack(g, pd, E_funcs, depth)[0] if E_funcs else np.zeros((len(M), 0))
    dim_W = len(ps.paths(depth)) - len(ps.paths(n * k))
    if Wm.shape[1] != dim_W or Em.shape[1] != dim_W:
        raise RefinementFailure(f"dimension mismatch: #S_n={Wm.shape[1]}, #E={Em.shape[1]}, dim W_n={dim_W}",
                                function="W_n", residual=float(abs(Em.shape[1] - Wm.shape[1])))
    res_EW = _span_check("eigenfunction", E_labels, Wm, Em, M, tol) if dim_W else 0.0
    res_WE = _span_check("wavelet", W_labels, Em, Wm, M, tol) if dim_W else 0.0

    Vn, _ = _stack(g, pd, scaling_basis(g, pd, n), depth)
    orth = 0.0
    if dim_W:
        G = Wm.T @ (M[:, None] * Vn)
        nw = np.sqrt(np.einsum("ij,ij,i->j", Wm, Wm, M))
        nv = np.sqrt(np.einsum("ij,ij,i->j", Vn, Vn, M))
        orth = float(np.max(np.abs(G / np.outer(nw, nv))))
    return RefinementReport(
        n=n,
        v0_rank=v0_rank,
        v0_residual=max(r1, r2),
        dim_W=dim_W,
        dim_E=Em.shape[1],
        rank_W=weighted_rank(Wm, M, RANK_REL),
        rank_E=weighted_rank(Em, M, RANK_REL),
        residual_E_in_W=res_EW,
        residual_W_in_E=res_WE,
        orthogonality_W_V=orth,
    )


def completeness_rank(g: KGraph, pd: PerronData, depth: int) -> tuple[int, int]:
    """Rank of ``V_0 ⊕ W_0 ⊕ ... ⊕ W_{depth/k - 1}`` at ``depth`` and the dimension it should reach."""
    if depth % g.k:
        raise NotSquarePath(f"depth {depth} is not a multiple of k={g.k}")
    funcs = scaling_basis(g, pd, 0)
    for n in range(depth // g.k):
        funcs += wavelet_basis(g, pd, n)
    B, M = _stack(g, pd, funcs, depth)
    return weighted_rank(B, M, RANK_REL), len(M)


def square_paths(g: KGraph, max_length: int) -> list[BratteliPath]:
    ps = path_space(g)
    return [p for L in range(0, max_length + 1, g.k) for p in ps.paths(L)]


def verify_ck(g: KGraph, pd: PerronData, depth: int) -> dict:
    """Max-entry deviations of the four Cuntz-Krieger relations on depth-bounded spaces."""
    k = g.k
    if depth < k:
        raise ValueError(f"depth must be at least k={k} so that CK4 with n=1 fits")
    ps = path_space(g)
    P = len(ps.paths(depth))
    I = np.eye(P)
    roots = ps.ancestor_index(depth, 0)

    # CK1: vertex projections (S_v for bare vertices)
    Sv = [_S_coeffs(g, pd, BratteliPath(v), I, depth) for v in range(g.num_vertices)]
    ck1 = float(np.max(np.abs(sum(Sv) - I)))
    for a in range(g.num_vertices):
        ck1 = max(ck1, float(np.max(np.abs(Sv[a] - np.diag((roots == a).astype(float))))))
        for b in range(g.num_vertices):
            target = Sv[a] if a == b else 0.0
            ck1 = max(ck1, float(np.max(np.abs(Sv[a] @ Sv[b] - target))))

    squares = square_paths(g, depth)

    # CK2: S_λ S_η = S_{λη}
    ck2 = 0.0
    for lam in squares:
        for eta in squares:
            if eta.root != lam.source or len(lam) + len(eta) > depth:
                continue
            m = depth - len(lam) - len(eta)
            Im = np.eye(len(ps.paths(m)))
            lhs = _S_coeffs(g, pd, lam, _S_coeffs(g, pd, eta, Im, m), m + len(eta))
            rhs = _S_coeffs(g, pd, lam.concat(eta), Im, m)
            ck2 = max(ck2, float(np.max(np.abs(lhs - rhs))))

    # CK3: S_λ* S_λ = S_{s(λ)}
    ck3 = 0.0
    for lam in squares:
        m = depth - len(lam)
        Im = np.eye(len(ps.paths(m)))
        lhs = _S_adj_coeffs(g, pd, lam, _S_coeffs(g, pd, lam, Im, m), depth)
        rhs = _S_coeffs(g, pd, BratteliPath(lam.source), Im, m)
        ck3 = max(ck3, float(np.max(np.abs(lhs - rhs))))

    # CK4: Σ_{λ ∈ vΛ^{(n,...,n)}} S_λ S_λ* = S_v
    ck4 = 0.0
    for v in range(g.num_vertices):
        for n in range(0, depth // k + 1):
            total = np.zeros((P, P))
            for lam in enumerate_paths(g, n * k, BratteliPath(v)):
                total += _S_coeffs(g, pd, lam, _S_adj_coeffs(g, pd, lam, I, depth), depth - len(lam))
            ck4 = max(ck4, float(np.max(np.abs(total - Sv[v]))))
    return {"depth": depth, "CK1": ck1, "CK2": ck2, "CK3": ck3, "CK4": ck4}
