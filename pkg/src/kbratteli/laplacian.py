"""Laplace-Beltrami operators on cylinder functions and their eigenspaces.

The operator acts on ``χ_[η]`` by

    Δ_s χ_[η] = -Σ_i (1/G_s(η(0,i))) (M([η(0,i)] \\ [η(0,i+1)]) χ_[η]
                                      - M([η]) χ_{[η(0,i)] \\ [η(0,i+1)]})

with coefficient ``c_s(γ) = 2 F_γ w_δ(γ)^{s-2}``.  The sum carries one extra leading
term for the root of the tree (``[∅] = X``, diameter 1, ``ext_1`` = ordered
pairs of distinct vertices); without it the vertex differences would sit in
the kernel.  With the leading minus sign the operator is negative
semidefinite, so eigenvalues are reported as magnitudes and
:data:`RAW_SIGN` records the sign of the assembled operator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bratteli import (
    BratteliPath,
    TooLarge,
    check_path,
    enumeration_cap,
    level_measures,
    measure_M,
    path_space,
    weight_delta,
)
from .cylinder import CylinderFunction, indicator, refine
from .errors import EmptyExt1, HypothesisViolated
from .kgraph import KGraph, PerronData

RAW_SIGN = -1


class _Sentinel:
    __slots__ = ("name", "level")

    def __init__(self, name: str, level: int):
        self.name = name
        self.level = level

    def __repr__(self) -> str:
        return self.name


#: the ``E_0`` level: a root above the vertices with ``[∅] = X``
ROOT = _Sentinel("ROOT", -1)
#: the ``E_{-1}`` level: constant functions
CONSTANTS = _Sentinel("CONSTANTS", -2)


def node_level(node) -> int:
    return node.level if isinstance(node, _Sentinel) else len(node)


def ext1_pairs(g: KGraph, node) -> list[tuple]:
    """Ordered pairs of distinct one-level extensions of ``node``.

    Edges are returned as ``(w, j)`` steps; for :data:`ROOT` the pairs are
    of vertices.
    """
    if node is ROOT:
        items = list(range(g.num_vertices))
    elif isinstance(node, BratteliPath):
        check_path(g, node)
        row = g.matrices[g.color(len(node) + 1)][node.source]
        items = [(w, j) for w in range(g.num_vertices) for j in range(row[w])]
    else:
        raise ValueError(f"{node!r} has no one-level extensions")
    pairs = [(a, b) for a, b in itertools.product(items, items) if a != b]
    if not pairs:
        raise EmptyExt1(f"{node!r} has fewer than two one-level extensions")
    return pairs


def _children_measures(g: KGraph, pd: PerronData, node) -> np.ndarray:
    if node is ROOT:
        return np.asarray(pd.x, dtype=float)
    n = len(node)
    row = g.matrices[g.color(n + 1)][node.source]
    sc = pd.scale(n + 1)
    return np.array([pd.x[w] / sc for w in range(g.num_vertices) for _ in range(row[w])])


def F_coeff(g: KGraph, pd: PerronData, node) -> float:
    """``1/F = Σ_{(e,e') ∈ ext_1} M([γe]) M([γe'])``."""
    m = _children_measures(g, pd, node)
    if len(m) < 2:
        raise EmptyExt1(f"{node!r} has fewer than two one-level extensions")
    pair_sum = float(m.sum() ** 2 - np.dot(m, m))
    return 1.0 / pair_sum


def _diam(g, pd, node, delta) -> float:
    if node is ROOT:
        return 1.0
    return weight_delta(g, pd, node, delta)


def G_coeff(g: KGraph, pd: PerronData, node, s: float, delta: float) -> float:
    if not pd.hypothesis_3_2:
        raise HypothesisViolated("diameters equal weights only when every vertex receives two edges of each color")
    return 0.5 * _diam(g, pd, node, delta) ** (2.0 - s) * F_coeff(g, pd, node)


def laplace_coeff(g: KGraph, pd: PerronData, node, s: float, delta: float) -> float:
    """``c_s(γ) = 2 F_γ diam([γ])^{s-2}``, the coefficient multiplying level ``γ`` in ``Δ_s``.

    This is the quantity that plays the role of ``1/G_s`` in the eigenvalue
    sums; ``G_coeff`` as defined is not its reciprocal unless ``F_γ = 1``.
    """
    if not pd.hypothesis_3_2:
        raise HypothesisViolated("diameters equal weights only when every vertex receives two edges of each color")
    return 2.0 * F_coeff(g, pd, node) * _diam(g, pd, node, delta) ** (s - 2.0)


def lambda_gamma(g: KGraph, pd: PerronData, node, s: float, delta: float) -> float:
    """Magnitude of the ``Δ_s`` eigenvalue on ``E_node``.

    For a path ``γ`` this is ``Σ_i c_s(γ(0,i)) [M(γ(0,i)) - M(γ(0,i+1))] +
    c_s(γ) M([γ])``, the sum running over the root and every proper prefix.
    """
    if node is CONSTANTS:
        return 0.0
    if node is ROOT:
        return laplace_coeff(g, pd, ROOT, s, delta)
    path = node
    total = 0.0
    if g.num_vertices > 1:
        total += (1.0 - measure_M(g, pd, path.prefix(0))) * laplace_coeff(g, pd, ROOT, s, delta)
    for i in range(len(path)):
        a, b = path.prefix(i), path.prefix(i + 1)
        total += (measure_M(g, pd, a) - measure_M(g, pd, b)) * laplace_coeff(g, pd, a, s, delta)
    total += measure_M(g, pd, path) * laplace_coeff(g, pd, path, s, delta)
    return total


def eigenspace_basis(g: KGraph, pd: PerronData, node) -> list[CylinderFunction]:
    if node is CONSTANTS:
        return [CylinderFunction(g, 0, np.ones(g.num_vertices))]
    if node is ROOT:
        ext = [BratteliPath(v) for v in range(g.num_vertices)]
    else:
        check_path(g, node)
        row = g.matrices[g.color(len(node) + 1)][node.source]
        ext = [node.extend((w, j)) for w in range(g.num_vertices) for j in range(row[w])]
    if len(ext) < 2:
        if node is ROOT:
            return []
        raise EmptyExt1(f"{node!r} has fewer than two one-level extensions")
    first = indicator(g, ext[0]) * (1.0 / measure_M(g, pd, ext[0]))
    return [first - indicator(g, e) * (1.0 / measure_M(g, pd, e)) for e in ext[1:]]


def nodes_up_to(g: KGraph, max_level: int) -> list:
    """``CONSTANTS``, ``ROOT`` and every path of length ``<= max_level``."""
    ps = path_space(g)
    out = [CONSTANTS, ROOT]
    for n in range(max_level + 1):
        out.extend(ps.paths(n))
    return out


def _block_starts(ps, depth: int, level: int) -> np.ndarray:
    anc = ps.ancestor_index(depth, level)
    count = len(ps.levels[level])
    return np.searchsorted(anc, np.arange(count + 1))


def assemble_delta(g: KGraph, pd: PerronData, delta: float, s: float, depth: int,
                   cap: int | None = None) -> np.ndarray:
    """Matrix of ``Δ_s`` on the depth-``depth`` cylinder basis.

    Column ``j`` holds the coefficients of ``Δ_s χ_[η_j]``; off-diagonal
    entries are ``c_s(η_i ∧ η_j) M([η_j])``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not pd.hypothesis_3_2:
        raise HypothesisViolated("diameters equal weights only when every vertex receives two edges of each color")
    ps = path_space(g)
    paths = ps.paths(depth, cap)
    P = len(paths)
    if P * P > enumeration_cap(cap):
        raise TooLarge(f"dense {P}x{P} Laplacian exceeds the cap")
    M = level_measures(g, pd, depth)
    L = np.zeros((P, P))
    if g.num_vertices > 1:
        L[:, :] = M[None, :] * laplace_coeff(g, pd, ROOT, s, delta)
    for level in range(depth):
        starts = _block_starts(ps, depth, level)
        coef = {}
        for i, gamma in enumerate(ps.levels[level]):
            key = gamma.source
            if key not in coef:
                coef[key] = laplace_coeff(g, pd, gamma, s, delta)
            lo, hi = starts[i], starts[i + 1]
            L[lo:hi, lo:hi] = coef[key] * M[None, lo:hi]
    np.fill_diagonal(L, 0.0)
    L[np.diag_indices(P)] = -L.sum(axis=1)
    return L


def apply_matrix(L: np.ndarray, f: CylinderFunction, depth: int) -> CylinderFunction:
    f = refine(f, depth)
    return CylinderFunction(f.graph, depth, L @ f.coeffs)


def rayleigh_quotient(g: KGraph, pd: PerronData, L: np.ndarray, depth: int, f: CylinderFunction) -> float:
    f = refine(f, depth)
    M = level_measures(g, pd, depth)
    return float(np.dot(f.coeffs * M, L @ f.coeffs) / np.dot(f.coeffs * M, f.coeffs))


def extracted_eigenvalue(g: KGraph, pd: PerronData, node, s: float, delta: float, depth: int) -> float:
    """Magnitude of the Rayleigh quotient of the first ``E_node`` basis vector."""
    L = assemble_delta(g, pd, delta, s, depth)
    return abs(rayleigh_quotient(g, pd, L, depth, eigenspace_basis(g, pd, node)[0]))


def weighted_rank(B: np.ndarray, weights: np.ndarray, rel: float = 1e-9) -> int:
    if B.size == 0:
        return 0
    sv = np.linalg.svd(np.sqrt(weights)[:, None] * B, compute_uv=False)
    return int(np.sum(sv > rel * sv[0]))


@dataclass
class EigenReport:
    depth: int
    s_values: tuple
    residuals: list  # dicts: node, s, index, lambda, residual
    max_residual: float
    max_gram_offdiag: float
    rank: int
    dimension: int
    raw_sign: int

    @property
    def complete(self) -> bool:
        return self.rank == self.dimension

    def passed(self, residual_tol: float = 1e-8, gram_tol: float = 1e-10) -> bool:
        return self.max_residual <= residual_tol and self.max_gram_offdiag <= gram_tol and self.complete


def verify_eigenpairs(g: KGraph, pd: PerronData, delta: float, s_values, depth: int) -> EigenReport:
    """Check every known eigenspace up to level ``depth - 1`` against the assembled operator."""
    if depth < 2:
        raise ValueError("depth must be at least 2")
    M = level_measures(g, pd, depth)
    nodes = nodes_up_to(g, depth - 1)
    funcs, owner = [], []
    for node_id, node in enumerate(nodes):
        for f in eigenspace_basis(g, pd, node):
            funcs.append(refine(f, depth).coeffs)
            owner.append(node_id)
    F = np.column_stack(funcs)
    owner = np.array(owner)
    norms = np.sqrt(np.einsum("ij,ij,i->j", F, F, M))

    rows = []
    signs = set()
    for s in s_values:
        L = assemble_delta(g, pd, delta, s, depth)
        LF = L @ F
        for col, node_id in enumerate(owner):
            node = nodes[node_id]
            lam = lambda_gamma(g, pd, node, s, delta)
            r = LF[:, col] - RAW_SIGN * lam * F[:, col]
            res = float(np.sqrt(np.dot(r * r, M)) / norms[col])
            rows.append({"node": node, "s": s, "lambda": lam, "residual": res})
            q = float(np.dot(F[:, col] * M, LF[:, col]))
            if lam > 0:
                signs.add(int(np.sign(q)))

    G = F.T @ (M[:, None] * F)
    Gn = G / np.outer(norms, norms)
    distinct = owner[:, None] != owner[None, :]
    max_off = float(np.max(np.abs(Gn[distinct]))) if distinct.any() else 0.0
    raw_sign = signs.pop() if len(signs) == 1 else 0
    return EigenReport(
        depth=depth,
        s_values=tuple(s_values),
        residuals=rows,
        max_residual=max(r["residual"] for r in rows),
        max_gram_offdiag=max_off,
        rank=weighted_rank(F, M),
        dimension=len(M),
        raw_sign=raw_sign,
    )
