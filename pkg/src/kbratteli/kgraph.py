"""Finite higher-rank graphs given by commuting adjacency matrices.

A k-graph on ``N`` vertices is stored as ``k`` nonnegative integer ``N x N``
matrices; ``A_i[v, w]`` counts the color-``i`` edges with range ``v`` and
source ``w``.  Everything here is exact integer bookkeeping except the
Perron-Frobenius data, which is computed in binary64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from numbers import Integral, Real

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    InconsistentEigenvector,
    NegativeOrNonIntegerEntry,
    NoConvergence,
    NonCommuting,
    NotStronglyConnected,
    SourceVertex,
    ValidationError,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAXITER = 100_000


@dataclass(frozen=True)
class KGraph:
    """A validated finite, source-free, strongly connected k-graph.

    Build instances with :func:`validate_kgraph`; the constructor does not
    check anything.
    """

    k: int
    num_vertices: int
    matrices: tuple[tuple[tuple[int, ...], ...], ...]
    hypothesis_3_2: bool = False
    cantor: bool = False

    @cached_property
    def arrays(self) -> tuple[np.ndarray, ...]:
        out = []
        for m in self.matrices:
            a = np.array(m, dtype=np.int64)
            a.setflags(write=False)
            out.append(a)
        return tuple(out)

    @cached_property
    def float_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(a.astype(float) for a in self.arrays)

    def color(self, level: int) -> int:
        """0-based color of the edges between levels ``level - 1`` and ``level``."""
        if level < 1:
            raise ValueError("edge levels start at 1")
        return (level - 1) % self.k

    def product(self) -> np.ndarray:
        """Integer matrix ``A = A_1 ... A_k``."""
        return reduce(np.matmul, self.arrays)

    @property
    def capabilities(self) -> dict:
        return {"hypothesis_3_2": self.hypothesis_3_2, "cantor": self.cantor}


@dataclass(frozen=True, eq=False)
class PerronData:
    rho: tuple[float, ...]
    x: np.ndarray
    rho_prod: float
    period_p: int
    limit_matrices: tuple[np.ndarray, ...]
    hypothesis_3_2: bool
    product_irreducible: bool
    tol: float = DEFAULT_TOL
    iterations: int = field(default=0, compare=False)

    def scale(self, n: int) -> float:
        """``rho_1^{q+1} ... rho_t^{q+1} rho_{t+1}^q ... rho_k^q`` for ``n = qk + t``."""
        k = len(self.rho)
        q, t = divmod(n, k)
        return self.rho_prod**q * math.prod(self.rho[:t])


def _as_int_matrix(m, n: int, idx: int) -> tuple[tuple[int, ...], ...]:
    rows = []
    if len(m) != n:
        raise ValidationError(f"A_{idx + 1} has {len(m)} rows, expected {n}")
    for r, row in enumerate(m):
        if len(row) != n:
            raise ValidationError(f"A_{idx + 1} row {r} has {len(row)} entries, expected {n}")
        out = []
        for c, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, Real):
                raise NegativeOrNonIntegerEntry(f"A_{idx + 1}[{r},{c}] = {v!r} is not an integer")
            if not isinstance(v, Integral):
                if not float(v).is_integer():
                    raise NegativeOrNonIntegerEntry(f"A_{idx + 1}[{r},{c}] = {v!r} is not an integer")
                v = int(v)
            if v < 0:
                raise NegativeOrNonIntegerEntry(f"A_{idx + 1}[{r},{c}] = {v} is negative")
            out.append(int(v))
        rows.append(tuple(out))
    return tuple(rows)


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for w in np.flatnonzero(adj[u]):
            if not seen[w]:
                seen[w] = True
                stack.append(int(w))
    return seen


def is_strongly_connected(adj: np.ndarray) -> bool:
    adj = np.asarray(adj) > 0
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())


def validate_kgraph(k: int, N: int, matrices) -> KGraph:
    """Check the k-graph axioms for ``matrices`` and return a :class:`KGraph`.

    The checks run in a fixed order (shape, entries, commutation, sources,
    connectivity) so the same input always raises the same error.
    """
    if isinstance(k, bool) or not isinstance(k, Integral) or k < 1:
        raise ValidationError(f"rank k must be a positive integer, got {k!r}")
    if isinstance(N, bool) or not isinstance(N, Integral) or N < 1:
        raise ValidationError(f"num_vertices must be a positive integer, got {N!r}")
    if len(matrices) != k:
        raise ValidationError(f"expected {k} matrices, got {len(matrices)}")
    mats = tuple(_as_int_matrix(m, N, i) for i, m in enumerate(matrices))
    arrs = [np.array(m, dtype=object) for m in mats]

    for i in range(k):
        for j in range(i + 1, k):
            if not np.array_equal(arrs[i].dot(arrs[j]), arrs[j].dot(arrs[i])):
                raise NonCommuting(i, j)
    for i, a in enumerate(arrs):
        sums = a.sum(axis=1)
        for v in range(N):
            if sums[v] == 0:
                raise SourceVertex(f"vertex {v} receives no edge of color {i + 1}")
    union = sum(np.array(m, dtype=np.int64) for m in mats)
    if not is_strongly_connected(union):
        raise NotStronglyConnected("the union digraph A_1 + ... + A_k is not strongly connected")

    hyp = all(min(sum(row) for row in m) >= 2 for m in mats)
    g = KGraph(k=int(k), num_vertices=int(N), matrices=mats, hypothesis_3_2=hyp)
    x, _ = _perron_vector(g, DEFAULT_TOL, DEFAULT_MAXITER)
    rho = [float((a @ x)[np.argmax(x)] / x.max()) for a in g.float_arrays]
    cantor = math.prod(rho) > 1 + 1e-9
    return KGraph(k=int(k), num_vertices=int(N), matrices=mats, hypothesis_3_2=hyp, cantor=cantor)


def _perron_vector(g: KGraph, tol: float, maxiter: int) -> tuple[np.ndarray, int]:
    # shift by I: irreducible + I is primitive, same Perron vector
    S = sum(g.float_arrays) + np.eye(g.num_vertices)
    x = np.full(g.num_vertices, 1.0 / g.num_vertices)
    for it in range(1, maxiter + 1):
        y = S @ x
        y /= y.sum()
        if np.max(np.abs(y - x)) < tol:
            break
        x = y
    else:
        raise NoConvergence(f"power iteration did not converge in {maxiter} iterations")
    # polish towards machine precision while the steps keep shrinking
    step = np.max(np.abs(y - x))
    for _ in range(2000):
        x, y = y, S @ y
        y /= y.sum()
        new = np.max(np.abs(y - x))
        it += 1
        if new == 0.0 or new >= step:
            break
        step = new
    return y / y.sum(), it


def graph_period(adj: np.ndarray) -> int:
    """Cyclic period of a nonnegative matrix.

    For irreducible ``adj`` this is the gcd of all cycle lengths.  A reducible
    matrix gets the lcm of the periods of its nontrivial strongly connected
    components, which is the period of the sequence ``adj^n / rho^n``.
    """
    adj = np.asarray(adj) > 0
    ncomp, labels = connected_components(csr_matrix(adj.astype(np.int8)), directed=True, connection="strong")
    periods = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        sub = adj[np.ix_(members, members)]
        if not sub.any():
            continue
        level = np.full(len(members), -1)
        level[0] = 0
        queue = [0]
        for u in queue:
            for w in np.flatnonzero(sub[u]):
                if level[w] < 0:
                    level[w] = level[u] + 1
                    queue.append(int(w))
        g = 0
        for u, w in zip(*np.nonzero(sub)):
            g = math.gcd(g, int(level[u] + 1 - level[w]))
        periods.append(g)
    if not periods:
        return 1
    return reduce(lambda a, b: a * b // math.gcd(a, b), periods)


def _limit_matrices(A: np.ndarray, rho: float, p: int, x: np.ndarray, tol: float,
                    maxiter: int) -> tuple[list[np.ndarray], int]:
    # Repeated squaring of (A/rho)^p.  Each square is rescaled so that the
    # Perron ratio on x stays exactly 1, which cancels the (1 + eps)^n drift
    # a slightly inaccurate rho would otherwise cause.
    B = A / rho
    X = np.linalg.matrix_power(B, p)
    for it in range(1, min(maxiter, 200) + 1):
        Y = X @ X
        Y /= float((Y @ x).sum() / x.sum())
        if np.max(np.abs(Y - X)) <= tol * max(1.0, float(np.max(np.abs(Y)))):
            X = Y
            break
        X = Y
    else:
        raise NoConvergence("normalized powers of A did not settle")
    out = [X]
    for _ in range(1, p):
        out.append(out[-1] @ B)
    return out, it


def perron_data(g: KGraph, tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER) -> PerronData:
    x, iters = _perron_vector(g, tol, maxiter)
    rho = []
    for i, a in enumerate(g.float_arrays):
        ratios = (a @ x) / x
        r = float(ratios[np.argmax(x)])
        if np.max(np.abs(a @ x - r * x)) > 10 * tol:
            raise InconsistentEigenvector(
                f"x is not an eigenvector of A_{i + 1} (max deviation {np.max(np.abs(a @ x - r * x)):.3e})"
            )
        rho.append(r)
    A = g.product().astype(float)
    rho_prod = math.prod(rho)
    p = graph_period(g.product())
    limits, it2 = _limit_matrices(A, rho_prod, p, x, tol, maxiter)
    for m in limits:
        m.setflags(write=False)
    x.setflags(write=False)
    return PerronData(
        rho=tuple(rho),
        x=x,
        rho_prod=rho_prod,
        period_p=p,
        limit_matrices=tuple(limits),
        hypothesis_3_2=g.hypothesis_3_2,
        product_irreducible=is_strongly_connected(g.product()),
        tol=tol,
        iterations=iters + it2,
    )
