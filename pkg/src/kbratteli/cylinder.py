"""Functions on the infinite path space that are constant on cylinders.

A :class:`CylinderFunction` of depth ``N`` stores one coefficient per
length-``N`` path, in the enumeration order of :mod:`kbratteli.bratteli`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bratteli import BratteliPath, DepthMismatch, level_measures, path_space
from .kgraph import KGraph, PerronData


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    graph: KGraph
    depth: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        n = len(path_space(self.graph).paths(self.depth))
        if c.shape != (n,):
            raise DepthMismatch(f"depth {self.depth} needs {n} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other):
        a, b = _common(self, other)
        return CylinderFunction(self.graph, a.depth, a.coeffs + b.coeffs)

    def __sub__(self, other):
        a, b = _common(self, other)
        return CylinderFunction(self.graph, a.depth, a.coeffs - b.coeffs)

    def __mul__(self, c: float):
        return CylinderFunction(self.graph, self.depth, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def pointwise(self, other: "CylinderFunction") -> "CylinderFunction":
        a, b = _common(self, other)
        return CylinderFunction(self.graph, a.depth, a.coeffs * b.coeffs)


def refine(f: CylinderFunction, N: int) -> CylinderFunction:
    """Same function written on the depth-``N`` cylinders."""
    if N < f.depth:
        raise DepthMismatch(f"cannot refine depth {f.depth} down to {N}")
    ps = path_space(f.graph)
    ps.paths(N)
    c = f.coeffs
    for d in range(f.depth, N):
        c = np.repeat(c, ps.child_counts(d))
    return CylinderFunction(f.graph, N, c)


def _common(f: CylinderFunction, h: CylinderFunction) -> tuple[CylinderFunction, CylinderFunction]:
    if f.graph != h.graph:
        raise ValueError("functions live on different graphs")
    N = max(f.depth, h.depth)
    return refine(f, N), refine(h, N)


def indicator(g: KGraph, path: BratteliPath, depth: int | None = None) -> CylinderFunction:
    """``χ_[path]`` at depth ``max(|path|, depth)``."""
    ps = path_space(g)
    n = len(path)
    c = np.zeros(len(ps.paths(n)))
    c[ps.index(path)] = 1.0
    f = CylinderFunction(g, n, c)
    return refine(f, depth) if depth is not None and depth > n else f


def constant(g: KGraph, value: float = 1.0) -> CylinderFunction:
    return CylinderFunction(g, 0, np.full(g.num_vertices, float(value)))


def inner_product(g: KGraph, pd: PerronData, f: CylinderFunction, h: CylinderFunction) -> float:
    """``∫ f h dM`` computed at the deeper of the two depths."""
    a, b = _common(f, h)
    return float(np.dot(a.coeffs * b.coeffs, level_measures(g, pd, a.depth)))


def integral_M(g: KGraph, pd: PerronData, f: CylinderFunction) -> float:
    return float(np.dot(f.coeffs, level_measures(g, pd, f.depth)))


def norm(g: KGraph, pd: PerronData, f: CylinderFunction) -> float:
    return float(np.sqrt(inner_product(g, pd, f, f)))
