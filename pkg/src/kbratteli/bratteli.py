"""The stationary k-Bratteli diagram of a k-graph.

Level ``n`` edges (``n >= 1``) have color ``c(n) = (n - 1) mod k`` and there
are ``A_c[v, w]`` of them from level-``(n-1)`` vertex ``v`` to level-``n``
vertex ``w``.  An edge is identified by ``(w, j)`` with copy index
``0 <= j < A_c[v, w]``; paths are enumerated lexicographically in
``(root, (w_1, j_1), (w_2, j_2), ...)``.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DeltaOutOfRange,
    DepthMismatch,
    HypothesisViolated,
    InvalidPath,
    Overflow,
    TooLarge,
)
from .kgraph import KGraph, PerronData

DEFAULT_CAP = 10**7
INT64_MAX = 2**63 - 1


def enumeration_cap(cap: int | None = None) -> int:
    if cap is not None:
        return int(cap)
    env = os.environ.get("KBRATTELI_CAP")
    return int(env) if env else DEFAULT_CAP


@dataclass(frozen=True, order=True)
class BratteliPath:
    root: int
    steps: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def source(self) -> int:
        return self.steps[-1][0] if self.steps else self.root

    @property
    def range(self) -> int:
        return self.root

    def prefix(self, i: int) -> "BratteliPath":
        return BratteliPath(self.root, self.steps[:i])

    def extend(self, *steps: tuple[int, int]) -> "BratteliPath":
        return BratteliPath(self.root, self.steps + tuple(steps))

    def concat(self, other: "BratteliPath") -> "BratteliPath":
        if other.root != self.source:
            raise InvalidPath(f"cannot concatenate: s(λ)={self.source} but r(η)={other.root}")
        return BratteliPath(self.root, self.steps + other.steps)

    def common_prefix_length(self, other: "BratteliPath") -> int:
        """Number of shared steps, or -1 when the roots differ."""
        if self.root != other.root:
            return -1
        n = 0
        for a, b in zip(self.steps, other.steps):
            if a != b:
                break
            n += 1
        return n

    def __str__(self) -> str:
        return format_path(self)


_STEP_RE = re.compile(r"\((\d+),(\d+)\)")


def parse_path(text: str, g: KGraph | None = None) -> BratteliPath:
    """Parse ``<root>`` or ``<root>:(v1,j1)/(v2,j2)/...``."""
    text = text.strip().replace(" ", "")
    head, sep, tail = text.partition(":")
    if not head.isdigit():
        raise InvalidPath(f"bad root vertex in path literal {text!r}")
    steps = []
    if sep:
        if not tail:
            raise InvalidPath(f"empty step list in path literal {text!r}")
        for chunk in tail.split("/"):
            m = _STEP_RE.fullmatch(chunk)
            if m is None:
                raise InvalidPath(f"bad step {chunk!r} in path literal {text!r}")
            steps.append((int(m.group(1)), int(m.group(2))))
    path = BratteliPath(int(head), tuple(steps))
    if g is not None:
        check_path(g, path)
    return path


def format_path(path: BratteliPath) -> str:
    if not path.steps:
        return str(path.root)
    return f"{path.root}:" + "/".join(f"({v},{j})" for v, j in path.steps)


def check_path(g: KGraph, path: BratteliPath) -> None:
    N = g.num_vertices
    if not 0 <= path.root < N:
        raise InvalidPath(f"root {path.root} is not a vertex")
    v = path.root
    for n, (w, j) in enumerate(path.steps, start=1):
        if not 0 <= w < N:
            raise InvalidPath(f"level {n}: {w} is not a vertex")
        mult = g.matrices[g.color(n)][v][w]
        if not 0 <= j < mult:
            raise InvalidPath(f"level {n}: copy {j} but only {mult} color-{g.color(n) + 1} edges {v}->{w}")
        v = w


def _obj(a) -> np.ndarray:
    return np.array(a, dtype=object)


def level_product(g: KGraph, start: int, length: int) -> np.ndarray:
    """Exact integer product of the color matrices for levels ``start+1 .. start+length``."""
    out = _obj(np.eye(g.num_vertices, dtype=np.int64))
    for n in range(start + 1, start + length + 1):
        out = out.dot(_obj(g.matrices[g.color(n)]))
    return out


def count_paths(g: KGraph, pd: PerronData | None, n: int) -> int:
    """Number of length-``n`` paths, ``sum_{a,b} (A^q A_1 ... A_t)(a, b)``."""
    if n < 0:
        raise ValueError("path length must be nonnegative")
    q, t = divmod(n, g.k)
    A = level_product(g, 0, g.k)
    M = _obj(np.eye(g.num_vertices, dtype=np.int64))
    base = A
    e = q
    while e:
        if e & 1:
            M = M.dot(base)
        base = base.dot(base)
        e >>= 1
    M = M.dot(level_product(g, 0, t))
    total = int(M.sum())
    if total > INT64_MAX:
        raise Overflow(f"{total} paths of length {n} exceed the 64-bit range")
    return total


class PathSpace:
    """Lazily grown level-by-level enumeration of the finite paths of ``g``."""

    def __init__(self, g: KGraph):
        self.g = g
        self.levels: list[list[BratteliPath]] = [[BratteliPath(v) for v in range(g.num_vertices)]]
        self.sources: list[np.ndarray] = [np.arange(g.num_vertices)]
        # child_ptr[n][i]: first index at depth n+1 of the children of path i at depth n
        self.child_ptr: list[np.ndarray] = []
        self.parent: list[np.ndarray] = [np.full(g.num_vertices, -1)]
        self._index: dict[int, dict[BratteliPath, int]] = {}

    def _grow(self, n: int, cap: int) -> None:
        g = self.g
        while len(self.levels) <= n:
            d = len(self.levels)
            need = count_paths(g, None, d)
            if need > cap:
                raise TooLarge(f"{need} paths of length {d} exceed the enumeration cap {cap}")
            mat = g.matrices[g.color(d)]
            prev = self.levels[-1]
            out, src, par, ptr = [], [], [], []
            for i, p in enumerate(prev):
                ptr.append(len(out))
                row = mat[p.source]
                for w in range(g.num_vertices):
                    for j in range(row[w]):
                        out.append(BratteliPath(p.root, p.steps + ((w, j),)))
                        src.append(w)
                        par.append(i)
            ptr.append(len(out))
            self.child_ptr.append(np.array(ptr))
            self.levels.append(out)
            self.sources.append(np.array(src, dtype=np.int64))
            self.parent.append(np.array(par, dtype=np.int64))

    def paths(self, n: int, cap: int | None = None) -> list[BratteliPath]:
        self._grow(n, enumeration_cap(cap))
        return self.levels[n]

    def source_array(self, n: int, cap: int | None = None) -> np.ndarray:
        self._grow(n, enumeration_cap(cap))
        return self.sources[n]

    def index(self, path: BratteliPath, cap: int | None = None) -> int:
        n = len(path)
        self._grow(n, enumeration_cap(cap))
        if n not in self._index:
            self._index[n] = {p: i for i, p in enumerate(self.levels[n])}
        try:
            return self._index[n][path]
        except KeyError:
            raise InvalidPath(f"{format_path(path)} is not a path of the diagram") from None

    def block(self, path: BratteliPath, depth: int, cap: int | None = None) -> tuple[int, int]:
        """Index range at ``depth`` of the extensions of ``path``."""
        n = len(path)
        if depth < n:
            raise DepthMismatch(f"depth {depth} is shorter than the path ({n})")
        lo = hi = self.index(path, cap)
        hi = lo + 1
        self._grow(depth, enumeration_cap(cap))
        for d in range(n, depth):
            lo, hi = int(self.child_ptr[d][lo]), int(self.child_ptr[d][hi])
        return lo, hi

    def ancestor_index(self, depth: int, level: int) -> np.ndarray:
        """For every path at ``depth``, the index of its length-``level`` prefix."""
        idx = np.arange(len(self.levels[depth]))
        for d in range(depth, level, -1):
            idx = self.parent[d][idx]
        return idx

    def child_counts(self, n: int) -> np.ndarray:
        self._grow(n + 1, enumeration_cap(None))
        return np.diff(self.child_ptr[n])


@lru_cache(maxsize=64)
def path_space(g: KGraph) -> PathSpace:
    return PathSpace(g)


def enumerate_paths(g: KGraph, n: int, prefix: BratteliPath | None = None, cap: int | None = None) -> list[BratteliPath]:
    ps = path_space(g)
    if prefix is None:
        return list(ps.paths(n, cap))
    check_path(g, prefix)
    if n < len(prefix):
        raise DepthMismatch(f"length {n} is shorter than the prefix ({len(prefix)})")
    lo, hi = ps.block(prefix, n, cap)
    return ps.levels[n][lo:hi]


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")


def weight_delta(g: KGraph, pd: PerronData, path: BratteliPath, delta: float, require_hypothesis: bool = True) -> float:
    """``w_δ(η) = scale(|η|)^{-1/δ} x_{s(η)}``."""
    _check_delta(delta)
    if require_hypothesis and not pd.hypothesis_3_2:
        raise HypothesisViolated("some vertex receives fewer than two edges of a color")
    return pd.scale(len(path)) ** (-1.0 / delta) * float(pd.x[path.source])


def measure_M(g: KGraph, pd: PerronData, path: BratteliPath) -> float:
    return float(pd.x[path.source]) / pd.scale(len(path))


def level_measures(g: KGraph, pd: PerronData, depth: int) -> np.ndarray:
    """``M([λ])`` for every length-``depth`` path, in enumeration order."""
    return pd.x[path_space(g).source_array(depth)] / pd.scale(depth)


def level_weights(g: KGraph, pd: PerronData, depth: int, delta: float) -> np.ndarray:
    _check_delta(delta)
    return pd.x[path_space(g).source_array(depth)] * pd.scale(depth) ** (-1.0 / delta)


def distance(g: KGraph, pd: PerronData, a: BratteliPath, b: BratteliPath, delta: float,
             require_hypothesis: bool = True) -> float:
    """Ultrametric between the infinite paths represented by two truncations.

    Returns 0 when the truncations coincide (the paths are equal as far as
    this depth can tell).
    """
    if len(a) != len(b):
        raise DepthMismatch(f"paths of lengths {len(a)} and {len(b)}")
    n = a.common_prefix_length(b)
    if n < 0:
        return 1.0
    if n == len(a):
        return 0.0
    return weight_delta(g, pd, a.prefix(n), delta, require_hypothesis)


def diam_bruteforce(g: KGraph, pd: PerronData, path: BratteliPath, extra_depth: int, delta: float,
                    cap: int | None = None) -> float:
    """Largest distance between two extensions of ``path`` by ``extra_depth`` levels."""
    if extra_depth < 1:
        raise ValueError("extra_depth must be at least 1")
    ext = enumerate_paths(g, len(path) + extra_depth, path, cap)
    if len(ext) ** 2 > enumeration_cap(cap):
        raise TooLarge(f"{len(ext)}^2 extension pairs exceed the cap")
    best = 0.0
    for i, a in enumerate(ext):
        for b in ext[i + 1:]:
            best = max(best, distance(g, pd, a, b, delta, require_hypothesis=False))
    return best
