"""Acceptance gate: one PASS/FAIL line per criterion, printed after the run.

Run with ``pytest tests/test_acceptance.py -v`` (or ``python3 tests/test_acceptance.py``).
Tolerances are the ones the criteria state; nothing here is relaxed.
"""

import math
import random
import time

import numpy as np
import pytest

from kbratteli import instances, spectral
from kbratteli.bratteli import (
    BratteliPath,
    diam_bruteforce,
    distance,
    enumerate_paths,
    level_measures,
    measure_M,
    path_space,
    weight_delta,
)
from kbratteli.errors import OutsideHalfPlane
from kbratteli.kgraph import perron_data
from kbratteli.laplacian import ROOT, extracted_eigenvalue, verify_eigenpairs
from kbratteli.spectral import SpectralConfig, dixmier_mu, dixmier_mu_closed, dixmier_total, nu, zeta, zeta_partial
from kbratteli.wavelets import verify_ck, verify_refinement

from conftest import record

DELTAS = (0.3, 0.5, 0.8)


def fresh(name):
    # new graph objects so the per-graph caches start cold for timing
    spectral._mu_extrapolated.cache_clear()
    spectral.calibrate_constant.cache_clear()
    g = instances.load(getattr(instances, name))
    return g, perron_data(g)


def both():
    return [("Lambda2", fresh("LAMBDA2")), ("EX-B", fresh("EX_B"))]


def random_path(g, length, rng):
    p = BratteliPath(rng.randrange(g.num_vertices))
    for n in range(1, length + 1):
        row = g.matrices[g.color(n)][p.source]
        p = p.extend(rng.choice([(w, j) for w in range(g.num_vertices) for j in range(row[w])]))
    return p


def gate(n, ok, detail):
    record(n, bool(ok), detail)
    assert ok, detail


def test_criterion_01_dixmier_total_lambda2():
    t0 = time.perf_counter()
    g, pd = fresh("LAMBDA2")
    errs = [abs(dixmier_total(g, pd, d) - 2.0 / math.log(2.0)) for d in DELTAS]
    elapsed = time.perf_counter() - t0
    gate(1, max(errs) <= 1e-6 and elapsed < 1.0, f"max |total - 2/ln2| = {max(errs):.2e}, runtime {elapsed:.3f}s")


def test_criterion_02_zeta_closed_form():
    g, pd = fresh("LAMBDA2")
    worst = 0.0
    for d in DELTAS:
        for r in (1.2, 2.0, 3.0):
            exact = 1.0 / (1.0 - 2.0 ** (1.0 - r))
            worst = max(worst, abs(zeta(g, pd, d, r * d) - exact) / exact)
    gate(2, worst <= 1e-12, f"max relative error {worst:.2e}")


def test_criterion_03_abscissa():
    errors_ok = True
    details = []
    ratio_ok = True
    for name, (g, pd) in both():
        for s in (0.5, 0.4):
            try:
                zeta(g, pd, 0.5, s)
                errors_ok = False
            except OutsideHalfPlane:
                pass
        a = zeta_partial(g, pd, 0.5, 0.5, 30)
        b = zeta_partial(g, pd, 0.5, 0.5, 60)
        ratio_ok &= b > 10 * a
        details.append(f"{name}: P60/P30 = {b:.1f}/{a:.1f} = {b / a:.3f}")
    gate(3, errors_ok and ratio_ok,
         f"zeta raises for s <= delta: {errors_ok}; depth-60 > 10 x depth-30: {ratio_ok} ({'; '.join(details)})")


def test_criterion_04_measure_identification():
    t0 = time.perf_counter()
    g, pd = fresh("EX_B")
    worst = 0.0
    spread = 0.0
    for n in range(5):
        for lam in enumerate_paths(g, n):
            vals = [nu(g, pd, lam, d, SpectralConfig(delta=d)) for d in DELTAS]
            m = measure_M(g, pd, lam)
            worst = max(worst, max(abs(v - m) for v in vals))
            spread = max(spread, max(vals) - min(vals))
    elapsed = time.perf_counter() - t0
    gate(4, worst <= 1e-6 and spread <= 1e-6 and elapsed < 10.0,
         f"max |nu - M| = {worst:.2e}, delta spread {spread:.2e}, runtime {elapsed:.2f}s")


def test_criterion_05_method_cross_check():
    g, pd = fresh("EX_B")
    worst = 0.0
    constants = []
    for d in DELTAS:
        cfg = SpectralConfig(delta=d)
        constants.append(spectral.calibrate_constant(g, pd, cfg))
        for n in (0, 2, 4):
            for lam in enumerate_paths(g, n):
                a = dixmier_mu(g, pd, lam, cfg).value
                b = dixmier_mu_closed(g, pd, lam, d, cfg).value
                worst = max(worst, abs(a - b))
    stable = len(set(constants)) == 1
    gate(5, worst <= 1e-6 and stable, f"max |extrapolated - closed| = {worst:.2e}, calibration constant C = {constants}")


def test_criterion_06_laplacian_eigenpairs():
    details, ok = [], True
    for name, (g, pd) in both():
        rep = verify_eigenpairs(g, pd, 0.5, (0.5, 2.0), 3)
        per_s = {s: max(r["residual"] for r in rep.residuals if r["s"] == s) for s in (0.5, 2.0)}
        ok &= max(per_s.values()) <= 1e-8
        details.append(f"{name}: " + ", ".join(f"s={s}: {v:.1e}" for s, v in per_s.items()))
    gate(6, ok, "max relative residual " + "; ".join(details))


def test_criterion_07_E0_eigenvalue():
    g, pd = fresh("EX_B")
    M = [measure_M(g, pd, BratteliPath(v)) for v in range(2)]
    target = 2.0 / sum(M[a] * M[b] for a in range(2) for b in range(2) if a != b)
    vals = [extracted_eigenvalue(g, pd, ROOT, s, 0.5, 3) for s in (0.5, 2.0)]
    err = max(abs(v - 4.0) for v in vals)
    gate(7, err <= 1e-8 and target == 4.0, f"extracted |lambda_0| = {vals}, formula value {target}")


def test_criterion_08_orthogonality_completeness():
    ok, details = True, []
    for name, (g, pd) in both():
        rep = verify_eigenpairs(g, pd, 0.5, (1.0,), 3)
        ok &= rep.max_gram_offdiag <= 1e-10 and rep.complete
        details.append(f"{name}: gram {rep.max_gram_offdiag:.1e}, rank {rep.rank}/{rep.dimension}")
    gate(8, ok, "; ".join(details))


def test_criterion_09_wavelet_refinement():
    ok, details = True, []
    for name, (g, pd) in both():
        for n in (0, 1):
            rep = verify_refinement(g, pd, 0.5, n, tol=1e-8)
            res = max(rep.residual_E_in_W, rep.residual_W_in_E, rep.v0_residual)
            ok &= res <= 1e-8 and rep.dim_W == rep.dim_E
            details.append(f"{name} n={n}: dim {rep.dim_W}={rep.dim_E}, res {res:.1e}")
    gate(9, ok, "; ".join(details))


def test_criterion_10_ck_relations():
    ok, details = True, []
    for name, (g, pd) in both():
        rep = verify_ck(g, pd, 4)
        worst = max(rep[k] for k in ("CK1", "CK2", "CK3", "CK4"))
        ok &= worst <= 1e-10
        details.append(f"{name}: {worst:.1e}")
    gate(10, ok, "max CK residual " + "; ".join(details))


def test_criterion_11_measure_metric_properties():
    problems = []
    for name, (g, pd) in both():
        ps = path_space(g)
        # self-similarity for square lambda, |lambda eta| <= 8
        for L in range(0, 9, g.k):
            for lam in ps.paths(L):
                for m in range(0, 9 - L):
                    for eta in enumerate_paths(g, m, BratteliPath(lam.source)):
                        lhs = measure_M(g, pd, lam.concat(eta))
                        rhs = measure_M(g, pd, eta) / pd.rho_prod ** (L // g.k)
                        if abs(lhs - rhs) > 1e-12 * rhs:
                            problems.append(f"{name} self-similarity {lam}.{eta}")
        # one-level additivity
        for n in range(8):
            parent = level_measures(g, pd, n)
            kids = np.add.reduceat(level_measures(g, pd, n + 1), ps.child_ptr[n][:-1])
            if np.max(np.abs(kids - parent)) > 1e-12:
                problems.append(f"{name} additivity at level {n}")
        # strong triangle inequality
        rng = random.Random(20240611)
        for _ in range(1000):
            a, b, c = (random_path(g, 8, rng) for _ in range(3))
            if distance(g, pd, a, c, 0.5) > max(distance(g, pd, a, b, 0.5), distance(g, pd, b, c, 0.5)):
                problems.append(f"{name} triangle {a} {b} {c}")
                break
        for d in DELTAS:
            if math.fsum(weight_delta(g, pd, BratteliPath(v), d) for v in range(g.num_vertices)) != 1.0:
                problems.append(f"{name} vertex weights at delta={d}")
    g, pd = fresh("EX_B")
    rng = random.Random(7)
    for _ in range(100):
        p = random_path(g, rng.randrange(0, 6), rng)
        if diam_bruteforce(g, pd, p, 3, 0.5) != weight_delta(g, pd, p, 0.5):
            problems.append(f"diam {p}")
    gate(11, not problems, "all properties hold" if not problems else f"{len(problems)} failures: {problems[:3]}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
