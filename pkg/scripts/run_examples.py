#!/usr/bin/env python3
"""Run the headline computations on the bundled instances and print a JSON report."""

import argparse
import json
import math

from kbratteli import instances
from kbratteli.bratteli import BratteliPath, enumerate_paths, measure_M
from kbratteli.cli import jsonable
from kbratteli.kgraph import perron_data
from kbratteli.laplacian import verify_eigenpairs
from kbratteli.spectral import SpectralConfig, calibrate_constant, dixmier_total, nu, zeta
from kbratteli.wavelets import verify_ck, verify_refinement

GRAPHS = {"lambda2": instances.LAMBDA2, "ex_b": instances.EX_B}


def report(doc, delta):
    g = instances.load(doc)
    pd = perron_data(g)
    cfg = SpectralConfig(delta=delta)
    out = {
        "rho": pd.rho,
        "x": pd.x,
        "period": pd.period_p,
        "zeta(2 delta)": zeta(g, pd, delta, 2 * delta),
        "dixmier_total": dixmier_total(g, pd, delta, cfg),
        "calibration_constant": calibrate_constant(g, pd, cfg),
        "max_|nu-M|_depth3": max(
            abs(nu(g, pd, lam, delta, cfg) - measure_M(g, pd, lam)) for n in range(4) for lam in enumerate_paths(g, n)
        ),
    }
    eig = verify_eigenpairs(g, pd, delta, (0.5, 2.0), 3)
    out["laplacian"] = {"max_residual": eig.max_residual, "max_gram": eig.max_gram_offdiag, "complete": eig.complete}
    out["ck"] = verify_ck(g, pd, 4)
    out["refinement_residual"] = max(
        max(r.residual_E_in_W, r.residual_W_in_E) for r in (verify_refinement(g, pd, delta, n) for n in (0, 1))
    )
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--graph", choices=sorted(GRAPHS), action="append")
    args = ap.parse_args()
    names = args.graph or sorted(GRAPHS)
    result = {name: report(GRAPHS[name], args.delta) for name in names}
    result["reference"] = {"2/ln2": 2 / math.log(2)}
    print(json.dumps(jsonable(result), indent=2))


if __name__ == "__main__":
    main()
