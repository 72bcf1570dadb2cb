"""Pearson-Bellissard spectral triples on k-graph path spaces.

Submodules: :mod:`.kgraph` (validation and Perron-Frobenius data),
:mod:`.bratteli` (paths, weights, measure, metric), :mod:`.spectral`
(zeta function and Dixmier traces), :mod:`.laplacian` (Laplace-Beltrami
operators), :mod:`.wavelets` (Cuntz-Krieger operators and wavelets) and
:mod:`.cli`.
"""

from .bratteli import (
    BratteliPath,
    count_paths,
    diam_bruteforce,
    distance,
    enumerate_paths,
    format_path,
    measure_M,
    parse_path,
    weight_delta,
)
from .cylinder import CylinderFunction, indicator, inner_product, refine
from .errors import *  # noqa: F401,F403
from .kgraph import KGraph, PerronData, perron_data, validate_kgraph
from .laplacian import CONSTANTS, ROOT, assemble_delta, eigenspace_basis, lambda_gamma, verify_eigenpairs
from .spectral import (
    SpectralConfig,
    dixmier_mu,
    dixmier_mu_closed,
    dixmier_total,
    integrate,
    nu,
    zeta,
    zeta_partial,
)
from .wavelets import apply_S, apply_S_adjoint, mother_functions, verify_ck, verify_refinement, wavelet_basis

__version__ = "0.1.0"
