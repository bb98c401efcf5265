"""Discrete harmonic measure toolkit for simple random walk on Z^2.

Exact linear-algebra solvers and Monte Carlo estimators for hitting
distributions of half-plane-plus-obstacle sets, the potential kernel of the
planar walk, stationary and inharmonic boundary measures, and a suite of
convergence checks with reproducible evidence files.
"""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    DEFAULT_GROWTH,
    GrowthCertificate,
    HalfPlaneSet,
    LINE,
    Site,
    TruncatedSet,
    Window,
    column_set,
    line_plus,
    make_window,
    set_from_json,
    truncate,
)
from .potential import KAPPA, PotentialKernel, get_kernel, hm_infinity  # noqa: F401
