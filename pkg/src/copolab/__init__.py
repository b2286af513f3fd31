"""Numerical laboratory for a disordered copolymer model on renewal paths.

The model lives on a discrete renewal process whose inter-arrival law
K(n) = L(n)/n has a slowly varying numerator, with IID charges attached to
the excursions below a solvent interface.  The package computes quenched,
restricted and annealed partition functions exactly (log-domain dynamic
programming plus a brute-force oracle), estimates the free energy by seeded
Monte Carlo, and evaluates the change-of-measure, rare-stretch and
second-moment constructions together with their closed-form bounds.
"""

__version__ = "0.1.0"

from . import bounds, estimators
from .disorder import (
    BINARY,
    GAUSSIAN,
    DisorderLaw,
    LawKind,
    RateFunctionEval,
    TiltParams,
    log_mgf,
    log_mgf_prime,
    q1,
    q2,
    rate_function,
    sample,
    sample_tilted,
)
from .kernel import (
    FamilyKind,
    RenewalKernel,
    SlowlyVaryingFamily,
    TiltedKernel,
    TiltTransform,
    build_kernel,
    check_eta_kernel,
    defect_Kk,
    defect_check_eta,
    independent_jumps_law,
    penalized_kernel,
    renewal_mass,
    tail_function,
)
from .partition import (
    Free,
    LogPartition,
    QuenchedInstance,
    RareStretch,
    Trimmed,
    brute_force_log_Z,
    fractional_moment_mc,
    log_Z,
    log_Z_restricted,
    log_Z_windowed,
    log_annealed_Z,
    make_instance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
