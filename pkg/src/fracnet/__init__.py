"""Stability and H2 robustness analysis of commensurate fractional-order networks."""

from __future__ import annotations

__version__ = "0.1.0"

from fracnet.core import (
    AccuracyError,
    CyclicSpec,
    DisconnectedGraphError,
    EigenSolverError,
    FracnetError,
    FractionalSystem,
    H2Method,
    H2Report,
    InfeasibleError,
    NotNormalError,
    Spectrum,
    StabilityKind,
    StabilityVerdict,
    UnstableSystemError,
    ValidationError,
    WeightedGraph,
    compile_cyclic,
    validate_system,
)
from fracnet.ensemble import (
    EnsembleConfig,
    generate_ensemble,
    pole_cloud,
    sample_log_fixed_sum,
)
from fracnet.robustness import (
    h2_consensus,
    h2_cyclic,
    h2_normal,
    h2_quadrature,
)
from fracnet.simulation import (
    consensus_limit,
    gl_integrate,
    impulse_energy,
    mittag_leffler,
)
from fracnet.spectral import eigenvalues, laplacian, uniform_cyclic_poles
from fracnet.stability import assess_cyclic, matignon_verdict, secant_bound

__all__ = [
    "AccuracyError",
    "CyclicSpec",
    "DisconnectedGraphError",
    "EigenSolverError",
    "EnsembleConfig",
    "FracnetError",
    "FractionalSystem",
    "H2Method",
    "H2Report",
    "InfeasibleError",
    "NotNormalError",
    "Spectrum",
    "StabilityKind",
    "StabilityVerdict",
    "UnstableSystemError",
    "ValidationError",
    "WeightedGraph",
    "assess_cyclic",
    "compile_cyclic",
    "consensus_limit",
    "eigenvalues",
    "generate_ensemble",
    "gl_integrate",
    "h2_consensus",
    "h2_cyclic",
    "h2_normal",
    "h2_quadrature",
    "impulse_energy",
    "laplacian",
    "matignon_verdict",
    "mittag_leffler",
    "pole_cloud",
    "sample_log_fixed_sum",
    "secant_bound",
    "uniform_cyclic_poles",
    "validate_system",
]
