"""Entanglement harvesting by static detectors outside a BTZ black hole.

The package computes the leading-order joint state of two or three static
two-level detectors coupled to a conformal scalar field around a static BTZ
black hole, and the entanglement measures built from it (bipartite and
one-vs-rest negativities, pi-tangle).  A fast image-sum path does the work;
an independent double-integral oracle checks it.
"""

from ._version import __version__
from .geometry import (
    BtzBackground,
    PairGeometry,
    StaticDetector,
    alpha_pair,
    alpha_single,
    proper_distance,
    radius_at_distance,
)
from .quadrature import (
    BRANCH_SIGN,
    ConvergenceError,
    ImageSumControls,
    QuadratureControls,
    SingularIntegralSpec,
    fermi_gaussian,
    image_sum,
    singular_oscillatory,
)
from .correlators import (
    CorrelatorSet,
    DetectorConfiguration,
    OracleControls,
    WightmanEvaluator,
    calibrate_branch_sign,
    compute_correlators,
    oracle_elements,
    pair_correlator_C,
    pair_correlator_X,
    transition_probability,
)
from .entanglement import (
    DensityMatrix,
    EntanglementReport,
    assemble_rho3,
    assemble_rho_pair,
    ckw_check,
    negativity,
    negativity_perturbative,
    partial_transpose,
    pi_tangle,
    reduce_rho,
)
from .config import (
    NumericsConfig,
    RunConfig,
    SweepSpec,
    build_line,
    build_triangle,
    parse_config,
)
from .runner import run_point, run_sweep

__all__ = [
    "__version__",
    "BtzBackground",
    "StaticDetector",
    "PairGeometry",
    "proper_distance",
    "radius_at_distance",
    "alpha_single",
    "alpha_pair",
    "BRANCH_SIGN",
    "ConvergenceError",
    "QuadratureControls",
    "ImageSumControls",
    "SingularIntegralSpec",
    "fermi_gaussian",
    "singular_oscillatory",
    "image_sum",
    "DetectorConfiguration",
    "CorrelatorSet",
    "WightmanEvaluator",
    "OracleControls",
    "transition_probability",
    "pair_correlator_C",
    "pair_correlator_X",
    "compute_correlators",
    "oracle_elements",
    "calibrate_branch_sign",
    "DensityMatrix",
    "EntanglementReport",
    "assemble_rho3",
    "assemble_rho_pair",
    "reduce_rho",
    "partial_transpose",
    "negativity",
    "negativity_perturbative",
    "pi_tangle",
    "ckw_check",
    "RunConfig",
    "NumericsConfig",
    "SweepSpec",
    "build_triangle",
    "build_line",
    "parse_config",
    "run_point",
    "run_sweep",
]
