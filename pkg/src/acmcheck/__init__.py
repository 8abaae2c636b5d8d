"""Verification toolkit for almost contact metric and sub-Riemannian
structures given in adapted coordinates."""

__version__ = "0.1.0"

from .expr import Jet, ScalarField, evaluate_jet, parse  # noqa: F401
from .chart import (  # noqa: F401
    AdaptedChart,
    AdaptedTransition,
    TensorGrid,
    change_chart,
    d_eta_xi,
    frame_apply,
    omega_frame,
    rank_at,
)
from .structure import (  # noqa: F401
    AdaptedStructure,
    DerivedTensors,
    StructureEval,
    derived,
    exterior_derivative,
    validate_axioms,
)
from .connection import (  # noqa: F401
    ConnectionCoeffs,
    Endomorphism,
    canonical_connection,
    cov_phi,
    internal_cov_deriv,
    lc_adapted,
    lc_coordinate,
    metricity_defect,
    n_connection,
    torsion,
)
from .classify import (  # noqa: F401
    ClassificationReport,
    reeb_split_identity_residual,
    projection_identity_residual,
    aqs_characterization_residual,
    classify,
    nijenhuis_tensors,
)
from .curvature import (  # noqa: F401
    curvature_K,
    einstein_check,
    ricci_k,
    ricci_wagner,
    schouten,
)
from .manifest import Manifest, load_fixture, load_manifest  # noqa: F401
from .checks import RunReport, run_full_check  # noqa: F401
