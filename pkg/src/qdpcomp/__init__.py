"""Quantum differential privacy: exact verification, moments accountant,
composition calculators and adversarial falsification."""

__version__ = "0.1.0"

from .channels import (  # noqa: E402
    DensityOperator, KrausChannel, MeasurementOperator, NeighborRelation, Povm, StateMap,
    apply, compose_factorized, compose_tensor, marginal_channel, product_relation,
)
from .divergences import (  # noqa: E402
    PrivacyCurve, QDPVerdict, d_mmgf, d_petz, d_sandwiched, delta_min, mmgf,
    privacy_curve, privacy_loss_operator, verify_qdp,
)
from .accountant import (  # noqa: E402
    AccountantResult, MomentCurveFit, MomentProfile, PrivacyParams, moments_profile,
    profile_add, qma_to_measured_rdp, rdp_to_dp,
)

__all__ = [
    "__version__",
    "DensityOperator", "KrausChannel", "MeasurementOperator", "NeighborRelation", "Povm",
    "StateMap", "apply", "compose_factorized", "compose_tensor", "marginal_channel",
    "product_relation", "PrivacyCurve", "QDPVerdict", "d_mmgf", "d_petz", "d_sandwiched",
    "delta_min", "mmgf", "privacy_curve", "privacy_loss_operator", "verify_qdp",
    "AccountantResult", "MomentCurveFit", "MomentProfile", "PrivacyParams",
    "moments_profile", "profile_add", "qma_to_measured_rdp", "rdp_to_dp",
]
