"""Heralded shaping of even/odd cat states from squeezed vacuum.

A squeezed vacuum and an ancilla (vacuum or one photon) meet on a beam
splitter; counting ``n`` photons in the reflected arm heralds a state in the
transmitted arm that approximates a cat state ``|beta> +- |-beta>``.
"""

__version__ = "0.1.0"

from .fock import (  # noqa: E402
    CatTarget,
    FockVector,
    Parity,
    TruncationError,
    cat_state,
    inner_product,
    mean_photon_number,
    smsv_state,
)
from .conditioning import (  # noqa: E402
    Ancilla,
    ConditionResult,
    HeraldOutcome,
    SchemeConfig,
    condition,
    herald_fidelity,
)
from .detector import (  # noqa: E402
    DetectorModel,
    imperfect_fidelity_closed,
    imperfect_fidelity_direct,
    lower_bound,
    series_coefficients,
)
from .optimizer import (  # noqa: E402
    SearchPolicy,
    beta_threshold,
    fidelity_isolines,
    maximize_fidelity,
    maximize_probability_with_floor,
)

__all__ = [
    "CatTarget", "FockVector", "Parity", "TruncationError", "cat_state", "inner_product",
    "mean_photon_number", "smsv_state", "Ancilla", "ConditionResult", "HeraldOutcome",
    "SchemeConfig", "condition", "herald_fidelity", "DetectorModel",
    "imperfect_fidelity_closed", "imperfect_fidelity_direct", "lower_bound",
    "series_coefficients", "SearchPolicy", "beta_threshold", "fidelity_isolines",
    "maximize_fidelity", "maximize_probability_with_floor",
]
