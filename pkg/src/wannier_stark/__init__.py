"""Classical threshold law for two-electron escape in a static electric field."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ContourGrid,
    DomainError,
    PhaseState,
    SymmetricState,
    SystemParams,
    contour_grid,
    equations_of_motion,
    grad_potential_full,
    hamiltonian_full,
    hamiltonian_symmetric,
    hessian_potential_full,
    potential_full,
    potential_symmetric,
)
from .saddle import (  # noqa: E402
    ExponentRecord,
    SaddleInfo,
    StabilitySpectrum,
    exponent_table,
    mu_squared,
    nu_squared,
    saddle_analytic,
    saddle_numeric,
    shape_parameter,
    stability_spectrum,
    threshold_exponent,
    wannier_exponent,
)
from .dynamics import IntegratorControls, Outcome, classify, integrate  # noqa: E402
from .threshold import (  # noqa: E402
    critical_width_harmonic,
    critical_width_numeric,
    fit_exponent,
    flux_monte_carlo,
    make_flux_sample,
    normal_mode_frame,
    threshold_scan,
)
