"""Dispersion (Casimir-Polder / van der Waals) interaction between an
anisotropic polarizable particle and a perfectly conducting cylinder."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BesselRangeError,
    CapacityError,
    ConvergenceError,
    CylcastError,
    DomainError,
    ProximityError,
    TrapDestabilizedError,
)
from .kernels import (  # noqa: E402
    DEFAULT_SPEC,
    QuadratureSpec,
    Regime,
    XiTriple,
    kernel_bundle,
    xi_cp,
    xi_derivatives,
    xi_vdw,
)
from .potential import (  # noqa: E402
    FieldPoint,
    ParticleResponse,
    curvature_x_on_y_plane,
    curvature_y_on_x_plane,
    lateral_force_y,
    local_expansion,
    si_prefactor,
    u_dimensionless,
    u_si,
)
from .analysis import (  # noqa: E402
    CriticalCurvature,
    GammaCurve,
    RidgePoint,
    ScanResult,
    TrapConfig,
    TrapShift,
    critical_curvature,
    gamma_curve,
    grid_scan,
    ridge_scan,
    trap_shift,
)

__all__ = [
    "__version__",
    "BesselRangeError",
    "CapacityError",
    "ConvergenceError",
    "CylcastError",
    "DomainError",
    "ProximityError",
    "TrapDestabilizedError",
    "DEFAULT_SPEC",
    "QuadratureSpec",
    "Regime",
    "XiTriple",
    "kernel_bundle",
    "xi_cp",
    "xi_derivatives",
    "xi_vdw",
    "FieldPoint",
    "ParticleResponse",
    "curvature_x_on_y_plane",
    "curvature_y_on_x_plane",
    "lateral_force_y",
    "local_expansion",
    "si_prefactor",
    "u_dimensionless",
    "u_si",
    "CriticalCurvature",
    "GammaCurve",
    "RidgePoint",
    "ScanResult",
    "TrapConfig",
    "TrapShift",
    "critical_curvature",
    "gamma_curve",
    "grid_scan",
    "ridge_scan",
    "trap_shift",
]
