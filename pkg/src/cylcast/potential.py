"""Interaction energy of an anisotropic particle with the cylinder.

The particle's principal axes are fixed along the Cartesian x, y, z axes;
its response enters through three principal values ``r_x, r_y, r_z``
(static polarizabilities for CP, ``<d_j^2>`` for vdW, ``d_j^2`` for a
classical permanent dipole).  With ``c = x^2 / rho^2`` (``cos^2 phi``) the
dimensionless energy is::

    U = -[Xi_rho (r_x c + r_y (1-c)) + Xi_phi (r_x (1-c) + r_y c) + Xi_z r_z]

evaluated at ``rho = sqrt(x^2 + y^2)`` in units of the cylinder radius.
Physical energies are ``U_SI = prefactor(R) * U`` with the response
normalized so that ``r_y = 1``:

* CP:  ``prefactor = hbar c alpha_yy / ((4 pi)^2 eps0 R^4)``, ``alpha_yy``
  the static polarizability in SI units (C^2 m^2 J^-1).
* vdW / classical: ``prefactor = <d_y^2> / (4 pi eps0 R^3)``, with
  ``<d_y^2>`` (or ``d_y^2``) in C^2 m^2.

Forces and curvatures are exact chain-rule derivatives of the formula
above, fed by the analytic rho-derivatives of the kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import DomainError
from .kernels import DEFAULT_SPEC, Regime, kernel_bundle


@dataclass(frozen=True)
class ParticleResponse:
    """Principal response values of the particle for one regime."""

    regime: Regime
    r_x: float
    r_y: float
    r_z: float

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        for name in ("r_x", "r_y", "r_z"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be a finite non-negative number, got {v!r}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_beta(cls, beta, regime=Regime.CP):
        """``r_x = r_z = beta``, ``r_y = 1``."""
        beta = float(beta)
        if not beta >= 0:
            raise DomainError("beta must be non-negative")
        return cls(regime, beta, 1.0, beta)

    @property
    def is_normalized(self):
        return self.r_y == 1.0

    def normalized(self):
        if not self.r_y > 0:
            raise DomainError("r_y must be positive to normalize")
        if self.is_normalized:
            return self
        return ParticleResponse(self.regime, self.r_x / self.r_y, 1.0, self.r_z / self.r_y)

    def with_regime(self, regime):
        return ParticleResponse(regime, self.r_x, self.r_y, self.r_z)


@dataclass(frozen=True)
class FieldPoint:
    """Position in units of the cylinder radius."""

    x_bar: float
    y_bar: float

    def __post_init__(self):
        if not (math.isfinite(self.x_bar) and math.isfinite(self.y_bar)):
            raise DomainError("field point coordinates must be finite")
        if not self.rho_bar > 1.0:
            raise DomainError(
                f"point ({self.x_bar}, {self.y_bar}) lies inside the cylinder")

    @property
    def rho_bar(self):
        return math.hypot(self.x_bar, self.y_bar)


@dataclass(frozen=True)
class LocalExpansion:
    """Energy with its gradient and Cartesian second derivatives at a point."""

    u: float
    du_dx: float
    du_dy: float
    d2u_dx2: float
    d2u_dy2: float


def local_expansion(p, x_bar, y_bar, spec=DEFAULT_SPEC):
    """Dimensionless energy, gradient and diagonal Hessian at ``(x, y)``."""
    pt = FieldPoint(float(x_bar), float(y_bar))
    x, y = pt.x_bar, pt.y_bar
    rho = pt.rho_bar
    b = kernel_bundle(rho, p.regime, spec)
    k0 = b.value.values()
    k1 = b.d1.values()
    k2 = b.d2.values()

    r2 = rho * rho
    r4 = r2 * r2
    x2, y2 = x * x, y * y
    c = x2 / r2
    delta = p.r_x - p.r_y
    weights = np.array([p.r_y + delta * c, p.r_x - delta * c, p.r_z])
    # d(weights)/dc for (rho, phi, z)
    dweights = np.array([delta, -delta, 0.0])

    def second_axis(rho_s, rho_ss, c_s, c_ss):
        ks = k1 * rho_s
        kss = k2 * rho_s * rho_s + k1 * rho_ss
        first = ks @ weights + (k0 @ dweights) * c_s
        second = kss @ weights + 2.0 * (ks @ dweights) * c_s + (k0 @ dweights) * c_ss
        return -first, -second

    du_dy, d2u_dy2 = second_axis(
        y / rho, x2 / (r2 * rho), -2.0 * x2 * y / r4, -2.0 * x2 / r4 + 8.0 * x2 * y2 / (r4 * r2))
    du_dx, d2u_dx2 = second_axis(
        x / rho, y2 / (r2 * rho), 2.0 * x * y2 / r4, 2.0 * y2 / r4 - 8.0 * x2 * y2 / (r4 * r2))
    u = -(k0 @ weights)
    return LocalExpansion(float(u), float(du_dx), float(du_dy), float(d2u_dx2), float(d2u_dy2))


def u_dimensionless(p, pt, spec=DEFAULT_SPEC):
    """Dimensionless energy ``U`` at ``pt``; always negative.

    Linear in the response, so a response with ``r_y = 1`` gives the
    normalized energy whose physical scale is :func:`si_prefactor`.
    """
    if not isinstance(pt, FieldPoint):
        pt = FieldPoint(*pt)
    b = kernel_bundle(pt.rho_bar, p.regime, spec)
    c = pt.x_bar ** 2 / pt.rho_bar ** 2
    s = 1.0 - c
    v = b.value
    return -(v.xi_rho * (p.r_x * c + p.r_y * s)
             + v.xi_phi * (p.r_x * s + p.r_y * c)
             + v.xi_z * p.r_z)


def si_prefactor(p, radius):
    """Joules per unit of normalized dimensionless energy.

    ``p`` carries SI magnitudes; only ``r_y`` sets the scale.
    """
    radius = float(radius)
    if not (radius > 0 and math.isfinite(radius)):
        raise DomainError("cylinder radius must be positive")
    if not p.r_y > 0:
        raise DomainError("r_y must be positive for an SI energy")
    eps0 = constants.epsilon_0
    if p.regime is Regime.CP:
        return constants.hbar * constants.c * p.r_y / ((4.0 * math.pi) ** 2 * eps0 * radius ** 4)
    return p.r_y / (4.0 * math.pi * eps0 * radius ** 3)


def u_si(p, radius, pt, spec=DEFAULT_SPEC):
    """Energy in joules for SI response magnitudes and radius in metres."""
    return si_prefactor(p, radius) * u_dimensionless(p.normalized(), pt, spec)


def curvature_y_on_x_plane(p, x_bar_0, spec=DEFAULT_SPEC):
    """``d2U/dy2`` at ``y = 0`` on the plane ``x = x_bar_0``.

    Positive: ``y = 0`` is a lateral minimum (restoring force).
    Negative: a maximum (the lateral force pushes the particle away).
    """
    x0 = float(x_bar_0)
    if not x0 > 1.0:
        raise DomainError("x_bar_0 must exceed 1")
    return local_expansion(p, x0, 0.0, spec).d2u_dy2


def curvature_x_on_y_plane(p, y_bar_0, spec=DEFAULT_SPEC):
    """``d2U/dx2`` at ``x = 0`` on the plane ``y = y_bar_0``."""
    y0 = float(y_bar_0)
    if not y0 > 1.0:
        raise DomainError("y_bar_0 must exceed 1")
    return local_expansion(p, 0.0, y0, spec).d2u_dx2


def lateral_force_y(p, x_bar_0, y_bar, spec=DEFAULT_SPEC):
    """Dimensionless lateral force ``-dU/dy`` on the plane ``x = x_bar_0``."""
    return -local_expansion(p, x_bar_0, y_bar, spec).du_dy
