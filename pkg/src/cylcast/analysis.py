"""Derived quantities: ridge lines, critical curvature, gamma(beta) curves,
anisotropy thresholds, trap-frequency shifts and tabulated scans.

All root finding is a coarse uniform bracket scan followed by plain
bisection.  Every reported root comes with the final bracket whose end
points have opposite signs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CylcastError, DomainError, TrapDestabilizedError
from .kernels import DEFAULT_SPEC, Regime
from .potential import (
    ParticleResponse,
    curvature_y_on_x_plane,
    local_expansion,
    si_prefactor,
)

DEFAULT_X_SCAN_MIN = 1.1
# gamma(beta) grows without bound as beta approaches the threshold, slowly
# (log corrections): at x = 50 the CP threshold still reads ~0.178, while
# sign changes persist out to x ~ 400 for beta = 0.19.
DEFAULT_X_SCAN_MAX = 1000.0
DEFAULT_BRACKET_POINTS = 200
CURVATURE_XTOL = 1e-4
BETA_TOL = 1e-3
RIDGE_YTOL = 1e-9


def resolve_threads(threads=None):
    """Explicit value, else ``CYLCAST_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("CYLCAST_THREADS")
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise DomainError("thread count must be >= 1")
    return threads


def _map(func, items, threads):
    threads = resolve_threads(threads)
    if threads == 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def bisect(f, lo, hi, f_lo, f_hi, xtol, max_iter=200):
    """Shrink a sign-change bracket ``[lo, hi]`` below width ``xtol``.

    Returns ``(lo, hi, f_lo, f_hi)``; the end values keep opposite signs
    unless an exact zero is hit, in which case both ends collapse on it.
    """
    if f_lo == 0.0:
        return lo, lo, f_lo, f_lo
    if f_hi == 0.0:
        return hi, hi, f_hi, f_hi
    if (f_lo > 0) == (f_hi > 0):
        raise DomainError("bisection needs a sign change")
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid, mid, f_mid, f_mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo, hi, f_lo, f_hi


def _sign_changes(xs, fs):
    out = []
    for i in range(len(xs) - 1):
        if fs[i] == 0.0 or (fs[i] > 0) != (fs[i + 1] > 0):
            out.append(i)
    return out


# --------------------------------------------------------------------------
# ridge lines

@dataclass(frozen=True)
class RidgePoint:
    x_bar_0: float
    y_bar_extremum: float
    kind: str  # "minimum" | "maximum" | "degenerate"
    du_dy: float
    d2u_dy2: float
    bracket: tuple = (0.0, 0.0)


@dataclass
class RidgeScan:
    regime: Regime
    response: ParticleResponse
    points: list
    failures: list = field(default_factory=list)
    y_search_max: dict = field(default_factory=dict)


def _kind(curvature):
    if curvature > 0:
        return "minimum"
    if curvature < 0:
        return "maximum"
    return "degenerate"


def ridge_points_at(p, x0, y_search_max, spec=DEFAULT_SPEC, n_bracket=DEFAULT_BRACKET_POINTS,
                    ytol=RIDGE_YTOL):
    """Extrema of ``U(x0, y)`` for ``y`` in ``[0, y_search_max]``.

    ``y = 0`` is always reported (it is a critical point by symmetry).
    """
    x0 = float(x0)
    g = local_expansion(p, x0, 0.0, spec).d2u_dy2
    points = [RidgePoint(x0, 0.0, _kind(g), 0.0, g)]

    def slope(y):
        return local_expansion(p, x0, y, spec).du_dy

    ys = np.linspace(0.0, y_search_max, n_bracket + 1)[1:]
    fs = [slope(y) for y in ys]
    # dU/dy ~ g*y just above 0: probe a tiny y to bracket roots close to the axis
    y_eps = ys[0] * 1e-6
    grid_y = [y_eps] + list(ys)
    grid_f = [slope(y_eps)] + fs
    for i in _sign_changes(grid_y, grid_f):
        lo, hi, f_lo, f_hi = bisect(slope, grid_y[i], grid_y[i + 1], grid_f[i], grid_f[i + 1], ytol)
        y_root = 0.5 * (lo + hi)
        le = local_expansion(p, x0, y_root, spec)
        points.append(RidgePoint(x0, y_root, _kind(le.d2u_dy2), le.du_dy, le.d2u_dy2, (lo, hi)))
    return points


def ridge_scan(p, x_range, n_points, spec=DEFAULT_SPEC, regime=None, y_search_max=None,
               n_bracket=DEFAULT_BRACKET_POINTS, threads=None):
    """Ridge points (``dU/dy = 0``) on planes ``x = x0`` across ``x_range``.

    By default ``y`` is searched up to where ``rho = 1.5 * x_hi``.  A failure
    at one plane is recorded and the scan continues.
    """
    if regime is not None:
        p = p.with_regime(regime)
    x_lo, x_hi = map(float, x_range)
    if not x_lo > 1.0 + spec.rho_guard:
        raise DomainError("x_lo must lie outside the cylinder guard band")
    if n_points < 1 or x_hi < x_lo:
        raise DomainError("need n_points >= 1 and x_hi >= x_lo")
    xs = [x_lo] if n_points == 1 else list(np.linspace(x_lo, x_hi, n_points))

    def one(x0):
        y_max = y_search_max
        if y_max is None:
            y_max = math.sqrt(max((1.5 * x_hi) ** 2 - x0 * x0, 0.0))
            if y_max == 0.0:
                y_max = 0.5 * x0
        try:
            return x0, y_max, ridge_points_at(p, x0, y_max, spec, n_bracket), None
        except CylcastError as exc:
            return x0, y_max, [], f"{type(exc).__name__}: {exc}"

    scan = RidgeScan(p.regime, p, [])
    for x0, y_max, pts, err in _map(one, xs, threads):
        scan.y_search_max[x0] = y_max
        scan.points.extend(pts)
        if err is not None:
            scan.failures.append((x0, err))
    return scan


# --------------------------------------------------------------------------
# critical curvature and gamma(beta)

@dataclass(frozen=True)
class CriticalCurvature:
    regime: Regime
    beta: float
    roots: tuple
    brackets: tuple
    x_scan_min: float
    x_scan_max: float

    @property
    def has_sign_change(self):
        return bool(self.roots)

    @property
    def gamma(self):
        """First dark-to-light boundary, or ``None`` if none below x_scan_max."""
        return self.roots[0] if self.roots else None

    def describe(self):
        if not self.roots:
            return f"no sign change up to x_scan_max={self.x_scan_max:g}"
        return ", ".join(f"{r:.4f}" for r in self.roots)


def _bracket_grid(x_min, x_max, n):
    return np.geomspace(x_min, x_max, n)


def critical_curvature(beta, regime, spec=DEFAULT_SPEC, x_scan_max=DEFAULT_X_SCAN_MAX,
                       x_scan_min=DEFAULT_X_SCAN_MIN, n_bracket=DEFAULT_BRACKET_POINTS,
                       xtol=CURVATURE_XTOL):
    """Values of ``x0`` where ``d2U/dy2`` at ``y = 0`` changes sign.

    Every sign change on ``[x_scan_min, x_scan_max]`` is reported, refined
    by bisection to a bracket narrower than ``xtol``; an empty result
    means "no sign change up to x_scan_max".
    """
    regime = Regime.parse(regime)
    p = ParticleResponse.from_beta(beta, regime)
    if not x_scan_min > 1.0 + spec.rho_guard or not x_scan_max > x_scan_min:
        raise DomainError("need 1 + guard < x_scan_min < x_scan_max")

    def g(x0):
        return curvature_y_on_x_plane(p, x0, spec)

    xs = _bracket_grid(x_scan_min, x_scan_max, n_bracket)
    gs = [g(x) for x in xs]
    roots, brackets = [], []
    for i in _sign_changes(xs, gs):
        lo, hi, _, _ = bisect(g, xs[i], xs[i + 1], gs[i], gs[i + 1], xtol)
        roots.append(0.5 * (lo + hi))
        brackets.append((lo, hi))
    return CriticalCurvature(regime, float(beta), tuple(roots), tuple(brackets),
                             float(x_scan_min), float(x_scan_max))


@dataclass(frozen=True)
class GammaCurve:
    regime: Regime
    samples: tuple  # (beta, gamma or None)
    beta_threshold: float | None
    threshold_bracket: tuple
    x_scan_max: float
    x_scan_min: float
    multiple_roots: tuple = ()  # (beta, roots) where more than one sign change


def gamma_curve(regime, beta_grid, spec=DEFAULT_SPEC, x_scan_max=DEFAULT_X_SCAN_MAX,
                x_scan_min=DEFAULT_X_SCAN_MIN, beta_tol=BETA_TOL, threads=None,
                n_bracket=DEFAULT_BRACKET_POINTS):
    """Boundary ``gamma(beta)`` between dark and light regions, plus the
    largest ``beta`` that still shows a sign change below ``x_scan_max``.
    """
    regime = Regime.parse(regime)
    betas = sorted(float(b) for b in beta_grid)
    if not betas or betas[0] < 0 or betas[-1] > 1:
        raise DomainError("beta_grid must be non-empty and within [0, 1]")

    def crit(b):
        return critical_curvature(b, regime, spec, x_scan_max, x_scan_min, n_bracket)

    results = _map(crit, betas, threads)
    samples = tuple((r.beta, r.gamma) for r in results)
    multiple = tuple((r.beta, r.roots) for r in results if len(r.roots) > 1)

    with_change = [r.beta for r in results if r.has_sign_change]
    threshold, bracket = None, ()
    if with_change:
        lo = max(with_change)
        above = [r.beta for r in results if not r.has_sign_change and r.beta > lo]
        if above:
            hi = min(above)
            while hi - lo > beta_tol:
                mid = 0.5 * (lo + hi)
                if crit(mid).has_sign_change:
                    lo = mid
                else:
                    hi = mid
            threshold, bracket = 0.5 * (lo + hi), (lo, hi)
    return GammaCurve(regime, samples, threshold, bracket, float(x_scan_max),
                      float(x_scan_min), multiple)


# --------------------------------------------------------------------------
# trap frequency

@dataclass(frozen=True)
class TrapConfig:
    """Harmonic trap along ``y`` centred on the plane ``x = x_bar_0``.

    ``response`` carries SI magnitudes (see :func:`cylcast.potential.si_prefactor`).
    """

    omega_trap: float
    mass: float
    radius: float
    response: ParticleResponse
    x_bar_0: float

    def __post_init__(self):
        for name in ("omega_trap", "mass", "radius"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive")
        if not self.x_bar_0 > 1:
            raise DomainError("x_bar_0 must exceed 1")


@dataclass(frozen=True)
class TrapShift:
    omega_prime: float
    delta_omega: float
    curvature_si: float  # d2U/dy2 in J/m^2


def trap_shift(cfg, spec=DEFAULT_SPEC):
    """Shifted trap frequency ``sqrt(omega^2 + U''/m)`` and its deviation."""
    g = curvature_y_on_x_plane(cfg.response.normalized(), cfg.x_bar_0, spec)
    curvature = si_prefactor(cfg.response, cfg.radius) * g / cfg.radius ** 2
    k = curvature / cfg.mass
    radicand = cfg.omega_trap ** 2 + k
    if radicand < 0:
        raise TrapDestabilizedError(
            f"trap destabilized: omega^2 + U''/m = {radicand:.6g} < 0")
    omega_prime = math.sqrt(radicand)
    # (omega' - omega) without cancellation
    delta = k / (omega_prime + cfg.omega_trap)
    return TrapShift(omega_prime, delta, curvature)


# --------------------------------------------------------------------------
# tabulated scans

@dataclass
class ScanResult:
    """Tabulated records with column names, units and metadata."""

    kind: str
    columns: list
    units: list
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name):
        j = self.columns.index(name)
        return [r[j] for r in self.rows]


GRID_COLUMNS = ["x_bar", "y_bar", "rho_bar", "u_bar", "force_y_bar", "d2u_dy2_bar", "status"]
GRID_UNITS = ["R", "R", "R", "dimensionless", "dimensionless", "dimensionless", ""]


def _grid_cell(p, x, y, spec):
    rho = math.hypot(x, y)
    if rho <= 1.0 + spec.rho_guard:
        return (x, y, rho, None, None, None, "masked")
    try:
        le = local_expansion(p, x, y, spec)
    except CylcastError as exc:
        return (x, y, rho, None, None, None, f"error: {type(exc).__name__}: {exc}")
    return (x, y, rho, le.u, -le.du_dy, le.d2u_dy2, "ok")


def grid_scan(p, x_values, y_values, spec=DEFAULT_SPEC, regime=None, threads=None):
    """Energy, lateral force and lateral curvature over a Cartesian grid.

    Rows are ordered x-major, y-minor.  Points inside the cylinder guard
    band are emitted with status ``masked``; a failing cell records its
    error and the scan continues.
    """
    if regime is not None:
        p = p.with_regime(regime)
    xs = [float(x) for x in np.atleast_1d(x_values)]
    ys = [float(y) for y in np.atleast_1d(y_values)]
    cells = [(x, y) for x in xs for y in ys]
    rows = _map(lambda c: _grid_cell(p, c[0], c[1], spec), cells, threads)
    meta = {
        "regime": p.regime.value,
        "response": {"r_x": p.r_x, "r_y": p.r_y, "r_z": p.r_z},
        "nx": len(xs),
        "ny": len(ys),
    }
    return ScanResult("grid", list(GRID_COLUMNS), list(GRID_UNITS), rows, meta)


def grid_from_ranges(x_range, y_range, resolution):
    """Evenly spaced ``(x_values, y_values)`` from ranges and ``(nx, ny)``."""
    nx, ny = resolution
    if nx < 1 or ny < 1:
        raise DomainError("resolution must be positive")
    xs = np.linspace(x_range[0], x_range[1], nx) if nx > 1 else np.array([x_range[0]])
    ys = np.linspace(y_range[0], y_range[1], ny) if ny > 1 else np.array([y_range[0]])
    return xs, ys
