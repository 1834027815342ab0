r"""Geometry kernels :math:`\Xi_\rho, \Xi_\phi, \Xi_z` for a perfectly
conducting cylinder, retarded (CP) and nonretarded (vdW) regimes.

With :math:`w = u\bar\rho`, :math:`G_m = \frac{I_m(u)}{K_m(u)} K_m(w)^2`,
:math:`H_m = \frac{I_m(u)}{K_m(u)} K'_m(w)^2` and
:math:`s_m = \frac{I'_m(u)/K'_m(u)}{I_m(u)/K_m(u)} < 0`:

CP::

    Xi_rho = 2 sum'_m int u [u^2 H_m - (m^2/rho^2) s_m G_m] du
    Xi_phi = 2 sum'_m int u [-u^2 s_m H_m + (m^2/rho^2) G_m] du
    Xi_z   = 4 sum'_m int u^3 G_m du

vdW::

    Xi_rho = (2/pi) sum'_m int u^2 H_m du
    Xi_phi = (2/pi) sum_{m>=1} (m^2/rho^2) int G_m du
    Xi_z   = (2/pi) sum'_m int u^2 G_m du

``sum'`` weights the ``m = 0`` term by one half.

Derivative grouping: ``xi_derivatives`` returns d/drho and d2/drho2 of the
*whole* kernel, the explicit ``m^2/rho^2`` factors included, so that
:mod:`cylcast.potential` can apply the chain rule to ``Xi(rho)`` directly.
Only ``K_m(w)`` and the ``m^2/rho^2`` factors depend on rho; third
derivatives of ``K_m`` come from differentiating the Bessel equation.

Implementation notes
--------------------
Each integrand is evaluated as a mode sum at every quadrature node, from
the ratio tables of :mod:`cylcast.bessel`:
``I_m(u)K_m(u) = 1/(u (q_m + p_m))`` and ``K_m(w)/K_m(u)`` as a running
product of ``q_m(w)/q_m(u)``.  Nothing overflows; terms that underflow are
negligible by construction.  The sum over modes is truncated per node
once two consecutive terms, and their geometric tail, fall below
``mode_tail_tol`` relative to the partial sum.  The u-integral runs on
``(0, u_max]`` with ``u_max = u_cutoff_factor / (2 (rho - 1)) + u_floor``,
extended while the ``e^{-2u(rho-1)}`` tail estimate is not negligible.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from . import quadrature
from .bessel import i_ratio_table, k_ratio_table
from .errors import ConvergenceError, DomainError, ProximityError


class Regime(str, enum.Enum):
    CP = "cp"
    VDW = "vdw"
    CLASSICAL = "classical"

    @property
    def kernel_regime(self):
        """Kernels used by this regime; the classical dipole shares vdW's."""
        return Regime.CP if self is Regime.CP else Regime.VDW

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown regime {value!r}") from None


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration and mode-sum truncation policy."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_mode: int = 2000
    mode_tail_tol: float = 1e-12
    u_cutoff_factor: float = 40.0
    u_floor: float = 1.0
    rho_guard: float = 1e-6
    # 0 keys the cache on the exact rho; otherwise rho is snapped to this grid
    # before evaluation, so cached and fresh results stay identical.
    cache_resolution: float = 0.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.mode_tail_tol > 0):
            raise DomainError("tolerances must be strictly positive")
        if self.max_mode < 1:
            raise DomainError("max_mode must be >= 1")
        if self.u_cutoff_factor < 10:
            raise DomainError("u_cutoff_factor must be >= 10")
        if not (self.u_floor >= 0 and self.rho_guard > 0 and self.cache_resolution >= 0):
            raise DomainError("u_floor, rho_guard and cache_resolution must be non-negative")

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class XiTriple:
    """The three kernels (or one of their rho-derivatives) at one rho."""

    rho_bar: float
    xi_rho: float
    xi_phi: float
    xi_z: float
    err_rho: float
    err_phi: float
    err_z: float
    regime: Regime
    derivative: int = 0

    def values(self):
        return np.array([self.xi_rho, self.xi_phi, self.xi_z])

    def errors(self):
        return np.array([self.err_rho, self.err_phi, self.err_z])


@dataclass(frozen=True)
class KernelBundle:
    """Kernels and their first and second rho-derivatives."""

    value: XiTriple
    d1: XiTriple
    d2: XiTriple
    n_panels: int
    max_mode_used: int
    u_max: float


def _check_rho(rho_bar, spec):
    rho = float(rho_bar)
    if not math.isfinite(rho):
        raise DomainError("rho_bar must be finite")
    if rho <= 1.0 + spec.rho_guard:
        raise ProximityError(
            f"rho_bar={rho!r} is within the guard band 1 + {spec.rho_guard} of the surface")
    return rho


class _ModeBudgetExceeded(Exception):
    def __init__(self, partial_sum, tail):
        self.partial_sum = partial_sum
        self.tail = tail


def _mode_sums(u, rho, regime, n_modes, tail_tol):
    """Mode-summed integrands at nodes ``u``; shape ``(9, n)``.

    Rows: values (rho, phi, z), first derivatives, second derivatives.
    Returns ``None`` if the truncation criterion is not met with
    ``n_modes`` modes.
    """
    w = u * rho
    qu = k_ratio_table(u, n_modes + 1)
    qw = k_ratio_table(w, n_modes + 1)
    pu = i_ratio_table(u, n_modes + 1)
    m = np.arange(n_modes + 1, dtype=float)[:, None]
    m2 = m * m

    # K_m'/K_m and I_m'/I_m
    a_u = np.empty_like(qu[:-1])
    a_w = np.empty_like(qw[:-1])
    ai = np.empty_like(pu[:-1])
    a_u[0] = -qu[0]
    a_w[0] = -qw[0]
    ai[0] = pu[0]
    a_u[1:] = -0.5 * (1.0 / qu[:-2] + qu[1:-1])
    a_w[1:] = -0.5 * (1.0 / qw[:-2] + qw[1:-1])
    ai[1:] = 0.5 * (1.0 / pu[:-2] + pu[1:-1])

    ik = 1.0 / (u * (qu[:-1] + pu[:-1]))
    with np.errstate(under="ignore"):
        kr0 = special.k0e(w) / special.k0e(u) * np.exp(u - w)
        kr = np.empty_like(ik)
        kr[0] = kr0
        kr[1:] = kr0 * np.cumprod(qw[:-2] / qu[:-2], axis=0)
        g = ik * kr * kr

    inv_w = 1.0 / w
    b_w = 1.0 + m2 * inv_w * inv_w - a_w * inv_w
    c_w = (-2.0 * m2 * inv_w ** 3 + (1.0 + m2 * inv_w * inv_w) * a_w
           - b_w * inv_w + a_w * inv_w * inv_w)

    g1 = 2.0 * u * a_w * g
    g2 = 2.0 * u * u * (a_w * a_w + b_w) * g
    h = a_w * a_w * g
    h1 = 2.0 * u * a_w * b_w * g
    h2 = 2.0 * u * u * (b_w * b_w + a_w * c_w) * g

    r2 = rho * rho
    f = m2 * g / r2
    f1 = m2 * (g1 / r2 - 2.0 * g / (r2 * rho))
    f2 = m2 * (g2 / r2 - 4.0 * g1 / (r2 * rho) + 6.0 * g / (r2 * r2))

    u2 = u * u
    if regime is Regime.CP:
        s = ai / a_u
        terms = [
            2.0 * u * (u2 * h - s * f), 2.0 * u * (-u2 * s * h + f), 4.0 * u * u2 * g,
            2.0 * u * (u2 * h1 - s * f1), 2.0 * u * (-u2 * s * h1 + f1), 4.0 * u * u2 * g1,
            2.0 * u * (u2 * h2 - s * f2), 2.0 * u * (-u2 * s * h2 + f2), 4.0 * u * u2 * g2,
        ]
    else:
        c = 2.0 / math.pi
        terms = [
            c * u2 * h, c * f, c * u2 * g,
            c * u2 * h1, c * f1, c * u2 * g1,
            c * u2 * h2, c * f2, c * u2 * g2,
        ]
    t = np.stack(terms)  # (9, modes, n)
    t[:, 0, :] *= 0.5
    total = t.sum(axis=1)

    last = np.abs(t[:, -1, :])
    prev = np.abs(t[:, -2, :])
    bound = np.abs(total) * tail_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prev > 0, last / prev, 0.0)
        geo_tail = np.where(ratio < 1.0, last * ratio / (1.0 - ratio), np.inf)
    geo_tail = np.where(last == 0.0, 0.0, geo_tail)
    ok = (last <= bound) & (prev <= bound) & (geo_tail <= bound)
    if not np.all(ok):
        return None, total
    return total, None


def _initial_modes(u_max, rho, spec):
    base = math.log(1.0 / spec.mode_tail_tol) / (2.0 * math.log(rho))
    return int(min(spec.max_mode, math.ceil(base + 1.2 * u_max) + 8))


class _Integrand:
    """Vectorized mode-summed integrand with adaptive mode budget."""

    def __init__(self, rho, regime, spec, n_modes):
        self.rho = rho
        self.regime = regime
        self.spec = spec
        self.n_modes = n_modes

    def __call__(self, u):
        while True:
            total, partial = _mode_sums(u, self.rho, self.regime, self.n_modes,
                                        self.spec.mode_tail_tol)
            if total is not None:
                return total
            if self.n_modes >= self.spec.max_mode:
                raise _ModeBudgetExceeded(partial, None)
            self.n_modes = min(self.spec.max_mode, 2 * self.n_modes)


def _tail_estimate(integrand, u_max, rho):
    f_end = np.abs(integrand(np.array([u_max])))[:, 0]
    decay = 2.0 * (rho - 1.0) * u_max
    # integrand ~ u^k e^{-2(rho-1)u} with k <= 5 (second derivatives of CP)
    if decay <= 6.0:
        return None
    return f_end * u_max / (decay - 5.0)


# exp(-56) ~ 5e-25: the piece of [0, u0] left out is below any tolerance
_HEAD_T_BREAKS = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 56.0])


def _compute_bundle(rho, regime, spec):
    u_max = spec.u_cutoff_factor / (2.0 * (rho - 1.0)) + spec.u_floor
    integrand = _Integrand(rho, regime, spec, _initial_modes(u_max, rho, spec))
    quad_rel = 0.5 * spec.rel_tol
    quad_abs = 0.5 * spec.abs_tol
    for _ in range(8):
        try:
            tail = _tail_estimate(integrand, u_max, rho)
        except _ModeBudgetExceeded:
            tail = None
        if tail is not None:
            break
        u_max *= 2.0
    else:
        raise ConvergenceError(f"no usable integration cutoff found at rho_bar={rho}")

    # [0, u0] goes through u = u0 exp(-t): the m = 0 vdW radial term tends
    # to zero only like 1/ln(1/u), which defeats polynomial rules near u = 0
    # but becomes smooth and exponentially small in t.
    u0 = u_max * 2.0 ** -12

    def head(t):
        u = u0 * np.exp(-t)
        return integrand(u) * u

    try:
        res_head = quadrature.integrate(head, _HEAD_T_BREAKS, quad_rel, quad_abs)
        breakpoints = u_max * 2.0 ** -np.arange(12, -1, -1)
        for _ in range(8):
            res = quadrature.integrate(integrand, breakpoints, quad_rel, quad_abs,
                                       min_width=1e-14 * u_max)
            value = res.value + res_head.value
            target = np.maximum(quad_abs, quad_rel * np.abs(value))
            if np.all(tail <= 0.1 * target):
                break
            # tail not negligible: push the cutoff out and integrate the extension
            u_max *= 2.0
            breakpoints = np.concatenate([breakpoints, [u_max]])
            tail = _tail_estimate(integrand, u_max, rho)
    except _ModeBudgetExceeded as exc:
        raise ConvergenceError(
            f"mode sum not converged within max_mode={spec.max_mode} at rho_bar={rho}",
            partial=exc.partial_sum) from None
    if not (res.converged and res_head.converged):
        raise ConvergenceError(
            f"quadrature did not reach tolerance at rho_bar={rho}",
            partial=value, achieved_error=res.error + res_head.error)

    err = res.error + res_head.error + tail + spec.mode_tail_tol * np.abs(value)
    vals = value.reshape(3, 3)
    errs = err.reshape(3, 3)
    triples = [
        XiTriple(rho, *vals[k], *errs[k], regime=regime, derivative=k) for k in range(3)
    ]
    return KernelBundle(triples[0], triples[1], triples[2], res.n_panels + res_head.n_panels,
                        integrand.n_modes, u_max)


class KernelCache:
    """Thread-safe memo of kernel bundles keyed on (regime, rho, spec)."""

    def __init__(self, max_entries=50000):
        self._data = {}
        self._lock = threading.Lock()
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0

    def get(self, key):
        with self._lock:
            val = self._data.get(key)
            if val is None:
                self.misses += 1
            else:
                self.hits += 1
            return val

    def put(self, key, value):
        with self._lock:
            if len(self._data) >= self.max_entries:
                self._data.clear()
            # first writer wins so concurrent evaluations share one object
            return self._data.setdefault(key, value)

    def clear(self):
        with self._lock:
            self._data.clear()
            self.hits = self.misses = 0

    def __len__(self):
        return len(self._data)


CACHE = KernelCache()


def kernel_bundle(rho_bar, regime, spec=DEFAULT_SPEC, cache=CACHE):
    """Kernels with first and second rho-derivatives for a regime."""
    regime = Regime.parse(regime).kernel_regime
    rho = _check_rho(rho_bar, spec)
    if spec.cache_resolution > 0:
        rho = round(rho / spec.cache_resolution) * spec.cache_resolution
        rho = _check_rho(rho, spec)
    key = (regime, rho, spec)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    bundle = _compute_bundle(rho, regime, spec)
    if cache is not None:
        bundle = cache.put(key, bundle)
    return bundle


def xi_cp(rho_bar, spec=DEFAULT_SPEC):
    """The three retarded (Casimir-Polder) kernels at ``rho_bar``."""
    return kernel_bundle(rho_bar, Regime.CP, spec).value


def xi_vdw(rho_bar, spec=DEFAULT_SPEC):
    """The three nonretarded (van der Waals) kernels at ``rho_bar``."""
    return kernel_bundle(rho_bar, Regime.VDW, spec).value


def xi_derivatives(rho_bar, spec=DEFAULT_SPEC, regime=Regime.CP):
    """First and second rho-derivatives of the three kernels."""
    b = kernel_bundle(rho_bar, regime, spec)
    return b.d1, b.d2


def doubled(spec):
    """``spec`` with mode cap and cutoff factor doubled (truncation checks)."""
    return replace(spec, max_mode=2 * spec.max_mode, u_cutoff_factor=2 * spec.u_cutoff_factor)
