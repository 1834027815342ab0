r"""Exponentially scaled modified Bessel functions of integer order.

The scaled quantities are

.. math::
    \tilde I_m(u) = I_m(u) e^{-u}, \qquad \tilde K_m(u) = K_m(u) e^{u},

together with the scaled first derivatives :math:`I'_m e^{-u}` and
:math:`K'_m e^{u}`.

Everything is built from two ratio sequences:

* ``q[m] = K_{m+1}(u) / K_m(u)`` by forward recurrence from the scaled
  zeroth/first order functions (forward recurrence is stable for ``K``),
* ``p[m] = I_{m+1}(u) / I_m(u)`` by backward recurrence of the continued
  fraction, started well above the largest order needed.

The product ``I_m K_m`` then follows from the Wronskian
``I_m K_{m+1} + I_{m+1} K_m = 1/u``, so ``I_m`` never has to be propagated
upwards (which is unstable).  Derivatives use
``I'_m = (I_{m-1} + I_{m+1})/2`` and ``K'_m = -(K_{m-1} + K_{m+1})/2``, sums
of same-signed terms, so no cancellation occurs.

The ratio tables are exported for :mod:`cylcast.kernels`, which only ever
needs ratios and products and therefore never overflows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import BesselRangeError, CapacityError, DomainError

ORDER_CAP = 2000

# Backward recurrence for p damps a start error by prod p_k**2 ~ exp(-n**2/u)
# when u >> n; sqrt(40 u) extra steps bring an O(1e-1) guess below 1e-17.
_EXTRA_STEPS_FACTOR = 40.0
_EXTRA_STEPS_MIN = 12


def _as_positive_array(argument):
    z = np.atleast_1d(np.asarray(argument, dtype=float))
    if np.any(~(z > 0)) or not np.all(np.isfinite(z)):
        raise DomainError("Bessel argument must be positive and finite")
    return z


def k_ratio_table(z, m_max):
    """Return ``q[m] = K_{m+1}(z)/K_m(z)`` for ``m = 0..m_max``.

    Shape is ``(m_max + 1,) + z.shape``.
    """
    z = np.asarray(z, dtype=float)
    q = np.empty((m_max + 1,) + z.shape)
    q[0] = special.k1e(z) / special.k0e(z)
    two_over_z = 2.0 / z
    for m in range(1, m_max + 1):
        q[m] = 1.0 / q[m - 1] + m * two_over_z
    return q


def _i_ratio_guess(nu, z):
    # Amos-type lower bound for I_{nu+1}/I_nu; relative error O(1/(nu^2+z^2)).
    a = nu + 1.0
    return z / (a + np.sqrt(a * a + z * z))


def i_ratio_table(z, m_max):
    """Return ``p[m] = I_{m+1}(z)/I_m(z)`` for ``m = 0..m_max``.

    Shape is ``(m_max + 1,) + z.shape``.
    """
    z = np.asarray(z, dtype=float)
    zmax = float(np.max(z)) if z.size else 0.0
    extra = int(np.ceil(np.sqrt(_EXTRA_STEPS_FACTOR * zmax))) + _EXTRA_STEPS_MIN
    top = m_max + extra
    two_over_z = 2.0 / z
    p = _i_ratio_guess(top, z)
    for m in range(top, m_max, -1):
        # p_{m-1} = 1 / (2m/z + p_m)
        p = 1.0 / (m * two_over_z + p)
    out = np.empty((m_max + 1,) + z.shape)
    out[m_max] = p
    for m in range(m_max, 0, -1):
        out[m - 1] = 1.0 / (m * two_over_z + out[m])
    return out


def log_scaled(orders, arguments):
    """Logarithmic representation of the scaled pair, vectorized.

    Parameters
    ----------
    orders : array_like of int
        Non-negative integer orders, ``<= ORDER_CAP``.
    arguments : array_like of float
        Positive arguments, broadcast against ``orders``.

    Returns
    -------
    log_i, log_k : ndarray
        ``log(I_m(u) e^{-u})`` and ``log(K_m(u) e^{u})``.
    dlog_i, dlog_k : ndarray
        Logarithmic derivatives ``I'_m/I_m`` (> 0) and ``K'_m/K_m`` (< 0).

    These are finite for every supported input, including orders and
    arguments whose scaled values over- or underflow a double.
    """
    orders = np.asarray(orders)
    if orders.size and (np.any(orders < 0) or np.any(orders != np.floor(orders))):
        raise DomainError("Bessel order must be a non-negative integer")
    orders = orders.astype(np.int64)
    if orders.size and int(orders.max()) > ORDER_CAP:
        raise CapacityError(f"order {int(orders.max())} exceeds cap {ORDER_CAP}")
    z = _as_positive_array(arguments)
    orders, z = np.broadcast_arrays(orders, z)
    flat_m = orders.ravel()
    flat_z = z.ravel()
    m_max = int(flat_m.max()) + 1 if flat_m.size else 1

    # Walk p downward, capturing p_m and p_{m-1} for each sample's order.
    two_over_z = 2.0 / flat_z
    extra = int(np.ceil(np.sqrt(_EXTRA_STEPS_FACTOR * float(flat_z.max())))) + _EXTRA_STEPS_MIN
    top = m_max + extra
    p = _i_ratio_guess(top, flat_z)
    p_at = np.empty_like(flat_z)
    p_before = np.ones_like(flat_z)
    for m in range(top, -1, -1):
        # here p holds p_m
        if m < m_max:
            hit = flat_m == m
            if np.any(hit):
                p_at[hit] = p[hit]
            hit = flat_m == m + 1
            if np.any(hit):
                p_before[hit] = p[hit]
        if m > 0:
            p = 1.0 / (m * two_over_z + p)

    # Walk q upward, accumulating log K_m and capturing each sample's order.
    q_prev = None
    q = special.k1e(flat_z) / special.k0e(flat_z)
    log_k_run = np.log(special.k0e(flat_z))
    log_k = np.empty_like(flat_z)
    q_at = np.empty_like(flat_z)
    q_before = np.empty_like(flat_z)
    for m in range(0, m_max):
        hit = flat_m == m
        if np.any(hit):
            log_k[hit] = log_k_run[hit]
            q_at[hit] = q[hit]
            if q_prev is not None:
                q_before[hit] = q_prev[hit]
        log_k_run = log_k_run + np.log(q)
        q_prev = q
        q = 1.0 / q + (m + 1) * two_over_z

    # I_m K_m from the Wronskian.
    log_ik = -np.log(flat_z * (q_at + p_at))
    log_i = log_ik - log_k

    zero = flat_m == 0
    dlog_k = np.where(zero, -q_at, -0.5 * (1.0 / np.where(zero, 1.0, q_before) + q_at))
    dlog_i = np.where(zero, p_at, 0.5 * (1.0 / np.where(zero, 1.0, p_before) + p_at))

    shape = z.shape
    return (log_i.reshape(shape), log_k.reshape(shape),
            dlog_i.reshape(shape), dlog_k.reshape(shape))


@dataclass(frozen=True)
class ScaledBesselPair:
    """Scaled ``I_m``, ``K_m`` and first derivatives at one argument."""

    order: int
    argument: float
    i_scaled: float
    k_scaled: float
    di_scaled: float
    dk_scaled: float

    def wronskian_residual(self):
        """Relative residual of ``I K' - I' K = -1/u`` in scaled form."""
        lhs = self.i_scaled * self.dk_scaled - self.di_scaled * self.k_scaled
        inv_u = 1.0 / self.argument
        return abs(lhs + inv_u) / inv_u


def _exp_checked(log_values, what):
    with np.errstate(over="ignore", under="ignore"):
        values = np.exp(log_values)
    bad = ~np.isfinite(values) | (values == 0.0) | (np.abs(log_values) > 708.0)
    if np.any(bad):
        raise BesselRangeError(f"{what} not representable as a double")
    return values


def eval_scaled_array(orders, arguments):
    """Vectorized :func:`eval_scaled`; returns ``(i, k, di, dk)`` arrays.

    Raises :class:`BesselRangeError` if any requested value over- or
    underflows; use :func:`log_scaled` for those regions.
    """
    log_i, log_k, dlog_i, dlog_k = log_scaled(orders, arguments)
    i = _exp_checked(log_i, "I_m(u) e^-u")
    k = _exp_checked(log_k, "K_m(u) e^u")
    di = _exp_checked(log_i + np.log(dlog_i), "I'_m(u) e^-u")
    dk = -_exp_checked(log_k + np.log(-dlog_k), "K'_m(u) e^u")
    return i, k, di, dk


def eval_scaled(order, argument, order_cap=ORDER_CAP):
    """Scaled ``I_m``, ``K_m`` and their first derivatives at one point.

    Raises
    ------
    DomainError
        If ``argument <= 0`` or ``order`` is negative / non-integer.
    CapacityError
        If ``order > order_cap``.
    BesselRangeError
        If a scaled value is not representable as a double.
    """
    if int(order) != order or order < 0:
        raise DomainError("Bessel order must be a non-negative integer")
    if order > order_cap:
        raise CapacityError(f"order {order} exceeds cap {order_cap}")
    if not (argument > 0) or not np.isfinite(argument):
        raise DomainError("Bessel argument must be positive and finite")
    i, k, di, dk = eval_scaled_array(np.array([int(order)]), np.array([float(argument)]))
    return ScaledBesselPair(int(order), float(argument),
                            float(i[0]), float(k[0]), float(di[0]), float(dk[0]))


def second_derivative_k(order, argument, pair=None):
    """Scaled ``K''_m(u) e^u`` from the modified Bessel equation.

    ``K''_m = (1 + m^2/u^2) K_m - K'_m / u``.  ``pair`` may be passed to
    reuse an existing evaluation at the same order and argument.
    """
    if pair is None:
        pair = eval_scaled(order, argument)
    elif pair.order != order or pair.argument != argument:
        raise DomainError("pair does not match the requested order/argument")
    u = float(argument)
    m2 = float(order) ** 2
    return (1.0 + m2 / (u * u)) * pair.k_scaled - pair.dk_scaled / u
