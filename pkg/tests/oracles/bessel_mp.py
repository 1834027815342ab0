"""Arbitrary-precision modified Bessel functions used as a test oracle.

Independent of :mod:`cylcast.bessel`: no ratio recurrences, no Wronskian.

* ``I_m`` from its power series (all terms positive, no cancellation).
* ``K_0``, ``K_1`` from the logarithmic series (small argument, with guard
  digits against the ``e^{2x}`` cancellation) or from the Hankel asymptotic
  expansion (large argument), then ``K_m`` by upward recurrence, which is
  stable for ``K``.
"""

import mpmath as mp

SERIES_LIMIT = 30


def _i_series(m, x):
    half = x / 2
    term = half ** m / mp.factorial(m)
    q = half * half
    total = term
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + m))
        total += term
        if k * (k + m) > q and term < total * mp.mpf(10) ** (-mp.mp.dps - 5):
            return total


def bessel_i(m, x):
    """``I_m(x)`` at the current working precision."""
    x = mp.mpf(x)
    with mp.workdps(mp.mp.dps + 10):
        return +_i_series(m, x)


def _k01_series(x):
    half = x / 2
    q = half * half
    lg = mp.log(half) + mp.euler
    i0 = _i_series(0, x)
    i1 = _i_series(1, x)
    # K_0 = -(ln(x/2)+gamma) I_0 + sum q^k/(k!)^2 H_k
    # K_1 = 1/x + ln(x/2) I_1 - (x/4) sum (psi(k+1)+psi(k+2)) q^k/(k!(k+1)!)
    s0 = mp.mpf(0)
    s1 = mp.mpf(0)
    t0 = mp.mpf(1)
    t1 = mp.mpf(1)
    harm = mp.mpf(0)
    k = 0
    eps = mp.mpf(10) ** (-mp.mp.dps - 5)
    while True:
        psi_k1 = harm - mp.euler
        psi_k2 = psi_k1 + mp.mpf(1) / (k + 1)
        s0 += t0 * harm
        s1 += t1 * (psi_k1 + psi_k2)
        k += 1
        harm += mp.mpf(1) / k
        t0 = t0 * q / (k * k)
        t1 = t1 * q / (k * (k + 1))
        if k * k > q and t0 * harm < eps * abs(s0) and t1 * harm < eps * abs(s1):
            break
    k0 = -lg * i0 + s0
    k1 = 1 / x + mp.log(half) * i1 - x / 4 * s1
    return k0, k1


def _k_asymptotic(nu, x):
    mu = 4 * nu * nu
    term = mp.mpf(1)
    total = term
    k = 0
    best = abs(term)
    while True:
        k += 1
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8 * x)
        if abs(term) > best or k > 4 * x:
            break
        best = abs(term)
        total += term
        if abs(term) < abs(total) * mp.mpf(10) ** (-mp.mp.dps - 5):
            break
    return mp.sqrt(mp.pi / (2 * x)) * mp.exp(-x) * total


def bessel_k01(x):
    """``(K_0(x), K_1(x))`` at the current working precision."""
    x = mp.mpf(x)
    if x <= SERIES_LIMIT:
        guard = int(2 * float(x) / 2.302585) + 15
        with mp.workdps(mp.mp.dps + guard):
            k0, k1 = _k01_series(x)
    else:
        with mp.workdps(mp.mp.dps + 10):
            k0, k1 = _k_asymptotic(0, x), _k_asymptotic(1, x)
    return +k0, +k1


def bessel_k_sequence(m_max, x):
    """``[K_0(x), ..., K_{m_max+1}(x)]`` by upward recurrence."""
    x = mp.mpf(x)
    k0, k1 = bessel_k01(x)
    seq = [k0, k1]
    for m in range(1, m_max + 1):
        seq.append(seq[m - 1] + 2 * m / x * seq[m])
    return seq


def bessel_k(m, x):
    return bessel_k_sequence(m, x)[m]


def scaled_quadruple(m, x):
    """Oracle for ``(I e^-x, K e^x, I' e^-x, K' e^x)`` as mpf values."""
    x = mp.mpf(x)
    ks = bessel_k_sequence(m, x)
    i_m = bessel_i(m, x)
    i_p = bessel_i(m + 1, x)
    if m == 0:
        di = i_p
        dk = -ks[1]
    else:
        di = (bessel_i(m - 1, x) + i_p) / 2
        dk = -(ks[m - 1] + ks[m + 1]) / 2
    ex = mp.exp(x)
    return i_m / ex, ks[m] * ex, di / ex, dk * ex


def k_second_difference(m, x, h=mp.mpf("1e-12")):
    """Central second difference of ``K_m``, scaled by ``e^x``."""
    x = mp.mpf(x)
    with mp.workdps(mp.mp.dps + 30):
        val = (bessel_k(m, x + h) - 2 * bessel_k(m, x) + bessel_k(m, x - h)) / (h * h)
        return +(val * mp.exp(x))
