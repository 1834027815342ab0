import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylcast.bessel import (
    ORDER_CAP,
    eval_scaled,
    eval_scaled_array,
    i_ratio_table,
    k_ratio_table,
    log_scaled,
    second_derivative_k,
)
from cylcast.errors import BesselRangeError, CapacityError, DomainError

import bessel_mp


# reference values quoted to 15+ digits in standard tables
def test_oracle_against_tables():
    with mp.workdps(30):
        assert mp.almosteq(bessel_mp.bessel_i(0, 1), mp.mpf("1.26606587775200833559824462521"), 1e-28)
        k0, k1 = bessel_mp.bessel_k01(mp.mpf(1))
        assert mp.almosteq(k0, mp.mpf("0.421024438240708333335627379213"), 1e-28)
        assert mp.almosteq(k1, mp.mpf("0.601907230197234574737540001536"), 1e-28)


@pytest.mark.parametrize("m, x", [(0, 0.01), (3, 2.5), (40, 30.0), (7, 120.0), (200, 150.0)])
def test_oracle_against_mpmath(m, x):
    with mp.workdps(30):
        assert mp.almosteq(bessel_mp.bessel_i(m, x), mp.besseli(m, x), 1e-25)
        assert mp.almosteq(bessel_mp.bessel_k(m, x), mp.besselk(m, x), 1e-25)


def test_logs_match_oracle(bessel_rows):
    m = np.array([r["m"] for r in bessel_rows])
    x = np.array([r["x"] for r in bessel_rows])
    got = log_scaled(m, x)
    for arr, key in zip(got, ("log_i", "log_k", "dlog_i", "dlog_k")):
        ref = np.array([float(r[key]) for r in bessel_rows])
        # an error in a log is a relative error in the value: 1e-12 wherever
        # the value is a double; beyond that the log is a running sum over
        # ~m recurrence steps and is held to 1e-14 relative
        representable = np.abs(ref) < 700
        tol = np.where(representable, 1e-12, 1e-14 * np.abs(ref))
        assert np.all(np.abs(arr - ref) <= tol), key


def test_values_match_oracle(bessel_rows):
    rows = [r for r in bessel_rows
            if abs(float(r["log_i"])) < 700 and abs(float(r["log_k"])) < 700]
    assert len(rows) > 500
    for r in rows:
        p = eval_scaled(r["m"], r["x"])
        i_ref = math.exp(float(r["log_i"]))
        k_ref = math.exp(float(r["log_k"]))
        assert p.i_scaled == pytest.approx(i_ref, rel=1e-12)
        assert p.k_scaled == pytest.approx(k_ref, rel=1e-12)
        assert p.di_scaled == pytest.approx(i_ref * float(r["dlog_i"]), rel=1e-12)
        assert p.dk_scaled == pytest.approx(k_ref * float(r["dlog_k"]), rel=1e-12)


def test_k0_at_one():
    p = eval_scaled(0, 1.0)
    assert p.k_scaled == pytest.approx(math.e * 0.421024438240708333335627379213, rel=1e-14)


@pytest.mark.parametrize("u", [1e-6, 0.3, 1.0, 17.0, 900.0])
def test_di0_is_i1(u):
    assert eval_scaled(0, u).di_scaled == pytest.approx(eval_scaled(1, u).i_scaled, rel=1e-14)


def test_wronskian_example():
    assert eval_scaled(5, 10.0).wronskian_residual() < 1e-12


def test_signs_at_extremes():
    for m, u in [(0, 1e-8), (0, 1e4), (2000, 1e4), (1, 700.0), (300, 250.0)]:
        p = eval_scaled(m, u)
        assert p.i_scaled > 0 and p.k_scaled > 0 and p.di_scaled > 0 and p.dk_scaled < 0


def test_wronskian_bulk():
    # 10^4 samples whose scaled values are representable doubles
    rng = np.random.default_rng(7)
    m = rng.integers(0, ORDER_CAP + 1, 80_000)
    u = 10 ** rng.uniform(-8, 4, 80_000)
    log_i, log_k, dli, dlk = log_scaled(m, u)
    logs = (log_i, log_k, log_i + np.log(dli), log_k + np.log(-dlk))
    ok = np.logical_and.reduce([np.abs(v) < 700 for v in logs])
    m, u = m[ok][:10_000], u[ok][:10_000]
    assert m.size == 10_000
    i, k, di, dk = eval_scaled_array(m, u)
    resid = np.abs(i * dk - di * k + 1.0 / u) * u
    assert resid.max() < 1e-12


@settings(max_examples=300, deadline=None)
@given(st.integers(0, ORDER_CAP), st.floats(1e-8, 1e4))
def test_wronskian_property(m, u):
    try:
        p = eval_scaled(m, u)
    except BesselRangeError:
        return
    assert p.wronskian_residual() < 1e-12


def test_k_scaled_decreasing_in_argument():
    u = np.geomspace(1e-4, 1e3, 400)
    for m in (0, 1, 5, 50):
        _, k, _, _ = eval_scaled_array(np.full(u.size, m), u)
        assert np.all(np.diff(k) < 0)


def test_recurrence_closure():
    # K_{m+1} e^u = K_{m-1} e^u + (2m/u) K_m e^u
    for u in (0.5, 3.0, 40.0, 600.0):
        m = np.arange(0, 502)
        log_k = log_scaled(m, np.full(m.size, u))[1]
        sel = np.abs(log_k) < 700
        k = np.where(sel, np.exp(np.where(sel, log_k, 0.0)), np.nan)
        for j in range(1, 501):
            if np.isfinite(k[j - 1:j + 2]).all():
                assert k[j + 1] == pytest.approx(k[j - 1] + 2 * j / u * k[j], rel=1e-11)


def test_ratio_tables_against_oracle():
    z = np.array([0.2, 5.0, 80.0])
    q = k_ratio_table(z, 60)
    p = i_ratio_table(z, 60)
    with mp.workdps(30):
        for j, x in enumerate(z):
            for m in (0, 1, 10, 59):
                kq = mp.besselk(m + 1, x) / mp.besselk(m, x)
                ip = mp.besseli(m + 1, x) / mp.besseli(m, x)
                assert q[m, j] == pytest.approx(float(kq), rel=1e-13)
                assert p[m, j] == pytest.approx(float(ip), rel=1e-13)


def test_second_derivative_m0_identity():
    for z in (0.1, 2.0, 50.0):
        k0 = eval_scaled(0, z).k_scaled
        k1 = eval_scaled(1, z).k_scaled
        assert second_derivative_k(0, z) == pytest.approx(k0 + k1 / z, rel=1e-13)


def test_second_derivative_vs_oracle_difference():
    with mp.workdps(40):
        ref = float(bessel_mp.k_second_difference(1, mp.mpf(2)))
    assert second_derivative_k(1, 2.0) == pytest.approx(ref, rel=1e-12)


def test_second_derivative_positive():
    assert second_derivative_k(3, 0.5) > 0
    for m in (0, 2, 40):
        for z in (1e-3, 1.0, 300.0):
            assert second_derivative_k(m, z) > 0


def test_second_derivative_accepts_pair():
    pair = eval_scaled(4, 3.0)
    assert second_derivative_k(4, 3.0, pair) == second_derivative_k(4, 3.0)


@pytest.mark.parametrize("m, u", [(0, 0.0), (0, -1.0), (-1, 1.0), (1.5, 1.0), (0, float("nan"))])
def test_domain_errors(m, u):
    with pytest.raises(DomainError):
        eval_scaled(m, u)


def test_order_cap():
    with pytest.raises(CapacityError):
        eval_scaled(ORDER_CAP + 1, 10.0)
    eval_scaled(50, 10.0, order_cap=50)
    with pytest.raises(CapacityError):
        eval_scaled(51, 10.0, order_cap=50)


def test_unrepresentable_raises_but_log_is_finite():
    with pytest.raises(BesselRangeError):
        eval_scaled(2000, 1e-3)
    # small argument, moderate order: K_m e^u overflows
    with pytest.raises(BesselRangeError):
        eval_scaled(120, 1e-6)
    logs = log_scaled(np.array([2000]), np.array([1e-3]))
    assert all(np.isfinite(v).all() for v in logs)
