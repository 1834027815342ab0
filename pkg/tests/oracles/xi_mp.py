"""High-precision oracle for the six cylinder kernels.

Independent of :mod:`cylcast.kernels`: Bessel values (not ratios) in mpmath
arithmetic, ``I_m`` by Miller's backward recurrence normalized to the
power series of ``I_0``, tanh-sinh quadrature (``mpmath.quad``) out to a
cutoff where the exponential tail is below 1e-50, and a direct
mode-by-mode sum cut at 1e-22 relative (below the working precision, so
tanh-sinh sees a smooth integrand).

Run as a script to regenerate ``tests/data/xi_oracle.json``.
"""

import json
import sys
import time
from pathlib import Path

import mpmath as mp

sys.path.insert(0, str(Path(__file__).resolve().parent))
from bessel_mp import bessel_i, bessel_k01  # noqa: E402

MODE_TOL = mp.mpf("1e-22")

RHO_SAMPLES = [1.1, 1.15, 1.25, 1.4, 1.5, 1.75, 2.0, 2.18, 2.5, 3.0,
               4.0, 5.0, 6.0, 6.44, 7.5, 10.0, 15.0, 20.0, 30.0, 50.0]


def _k_values(m_max, x):
    k0, k1 = bessel_k01(x)
    ks = [k0, k1]
    for m in range(1, m_max + 1):
        ks.append(ks[m - 1] + 2 * m / x * ks[m])
    return ks


def _i_values(m_max, x):
    # Miller: start far above m_max, recur down, normalize with I_0 series.
    # mpf exponents are unbounded, so no intermediate rescaling is needed.
    start = m_max + 20 + int(mp.sqrt(60 * x))
    seq = [mp.mpf(0)] * (start + 2)
    seq[start] = mp.mpf(1)
    for m in range(start, 0, -1):
        seq[m - 1] = seq[m + 1] + 2 * m / x * seq[m]
    norm = bessel_i(0, x) / seq[0]
    return [v * norm for v in seq[:m_max + 2]]


def mode_terms(m, u, rho, iv, ku, kw):
    """Per-mode integrands (CP rho, phi, z; vdW rho, phi, z) at ``u``."""
    i_m = iv[m]
    k_m = ku[m]
    if m == 0:
        di = iv[1]
        dk = -ku[1]
        dkw = -kw[1]
    else:
        di = (iv[m - 1] + iv[m + 1]) / 2
        dk = -(ku[m - 1] + ku[m + 1]) / 2
        dkw = -(kw[m - 1] + kw[m + 1]) / 2
    kw_m = kw[m]
    ik = i_m / k_m
    dik = di / dk
    mm = mp.mpf(m) ** 2 / rho ** 2
    u2 = u * u
    cp_rho = 2 * u * (u2 * ik * dkw ** 2 - mm * dik * kw_m ** 2)
    cp_phi = 2 * u * (-u2 * dik * dkw ** 2 + mm * ik * kw_m ** 2)
    cp_z = 4 * u ** 3 * ik * kw_m ** 2
    c = 2 / mp.pi
    v_rho = c * u2 * ik * dkw ** 2
    v_phi = c * mm * ik * kw_m ** 2
    v_z = c * u2 * ik * kw_m ** 2
    return [cp_rho, cp_phi, cp_z, v_rho, v_phi, v_z]


def integrand_all(u, rho):
    u = mp.mpf(u)
    w = u * rho
    m_max = 64
    while True:
        iv = _i_values(m_max + 1, u)
        ku = _k_values(m_max + 1, u)
        kw = _k_values(m_max + 1, w)
        total = [mp.mpf(0)] * 6
        small_run = 0
        for m in range(m_max + 1):
            t = mode_terms(m, u, rho, iv, ku, kw)
            if m == 0:
                t = [v / 2 for v in t]
            total = [a + b for a, b in zip(total, t)]
            if m >= 2 and all(abs(b) <= MODE_TOL * abs(a) for a, b in zip(total, t)):
                small_run += 1
                if small_run >= 2:
                    return total
            else:
                small_run = 0
        m_max *= 2


def xi_oracle(rho, dps=20):
    """All six kernels at ``rho``: ``(values, quad error estimates)``."""
    with mp.workdps(dps):
        rho = mp.mpf(rho)
        memo = {}

        def f_all(u):
            key = mp.mpf(u)
            if key == 0:
                return [mp.mpf(0)] * 6
            if key not in memo:
                memo[key] = integrand_all(key, rho)
            return memo[key]

        # integrand <= poly(u) e^{-2u(rho-1)}: e^{-140} is far below 1e-20
        s = 1 / (2 * (rho - 1))
        pts = [0] + [s * 2 ** k for k in range(-6, 7)] + [140 * s]
        vals, errs = [], []
        for j in range(6):
            v, e = mp.quad(lambda x: f_all(x)[j], pts, error=True)
            vals.append(v)
            errs.append(e)
        return vals, errs


KERNEL_NAMES = ["cp_rho", "cp_phi", "cp_z", "vdw_rho", "vdw_phi", "vdw_z"]


# far-field samples covering the large-x end of the critical-curvature scan
FAR_SAMPLES = [200.0, 1000.0]


def main(argv=None):
    import argparse

    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--far", action="store_true", help="use the far-field sample set")
    ap.add_argument("--rho", type=float, nargs="+", help="explicit sample list")
    ap.add_argument("--out", help="output JSON path")
    args = ap.parse_args(argv)
    data = Path(__file__).resolve().parents[1] / "data"
    samples = args.rho or (FAR_SAMPLES if args.far else RHO_SAMPLES)
    default = "xi_oracle_far.json" if args.far else "xi_oracle.json"
    out_path = args.out or str(data / default)
    rows = []
    for rho in samples:
        t0 = time.time()
        vals, errs = xi_oracle(rho)
        row = {"rho_bar": rho}
        for name, v, e in zip(KERNEL_NAMES, vals, errs):
            row[name] = mp.nstr(v, 18)
            row[name + "_quad_err"] = mp.nstr(e, 3)
        rows.append(row)
        print(rho, f"{time.time() - t0:.1f}s", [mp.nstr(v, 12) for v in vals], flush=True)
    Path(out_path).write_text(json.dumps({"mode_tol": "1e-22", "dps": 20, "rows": rows}, indent=1))


if __name__ == "__main__":
    main()
