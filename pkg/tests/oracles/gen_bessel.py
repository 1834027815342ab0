"""Freeze mpmath reference values of the scaled Bessel functions.

Writes ``tests/data/bessel_oracle.json`` with logarithms of the scaled
``I_m``, ``K_m`` and their logarithmic derivatives, so entries stay finite
where the scaled values themselves under- or overflow a double.
"""

import json
import sys
from pathlib import Path

import mpmath as mp
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
from bessel_mp import scaled_quadruple  # noqa: E402

SEED = 20240611
N_RANDOM = 988
# hand-picked corners: tiny/huge arguments, order cap, order ~ argument
CORNERS = [(0, 1e-8), (1, 1e-8), (0, 1e4), (2000, 1e4), (2000, 1.0), (2000, 2000.0),
           (3, 700.0), (0, 709.0), (50, 50.0), (500, 499.5), (1, 1.0), (10, 0.1)]


def samples():
    rng = np.random.default_rng(SEED)
    out = list(CORNERS)
    for _ in range(N_RANDOM):
        band = rng.integers(3)
        if band == 0:
            m = int(rng.integers(0, 11))
        elif band == 1:
            m = int(rng.integers(11, 201))
        else:
            m = int(rng.integers(201, 2001))
        x = float(10 ** rng.uniform(-8, 4))
        out.append((m, x))
    return out


def main(out_path):
    rows = []
    with mp.workdps(30):
        for m, x in samples():
            i, k, di, dk = scaled_quadruple(m, x)
            rows.append({
                "m": m,
                "x": x,
                "log_i": mp.nstr(mp.log(i), 25),
                "log_k": mp.nstr(mp.log(k), 25),
                "dlog_i": mp.nstr(di / i, 25),
                "dlog_k": mp.nstr(dk / k, 25),
            })
    Path(out_path).write_text(json.dumps({"dps": 30, "seed": SEED, "rows": rows}, indent=0))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else
         str(Path(__file__).resolve().parents[1] / "data" / "bessel_oracle.json"))
