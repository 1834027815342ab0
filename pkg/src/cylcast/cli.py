"""Command-line front end.

Subcommands ``xi``, ``potential``, ``ridge``, ``critical``, ``gamma``,
``trap``, ``scan`` compute one table each; ``reproduce --figure N`` writes
the dataset behind one of the reference figures.  Output is CSV (default)
or JSON ``{config, meta, data}``; a JSON file can be fed back through
``--config`` to rerun the identical computation.

Exit status: 0 on success, 2 for invalid input, 3 for numerical failure.
Failures print a one-line JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_BRACKET_POINTS,
    DEFAULT_X_SCAN_MAX,
    DEFAULT_X_SCAN_MIN,
    ScanResult,
    TrapConfig,
    critical_curvature,
    gamma_curve,
    grid_from_ranges,
    grid_scan,
    resolve_threads,
    ridge_scan,
    trap_shift,
)
from .errors import CylcastError, DomainError
from .kernels import DEFAULT_SPEC, QuadratureSpec, Regime, kernel_bundle
from .potential import ParticleResponse, curvature_x_on_y_plane, local_expansion, si_prefactor

COMMANDS = ("xi", "potential", "ridge", "critical", "gamma", "trap", "scan")
SPEC_FLAGS = ("rel_tol", "abs_tol", "max_mode", "mode_tail_tol")
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Fully resolved description of one run."""

    command: str
    regime: str = "cp"
    beta: float | None = None
    response: list | None = None
    params: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)
    fmt: str = "csv"
    output: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"unknown format {self.fmt!r}")
        self.regime = Regime.parse(self.regime).value
        if self.beta is not None and self.response is not None:
            raise UsageError("give either --beta or --response, not both")

    def quadrature_spec(self):
        return QuadratureSpec(**{**DEFAULT_SPEC.to_dict(), **self.spec})

    def particle(self):
        if self.response is not None:
            r_x, r_y, r_z = self.response
            return ParticleResponse(self.regime, r_x, r_y, r_z)
        if self.beta is None:
            raise UsageError("a response is required: --beta or --response")
        return ParticleResponse.from_beta(self.beta, self.regime)

    def to_dict(self):
        return {
            "command": self.command,
            "regime": self.regime,
            "beta": self.beta,
            "response": self.response,
            "params": self.params,
            "spec": self.quadrature_spec().to_dict(),
            "fmt": self.fmt,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d.get("config", d))
        known = {k: d[k] for k in ("command", "regime", "beta", "response", "params", "spec", "fmt")
                 if k in d}
        return cls(**known)


# --------------------------------------------------------------------------
# argument parsing

def _add_response(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--beta", type=float, help="r_x = r_z = beta, r_y = 1")
    g.add_argument("--response", type=float, nargs=3, metavar=("RX", "RY", "RZ"),
                   help="explicit principal response values")


def _add_common(p, response=True, response_required=True):
    p.add_argument("--regime", choices=[r.value for r in Regime], default="cp")
    if response:
        _add_response(p, response_required)
    p.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")
    p.add_argument("--abs-tol", type=float, help="quadrature absolute tolerance")
    p.add_argument("--max-mode", type=int, help="azimuthal mode cap")
    p.add_argument("--mode-tail-tol", type=float, help="mode-sum truncation tolerance")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("--threads", type=int, help="worker threads (default: $CYLCAST_THREADS or 1)")


def build_parser():
    parser = _Parser(prog="cylcast", description=(
        "Dispersion interaction of an anisotropic particle with a conducting cylinder."))
    parser.add_argument("--version", action="version", version=f"cylcast {__version__}")
    parser.add_argument("--config", help="rerun the config embedded in a JSON output file")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("xi", help="kernel values at given rho")
    _add_common(p, response=False)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rho", type=float, nargs="+")
    g.add_argument("--rho-range", type=float, nargs=3, metavar=("LO", "HI", "N"))

    p = sub.add_parser("potential", help="energy, force and curvature at one point")
    _add_common(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--radius", type=float, help="cylinder radius in m (adds SI columns)")

    p = sub.add_parser("ridge", help="extrema of U along planes x = x0")
    _add_common(p)
    p.add_argument("--x-range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--n-points", type=int, default=20)
    p.add_argument("--y-max", type=float)

    p = sub.add_parser("critical", help="x0 where the lateral curvature at y=0 changes sign")
    _add_common(p, response=False)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--x-scan-min", type=float, default=DEFAULT_X_SCAN_MIN)
    p.add_argument("--x-scan-max", type=float, default=DEFAULT_X_SCAN_MAX)
    p.add_argument("--n-bracket", type=int, default=DEFAULT_BRACKET_POINTS)

    p = sub.add_parser("gamma", help="boundary curve gamma(beta) and the beta threshold")
    _add_common(p, response=False)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--betas", type=float, nargs="+")
    g.add_argument("--beta-range", type=float, nargs=3, metavar=("LO", "HI", "N"))
    p.add_argument("--x-scan-min", type=float, default=DEFAULT_X_SCAN_MIN)
    p.add_argument("--x-scan-max", type=float, default=DEFAULT_X_SCAN_MAX)

    p = sub.add_parser("trap", help="trap frequency shift (SI inputs)")
    _add_common(p)
    p.add_argument("--omega", type=float, required=True, help="trap frequency, rad/s")
    p.add_argument("--mass", type=float, required=True, help="particle mass, kg")
    p.add_argument("--radius", type=float, required=True, help="cylinder radius, m")
    p.add_argument("--x0", type=float, required=True, help="plane x = x0, units of R")
    p.add_argument("--scale", type=float, default=1.0,
                   help="SI magnitude multiplying the response (e.g. alpha_yy)")

    p = sub.add_parser("scan", help="grid of U, lateral force and curvature")
    _add_common(p)
    p.add_argument("--x-range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--y-range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--resolution", type=int, nargs=2, required=True, metavar=("NX", "NY"))
    p.add_argument("--radius", type=float, help="cylinder radius in m (adds SI columns)")

    p = sub.add_parser("reproduce", help="datasets behind the reference figures")
    p.add_argument("--figure", type=int, required=True, choices=range(3, 10))
    p.add_argument("--output-dir", default=".")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    p.add_argument("--threads", type=int)
    p.add_argument("--plot-script", action="store_true",
                   help="also write a matplotlib script that plots the files")
    return parser


_PARAM_KEYS = {
    "xi": ("rho", "rho_range"),
    "potential": ("x", "y", "radius"),
    "ridge": ("x_range", "n_points", "y_max"),
    "critical": ("x_scan_min", "x_scan_max", "n_bracket"),
    "gamma": ("betas", "beta_range", "x_scan_min", "x_scan_max"),
    "trap": ("omega", "mass", "radius", "x0", "scale"),
    "scan": ("x_range", "y_range", "resolution", "radius"),
}


def config_from_args(ns):
    spec = {k: getattr(ns, k) for k in SPEC_FLAGS if getattr(ns, k, None) is not None}
    params = {k: getattr(ns, k) for k in _PARAM_KEYS[ns.command] if getattr(ns, k, None) is not None}
    return RunConfig(
        command=ns.command,
        regime=ns.regime,
        beta=getattr(ns, "beta", None),
        response=getattr(ns, "response", None),
        params=params,
        spec=spec,
        fmt=ns.fmt,
        output=ns.output,
        threads=resolve_threads(ns.threads),
    )


# --------------------------------------------------------------------------
# commands

def _range(lo, hi, n):
    n = int(n)
    if n < 1:
        raise UsageError("range count must be >= 1")
    return list(np.linspace(lo, hi, n)) if n > 1 else [float(lo)]


def _cmd_xi(cfg, spec):
    prm = cfg.params
    rhos = prm.get("rho") or _range(*prm["rho_range"])
    rows = []
    for rho in rhos:
        v = kernel_bundle(rho, cfg.regime, spec).value
        rows.append((float(rho), v.xi_rho, v.xi_phi, v.xi_z, v.err_rho, v.err_phi, v.err_z))
    cols = ["rho_bar", "xi_rho", "xi_phi", "xi_z", "err_rho", "err_phi", "err_z"]
    return ScanResult("xi", cols, ["R"] + ["dimensionless"] * 6, rows)


def _cmd_potential(cfg, spec):
    p = cfg.particle()
    x, y = cfg.params["x"], cfg.params["y"]
    norm = p.normalized()
    le = local_expansion(norm, x, y, spec)
    cols = ["x_bar", "y_bar", "u_bar", "force_x_bar", "force_y_bar", "d2u_dx2_bar", "d2u_dy2_bar"]
    units = ["R", "R"] + ["dimensionless"] * 5
    row = [x, y, le.u, -le.du_dx, -le.du_dy, le.d2u_dx2, le.d2u_dy2]
    radius = cfg.params.get("radius")
    if radius is not None:
        cols.append("u_si")
        units.append("J")
        row.append(si_prefactor(p, radius) * le.u)
    return ScanResult("potential", cols, units, [tuple(row)])


def _cmd_ridge(cfg, spec):
    prm = cfg.params
    scan = ridge_scan(cfg.particle(), prm["x_range"], prm.get("n_points", 20), spec,
                      y_search_max=prm.get("y_max"), threads=cfg.threads)
    rows = [(q.x_bar_0, q.y_bar_extremum, q.kind, q.du_dy, q.d2u_dy2) for q in scan.points]
    rows += [(x0, None, f"error: {msg}", None, None) for x0, msg in scan.failures]
    cols = ["x_bar_0", "y_bar_extremum", "kind", "du_dy_bar", "d2u_dy2_bar"]
    units = ["R", "R", "", "dimensionless", "dimensionless"]
    return ScanResult("ridge", cols, units, rows, {"n_failures": len(scan.failures)})


def _cmd_critical(cfg, spec):
    prm = cfg.params
    beta = 0.0 if cfg.beta is None else cfg.beta
    res = critical_curvature(beta, cfg.regime, spec,
                             x_scan_max=prm.get("x_scan_max", DEFAULT_X_SCAN_MAX),
                             x_scan_min=prm.get("x_scan_min", DEFAULT_X_SCAN_MIN),
                             n_bracket=prm.get("n_bracket", DEFAULT_BRACKET_POINTS))
    cols = ["beta", "root_index", "gamma", "bracket_lo", "bracket_hi", "status"]
    units = ["", "", "R", "R", "R", ""]
    if res.roots:
        rows = [(beta, i, r, b[0], b[1], "sign change")
                for i, (r, b) in enumerate(zip(res.roots, res.brackets))]
    else:
        rows = [(beta, None, None, None, None, res.describe())]
    meta = {"x_scan_min": res.x_scan_min, "x_scan_max": res.x_scan_max}
    return ScanResult("critical", cols, units, rows, meta)


def _cmd_gamma(cfg, spec):
    prm = cfg.params
    betas = prm.get("betas") or _range(*prm["beta_range"])
    gc = gamma_curve(cfg.regime, betas, spec,
                     x_scan_max=prm.get("x_scan_max", DEFAULT_X_SCAN_MAX),
                     x_scan_min=prm.get("x_scan_min", DEFAULT_X_SCAN_MIN),
                     threads=cfg.threads)
    rows = []
    for b, g in gc.samples:
        status = "sign change" if g is not None else f"no sign change up to x_scan_max={gc.x_scan_max:g}"
        rows.append((b, g, status))
    meta = {
        "beta_threshold": gc.beta_threshold,
        "threshold_bracket": list(gc.threshold_bracket),
        "x_scan_min": gc.x_scan_min,
        "x_scan_max": gc.x_scan_max,
        "multiple_roots": [[b, list(r)] for b, r in gc.multiple_roots],
    }
    return ScanResult("gamma", ["beta", "gamma", "status"], ["", "R", ""], rows, meta)


def _cmd_trap(cfg, spec):
    prm = cfg.params
    base = cfg.particle()
    s = prm.get("scale", 1.0)
    resp = ParticleResponse(base.regime, base.r_x * s, base.r_y * s, base.r_z * s)
    tc = TrapConfig(prm["omega"], prm["mass"], prm["radius"], resp, prm["x0"])
    ts = trap_shift(tc, spec)
    cols = ["x_bar_0", "omega", "omega_prime", "delta_omega", "d2u_dy2_si"]
    units = ["R", "rad/s", "rad/s", "rad/s", "J/m^2"]
    return ScanResult("trap", cols, units,
                      [(tc.x_bar_0, tc.omega_trap, ts.omega_prime, ts.delta_omega, ts.curvature_si)])


def _cmd_scan(cfg, spec):
    prm = cfg.params
    xs, ys = grid_from_ranges(prm["x_range"], prm["y_range"], prm["resolution"])
    p = cfg.particle()
    res = grid_scan(p.normalized(), xs, ys, spec, threads=cfg.threads)
    radius = prm.get("radius")
    if radius is not None:
        a = si_prefactor(p, radius)
        res.columns += ["u_si", "force_y_si", "d2u_dy2_si"]
        res.units += ["J", "N", "J/m^2"]
        res.rows = [r + ((a * r[3], a * r[4] / radius, a * r[5] / radius ** 2)
                         if r[6] == "ok" else (None, None, None)) for r in res.rows]
    return res


_RUNNERS = {
    "xi": _cmd_xi,
    "potential": _cmd_potential,
    "ridge": _cmd_ridge,
    "critical": _cmd_critical,
    "gamma": _cmd_gamma,
    "trap": _cmd_trap,
    "scan": _cmd_scan,
}


def execute(cfg):
    """Run one resolved config and return its :class:`ScanResult`."""
    try:
        spec = cfg.quadrature_spec()
    except TypeError as exc:
        raise UsageError(f"bad spec override: {exc}") from None
    try:
        return _RUNNERS[cfg.command](cfg, spec)
    except KeyError as exc:
        raise UsageError(f"missing parameter {exc.args[0]!r} for {cfg.command}") from None


# --------------------------------------------------------------------------
# serialization

def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def to_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{c} [{u}]" if u else c for c, u in zip(result.columns, result.units)])
    for row in result.rows:
        w.writerow(["" if v is None else repr(_plain(v)) if isinstance(_plain(v), float) else _plain(v)
                    for v in row])
    return buf.getvalue()


def to_json_obj(result, cfg):
    meta = {
        "version": __version__,
        "kind": result.kind,
        "tolerances": cfg.quadrature_spec().to_dict(),
        "units": dict(zip(result.columns, result.units)),
    }
    meta.update({k: _plain(v) for k, v in result.meta.items()})
    data = [{c: _plain(v) for c, v in zip(result.columns, row)} for row in result.rows]
    return {"config": cfg.to_dict(), "meta": meta, "data": data}


def render(result, cfg):
    if cfg.fmt == "json":
        return json.dumps(to_json_obj(result, cfg), indent=1) + "\n"
    return to_csv(result)


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# figure presets

def _profile_configs(regime, x0s, y_half, n):
    return [(f"profile_x{x0:.2f}", RunConfig(
        "scan", regime, beta=0.0,
        params={"x_range": [x0, x0], "y_range": [-y_half, y_half], "resolution": [1, n]}))
        for x0 in x0s]


def figure_configs(figure):
    """``[(stem, RunConfig)]`` for one reference figure."""
    if figure == 3:
        return [("ridge_cp", RunConfig("ridge", "cp", beta=0.0,
                                       params={"x_range": [1.5, 9.0], "n_points": 31})),
                ("critical_cp", RunConfig("critical", "cp", beta=0.0))]
    if figure == 4:
        return _profile_configs("cp", (6.00, 6.44, 7.00, 7.50), 4.0, 161)
    if figure == 5:
        return [("gamma_cp", RunConfig("gamma", "cp",
                                       params={"betas": [round(0.01 * k, 2) for k in range(21)]}))]
    if figure == 6:
        return []  # handled by _figure6
    if figure == 7:
        return [("ridge_vdw", RunConfig("ridge", "vdw", beta=0.0,
                                        params={"x_range": [1.1, 3.5], "n_points": 25})),
                ("critical_vdw", RunConfig("critical", "vdw", beta=0.0))]
    if figure == 8:
        return _profile_configs("vdw", (1.50, 2.18, 2.50, 3.00), 3.0, 121)
    if figure == 9:
        return [("gamma_vdw", RunConfig("gamma", "vdw",
                                        params={"betas": [round(0.02 * k, 2) for k in range(19)]}))]
    raise UsageError(f"no preset for figure {figure}")


FIG6_BETAS = (0.0, 0.25, 0.5, 1.0)
FIG6_Y0 = (1.2, 1.5, 2.0, 3.0, 5.0, 10.0)


def figure6_table(spec=DEFAULT_SPEC):
    """Curvature ``d2U/dx2`` at ``x = 0`` on planes ``y = y0``."""
    rows = []
    for regime in ("cp", "vdw"):
        for beta in FIG6_BETAS:
            p = ParticleResponse.from_beta(beta, regime)
            for y0 in FIG6_Y0:
                rows.append((regime, beta, y0, curvature_x_on_y_plane(p, y0, spec)))
    return ScanResult("y_plane", ["regime", "beta", "y_bar_0", "d2u_dx2_bar"],
                      ["", "", "R", "dimensionless"], rows)


_PLOT_STUB = '''"""Plot the CSV files written by `cylcast reproduce` (needs matplotlib)."""
import csv
import sys

import matplotlib.pyplot as plt

for path in sys.argv[1:] or {files!r}:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], [r for r in rows[1:] if all(v != "" for v in r[:2])]
    x = [float(r[{xcol}]) for r in body]
    y = [float(r[{ycol}]) if r[{ycol}] else float("nan") for r in body]
    plt.plot(x, y, label=path)
plt.xlabel({xlabel!r})
plt.ylabel({ylabel!r})
plt.legend()
plt.show()
'''


def reproduce(figure, output_dir, fmt="csv", threads=None, plot_script=False):
    """Write the dataset files for one figure; return their paths."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    threads = resolve_threads(threads)
    if figure == 6:
        res = figure6_table()
        path = out / f"fig6_y_plane.{fmt}"
        text = to_csv(res) if fmt == "csv" else json.dumps(
            {"config": {"figure": 6, "betas": FIG6_BETAS, "y_bar_0": FIG6_Y0},
             "meta": {"version": __version__, "tolerances": DEFAULT_SPEC.to_dict()},
             "data": [dict(zip(res.columns, r)) for r in res.rows]}, indent=1) + "\n"
        path.write_text(text, encoding="utf-8")
        written.append(path)
    else:
        for stem, cfg in figure_configs(figure):
            cfg = replace(cfg, fmt=fmt, threads=threads)
            path = out / f"fig{figure}_{stem}.{fmt}"
            path.write_text(render(execute(cfg), cfg), encoding="utf-8")
            written.append(path)
    if plot_script and fmt == "csv":
        cols = {
            4: (1, 3, "y/R", "U (dimensionless)"),
            8: (1, 3, "y/R", "U (dimensionless)"),
            5: (0, 1, "beta", "gamma"),
            9: (0, 1, "beta", "gamma"),
            3: (0, 1, "x0/R", "y/R at extremum"),
            7: (0, 1, "x0/R", "y/R at extremum"),
            6: (2, 3, "y0/R", "d2U/dx2"),
        }[figure]
        files = [p.name for p in written if "critical" not in p.name]
        stub = _PLOT_STUB.format(files=files, xcol=cols[0], ycol=cols[1],
                                 xlabel=cols[2], ylabel=cols[3])
        path = out / f"plot_fig{figure}.py"
        path.write_text(stub, encoding="utf-8")
        written.append(path)
    return written


# --------------------------------------------------------------------------
# entry point

def _error_record(kind, exc):
    return json.dumps({"error": {"type": kind, "exception": type(exc).__name__,
                                 "message": str(exc)}})


def run(argv=None):
    """Parse ``argv``, run, write outputs; return the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(argv)
        if ns.config:
            raw = json.loads(Path(ns.config).read_text(encoding="utf-8"))
            cfg = replace(RunConfig.from_dict(raw), threads=resolve_threads(None))
            if ns.command is not None:
                raise UsageError("--config cannot be combined with a subcommand")
        elif ns.command is None:
            raise UsageError("a subcommand is required (see --help)")
        elif ns.command == "reproduce":
            for path in reproduce(ns.figure, ns.output_dir, ns.fmt, ns.threads, ns.plot_script):
                print(path)
            return 0
        else:
            cfg = config_from_args(ns)
        print(json.dumps({"config": cfg.to_dict()}), file=sys.stderr)
        _emit(render(execute(cfg), cfg), cfg.output)
        return 0
    except (UsageError, DomainError, json.JSONDecodeError, OSError) as exc:
        print(_error_record("usage", exc), file=sys.stderr)
        return EXIT_USAGE
    except CylcastError as exc:
        print(_error_record("numerical", exc), file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
