"""Command-line interface: ``deltawell <subcommand> [flags]``.

Data goes to stdout (or ``--output``), diagnostics to stderr.  Floats are
printed with 17 significant digits so that they round-trip exactly.

Exit codes: 0 success, 1 domain error (e.g. the threshold a*alpha = -1),
2 numerical-accuracy failure, 64 usage error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import propagator
from .estimates import decay_grid, decay_scan, seed_family, strichartz_exponent, strichartz_probe
from .grid import Grid, WaveFunction, gaussian
from .integrals import AIntegralArgs, a_closed, a_quadrature
from .nls import BlowUpError, NonContractionError, SimulationConfig, evolve
from .propagator import NonConvergenceError, continuous_kernel, oracle_kernel
from .resolvent import PoleError, resolvent_kernel
from .specfun import AccuracyError
from .spectrum import ThresholdError, WellParams, eigenfunction, summary

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_ACCURACY = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v):
    return format(float(v), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # 17 significant digits; non-finite values are not valid JSON
        return float(_fmt(v)) if math.isfinite(v) else None
    return obj


def _emit(text, output):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, output):
    _emit(json.dumps(_jsonable(obj), indent=1, allow_nan=False) + "\n", output)


def _emit_csv(header, rows, output):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _emit(buf.getvalue(), output)


def _finite(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def _float_list(text):
    try:
        return [_finite(s) for s in text.split(",") if s.strip()]
    except argparse.ArgumentTypeError as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}: {exc}")


def _params(ns):
    return WellParams(ns.a, ns.alpha)


# ------------------------------------------------------------------ commands


def cmd_spectrum(ns):
    _emit_json(summary(_params(ns)), ns.output)


def cmd_resolvent(ns):
    p = _params(ns)
    k = complex(ns.k_re, ns.k_im)
    xs = np.linspace(ns.xmin, ns.xmax, ns.points)
    rows = []
    for x in xs:
        vals = resolvent_kernel(p, x, xs, k)
        rows.extend((x, y, v.real, v.imag) for y, v in zip(xs, vals))
    _emit_csv(["x", "y", "re", "im"], rows, ns.output)


def cmd_aintegral(ns):
    args = AIntegralArgs(ns.n, ns.gamma, ns.delta)
    c = a_closed(args)
    q = a_quadrature(args)
    _emit_json(
        {"closed": [c.real, c.imag], "quadrature": [q.real, q.imag], "abs_diff": abs(c - q)},
        ns.output,
    )


def cmd_kernel(ns):
    p = _params(ns)
    out = {}
    if ns.method in ("series", "both"):
        ev = continuous_kernel(p, ns.t, ns.x, ns.y, tol=ns.tol, method="series")
        out = {
            "re": ev.value.real,
            "im": ev.value.imag,
            "terms_used": ev.terms_used,
            "tail_estimate": ev.tail_estimate,
            "method": ev.method,
        }
    if ns.method in ("quadrature", "both"):
        ev_q = continuous_kernel(p, ns.t, ns.x, ns.y, tol=ns.tol, method="quadrature")
        if ns.method == "quadrature":
            out = {
                "re": ev_q.value.real,
                "im": ev_q.value.imag,
                "terms_used": 0,
                "tail_estimate": ev_q.tail_estimate,
                "method": "quadrature",
            }
        else:
            q = oracle_kernel(p, ns.t, ns.x, ns.y)
            out["method"] = "both"
            out["quadrature"] = {"re": q.real, "im": q.imag}
            out["abs_diff"] = abs(complex(out["re"], out["im"]) - q)
    _emit_json(out, ns.output)


def cmd_decay(ns):
    p = _params(ns)
    grid = decay_grid(p, points=ns.points, margin=ns.margin)
    rep = decay_scan(p, sorted(ns.t), grid, tol=ns.tol)
    _emit_csv(["t", "sup_sqrt_t_abs_U"], zip(rep.t_values, rep.sup_values), ns.output)
    print(f"constant {_fmt(rep.constant)}", file=sys.stderr)


def cmd_strichartz(ns):
    p = _params(ns)
    grid = Grid.symmetric(ns.L, ns.N, p.a)
    val = strichartz_probe(p, ns.r, ns.T, seed_family(grid, p), n_times=ns.times)
    q = strichartz_exponent(ns.r)
    _emit_json({"r": ns.r, "q": q, "T": ns.T, "probe": val}, ns.output)


def _initial_datum(spec, params, grid, base_dir):
    kind = spec.get("type", "gaussian")
    if kind == "gaussian":
        return gaussian(
            grid,
            float(spec.get("center", 0.0)),
            float(spec.get("width", 1.0)),
            float(spec.get("momentum", 0.0)),
        )
    if kind == "eigenstate":
        return eigenfunction(params, spec.get("index", "E1"), grid)
    if kind == "file":
        path = os.path.join(base_dir, spec["path"])
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] != grid.size or not np.allclose(data[:, 0], grid.x, atol=1e-9):
            raise ValueError(f"{path}: x column does not match the simulation grid")
        return WaveFunction.on(grid, data[:, 1] + 1j * data[:, 2])
    raise ValueError(f"unknown initial datum type {kind!r}")


def load_config(path):
    """Build a SimulationConfig from the JSON run description."""
    with open(path) as fh:
        cfg = json.load(fh)
    missing = [k for k in ("a", "alpha", "mu", "nu", "dt", "T") if k not in cfg]
    if missing:
        raise ValueError(f"config is missing {', '.join(missing)}")
    params = WellParams(float(cfg["a"]), float(cfg["alpha"]))
    grid = Grid.symmetric(float(cfg.get("L", 20.0 * params.a)), int(cfg.get("N", 512)), params.a)
    initial = _initial_datum(cfg.get("initial", {}), params, grid, os.path.dirname(path))
    return SimulationConfig(
        params=params,
        mu=float(cfg["mu"]),
        nu=float(cfg["nu"]),
        dt=float(cfg["dt"]),
        T=float(cfg["T"]),
        initial=initial,
        scheme=cfg.get("scheme", "strang_split"),
        save_every=int(cfg.get("save_every", 1)),
        linear_step=cfg.get("linear_step", "discrete"),
    )


def cmd_evolve(ns):
    config = load_config(ns.config)
    if config.focusing:
        print("warning: nu < 0 (focusing) is outside the positive-coupling hypothesis",
              file=sys.stderr)
    traj, ledger = evolve(config)
    os.makedirs(ns.outdir, exist_ok=True)
    x = config.initial.grid.x
    for k, (t, psi) in enumerate(zip(ledger.times, traj)):
        path = os.path.join(ns.outdir, f"psi_{k:05d}.csv")
        rows = zip(x, psi.values.real, psi.values.imag)
        _emit_csv(["x", "re", "im"], rows, path)
    _emit_csv(
        ["t", "charge", "energy"],
        zip(ledger.times, ledger.charges, ledger.energies),
        os.path.join(ns.outdir, "ledger.csv"),
    )
    print(
        f"steps {config.steps}  charge drift {ledger.charge_drift():.3e}  "
        f"energy drift {ledger.energy_drift():.3e}  outer mass {max(ledger.outer_mass):.3e}",
        file=sys.stderr,
    )


def cmd_selftest(ns):
    from .acceptance import run_all

    results = run_all(ns.only, stream=sys.stderr)
    failed = [r for r in results if not r.passed]
    _emit_json([r.as_dict() for r in results], ns.output)
    if failed:
        raise AccuracyError(
            "acceptance criteria failed: " + ", ".join(str(r.number) for r in failed)
        )


# ------------------------------------------------------------------ parser


def build_parser():
    parser = _Parser(prog="deltawell", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_text, well=True):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if well:
            p.add_argument("--a", type=_finite, required=True, help="half separation")
            p.add_argument("--alpha", type=_finite, required=True, help="coupling strength")
        p.add_argument("--output", default=None, help="write data here instead of stdout")
        return p

    add("spectrum", cmd_spectrum, "bound-state energies (JSON)")

    p = add("resolvent", cmd_resolvent, "resolvent kernel on a square grid (CSV)")
    p.add_argument("--k-re", type=_finite, default=0.0)
    p.add_argument("--k-im", type=_finite, required=True)
    p.add_argument("--xmin", type=_finite, default=-3.0)
    p.add_argument("--xmax", type=_finite, default=3.0)
    p.add_argument("--points", type=int, default=21)

    p = add("aintegral", cmd_aintegral, "A-integral, closed form and quadrature (JSON)", False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=_finite, required=True)
    p.add_argument("--delta", type=_finite, required=True)

    p = add("kernel", cmd_kernel, "continuous propagator kernel at one point (JSON)")
    p.add_argument("--t", type=_finite, required=True)
    p.add_argument("--x", type=_finite, required=True)
    p.add_argument("--y", type=_finite, required=True)
    p.add_argument("--tol", type=_finite, default=1e-8)
    p.add_argument("--method", choices=("series", "quadrature", "both"), default="series")

    p = add("decay", cmd_decay, "sup sqrt(t)|U| over a square grid (CSV)")
    p.add_argument("--t", type=_float_list, default=[0.1, 0.3, 1, 3, 10, 30, 100])
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--margin", type=_finite, default=5.0)
    p.add_argument("--tol", type=_finite, default=1e-8)

    p = add("strichartz", cmd_strichartz, "Strichartz mixed-norm probe (JSON)")
    p.add_argument("--r", type=_finite, required=True)
    p.add_argument("--T", type=_finite, required=True)
    p.add_argument("--L", type=_finite, default=15.0)
    p.add_argument("--N", type=int, default=600)
    p.add_argument("--times", type=int, default=20)

    p = add("evolve", cmd_evolve, "nonlinear evolution from a JSON config (CSV files)", False)
    p.add_argument("--config", required=True)
    p.add_argument("--outdir", required=True)

    p = add("selftest", cmd_selftest, "run the acceptance suite (JSON summary)", False)
    p.add_argument("--only", type=lambda s: [int(v) for v in s.split(",")], default=None,
                   help="comma-separated criterion numbers")
    return parser


def run(argv=None):
    """Parse and dispatch; returns the exit code."""
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if ns.threads < 1:
        print("deltawell: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    propagator.set_threads(ns.threads)
    try:
        ns.func(ns)
    except (AccuracyError, NonConvergenceError, NonContractionError, BlowUpError) as exc:
        print(f"deltawell: accuracy failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (ThresholdError, PoleError, ValueError, OSError) as exc:
        print(f"deltawell: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
