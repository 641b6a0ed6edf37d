"""Command-line front end.

Every output file starts with ``# key=value`` lines holding the effective
configuration; passing such a file back through ``--config`` reproduces it.
Exit codes: 0 ok, 2 usage or domain error, 3 numerical gate, 4 internal error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, _rng
from .analysis import CovarianceModel, KernelParams
from .crofton import crofton_residual
from .errors import DomainError, NumericalError
from .fieldsim import FieldSpec, dump_field, empirical_variance_curve, simulate_field
from .geometry import parse_window, shell
from .riesz import bound_check, mean_riesz, riesz_energy
from .spectral import DEFAULT_GRIDS, SpectralGrid, variance_curve

CURVE_COLUMNS = ("s", "h", "variance", "stderr", "method", "window", "alpha", "kappa", "seed")
METHODS = ("spectral", "mc", "exact1d", "quadrature", "quasi")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _count(text: str) -> int:
    value = float(text)
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


def _floats(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _common(p: argparse.ArgumentParser, window="disk", method="spectral"):
    p.add_argument("--window", default=window, help="interval, disk, square, cube, ballN, disk@cx,cy")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to HWL_SEED, then 0)")
    p.add_argument("--threads", type=int, default=1, help="worker cap; output does not depend on it")
    p.add_argument("--samples", type=_count, default=10**6, help="Monte Carlo pairs (1e6 notation allowed)")
    p.add_argument("--output", default=None, help="output file (stdout if omitted)")
    p.add_argument("--config", default=None, help="key=value file; command-line flags take precedence")


def _kernel_args(p, alpha=1.0):
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--kappa", type=int, default=1)


def _curve_args(p, s_max=None):
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--s-min", type=float, default=0.0)
    p.add_argument("--s-max", type=float, default=s_max, help="default 1 - h")
    p.add_argument("--s-steps", type=_count, default=None, help="number of s points (default: spacing h)")
    p.add_argument("--method", choices=METHODS, default="spectral")
    p.add_argument("--grid-m", type=_count, default=None)
    p.add_argument("--lambda-max", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hwl", description="Increment variances of Hermite-type limit processes.")
    parser.add_argument("--version", action="version", version=f"hwl {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("variance-curve", help="increment variances along s")
    _common(p)
    _kernel_args(p)
    _curve_args(p)

    p = sub.add_parser("fig2", help="interval, disk and square curves")
    _common(p)
    p.add_argument("--alpha", type=float, default=1.0, help="exponent for the planar windows")
    p.add_argument("--alpha-1d", type=float, default=0.6, help="exponent for the interval")
    p.add_argument("--kappa", type=int, default=1)
    _curve_args(p, s_max=0.96)

    p = sub.add_parser("crofton-check", help="finite difference of M(t,h) against the boundary formula")
    _common(p, method="mc")
    p.add_argument("--t", type=float, default=0.25)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--kalpha", type=float, default=1.0)
    p.add_argument("--fd-step", type=float, default=None)

    p = sub.add_parser("moment", help="mean of |U-V|^-kalpha on a shell")
    _common(p)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--kalpha", type=float, default=1.0)
    p.add_argument("--method", choices=("mc", "quasi", "quadrature"), default="mc")

    p = sub.add_parser("bounds", help="lower and upper energy bounds")
    _common(p)
    _kernel_args(p)
    p.add_argument("--kalpha", type=float, default=None, help="shortcut for kappa=1, alpha=kalpha")
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--t-large", type=float, default=100.0)
    p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("simulate", help="empirical increment variances from simulated fields")
    _common(p)
    _kernel_args(p)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--s-min", type=float, default=0.0)
    p.add_argument("--s-max", type=float, default=0.8)
    p.add_argument("--s-steps", type=_count, default=5)
    p.add_argument("--r", type=float, default=50.0)
    p.add_argument("--replicates", type=_count, default=200)
    p.add_argument("--grid-side", type=_count, default=1024)
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--lags", type=_floats, default=(1.0, 5.0, 10.0, 25.0))
    p.add_argument("--dump", default=None, help="write the first realisation as a binary dump")
    return parser


# --------------------------------------------------------------------------
# config handling
# --------------------------------------------------------------------------

def read_config(path) -> dict:
    """key=value lines; a leading '#' is ignored so output headers can be reused."""
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip().lstrip("#").strip()
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise UsageError(command)


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        sp = _subparser(parser, args.command)
        known = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
        defaults = {}
        for key, value in cfg.items():
            if key in known and value not in ("", "None"):
                action = known[key]
                try:
                    defaults[key] = action.type(value) if action.type else value
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"bad config value {key}={value}: {exc}") from exc
                if action.choices and defaults[key] not in action.choices:
                    raise UsageError(f"bad config value {key}={value}")
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = _rng.default_seed(0)
    return args


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt(x) for x in v)
    return "" if v is None else str(v)


def _header(args, extra=None) -> list[str]:
    items = {"command": args.command}
    for key, value in sorted(vars(args).items()):
        if key not in ("command", "config", "output", "threads"):
            items[key.replace("_", "-")] = value
    for key, value in (extra or {}).items():
        key = key.replace("_", "-")
        if items.get(key) is None:
            items[key] = value
    return [f"# {key}={_fmt(value)}" for key, value in items.items()]


def _write(args, lines, path=None):
    text = "\n".join(lines) + "\n"
    target = path or args.output
    if target is None:
        sys.stdout.write(text)
    else:
        with open(target, "w", newline="\n") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _s_grid(args):
    s_max = args.s_max if args.s_max is not None else 1.0 - args.h
    steps = args.s_steps or int(round((s_max - args.s_min) / args.h)) + 1
    if steps < 1 or s_max < args.s_min:
        raise DomainError("empty s grid")
    return np.round(np.linspace(args.s_min, s_max, steps), 12)


def _grid(args, n):
    if args.grid_m is None and args.lambda_max is None:
        return None
    base = DEFAULT_GRIDS[n]
    return SpectralGrid(args.grid_m or base.m, args.lambda_max or base.lambda_max)


def _curve_rows(curve, seed):
    rows = [",".join(CURVE_COLUMNS)]
    for s, v, e in curve.rows():
        rows.append(",".join(_fmt(x) for x in (s, curve.h, v, e, curve.method, curve.window,
                                               curve.alpha, curve.kappa, seed)))
    return rows


def _curve(args, window, alpha):
    params = KernelParams(window.dim, args.kappa, alpha)
    method = args.method
    if method == "exact1d" and window.dim != 1:
        raise DomainError("exact1d applies to one-dimensional windows only")
    return variance_curve(params, window, args.h, _s_grid(args), method, _grid(args, window.dim),
                          args.samples, args.seed)


def cmd_variance_curve(args):
    window = parse_window(args.window)
    curve = _curve(args, window, args.alpha)
    _write(args, _header(args, curve.meta) + _curve_rows(curve, args.seed))


def cmd_fig2(args):
    out = Path(args.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    for name, alpha in (("interval", args.alpha_1d), ("disk", args.alpha), ("square", args.alpha)):
        window = parse_window(name)
        curve = _curve(args, window, alpha)
        extra = {"curve-window": name, "curve-alpha": alpha, **curve.meta}
        _write(args, _header(args, extra) + _curve_rows(curve, args.seed), out / f"fig2_{name}.csv")


def cmd_crofton(args):
    window = parse_window(args.window)
    rep = crofton_residual(window, args.t, args.h, args.kalpha, args.fd_step, args.samples, args.seed)
    cols = ("window", "t", "h", "kalpha", "m", "m_stderr", "m_plus", "m_plus_stderr", "m_minus",
            "m_minus_stderr", "fd", "fd_stderr", "fd_step", "bias", "rhs", "rhs_stderr", "residual",
            "combined_stderr", "pass", "seed")
    vals = (window.name, rep.t, rep.h, rep.exponent, rep.m_value.value, rep.m_value.stderr, rep.m_plus.value,
            rep.m_plus.stderr, rep.m_minus.value, rep.m_minus.stderr, rep.fd_derivative.value,
            rep.fd_derivative.stderr, rep.fd_step, rep.bias, rep.rhs.value, rep.rhs.stderr, rep.residual,
            rep.combined_stderr, rep.passed, args.seed)
    _write(args, _header(args) + [",".join(cols), ",".join(_fmt(v) for v in vals)])


def cmd_moment(args):
    window = parse_window(args.window)
    region = shell(window, args.t, args.h)
    method = {"mc": "monte-carlo", "quasi": "quasi-random", "quadrature": "quadrature"}[args.method]
    if method == "quadrature":
        energy = riesz_energy(region, args.kalpha, args.samples, args.seed, method)
        mean = energy.scaled(region.volume ** -2)
    else:
        mean = mean_riesz(region, args.kalpha, args.samples, args.seed, method)
        energy = mean.scaled(region.volume ** 2)
    cols = ("window", "t", "h", "kalpha", "mean", "stderr", "energy", "energy_stderr", "samples", "method", "seed")
    vals = (window.name, args.t, args.h, args.kalpha, mean.value, mean.stderr, energy.value, energy.stderr,
            mean.samples, mean.method, args.seed)
    _write(args, _header(args) + [",".join(cols), ",".join(_fmt(v) for v in vals)])


def cmd_bounds(args):
    window = parse_window(args.window)
    if args.kalpha is not None:
        params = KernelParams(window.dim, 1, args.kalpha)
    else:
        params = KernelParams(window.dim, args.kappa, args.alpha)
    rep = bound_check(window, params, args.h, args.t_large, args.samples, args.seed, args.epsilon)
    cols = ("window", "h", "t_large", "kalpha", "epsilon", "lower_value", "lower_stderr", "lower_bound",
            "lower_margin", "lower_ok", "upper_value", "upper_stderr", "upper_bound", "upper_margin",
            "upper_ok", "preasymptotic", "seed")
    vals = (window.name, args.h, args.t_large, params.exponent, rep.epsilon, rep.lower_value.value,
            rep.lower_value.stderr, rep.lower_bound, rep.lower_margin, rep.lower_ok, rep.upper_value.value,
            rep.upper_value.stderr, rep.upper_bound, rep.upper_margin, rep.upper_ok, rep.preasymptotic, args.seed)
    _write(args, _header(args) + [",".join(cols), ",".join(_fmt(v) for v in vals)])


def cmd_simulate(args):
    window = parse_window(args.window)
    params = KernelParams(window.dim, args.kappa, args.alpha)
    spec = FieldSpec(args.grid_side, args.spacing, CovarianceModel("cauchy", args.alpha, n=window.dim),
                     args.seed, args.replicates, window.dim)
    s_grid = np.round(np.linspace(args.s_min, args.s_max, args.s_steps), 12)
    curve = empirical_variance_curve(spec, window, params, args.r, args.h, s_grid, lags=args.lags)
    if args.dump:
        dump_field(args.dump, simulate_field(spec, 0), args.spacing, args.alpha)
    meta = {k: v for k, v in curve.meta.items() if k not in ("cov_mean", "cov_stderr", "lags")}
    if args.lags:
        meta["cov-mean"] = tuple(curve.meta["cov_mean"])
        meta["cov-stderr"] = tuple(curve.meta["cov_stderr"])
    _write(args, _header(args, meta) + _curve_rows(curve, args.seed))


COMMANDS = {
    "variance-curve": cmd_variance_curve,
    "fig2": cmd_fig2,
    "crofton-check": cmd_crofton,
    "moment": cmd_moment,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"hwl: error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"hwl: error: {exc}", file=sys.stderr)
        return 2
    _rng.set_threads(args.threads)
    try:
        COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"hwl: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"hwl: numerical gate failed: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - reported, not hidden
        print(f"hwl: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
