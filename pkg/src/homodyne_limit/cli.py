"""Command-line interface.

Conventions: the detector reads N_aux - N (auxiliary minus signal port) scaled
by 1/(sqrt2 r), so outcomes sit on the lattice k / (sqrt2 r). Complex numbers
are given as "re,im". Exit codes: 0 ok, 2 configuration error, 3 numerical
budget exhausted, 4 diagnostic failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convergence import (
    CalibrationError,
    bounded_function_diagnostic,
    calibrate,
    cdf_interval_diagnostic,
    characteristic_function,
    counterexample,
    empirical_cf,
    INTERVAL_BATTERY,
    ks_distance,
    moment_limit_check,
    interval_verdict,
    weak_tolerance,
    non_increasing,
    strictly_decreasing,
)
from .fock import TruncationBudgetError
from .homodyne import homodyne_distribution
from .moments import DEFAULT_KMAX, TailDominatedError, exp_moment_bound_check, moment_report
from .quadrature import GridWidthError, quadrature_law
from .states import StateSpecError, coherent, fock, load_state, load_states

EXIT_CONFIG, EXIT_BUDGET, EXIT_DIAGNOSTIC = 2, 3, 4

CONVENTIONS = (
    "Detection observable: (sqrt2 r)^-1 (N_aux - N), auxiliary minus signal photon count; "
    "oscillator |z>, z = r e^{i theta}. Complex values are written re,im; use --beta=-1,0 when the value starts with a minus."
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    state: str | None = None
    states: str | None = None
    r: float | None = None
    r_list: list[float] = field(default_factory=list)
    theta: float = 0.0
    kmax: int = DEFAULT_KMAX
    dim: int | None = None
    out: str | None = None
    fmt: str = "json"
    exp_a: float | None = None
    beta: complex = 0j
    t: list[float] = field(default_factory=list)
    weak_tol: float | None = None

    def __post_init__(self):
        self.theta = self.theta % (2 * math.pi)
        for r in ([self.r] if self.r is not None else []) + list(self.r_list):
            if not r > 0:
                raise ConfigError("oscillator amplitudes must be positive")
        if self.weak_tol is not None and not self.weak_tol > 0:
            raise ConfigError("--weak-tol must be positive")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")


def parse_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_dim(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("dim must be a positive integer or 'auto'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("dim must be positive")
    return value


def emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def distribution_csv(dist) -> str:
    buf = io.StringIO()
    buf.write("k,x,p\n")
    for k, x, p in zip(dist.ks, dist.xs, dist.weights):
        buf.write(f"{k},{fmt(x)},{fmt(p)}\n")
    buf.write(f"# deficit={fmt(dist.deficit)}\n")
    return buf.getvalue()


def _state(cfg: RunConfig):
    if cfg.state is None:
        raise ConfigError("--state is required")
    return load_state(cfg.state, cfg.dim)


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.r is None:
        raise ConfigError("--r is required")
    state = _state(cfg)
    dist = homodyne_distribution(state, cfg.r, cfg.theta)
    summary = {
        "r": cfg.r,
        "theta": cfg.theta,
        "spacing": dist.spacing,
        "mean": dist.mean(),
        "variance": dist.variance(),
        "deficit": dist.deficit,
        "kmin": dist.kmin,
        "kmax": dist.kmax,
        "conventions": CONVENTIONS,
    }
    if cfg.out:
        Path(cfg.out + ".csv").write_text(distribution_csv(dist))
        Path(cfg.out + ".json").write_text(dumps(summary))
    sys.stdout.write(dumps(summary))
    return 0


def cmd_moments(cfg: RunConfig) -> int:
    if cfg.r is None:
        raise ConfigError("--r is required")
    state = _state(cfg)
    report = moment_report(state, cfg.r, cfg.theta, cfg.kmax)
    if cfg.exp_a is not None:
        beta = load_beta(cfg.state)
        report.exp_bound = exp_moment_bound_check(beta, cfg.r, cfg.theta, cfg.exp_a)
    out = report.to_json()
    out["deficit"] = homodyne_distribution(state, cfg.r, cfg.theta).deficit
    out["tolerances"] = {"tail": 1e-8, "exp_bound_slack": 1e-9}
    emit(dumps(out), cfg.out)
    return 0


def load_beta(text: str) -> complex:
    obj = json.loads(text) if text.strip().startswith("{") else json.loads(Path(text).read_text())
    if obj.get("type") != "coherent":
        raise ConfigError("--exp-a applies to coherent states")
    re_im = obj["beta"]
    return complex(re_im[0], re_im[1]) if isinstance(re_im, list) else complex(re_im)


def cmd_converge(cfg: RunConfig) -> int:
    if len(cfg.r_list) < 3:
        raise ConfigError("--r-list needs at least three values")
    state = _state(cfg)
    law = quadrature_law(state, cfg.theta)
    limit = moment_limit_check(state, cfg.theta, cfg.r_list, cfg.kmax)
    ks = [ks_distance(state, cfg.theta, r, law) for r in cfg.r_list]
    ints = [cdf_interval_diagnostic(state, cfg.theta, r, law=law).tolist() for r in cfg.r_list]
    fns = [bounded_function_diagnostic(state, cfg.theta, r, law=law) for r in cfg.r_list]
    tol = weak_tolerance(cfg.r_list[-1]) if cfg.weak_tol is None else cfg.weak_tol
    verdicts = {
        "moment_limit": all(v.passed for v in limit),
        "ks": strictly_decreasing(ks) and ks[-1] <= tol,
        "cdf_intervals": interval_verdict(ks, ints, tol),
        "bounded_functions": non_increasing([max(g.values()) for g in fns]) and max(fns[-1].values()) <= tol,
    }
    if cfg.fmt == "csv":
        buf = io.StringIO()
        buf.write("state,r,k,empirical,target,gap\n")
        for v in limit:
            for r, m, g in zip(v.r_list, v.moments, v.gaps):
                buf.write(f"{state.label},{fmt(r)},{v.k},{fmt(m)},{fmt(v.target)},{fmt(g)}\n")
        emit(buf.getvalue(), cfg.out)
    else:
        emit(
            dumps(
                {
                    "state": state.label,
                    "theta": cfg.theta,
                    "r_list": cfg.r_list,
                    "moment_limit": [v.to_json() for v in limit],
                    "ks_distance": ks,
                    "intervals": [iv.label() for iv in INTERVAL_BATTERY],
                    "interval_cdf_gaps": ints,
                    "bounded_fn_gaps": fns,
                    "verdicts": verdicts,
                    "tolerances": {"weak": tol, "moment": {v.k: v.tol for v in limit}},
                    "deficits": {fmt(r): homodyne_distribution(state, r, cfg.theta).deficit for r in cfg.r_list},
                }
            ),
            cfg.out,
        )
    return 0 if all(verdicts.values()) else EXIT_DIAGNOSTIC


def cmd_calibrate(cfg: RunConfig) -> int:
    if cfg.states is None:
        raise ConfigError("--states is required")
    if len(cfg.r_list) < 3:
        raise ConfigError("--r-list needs at least three values")
    states = load_states(cfg.states, cfg.dim)
    report = calibrate(states, cfg.theta, cfg.r_list, cfg.kmax, cfg.weak_tol)
    if cfg.fmt == "csv":
        buf = io.StringIO()
        buf.write("state,r,k,empirical,target,gap\n")
        for label, r, k, m, target, gap in report.moment_rows():
            buf.write(f"{label},{fmt(r)},{k},{fmt(m)},{fmt(target)},{fmt(gap)}\n")
        emit(buf.getvalue(), cfg.out)
    else:
        emit(dumps(report.to_json()), cfg.out)
    return 0 if report.all_pass else EXIT_DIAGNOSTIC


def cmd_charfunc(cfg: RunConfig) -> int:
    if cfg.r is None:
        raise ConfigError("--r is required")
    if not cfg.t:
        raise ConfigError("--t or --t-range is required")
    t = np.asarray(cfg.t)
    closed = characteristic_function(cfg.beta, cfg.r, cfg.theta, t)
    dist = homodyne_distribution(coherent(cfg.beta), cfg.r, cfg.theta)
    emp = empirical_cf(dist, t)
    buf = io.StringIO()
    buf.write("t,re_closed,im_closed,re_empirical,im_empirical\n")
    for ti, c, e in zip(t, closed, emp):
        buf.write(f"{fmt(ti)},{fmt(c.real)},{fmt(c.imag)},{fmt(e.real)},{fmt(e.imag)}\n")
    emit(buf.getvalue(), cfg.out)
    return 0


def cmd_counterexample(cfg: RunConfig) -> int:
    r_list = cfg.r_list or ([cfg.r] if cfg.r is not None else [])
    if not r_list:
        raise ConfigError("--r or --r-list is required")
    state = _state(cfg) if cfg.state else fock(0)
    cx = counterexample(state, cfg.theta, r_list)
    out = {
        "lattice_mass_E": round(min(cx["lattice_mass_E"]), 9),
        "lattice_mass_Q": round(max(cx["lattice_mass_Q"]), 9),
        "converges_on_lattice": cx["converges_on_lattice"],
        "by_r": cx,
        "tolerances": {"lattice_match": 1e-6},
    }
    emit(dumps(out), cfg.out)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "converge": cmd_converge,
    "calibrate": cmd_calibrate,
    "charfunc": cmd_charfunc,
    "counterexample": cmd_counterexample,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homodyne-limit", description=__doc__.split("\n\n")[0], epilog=CONVENTIONS)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, r_required=False):
        p.add_argument("--theta", type=float, default=0.0, help="oscillator phase (radians)")
        p.add_argument("--dim", type=parse_dim, default=None, help="signal truncation or 'auto'")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        if r_required:
            p.add_argument("--r", type=float, required=True, help="oscillator amplitude |z|")

    p = sub.add_parser("simulate", help="lattice statistics of the detector", epilog=CONVENTIONS)
    p.add_argument("--state", required=True, help="state JSON or path to a JSON file")
    common(p, r_required=True)
    p.set_defaults(out_help="prefix: writes PREFIX.csv and PREFIX.json")

    p = sub.add_parser("moments", help="empirical vs operator moments", epilog=CONVENTIONS)
    p.add_argument("--state", required=True)
    p.add_argument("--kmax", type=int, default=DEFAULT_KMAX)
    p.add_argument("--allow-high-k", action="store_true", help="permit kmax above 8")
    p.add_argument("--exp-a", type=float, default=None, help="add the exponential-moment bound at this a")
    common(p, r_required=True)

    p = sub.add_parser("converge", help="weak-convergence diagnostics for one state", epilog=CONVENTIONS)
    p.add_argument("--state", required=True)
    p.add_argument("--r-list", type=parse_list, required=True)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--allow-high-k", action="store_true")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    p.add_argument("--weak-tol", type=float, default=None, help="override the weak-convergence tolerance (default: one lattice spacing at the largest r)")
    common(p)

    p = sub.add_parser("calibrate", help="full asymptotic-measurement protocol", epilog=CONVENTIONS)
    p.add_argument("--states", required=True, help="JSON file with a list of states")
    p.add_argument("--r-list", type=parse_list, required=True)
    p.add_argument("--kmax", type=int, default=6)
    p.add_argument("--allow-high-k", action="store_true")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    p.add_argument("--weak-tol", type=float, default=None, help="override the weak-convergence tolerance (default: one lattice spacing at the largest r)")
    common(p)

    p = sub.add_parser("charfunc", help="closed-form vs lattice characteristic function", epilog=CONVENTIONS)
    p.add_argument("--beta", type=parse_complex, default=0j)
    p.add_argument("--t", type=parse_list, default=None, help="comma-separated t values")
    p.add_argument("--t-range", type=parse_list, default=None, help="start,stop,count; write --t-range=-5,5,201 when start is negative")
    common(p, r_required=True)

    p = sub.add_parser("counterexample", help="lattice set where convergence fails", epilog=CONVENTIONS)
    p.add_argument("--state", default=None, help="defaults to the vacuum")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--r-list", type=parse_list, default=None)
    common(p)
    return parser


def config_from_args(args) -> RunConfig:
    kmax = getattr(args, "kmax", DEFAULT_KMAX)
    if kmax > DEFAULT_KMAX and not getattr(args, "allow_high_k", False):
        raise ConfigError(f"kmax {kmax} exceeds {DEFAULT_KMAX}; pass --allow-high-k to override")
    if kmax < 0:
        raise ConfigError("kmax must be nonnegative")
    t = getattr(args, "t", None) or []
    t_range = getattr(args, "t_range", None)
    if t_range:
        if len(t_range) != 3 or t_range[2] < 1:
            raise ConfigError("--t-range takes start,stop,count")
        t = list(np.linspace(t_range[0], t_range[1], int(t_range[2])))
    return RunConfig(
        command=args.command,
        state=getattr(args, "state", None),
        states=getattr(args, "states", None),
        r=getattr(args, "r", None),
        r_list=getattr(args, "r_list", None) or [],
        theta=args.theta,
        kmax=kmax,
        dim=args.dim,
        out=args.out,
        fmt=getattr(args, "fmt", "json"),
        exp_a=getattr(args, "exp_a", None),
        beta=getattr(args, "beta", 0j),
        t=[float(x) for x in t],
        weak_tol=getattr(args, "weak_tol", None),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, StateSpecError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"homodyne-limit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TruncationBudgetError, TailDominatedError, GridWidthError) as exc:
        print(f"homodyne-limit: numerical budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except CalibrationError as exc:
        cause = exc.__cause__
        if isinstance(cause, (TruncationBudgetError, TailDominatedError, GridWidthError)):
            print(f"homodyne-limit: numerical budget: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        print(f"homodyne-limit: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG if "no calibration states" in str(exc) else EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
