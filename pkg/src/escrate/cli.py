"""Command-line interface.

Subcommands: rate, conserve, simulate, verify {envelope|compare|lil|dyadic},
catalogue. Configuration is INI-style (flat sections, key = value); every
command is deterministic given its config, and CSV output is byte-identical
across reruns. Exit codes: 0 ok, 2 config error, 3 solver error,
4 simulation error, 5 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys

import numpy as np

from . import rate_solver, verify as verify_mod
from .errors import (
    ConfigError,
    DomainError,
    DriftOrderViolated,
    EscrateError,
    ExtrapolationError,
    FiniteTotalIntegral,
    NonFiniteState,
    NonPositiveCoefficient,
    NonPositiveDenominator,
    OutOfRange,
    QuadratureFailure,
    SingularOrigin,
)
from .profiles import (
    ManifoldModel,
    RadialCoefficient,
    catalogue_case,
    profile_from_radial,
)
from .sde import HyperbolicBound, Sde1D, ensemble, radial_drift

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_SIMULATION = 4
EXIT_VERIFY = 5

_SOLVER_ERRORS = (FiniteTotalIntegral, QuadratureFailure, NonPositiveDenominator,
                  OutOfRange, NonPositiveCoefficient, ExtrapolationError)
_SIM_ERRORS = (NonFiniteState, SingularOrigin)

_ALLOWED_KEYS = {
    "model": {"family", "alpha", "beta", "n", "mode", "warp", "k",
              "radii", "values"},
    "solver": {"r_lo", "tolerance", "scale_c", "t_grid"},
    "simulation": {"x0", "t", "dt", "n_paths", "master_seed", "floor",
                   "barrier", "drift", "sigma", "output", "store_every"},
    "verify": {"c_grid", "eps_grid", "t0", "delta", "r", "t", "n_paths",
               "dt", "c", "n_levels", "envelope", "max_fraction"},
}


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def load_config(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section in parser.sections():
        if section not in _ALLOWED_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        extra = set(parser[section]) - _ALLOWED_KEYS[section]
        if extra:
            raise ConfigError(
                f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")
    return parser


def _need(cfg, section: str):
    if not cfg.has_section(section):
        raise ConfigError(f"missing required config section [{section}]")
    return cfg[section]


def _getfloat(sec, key, default=None):
    raw = sec.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing key '{key}' in [{sec.name}]")
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}' in [{sec.name}] is not a number: {raw!r}")


def _getint(sec, key, default=None):
    v = _getfloat(sec, key, default)
    if v != int(v):
        raise ConfigError(f"key '{key}' in [{sec.name}] must be an integer")
    return int(v)


def _float_list(raw: str):
    raw = raw.strip()
    if not raw:
        return np.array([])
    try:
        return np.array([float(tok) for tok in raw.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse number list: {raw!r}")


def _parse_t_grid(sec):
    """t_grid is a comma list, or 'geom:<lo>:<hi>:<count>', or empty."""
    raw = sec.get("t_grid", "").strip()
    if raw.startswith("geom:"):
        parts = raw.split(":")
        if len(parts) != 4:
            raise ConfigError("t_grid geometric spec is geom:<lo>:<hi>:<count>")
        try:
            lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise ConfigError(f"bad t_grid spec: {raw!r}")
        if lo <= 0 or hi <= lo or count < 2:
            raise ConfigError("t_grid geometric spec needs 0 < lo < hi, count >= 2")
        return np.geomspace(lo, hi, count)
    return _float_list(raw)


def build_coefficient(model) -> RadialCoefficient:
    family = model.get("family")
    if family is None:
        raise ConfigError("missing key 'family' in [model]")
    family = family.strip().lower()
    try:
        if family == "constant":
            return RadialCoefficient.constant()
        if family == "power":
            return RadialCoefficient.power(_getfloat(model, "alpha"))
        if family == "squared_log":
            return RadialCoefficient.squared_log(_getfloat(model, "beta"))
        if family == "tabulated":
            radii = _float_list(model.get("radii", ""))
            values = _float_list(model.get("values", ""))
            return RadialCoefficient.tabulated(radii, values)
    except DomainError as exc:
        raise ConfigError(str(exc))
    raise ConfigError(f"unknown coefficient family {family!r}")


def build_profile(cfg):
    model = _need(cfg, "model")
    coeff = build_coefficient(model)
    n = _getint(model, "n", 1)
    mode = model.get("mode", "unit_energy").strip()
    try:
        return coeff, profile_from_radial(coeff, n, mode)
    except DomainError as exc:
        raise ConfigError(str(exc))


def build_drift(cfg, floor: float):
    """Resolve the simulation drift from config: a manifold's mean curvature,
    the radial-coefficient drift, the hyperbolic majorant, or none."""
    model = cfg["model"] if cfg.has_section("model") else {}
    sim = _need(cfg, "simulation")
    kind = sim.get("drift", "manifold").strip().lower()
    if kind == "none":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if kind == "manifold":
        warp = (model.get("warp") or "euclidean").strip().lower()
        n = _getint(cfg["model"], "n", 2) if cfg.has_section("model") else 2
        if warp == "euclidean":
            return radial_drift(ManifoldModel.euclidean(n), floor=floor)
        if warp == "hyperbolic":
            K = _getfloat(cfg["model"], "k", 1.0)
            return radial_drift(ManifoldModel.hyperbolic(n, K), floor=floor)
        raise ConfigError(f"unknown warp {warp!r}")
    if kind == "hyperbolic_bound":
        n = _getint(cfg["model"], "n", 2)
        K = _getfloat(cfg["model"], "k", 1.0)
        return radial_drift(HyperbolicBound(n, K), floor=floor)
    if kind == "coefficient":
        coeff = build_coefficient(_need(cfg, "model"))
        n = _getint(cfg["model"], "n", 2)
        return radial_drift((coeff, n), floor=floor)
    raise ConfigError(f"unknown drift kind {kind!r}")


def build_sde(cfg) -> Sde1D:
    sim = _need(cfg, "simulation")
    floor = _getfloat(sim, "floor", 1e-6)
    drift = build_drift(cfg, floor)
    sigma_raw = sim.get("sigma")
    if sigma_raw is None:
        return Sde1D(drift=drift, floor=floor)
    try:
        sigma_val = float(sigma_raw)
    except ValueError:
        raise ConfigError(f"sigma must be a number, got {sigma_raw!r}")
    return Sde1D(drift=drift,
                 sigma=lambda x, v=sigma_val: np.full_like(
                     np.asarray(x, dtype=float), v),
                 floor=floor, sigma_const=sigma_val)


def run_ensemble(cfg, seed_override=None, store_every=None):
    sim = _need(cfg, "simulation")
    sde = build_sde(cfg)
    seed = seed_override if seed_override is not None else _getint(sim, "master_seed")
    barrier_raw = sim.get("barrier")
    barrier = None
    if barrier_raw is not None:
        barrier = math.inf if barrier_raw.strip().lower() in ("inf", "+inf") \
            else float(barrier_raw)
    if store_every is None:
        store_every = _getint(sim, "store_every", 1)
    return ensemble(sde, _getfloat(sim, "x0"), _getfloat(sim, "t"),
                    _getfloat(sim, "dt"), _getint(sim, "n_paths"), seed,
                    barrier=barrier, store_every=store_every)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


class _Out:
    """CSV sink: a file opened with LF endings, or stdout."""

    def __init__(self, path):
        self.path = path
        self.fh = open(path, "w", newline="\n") if path else sys.stdout

    def row(self, *cells):
        self.fh.write(",".join(_fmt(c) for c in cells) + "\n")

    def line(self, text):
        self.fh.write(text + "\n")

    def close(self):
        if self.path:
            self.fh.close()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_rate(cfg, out: _Out, quiet: bool) -> int:
    coeff, profile = build_profile(cfg)
    solver = cfg["solver"] if cfg.has_section("solver") else None
    if solver is None:
        raise ConfigError("rate needs a [solver] section")
    t_grid = _parse_t_grid(solver)
    scale_c = _getfloat(solver, "scale_c", rate_solver.PROOF_SCALE_C)
    r_lo = solver.get("r_lo")
    out.row("t", "psi", "psi_tilde")
    if t_grid.size == 0:
        return EXIT_OK
    rate = rate_solver.rate_table(
        profile, t_grid, scale_c=scale_c,
        r_lo=float(r_lo) if r_lo is not None else None)
    intrinsic = profile.label.endswith("unit-energy")
    for t, psi_val in zip(rate.times, rate.values):
        psi_tilde = None
        if intrinsic:
            psi_tilde = _safe_inverse(coeff, psi_val)
        out.row(float(t), float(psi_val), psi_tilde)
    if not quiet and rate.shift_note:
        print(f"note: {rate.shift_note}", file=sys.stderr)
    return EXIT_OK


def _safe_inverse(coeff, value):
    from .profiles import rho_tilde_inverse
    try:
        return rho_tilde_inverse(coeff, float(value))
    except (OutOfRange, OverflowError):
        return math.inf


def cmd_conserve(cfg, out: _Out, quiet: bool) -> int:
    model = _need(cfg, "model")
    coeff = build_coefficient(model)
    verdict = rate_solver.conservativeness(coeff)
    params = ""
    if coeff.param is not None:
        name = "alpha" if coeff.family == "power" else "beta"
        params = f"{name}={_fmt(float(coeff.param))}"
    line = f"verdict={verdict.kind} family={coeff.family} params={params}"
    if verdict.leaning:
        line += f" leaning={verdict.leaning}"
    out.line(line)
    return EXIT_OK


def cmd_simulate(cfg, out: _Out, quiet: bool, seed_override) -> int:
    sim = _need(cfg, "simulation")
    output = sim.get("output", "paths").strip().lower()
    ens = run_ensemble(cfg, seed_override)
    if output == "summary":
        out.row("path", "final", "exitTime")
        for i in range(ens.n_paths):
            exit_t = None
            if ens.first_exit is not None and not math.isnan(ens.first_exit[i]):
                exit_t = float(ens.first_exit[i])
            out.row(i, float(ens.values[i, -1]), exit_t)
        return EXIT_OK
    if output != "paths":
        raise ConfigError(f"unknown output mode {output!r}")
    out.row("path", "step", "t", "x")
    steps = np.rint(ens.times / ens.dt).astype(int)
    for i in range(ens.n_paths):
        for j, (s, t) in enumerate(zip(steps, ens.times)):
            out.row(i, int(s), float(t), float(ens.values[i, j]))
    return EXIT_OK


def _verdict_exit(passed: bool, label: str, out: _Out) -> int:
    out.line(label)
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_verify(cfg, mode: str, out: _Out, quiet: bool, seed_override) -> int:
    ver = _need(cfg, "verify")

    if mode == "envelope":
        C_grid = _float_list(ver.get("c_grid", "1"))
        t0 = _getfloat(ver, "t0")
        sentinel = ver.get("envelope", "table").strip().lower()
        if sentinel == "zero":
            rate = lambda t: 0.0
        elif sentinel in ("inf", "infinity"):
            rate = lambda t: math.inf
        else:
            _, profile = build_profile(cfg)
            solver = _need(cfg, "solver")
            t_grid = _parse_t_grid(solver)
            if t_grid.size == 0:
                raise ConfigError("envelope mode needs a nonempty t_grid")
            rate = rate_solver.rate_table(
                profile, t_grid,
                scale_c=_getfloat(solver, "scale_c", 1.0))
        ens = run_ensemble(cfg, seed_override)
        report = verify_mod.exceedance(ens, rate, C_grid, t0)
        out.row("C", "fraction")
        for C, f in zip(report.C_grid, report.fractions):
            out.row(float(C), float(f))
        threshold = _getfloat(ver, "max_fraction", 0.5)
        passed = float(report.fractions[-1]) <= threshold
        return _verdict_exit(passed, f"{'PASS' if passed else 'FAIL'} "
                             f"fraction_at_max_C={_fmt(float(report.fractions[-1]))} "
                             f"threshold={_fmt(threshold)}", out)

    if mode == "compare":
        sim = _need(cfg, "simulation")
        model = _need(cfg, "model")
        n = _getint(model, "n", 2)
        K = _getfloat(model, "k", 1.0)
        floor = _getfloat(sim, "floor", 1e-6)
        dominated = Sde1D(drift=radial_drift(ManifoldModel.hyperbolic(n, K),
                                             floor=floor), floor=floor)
        dominating = Sde1D(drift=radial_drift(HyperbolicBound(n, K),
                                              floor=floor), floor=floor)
        seed = seed_override if seed_override is not None \
            else _getint(sim, "master_seed")
        report = verify_mod.comparison_mc(
            dominating, dominated, _getfloat(sim, "x0"), _getfloat(ver, "t"),
            _getfloat(ver, "delta"), _getfloat(ver, "r"),
            _getint(ver, "n_paths"), _getfloat(ver, "dt"), seed)
        out.row("side", "estimate", "stderr")
        out.row("lhs", report.lhs_estimate, report.lhs_stderr)
        out.row("rhs", report.rhs_estimate, report.rhs_stderr)
        passed = not report.violation
        return _verdict_exit(
            passed, f"{'PASS' if passed else 'FAIL'} coupledDominanceFraction="
            f"{_fmt(report.coupled_dominance_fraction)}", out)

    if mode == "lil":
        eps_grid = _float_list(ver.get("eps_grid", "0,0.25,0.5,1.0"))
        t0 = _getfloat(ver, "t0")
        ens = run_ensemble(cfg, seed_override)
        fractions = verify_mod.lil_statistic(ens, t0, ens.times[-1], eps_grid)
        out.row("eps", "fraction")
        for e, f in zip(eps_grid, fractions):
            out.row(float(e), float(f))
        passed = bool(np.all(np.diff(fractions) <= 0))
        return _verdict_exit(passed, "PASS monotone" if passed
                             else "FAIL fractions not monotone", out)

    if mode == "dyadic":
        _, profile = build_profile(cfg)
        c = _getfloat(ver, "c", 4.0)
        N = _getint(ver, "n_levels", 30)
        scheme = rate_solver.dyadic_scheme(profile, c, N)
        out.row("n", "R", "r", "t", "T", "bound", "partial_sum", "slack")
        for i in range(N):
            out.row(i + 1, scheme.R[i], scheme.r[i], scheme.t[i], scheme.T[i],
                    scheme.bound[i], scheme.partial_sums[i], scheme.slack[i])
        total = float(scheme.partial_sums[-1])
        passed = (math.isfinite(total) and np.all(scheme.slack >= 0)
                  and scheme.bound[-1] < 1e-3 * total)
        return _verdict_exit(passed, f"{'PASS' if passed else 'FAIL'} "
                             f"sum_bound={_fmt(total)}", out)

    raise ConfigError(f"unknown verify mode {mode!r}")


def cmd_catalogue(out: _Out) -> int:
    rows = [
        ("diri1", "", "sqrt(t log t)", "sqrt(t log t)"),
        ("diri2", "alpha<2", "sqrt(t log t)", "(t log t)^(1/(2-alpha))"),
        ("diri3", "beta<1", "t^(1+beta/(2-2 beta))", "exp(t^(1/(1-beta)))"),
        ("diri3", "beta=1", "exp(t)", "exp(exp(t))"),
        ("geo1", "", "sqrt(t log log t)", "sqrt(t log log t)"),
        ("geo2", "alpha<2", "sqrt(t log log t)", "(t log log t)^(1/(2-alpha))"),
        ("geo3", "beta<1", "t^(1+beta/(2-2 beta))", "exp(t^(1/(1-beta)))"),
        ("geo3", "beta=1", "exp(t)", "exp(exp(t))"),
        ("g_alpha", "alpha=-1", "sqrt(t log log t)", ""),
        ("g_alpha", "-1<alpha<1", "t^(1/(1-alpha))", ""),
        ("g_alpha", "alpha=1", "exp(t)", ""),
        ("hyperbolic_linear", "n>=2, K>0", "(1+eps)(n-1) sqrt(K) t", ""),
    ]
    out.row("case", "range", "psi", "psi_tilde")
    for r in rows:
        out.row(*r)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _check_threads_env():
    raw = os.environ.get("ESCRATE_THREADS")
    if raw is None:
        return
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"ESCRATE_THREADS must be a positive integer, got {raw!r}")
    if v < 1:
        raise ConfigError(f"ESCRATE_THREADS must be >= 1, got {v}")
    # orchestration is single-threaded; the cap is honored trivially and
    # never changes results


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escrate",
        description="Escape-rate envelopes for diffusions: rate tables, "
                    "conservativeness verdicts, path simulation, Monte Carlo "
                    "verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--config", required=(name != "catalogue"),
                       help="INI config file")
        p.add_argument("--out", help="output CSV path (default stdout)")
        p.add_argument("--seed", type=int, help="override master seed")
        p.add_argument("--quiet", action="store_true",
                       help="suppress informational notes")
        return p

    add("rate", help="tabulate the escape envelope psi")
    add("conserve", help="classify conservativeness")
    add("simulate", help="simulate a path ensemble")
    pv = add("verify", help="run a Monte Carlo verification mode")
    pv.add_argument("mode", choices=["envelope", "compare", "lil", "dyadic"])
    add("catalogue", help="print the closed-form rate catalogue")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = None
    try:
        _check_threads_env()
        if args.command == "catalogue":
            out = _Out(args.out)
            return cmd_catalogue(out)
        cfg = load_config(args.config)
        out = _Out(args.out)
        if args.command == "rate":
            return cmd_rate(cfg, out, args.quiet)
        if args.command == "conserve":
            return cmd_conserve(cfg, out, args.quiet)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.quiet, args.seed)
        if args.command == "verify":
            return cmd_verify(cfg, args.mode, out, args.quiet, args.seed)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _SOLVER_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _SIM_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except DomainError as exc:
        print(f"DomainError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        if out is not None:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
