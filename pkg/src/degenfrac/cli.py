"""Command-line front end.

Subcommands: eigen (decompositions + orthogonality artifacts), solve
(spectral solve + diagnostics), verify (invariant suites incl. the FD
cross-check), convergence (refinement tables).  Configuration comes from a
flat key=value file plus flag overrides; outputs are deterministic CSV /
JSON with no timestamps, so repeated runs are byte-identical.

Exit codes: 0 success, 1 usage/config, 2 parameter-domain violation,
3 resolution failure, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys as _sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (ConfigError, DegeneracyError, DomainError, RegimeError,
                     ResolutionError, SolverError, VerificationError)
from .fracops import TimeWarp, warp_forward
from .oraclefd import FDMesh, compare, fd_solve
from .solver import (ProblemSpec, SeparableSource, ModeODE, assemble,
                     mode_solution, mode_solution_alt, residual_strong,
                     residual_weak)
from .special import ml_eval
from .spectral import (bc_requirements, bessel_eigen, flux_limit_check,
                       orthogonality_report, solve_eigen)

__all__ = ["RunConfig", "load_config", "main"]


@dataclass
class RunConfig:
    """Flat run configuration; every key can appear in the config file."""

    alpha: float = 0.6
    theta: float = 0.3
    beta: float = 0.5
    a: float = 0.0
    T: float = 1.0
    phi: str = "quadratic"
    f: str = "none"
    modes: str = "8"
    kmax: int = 64
    x_points: int = 65
    t_points: int = 17
    fd_nx: int = 256
    fd_nt: int = 256
    tol: Optional[float] = None
    out: str = "out"
    format: str = "csv"
    oracle: str = "galerkin"
    modes_ladder: str = "2,4,8,16"
    mesh_ladder: str = "64,128,256"

    def validate(self) -> None:
        bc_requirements(self.beta)          # beta in (0,2), beta != 1
        TimeWarp(self.theta, self.a)        # theta < 1, a >= 0
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.a < self.T:
            raise DomainError(f"need a < T, got a={self.a}, T={self.T}")
        if self.modes != "auto":
            try:
                k = int(self.modes)
            except ValueError:
                raise ConfigError(f"modes must be an integer or 'auto', "
                                  f"got {self.modes!r}") from None
            if k < 1:
                raise ConfigError(f"modes must be >= 1, got {k}")
        if self.kmax < 1:
            raise ConfigError(f"kmax must be >= 1, got {self.kmax}")
        if self.x_points < 3 or self.t_points < 2:
            raise ConfigError("x_points >= 3 and t_points >= 2 required")
        if self.fd_nx < 8 or self.fd_nt < 4:
            raise ConfigError("fd mesh too coarse")
        if self.tol is not None and self.tol < 0.0:
            raise ConfigError(f"tol must be >= 0, got {self.tol}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.oracle not in ("galerkin", "bessel"):
            raise ConfigError(f"oracle must be galerkin or bessel, "
                              f"got {self.oracle!r}")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _cast(key: str, raw: str):
    ty = _FIELD_TYPES[key]
    if ty == "float":
        return float(raw)
    if ty == "int":
        return int(raw)
    if ty == "Optional[float]":
        return None if raw.lower() == "none" else float(raw)
    return raw


def load_config(path) -> RunConfig:
    """Flat key=value file; '#' starts a comment; unknown keys rejected."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    cfg = RunConfig()
    for ln, line in enumerate(p.read_text().splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
        try:
            cfg = replace(cfg, **{key: _cast(key, raw)})
        except ValueError as exc:
            raise ConfigError(f"{path}:{ln}: bad value for {key}: {exc}") from None
    return cfg


# ---------------------------------------------------------------------------
# builtin expression grammar for phi and f

def _parse_poly(arg: str):
    try:
        coefs = [float(c) for c in arg.split(",")]
    except ValueError:
        raise ConfigError(f"poly wants comma-separated coefficients, "
                          f"got {arg!r}") from None
    if not coefs:
        raise ConfigError("poly needs at least one coefficient")
    return lambda x: np.polynomial.polynomial.polyval(x, coefs)


def space_expr(text: str, system=None):
    """Builtin profiles on (0,1): zero | one | quadratic | const:c |
    sin:k | cos:k | poly:c0,c1,... | mode:k (k-th computed eigenfunction)."""
    name, _, arg = text.strip().partition(":")
    if name == "zero":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if name == "one":
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    if name == "quadratic":
        return lambda x: x * (1.0 - x)
    if name == "const":
        c = float(arg)
        return lambda x: c * np.ones_like(np.asarray(x, dtype=float))
    if name == "sin":
        k = float(arg)
        return lambda x: np.sin(k * np.pi * x)
    if name == "cos":
        k = float(arg)
        return lambda x: np.cos(k * np.pi * x)
    if name == "poly":
        return _parse_poly(arg)
    if name == "mode":
        k = int(arg)
        if system is None:
            raise ConfigError("mode:k needs a computed eigensystem")
        if not 1 <= k <= system.count:
            raise ConfigError(f"mode index {k} outside 1..{system.count}")
        return lambda x: system.eigen_eval(k, x)[0]
    raise ConfigError(f"unknown profile {text!r}")


def time_expr(text: str, warp: TimeWarp):
    """Builtin time factors: one | const:c | sin:w | cos:w |
    poly:c0,c1,... (in t) | spow:q for (t^p - a^p)^q."""
    name, _, arg = text.strip().partition(":")
    if name == "one":
        return lambda t: 1.0
    if name == "const":
        c = float(arg)
        return lambda t: c
    if name == "sin":
        w = float(arg)
        return lambda t: math.sin(w * t)
    if name == "cos":
        w = float(arg)
        return lambda t: math.cos(w * t)
    if name == "poly":
        fn = _parse_poly(arg)
        return lambda t: float(fn(t))
    if name == "spow":
        q = float(arg)
        if q < 0.0:
            raise ConfigError(f"spow exponent must be >= 0, got {q}")
        return lambda t: warp_forward(warp, t) ** q
    raise ConfigError(f"unknown time factor {text!r}")


def source_expr(text: str, warp: TimeWarp, system=None):
    """'none' -> no source; 'sep:XSPEC|TSPEC' -> separable product;
    a bare space profile -> time-independent source."""
    text = text.strip()
    if text in ("", "none"):
        return None
    if text.startswith("sep:"):
        body = text[4:]
        if "|" not in body:
            raise ConfigError("sep source wants 'sep:XSPEC|TSPEC'")
        xs, ts = body.split("|", 1)
        xs = xs.strip().strip("()")
        ts = ts.strip().strip("()")
        return SeparableSource(space_expr(xs, system), time_expr(ts, warp))
    return SeparableSource(space_expr(text, system), lambda t: 1.0)


# ---------------------------------------------------------------------------
# artifact writers

def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(v)
    return "%.16e" % float(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            fh.write(",".join(_num(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path: Path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _field_rows(t_grid, values):
    for j, t in enumerate(t_grid):
        yield [t] + list(values[j])


def _write_field(cfg: RunConfig, out: Path, stem: str, x_grid, t_grid,
                 values) -> Path:
    if cfg.format == "json":
        path = out / f"{stem}.json"
        _write_json(path, {"x": x_grid, "t": t_grid, "u": values})
    else:
        path = out / f"{stem}.csv"
        _write_csv(path, ["t"] + [_num(x) for x in x_grid],
                   _field_rows(t_grid, values))
    return path


# ---------------------------------------------------------------------------
# subcommands

def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _eigen_count(cfg: RunConfig) -> int:
    if cfg.modes == "auto":
        raise ConfigError("modes must be an explicit integer for this command")
    return int(cfg.modes)


def cmd_eigen(cfg: RunConfig) -> int:
    K = _eigen_count(cfg)
    out = _outdir(cfg)
    gal = solve_eigen(cfg.beta, K)
    system = gal
    extra = {}
    if cfg.oracle == "bessel":
        system = bessel_eigen(cfg.beta, K)
        delta = np.abs(gal.lambdas - system.lambdas) / system.lambdas
        extra["cross_oracle_rel_delta"] = delta
        extra["cross_oracle_max_rel_delta"] = float(np.max(delta))
    _write_csv(out / "eigenvalues.csv", ["k", "lambda"],
               ([k + 1, lam] for k, lam in enumerate(system.lambdas)))
    xs = np.linspace(0.0, 1.0, cfg.x_points)[1:]  # evaluator is defined on (0,1]
    grid = np.column_stack([xs] + [system.eigen_eval(k, xs)[0]
                                   for k in range(1, K + 1)])
    _write_csv(out / "eigenfunctions.csv",
               ["x"] + [f"v{k}" for k in range(1, K + 1)],
               grid)
    rep = orthogonality_report(system)
    _write_json(out / "orthogonality.json", {
        "beta": cfg.beta, "modes": K, "method": system.method_tag,
        "lambdas": system.lambdas,
        "max_offdiag_l2": rep.max_offdiag_l2,
        "max_offdiag_weighted": rep.max_offdiag_weighted,
        **extra,
    })
    print(f"eigen: beta={cfg.beta} K={K} method={system.method_tag} "
          f"lambda1={system.lambdas[0]:.6f} "
          f"offdiag={rep.max_offdiag_l2:.2e}")
    return 0


def _build_problem(cfg: RunConfig, system):
    warp = TimeWarp(cfg.theta, cfg.a)
    phi = space_expr(cfg.phi, system)
    f = source_expr(cfg.f, warp, system)
    return ProblemSpec(cfg.alpha, cfg.theta, cfg.beta, cfg.a, cfg.T, phi, f)


def _solve_grids(cfg: RunConfig):
    xg = np.linspace(0.0, 1.0, cfg.x_points)
    span = cfg.T - cfg.a
    tg = cfg.a + span * np.linspace(0.0, 1.0, cfg.t_points + 1)[1:]
    return xg, tg


def cmd_solve(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    xg, tg = _solve_grids(cfg)
    if cfg.modes == "auto":
        tol = 1e-6 if cfg.tol is None else cfg.tol
        K, field = 4, None
        while True:
            K = min(K, cfg.kmax)
            system = solve_eigen(cfg.beta, K)
            spec = _build_problem(cfg, system)
            field = assemble(spec, system, K, xg, tg)
            if field.diagnostics["tail_estimate_l2"] <= tol:
                break
            if K >= cfg.kmax:
                raise ResolutionError(
                    f"tail estimate {field.diagnostics['tail_estimate_l2']:.3e}"
                    f" still above {tol:.3e} at K={K} (kmax)")
            K *= 2
    else:
        K = _eigen_count(cfg)
        system = solve_eigen(cfg.beta, K)
        spec = _build_problem(cfg, system)
        field = assemble(spec, system, K, xg, tg)

    if field.regime == "classical":
        res = residual_strong(field, spec)
        res_kind = "strong"
    else:
        res = residual_weak(field, spec)
        res_kind = "weak"

    _write_field(cfg, out, "solution", field.x_grid, field.t_grid,
                 field.values)
    diags = dict(field.diagnostics)
    norms = diags.pop("norms")
    _write_json(out / "diagnostics.json", {
        "alpha": cfg.alpha, "theta": cfg.theta, "beta": cfg.beta,
        "a": cfg.a, "T": cfg.T, "modes": K,
        "regime": field.regime,
        "residual": {"kind": res_kind, "sup_abs": res.sup_abs,
                     "sup_rel": res.sup_rel, "scale": res.scale},
        "tail": {k: v for k, v in diags.items()},
        "norms": norms,
    })
    print(f"solve: regime={field.regime} K={K} "
          f"tail={field.diagnostics['tail_estimate_l2']:.2e} "
          f"residual[{res_kind}]={res.sup_rel:.2e}")
    return 0


# ---- verification suites ---------------------------------------------------

def _suite_ml_recurrence() -> float:
    worst = 0.0
    zs = np.linspace(-30.0, 5.0, 40)
    for al in (0.3, 0.5, 0.7, 1.2):
        for be in (0.5, 1.0, 2.0):
            for z in zs:
                e1 = ml_eval(al, be, float(z))
                e2 = ml_eval(al, al + be, float(z))
                defect = abs(e1 - 1.0 / math.gamma(be) - z * e2)
                worst = max(worst, defect / (1.0 + abs(e1)))
    return worst


def _suite_orthogonality(cfg: RunConfig) -> float:
    rep = orthogonality_report(solve_eigen(cfg.beta, 8))
    return max(rep.max_offdiag_l2, rep.max_offdiag_weighted)


def _suite_kernel_equivalence() -> float:
    worst = 0.0
    tg = np.linspace(0.55, 2.0, 30)
    for al in (0.3, 0.7):
        for th in (0.0, 0.5):
            warp = TimeWarp(th, 0.5)
            for lam in (0.5, 10.0):
                for fk in (None, lambda t: 1.0, lambda t: math.sin(t)):
                    ode = ModeODE(1, al, lam, 0.8, fk, warp)
                    ua = mode_solution(ode, tg).values
                    ub = mode_solution_alt(ode, tg).values
                    worst = max(worst, float(np.max(np.abs(ua - ub))))
    return worst


def _suite_flux_limit(cfg: RunConfig) -> float:
    """beta>1: the weighted flux must vanish at 0 (value = |limit|).
    beta<1: it must match the closed-form route (value = rel diff)."""
    gal = solve_eigen(cfg.beta, 2)
    rg = flux_limit_check(gal.mode(1), cfg.beta)
    if cfg.beta > 1.0:
        return abs(rg.limit)
    bes = bessel_eigen(cfg.beta, 2)
    rb = flux_limit_check(bes.mode(1), cfg.beta)
    return abs(rg.limit - rb.limit) / max(abs(rb.limit), 1e-300)


def _suite_uniqueness(cfg: RunConfig) -> float:
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    spec = ProblemSpec(cfg.alpha, cfg.theta, cfg.beta, cfg.a, cfg.T, zero)
    system = solve_eigen(cfg.beta, 4)
    xg, tg = np.linspace(0.0, 1.0, 33), None
    tg = cfg.a + (cfg.T - cfg.a) * np.linspace(0.0, 1.0, 9)[1:]
    fld = assemble(spec, system, 4, xg, tg)
    worst = float(np.max(np.abs(fld.values)))
    S_T = warp_forward(spec.warp, cfg.T)
    mesh = FDMesh.build(cfg.beta, cfg.alpha, S_T, nx=128, nt=64)
    worst = max(worst, float(np.max(np.abs(fd_solve(spec, mesh).values))))
    return worst


def _suite_spectral_vs_fd(cfg: RunConfig) -> float:
    system = solve_eigen(cfg.beta, 12)
    spec = ProblemSpec(cfg.alpha, cfg.theta, cfg.beta, cfg.a, cfg.T,
                       lambda x: x * (1.0 - x),
                       SeparableSource(lambda x: np.ones_like(x),
                                       lambda t: 1.0))
    xg = np.linspace(0.0, 1.0, 257)[1:-1]
    tg = np.array([cfg.T])
    fldS = assemble(spec, system, 12, xg, tg)
    S_T = warp_forward(spec.warp, cfg.T)
    mesh = FDMesh.build(cfg.beta, cfg.alpha, S_T, nx=256, nt=256)
    fldF = fd_solve(spec, mesh)
    rep = compare(fldF, fldS, t_subset=[cfg.T])
    return float(rep.l2_rel[0])


_SUITES = (
    ("ml_recurrence", lambda cfg: _suite_ml_recurrence(), 1e-11),
    ("orthogonality", _suite_orthogonality, 1e-6),
    ("kernel_equivalence", lambda cfg: _suite_kernel_equivalence(), 1e-8),
    ("flux_limit", _suite_flux_limit, 1e-3),
    ("uniqueness", _suite_uniqueness, 1e-12),
    ("spectral_vs_fd", _suite_spectral_vs_fd, 1e-2),
)


def cmd_verify(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    report, failed = {}, []
    for name, fn, default_tol in _SUITES:
        tol = default_tol if cfg.tol is None else cfg.tol
        value = fn(cfg)
        ok = value <= tol
        report[name] = {"value": value, "tol": tol, "pass": bool(ok)}
        print(f"verify: {name:20s} {'PASS' if ok else 'FAIL'} "
              f"(value {value:.3e} vs tol {tol:.3e})")
        if not ok:
            failed.append(name)
    _write_json(out / "verify.json",
                {"suites": report, "all_pass": not failed})
    if failed:
        raise VerificationError("failing invariants: " + ", ".join(failed))
    return 0


def _parse_ladder(text: str, what: str):
    try:
        ladder = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"{what} ladder must be comma-separated integers, "
                          f"got {text!r}") from None
    if len(ladder) < 2:
        raise ConfigError(f"{what} ladder needs at least 2 levels, got {ladder}")
    if any(n < 1 for n in ladder) or any(np.diff(ladder) <= 0):
        raise ConfigError(f"{what} ladder must be positive and increasing")
    return ladder


def _orders(errs):
    out = []
    for i in range(len(errs) - 1):
        if errs[i] > 1e-14 and errs[i + 1] > 1e-14:
            out.append(math.log2(errs[i] / errs[i + 1]))
        else:
            out.append(float("nan"))
    return out


def cmd_convergence(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    kladder = _parse_ladder(cfg.modes_ladder, "modes")
    nladder = _parse_ladder(cfg.mesh_ladder, "mesh")
    kref = min(2 * kladder[-1], 96)
    system = solve_eigen(cfg.beta, kref)
    spec = _build_problem(cfg, system)
    xg = np.linspace(0.0, 1.0, 257)[1:-1]
    tg = np.array([cfg.T])
    ref = assemble(spec, system, kref, xg, tg)
    rnorm = math.sqrt(float(np.trapezoid(ref.values[0] ** 2, xg)))
    rnorm = max(rnorm, 1e-300)

    kerrs = []
    for K in kladder:
        fld = assemble(spec, system, K, xg, tg)
        d = fld.values[0] - ref.values[0]
        kerrs.append(math.sqrt(float(np.trapezoid(d * d, xg))) / rnorm)
    _write_csv(out / "convergence_modes.csv", ["modes", "err_l2_rel"],
               ([K, e] for K, e in zip(kladder, kerrs)))

    S_T = warp_forward(spec.warp, cfg.T)
    nerrs = []
    for N in nladder:
        mesh = FDMesh.build(cfg.beta, cfg.alpha, S_T, nx=N, nt=N)
        fld = fd_solve(spec, mesh)
        row = np.interp(xg, fld.x_grid, fld.values[-1])
        d = row - ref.values[0]
        nerrs.append(math.sqrt(float(np.trapezoid(d * d, xg))) / rnorm)
    _write_csv(out / "convergence_mesh.csv", ["mesh", "err_l2_rel"],
               ([N, e] for N, e in zip(nladder, nerrs)))

    _write_json(out / "convergence.json", {
        "modes_ladder": kladder, "modes_err_l2_rel": kerrs,
        "modes_orders": _orders(kerrs),
        "mesh_ladder": nladder, "mesh_err_l2_rel": nerrs,
        "mesh_orders": _orders(nerrs),
        "reference_modes": kref,
    })
    print(f"convergence: modes errs {['%.2e' % e for e in kerrs]} | "
          f"mesh errs {['%.2e' % e for e in nerrs]}")
    return 0


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are exit code 1, not 2
        raise ConfigError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--beta", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--a", type=float)
    common.add_argument("--T", type=float)
    common.add_argument("--modes")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--oracle", choices=("galerkin", "bessel"))
    common.add_argument("--tol", type=float)

    ap = _Parser(prog="degenfrac",
                 description="degenerate time-fractional diffusion toolbox")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("eigen", parents=[common],
                   help="eigen-decomposition artifacts")
    sub.add_parser("solve", parents=[common],
                   help="spectral solve + diagnostics")
    sub.add_parser("verify", parents=[common],
                   help="invariant suites incl. FD cross-check")
    sub.add_parser("convergence", parents=[common],
                   help="refinement ladders and observed orders")
    return ap


_OVERRIDES = ("beta", "alpha", "theta", "a", "T", "modes", "out", "format",
              "oracle", "tol")


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    updates = {}
    for name in _OVERRIDES:
        val = getattr(args, name)
        if val is not None:
            updates[name] = str(val) if name == "modes" else val
    if updates:
        cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


_DISPATCH = {"eigen": cmd_eigen, "solve": cmd_solve, "verify": cmd_verify,
             "convergence": cmd_convergence}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _config_from_args(args)
        return _DISPATCH[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except (DegeneracyError, DomainError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except (ResolutionError, SolverError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 3
    except (VerificationError, RegimeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 4


if __name__ == "__main__":
    _sys.exit(main())
