"""Batch front end: one subcommand per check, CSV report plus a short summary.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge,
4 numerical failure. Floats in the CSV are written with ``repr`` so that a
rerun with the same arguments is byte-identical whatever the thread count.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import (DIAGONAL_POLICIES, MAX_NONLOCAL_NODES, TAIL_POLICIES, OperatorParams,
                     energy_breakdown, resolve_diagonal)
from .errors import DomainError, InputError, SolverError
from .finsler import FinslerNorm, check_minkowski_properties
from .gridfn import GridFunction, GridSpec, dilate, read_table, sample, write_table
from .identities import (dilation_derivative_check, nonexistence_analysis,
                         pohozaev_residual, system_nonexistence_analysis,
                         system_pohozaev_residual)
from .nonlinearity import Nonlinearity, SystemNonlinearity
from .solver import SolverConfig, ground_state

COMMANDS = ("norm-check", "energy", "pohozaev", "dilation-check", "nonexistence",
            "system-pohozaev", "solve")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = 0, 2, 3, 4

PARAM_COLUMNS = ["command", "n", "p", "s", "alpha", "beta", "q"]
POHOZAEV_COLUMNS = PARAM_COLUMNS + [
    "local_term", "nonlocal_term", "potential_term", "pohozaev_residual",
    "nehari_residual", "tail_bound", "decay_margin", "verdict"]
COLUMNS = {
    "norm-check": ["command", "norm", "n", "samples", "seed", "homogeneity", "euler",
                   "gradient_sign", "fd_gradient", "comparability", "c1", "c2",
                   "convexity_min_gap", "passed", "warnings"],
    "energy": PARAM_COLUMNS + ["L", "N", "lambda", "local_term", "nonlocal_term",
                               "potential_term", "tail_bound", "decay_margin"],
    "pohozaev": POHOZAEV_COLUMNS,
    "dilation-check": PARAM_COLUMNS + ["fd_step", "analytic", "finite_difference",
                                       "mismatch", "pohozaev_residual"],
    "nonexistence": PARAM_COLUMNS + ["case_id", "p_star", "p_s_star", "coef_local",
                                     "coef_nonlocal", "conclusion", "notes"],
    "system-pohozaev": POHOZAEV_COLUMNS,
    "solve": POHOZAEV_COLUMNS + ["iterations", "converged", "final_residual", "energy"],
}


@dataclass
class RunSpec:
    command: str
    norm: str = "euclidean"
    n: int = 1
    p: float = 2.0
    s: float = 0.5
    alpha: float = 1.0
    beta: float = 0.0
    f: str | None = None
    g: str | None = None
    q: float | None = None
    L: float = 10.0
    N: int = 512
    preset: str = "gaussian:1"
    preset_v: str | None = None
    input: str | None = None
    input_v: str | None = None
    output: str | None = None
    save: str | None = None
    seed: int = 0
    samples: int = 10_000
    fd_step: float = 1e-4
    dilate: list[float] = field(default_factory=list)
    tol: float = 1e-4
    max_iters: int = 2000
    tail_policy: str = "zero_extension"
    diagonal: str = "auto"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for path in (self.input, self.input_v):
            if path is not None and not Path(path).is_file():
                raise InputError(f"input file {path!r} does not exist")
        if self.tail_policy not in TAIL_POLICIES:
            raise InputError(f"unknown tail policy {self.tail_policy!r}")
        resolve_diagonal(self.diagonal, self.n)
        prm = self.operator()
        if self.command != "nonexistence" and self.input is None:
            grid = self.grid()
            if prm.beta and grid.size > MAX_NONLOCAL_NODES:
                raise InputError(f"{grid.size} nodes exceed the nonlocal limit of "
                                 f"{MAX_NONLOCAL_NODES}")
        if self.command != "nonexistence":
            self.finsler()
        if self.command in ("energy", "pohozaev", "dilation-check", "solve"):
            self.nonlinearity()
        if self.command == "system-pohozaev":
            self.system_nonlinearity()
        if self.command == "nonexistence" and self.q is None:
            raise InputError("nonexistence needs --q")
        if any(not lam > 0 for lam in self.dilate):
            raise InputError("dilation factors must be positive")

    def operator(self) -> OperatorParams:
        return OperatorParams(self.n, self.p, self.s, self.alpha, self.beta)

    def finsler(self) -> FinslerNorm:
        return FinslerNorm.parse(self.norm, self.n)

    def nonlinearity(self) -> Nonlinearity:
        if self.f is None:
            raise InputError(f"{self.command} needs --f")
        return Nonlinearity.parse(self.f)

    def system_nonlinearity(self) -> SystemNonlinearity:
        if self.g is None:
            raise InputError("system-pohozaev needs --g")
        return SystemNonlinearity.parse(self.g)

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.L, self.N)

    def function(self, preset: str | None = None, path: str | None = None) -> GridFunction:
        if path is not None:
            u = read_table(path)
            if u.spec.dim != self.n:
                raise InputError(f"{path} holds an n = {u.spec.dim} table, expected n = {self.n}")
            return u
        name, _, arg = (preset or self.preset).partition(":")
        kw = {}
        try:
            if name == "gaussian" and arg:
                kw["scale"] = float(arg)
            elif name == "bump" and arg:
                kw["radius"] = float(arg)
        except ValueError as exc:
            raise InputError(f"malformed preset {preset!r}") from exc
        return sample(name, self.grid(), **kw)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _param_row(spec: RunSpec, q) -> dict:
    return {"command": spec.command, "n": spec.n, "p": float(spec.p), "s": float(spec.s),
            "alpha": float(spec.alpha), "beta": float(spec.beta),
            "q": None if q is None else float(q)}


def _exponent_verdict(params: OperatorParams, f: Nonlinearity, system: bool = False) -> str:
    """Exponent-only verdict for pure powers; residuals never enter it."""
    if f.kind != "signed_power":
        return "not_applicable"
    try:
        fn = system_nonexistence_analysis if system else nonexistence_analysis
        return fn(params, f.q).conclusion
    except InputError:
        return "not_applicable"


def _pohozaev_row(spec: RunSpec, report, q, verdict: str) -> dict:
    b = report.breakdown
    row = _param_row(spec, q)
    row.update(local_term=b.local_term, nonlocal_term=b.nonlocal_term,
               potential_term=b.potential_term, pohozaev_residual=report.pohozaev_residual,
               nehari_residual=report.nehari_residual, tail_bound=b.tail_bound,
               decay_margin=b.decay_margin, verdict=verdict)
    return row


def _norm_check(spec: RunSpec):
    norm = spec.finsler()
    r = check_minkowski_properties(norm, spec.samples, spec.seed)
    row = {"command": spec.command, "norm": norm.label(), "n": spec.n,
           "samples": r.samples, "seed": r.seed, "homogeneity": r.homogeneity_violation,
           "euler": r.euler_violation, "gradient_sign": r.sign_violation,
           "fd_gradient": r.fd_gradient_violation, "comparability": r.comparability_violation,
           "c1": r.c1, "c2": r.c2, "convexity_min_gap": r.convexity_min_gap,
           "passed": r.passed, "warnings": " | ".join(r.warnings)}
    lines = [f"norm {norm.label()} in dimension {spec.n}: {'passed' if r.passed else 'FAILED'}"]
    lines += [f"  {k}: {'ok' if v else 'violated'}" for k, v in r.axioms.items()]
    lines += [f"  c1 = {r.c1:.6g}, c2 = {r.c2:.6g}, max violation {r.max_violation:.3e}"]
    lines += [f"  warning: {w}" for w in r.warnings]
    return [row], lines, EXIT_OK


def _energy(spec: RunSpec):
    norm, params, f = spec.finsler(), spec.operator(), spec.nonlinearity()
    u = spec.function(path=spec.input)
    rows, lines = [], []
    for lam in [1.0] + [float(x) for x in spec.dilate]:
        v = dilate(u, lam)
        b = energy_breakdown(v, norm, params, f, spec.tail_policy, spec.diagonal)
        row = _param_row(spec, f.q)
        row.update(L=v.spec.half_width, N=v.spec.points_per_axis, **{"lambda": lam},
                   local_term=b.local_term, nonlocal_term=b.nonlocal_term,
                   potential_term=b.potential_term, tail_bound=b.tail_bound,
                   decay_margin=b.decay_margin)
        rows.append(row)
        lines.append(f"lambda = {lam:g}: local {b.local_term:.12g}, nonlocal "
                     f"{b.nonlocal_term:.12g}, potential {b.potential_term:.12g}, "
                     f"tail bound {b.tail_bound:.3e}")
    return rows, lines, EXIT_OK


def _pohozaev(spec: RunSpec):
    norm, params, f = spec.finsler(), spec.operator(), spec.nonlinearity()
    u = spec.function(path=spec.input)
    r = pohozaev_residual(u, norm, params, f, spec.tail_policy, spec.diagonal)
    verdict = _exponent_verdict(params, f)
    lines = [f"Pohozaev: lhs {r.pohozaev_lhs:.12g}, rhs {r.pohozaev_rhs:.12g}, "
             f"relative residual {r.relative_pohozaev_residual:.3e}",
             f"Nehari: relative residual {r.relative_nehari_residual:.3e}",
             f"tail bound {r.breakdown.tail_bound:.3e}, decay margin {r.breakdown.decay_margin:.3e}",
             f"exponent verdict: {verdict}"]
    if r.verdict_notes:
        lines.append(f"notes: {r.verdict_notes}")
    return [_pohozaev_row(spec, r, f.q, verdict)], lines, EXIT_OK


def _dilation_check(spec: RunSpec):
    norm, params, f = spec.finsler(), spec.operator(), spec.nonlinearity()
    u = spec.function(path=spec.input)
    analytic, fd, mismatch = dilation_derivative_check(u, norm, params, f, spec.fd_step,
                                                       spec.diagonal)
    r = pohozaev_residual(u, norm, params, f, diagonal=spec.diagonal)
    row = _param_row(spec, f.q)
    row.update(fd_step=float(spec.fd_step), analytic=analytic, finite_difference=fd,
               mismatch=mismatch, pohozaev_residual=r.pohozaev_residual)
    lines = [f"d/dlambda J(u(lambda x)) at 1: analytic {analytic:.12g}, "
             f"central difference {fd:.12g}, mismatch {mismatch:.3e}"]
    return [row], lines, EXIT_OK


def _nonexistence(spec: RunSpec):
    v = nonexistence_analysis(spec.operator(), spec.q)
    row = _param_row(spec, spec.q)
    row.update(case_id=v.case_id, p_star=v.p_star, p_s_star=v.p_s_star,
               coef_local=v.coefficient_signs[0], coef_nonlocal=v.coefficient_signs[1],
               conclusion=v.conclusion, notes=" | ".join(v.notes))
    lines = [f"{v.case_id}: {v.conclusion}"]
    lines += [f"  {note}" for note in v.notes]
    return [row], lines, EXIT_OK


def _system_pohozaev(spec: RunSpec):
    norm, params, g = spec.finsler(), spec.operator(), spec.system_nonlinearity()
    u = spec.function(path=spec.input)
    v = spec.function(spec.preset_v or spec.preset, spec.input_v)
    r = system_pohozaev_residual(u, v, norm, params, g, spec.tail_policy, spec.diagonal)
    verdict = _exponent_verdict(params, Nonlinearity.signed_power(g.q), system=True)
    lines = [f"system Pohozaev: relative residual {r.relative_pohozaev_residual:.3e}",
             f"system Nehari: relative residual {r.relative_nehari_residual:.3e}",
             f"exponent verdict: {verdict}"]
    return [_pohozaev_row(spec, r, g.q, verdict)], lines, EXIT_OK


def _solve(spec: RunSpec):
    norm, params, f = spec.finsler(), spec.operator(), spec.nonlinearity()
    init = spec.function(path=spec.input) if spec.input else spec.preset
    cfg = SolverConfig(params, norm, f, spec.grid() if spec.input is None else init.spec,
                       init=init, max_iters=spec.max_iters, tol_grad=spec.tol,
                       diagonal=spec.diagonal)
    u, trace = ground_state(cfg)
    if spec.save:
        write_table(u, spec.save)
    r = pohozaev_residual(u, norm, params, f, spec.tail_policy, spec.diagonal)
    row = _pohozaev_row(spec, r, f.q, "not_applicable")
    row.update(iterations=trace.iterations_used, converged=trace.converged,
               final_residual=trace.final_grad_norm, energy=trace.iterates_energy[-1])
    lines = [f"{'converged' if trace.converged else 'NOT converged'} after "
             f"{trace.iterations_used} iterations, weak residual {trace.final_grad_norm:.3e}",
             f"energy {trace.iterates_energy[-1]:.12g}",
             f"Pohozaev relative residual {r.relative_pohozaev_residual:.3e}, "
             f"Nehari relative residual {r.relative_nehari_residual:.3e}"]
    return [row], lines, EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


HANDLERS = {"norm-check": _norm_check, "energy": _energy, "pohozaev": _pohozaev,
            "dilation-check": _dilation_check, "nonexistence": _nonexistence,
            "system-pohozaev": _system_pohozaev, "solve": _solve}


def render_csv(command: str, rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = COLUMNS[command]
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def run(spec: RunSpec, out=None) -> int:
    """Execute ``spec``; returns the exit code."""
    out = out or sys.stdout
    try:
        spec.validate()
        rows, lines, code = HANDLERS[spec.command](spec)
        bad = [k for row in rows for k, v in row.items()
               if isinstance(v, float) and not np.isfinite(v)
               and k not in ("p_star", "p_s_star", "convexity_min_gap")]
        if bad:
            raise FloatingPointError(f"non-finite values in {sorted(set(bad))}")
    except (InputError, DomainError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = render_csv(spec.command, rows)
    for line in lines:
        print(line, file=out)
    if spec.output:
        Path(spec.output).write_text(text)
        print(f"report written to {spec.output}", file=out)
    else:
        out.write(text)
    return code


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--norm", default="euclidean", help="euclidean | hq:<q> | hlm:<lambda>,<mu>")
    a("--n", type=int, default=1, help="space dimension")
    a("--p", type=float, default=2.0)
    a("--s", type=float, default=0.5)
    a("--alpha", type=float, default=1.0)
    a("--beta", type=float, default=0.0)
    a("--f", help="sp:<q>,<lambda>,<mu> | pmm:<q>,<m>")
    a("--g", help="dp:<q>,<lambda>,<mu> (system-pohozaev)")
    a("--q", type=float, help="exponent for nonexistence")
    a("--L", type=float, default=10.0, help="box half-width")
    a("--N", type=int, default=512, help="nodes per axis")
    a("--preset", default="gaussian:1", help="gaussian[:scale] | bump[:radius] | sech")
    a("--preset-v", help="preset of the second component (system-pohozaev)")
    a("--input", help="custom table for u (header 'n L N', then values)")
    a("--input-v", help="custom table for v (system-pohozaev)")
    a("--output", help="CSV path; printed to stdout when omitted")
    a("--save", help="write the computed ground state as a table (solve)")
    a("--seed", type=int, default=0)
    a("--samples", type=int, default=10_000)
    a("--fd-step", type=float, default=1e-4)
    a("--dilate", type=_floats, default=[], help="comma-separated factors (energy)")
    a("--tol", type=float, default=1e-4, help="weak-residual tolerance (solve)")
    a("--max-iters", type=int, default=2000)
    a("--tail-policy", default="zero_extension", choices=TAIL_POLICIES)
    a("--diagonal", default="auto", choices=DIAGONAL_POLICIES)

    parser = argparse.ArgumentParser(prog="pohozaev", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = RunSpec(**{k: v for k, v in vars(args).items()})
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
