"""Pohozaev and Nehari identities, the dilation check and the nonexistence cases.

For a weak solution of ``-alpha H_p u + beta (-Delta_p)^s u = f(u)`` on R^n

    alpha (n - p)/p ||H(grad u)||_p^p + beta (n - sp)/p [u]_{s,p}^p = n int F(u)   (Pohozaev)
    alpha ||H(grad u)||_p^p + beta [u]_{s,p}^p = int u f(u)                          (Nehari)

and the analogous sums over both components for the coupled system.
The nonexistence verdicts use exponent arithmetic only; they are never
inferred from numerical residuals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import (EnergyBreakdown, OperatorParams, energy_breakdown, gagliardo,
                     local_energy, resolve_diagonal)
from .errors import InputError
from .finsler import FinslerNorm
from .gridfn import GridFunction, dilate, integrate
from .nonlinearity import Nonlinearity, SystemNonlinearity

EXPONENT_RTOL = 1e-12


@dataclass
class PohozaevReport:
    breakdown: EnergyBreakdown
    pohozaev_lhs: float
    pohozaev_rhs: float
    pohozaev_residual: float
    nehari_residual: float
    relative_scale: float
    verdict_notes: str = ""

    @property
    def relative_pohozaev_residual(self) -> float:
        return self.pohozaev_residual / self.relative_scale

    @property
    def relative_nehari_residual(self) -> float:
        return self.nehari_residual / self.relative_scale

    def as_dict(self) -> dict:
        b = self.breakdown
        return {
            "local_term": b.local_term, "nonlocal_term": b.nonlocal_term,
            "potential_term": b.potential_term, "nehari_term": b.nehari_term,
            "pohozaev_lhs": self.pohozaev_lhs, "pohozaev_rhs": self.pohozaev_rhs,
            "pohozaev_residual": self.pohozaev_residual,
            "nehari_residual": self.nehari_residual,
            "relative_scale": self.relative_scale,
            "relative_pohozaev_residual": self.relative_pohozaev_residual,
            "relative_nehari_residual": self.relative_nehari_residual,
            "tail_bound": b.tail_bound, "decay_margin": b.decay_margin,
            "diagonal_policy": b.diagonal_policy, "notes": self.verdict_notes,
        }

    def to_text(self) -> str:
        """Flat ``key = value`` lines."""
        return "\n".join(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}"
                         for k, v in self.as_dict().items())


def _lhs(params: OperatorParams, local: float, nonloc: float) -> float:
    n, p = params.n, params.p
    return params.alpha * (n - p) / p * local + params.beta * (n - params.sp) / p * nonloc


def _notes(params: OperatorParams, extra: list[str] | None = None) -> str:
    notes = list(extra or [])
    if params.alpha and params.n <= params.p:
        notes.append(f"n <= p: local coefficient (n-p)/p = {(params.n - params.p) / params.p:g} <= 0")
    if params.beta and params.n <= params.sp:
        notes.append("n <= sp: nonlocal coefficient (n-sp)/p <= 0")
    return "; ".join(notes)


def _report(b: EnergyBreakdown, params: OperatorParams, notes: str) -> PohozaevReport:
    lhs = _lhs(params, b.local_term, b.nonlocal_term)
    rhs = params.n * b.potential_term
    nehari = params.alpha * b.local_term + params.beta * b.nonlocal_term - b.nehari_term
    scale = max(b.local_term, b.nonlocal_term, abs(b.potential_term), 1.0)
    return PohozaevReport(b, lhs, rhs, lhs - rhs, nehari, scale, notes)


def pohozaev_residual(u: GridFunction, norm: FinslerNorm, params: OperatorParams,
                      f: Nonlinearity, tail_policy: str = "zero_extension",
                      diagonal: str = "auto") -> PohozaevReport:
    """Evaluate both identities for ``u``; residuals are signed (lhs - rhs)."""
    b = energy_breakdown(u, norm, params, f, tail_policy, diagonal)
    extra = [f"growth class {f.growth_class(params.p)}"]
    if f.growth_class(params.p) == "f2":
        extra.append("f2 growth: identity applies to bounded solutions")
    return _report(b, params, _notes(params, extra))


def nehari_residual(u: GridFunction, norm: FinslerNorm, params: OperatorParams,
                    f: Nonlinearity, diagonal: str = "auto") -> float:
    """``alpha E_loc + beta E_nl - int u f(u)``."""
    return pohozaev_residual(u, norm, params, f, diagonal=diagonal).nehari_residual


def dilation_energy(u: GridFunction, norm: FinslerNorm, params: OperatorParams,
                    f: Nonlinearity, lam: float, diagonal: str = "auto") -> float:
    """``J(u(lam .))`` evaluated on the rescaled grid."""
    v = dilate(u, lam)
    e = -integrate(f.F(v.values, params.p), v.spec)
    if params.alpha:
        e += params.alpha / params.p * local_energy(v, norm, params)
    if params.beta:
        e += params.beta / params.p * gagliardo(v, params, diagonal=diagonal)[0]
    return e


def dilation_derivative_check(u: GridFunction, norm: FinslerNorm, params: OperatorParams,
                              f: Nonlinearity, fd_step: float = 1e-4,
                              diagonal: str = "auto") -> tuple[float, float, float]:
    """Compare ``d/dlam J(u(lam .))`` at ``lam = 1`` with a central difference.

    Returns ``(analytic, finite_difference, mismatch)`` where ``analytic`` is
    ``alpha (p-n)/p E_loc + beta (sp-n)/p E_nl + n int F``, i.e. minus the
    Pohozaev residual.
    """
    if not 0 < fd_step <= 0.1:
        raise InputError(f"fd_step must lie in (0, 0.1], got {fd_step}")
    if not np.any(u.values):
        return 0.0, 0.0, 0.0
    b = energy_breakdown(u, norm, params, f, diagonal=diagonal)
    n, p = params.n, params.p
    analytic = (params.alpha * (p - n) / p * b.local_term
                + params.beta * (params.sp - n) / p * b.nonlocal_term
                + n * b.potential_term)
    plus = dilation_energy(u, norm, params, f, 1 + fd_step, diagonal)
    minus = dilation_energy(u, norm, params, f, 1 - fd_step, diagonal)
    fd = (plus - minus) / (2 * fd_step)
    return analytic, fd, abs(analytic - fd) / max(1.0, abs(analytic))


# --------------------------------------------------------------- nonexistence

@dataclass
class NonexistenceVerdict:
    case_id: str
    p_star: float | None
    p_s_star: float | None
    coefficient_signs: tuple[float, float]
    conclusion: str
    notes: list[str] = field(default_factory=list)


def _same(a: float, b: float | None) -> bool:
    return b is not None and abs(a - b) <= EXPONENT_RTOL * max(abs(a), abs(b))


def _snap(c: float, scale: float) -> float:
    return 0.0 if abs(c) <= EXPONENT_RTOL * scale else c


def critical_exponents(n: int, p: float, s: float) -> tuple[float | None, float | None]:
    """``(p*, p_s*)``; each is ``None`` when its denominator is not positive."""
    p_star = n * p / (n - p) if p < n else None
    p_s_star = n * p / (n - s * p) if s * p < n else None
    return p_star, p_s_star


def nonexistence_analysis(params: OperatorParams, q: float) -> NonexistenceVerdict:
    """Case analysis for ``f(t) = lam t_+^(q-1) - mu t_-^(q-1)``.

    Combines Nehari ``aE + bG = int u f(u)`` with Pohozaev, where
    ``int F(u) = int u f(u) / q``, into
    ``((n-p)/(np) - 1/q) E_loc + ((n-sp)/(np) - 1/q) E_nl = 0``.
    """
    n, p, s = params.n, params.p, params.s
    if not q > 1:
        raise InputError(f"q must exceed 1, got {q}")
    case = params.case
    if case in ("local", "mixed") and not p < n:
        raise InputError(f"hypothesis 1 < p < n violated (p = {p}, n = {n})")
    if case == "nonlocal" and not s * p < n:
        raise InputError(f"hypothesis sp < n violated (sp = {s * p}, n = {n})")
    p_star, p_s_star = critical_exponents(n, p, s)
    inv = 1.0 / q
    coef = (_snap((n - p) / (n * p) - inv, inv), _snap((n - s * p) / (n * p) - inv, inv))
    notes = []
    if _same(q, p):
        notes.append("q = p: eigenvalue case, no boundedness assumption needed")

    if case == "local":
        case_id = "local_case1"
        conclusion = "critical_consistent" if _same(q, p_star) else "only_trivial"
    elif case == "nonlocal":
        case_id = "nonlocal_case2"
        conclusion = "critical_consistent" if _same(q, p_s_star) else "only_trivial"
    else:
        case_id = "mixed_case3"
        if params.beta != 1:
            notes.append(f"gamma = {params.beta:g}: sign argument unchanged for gamma > 0")
        if q >= p_star or _same(q, p_star) or q <= p_s_star or _same(q, p_s_star):
            conclusion = "only_trivial"
        else:
            conclusion = "no_conclusion"
            notes.append(f"p_s* = {p_s_star:g} < q < p* = {p_star:g}: identities do not decide")
    return NonexistenceVerdict(case_id, p_star, p_s_star, coef, conclusion, notes)


def system_nonexistence_analysis(params: OperatorParams, q: float) -> NonexistenceVerdict:
    """Same exponent arithmetic for the decoupled system with ``g = (lam|u|^q + mu|v|^q)/q``."""
    v = nonexistence_analysis(params, q)
    v.notes.append("assumes each of u, v has constant sign on R^n")
    return v


# --------------------------------------------------------------------- system

def system_pohozaev_residual(u: GridFunction, v: GridFunction, norm: FinslerNorm,
                             params: OperatorParams, g: SystemNonlinearity,
                             tail_policy: str = "zero_extension",
                             diagonal: str = "auto") -> PohozaevReport:
    """Both identities for the pair ``(u, v)``; energies are summed over components."""
    if u.spec != v.spec:
        raise InputError("u and v must share a grid")
    if u.spec.dim != params.n or norm.dim != params.n:
        raise InputError("dimension mismatch between grid, norm and params")
    loc = nl = tail = 0.0
    for w in (u, v):
        if params.alpha:
            loc += local_energy(w, norm, params)
        if params.beta:
            val, tb = gagliardo(w, params, tail_policy, diagonal)
            nl += val
            tail += tb
    spec = u.spec
    G = integrate(g.g(u.values, v.values), spec)
    ug = integrate(u.values * g.g_u(u.values, v.values)
                   + v.values * g.g_v(u.values, v.values), spec)
    b = EnergyBreakdown(loc, nl, G, tail, resolve_diagonal(diagonal, params.n),
                        nehari_term=ug, decay_margin=max(u.decay_margin, v.decay_margin))
    notes = _notes(params, [f"growth class {g.growth_class(params.p)}"])
    return _report(b, params, notes)
