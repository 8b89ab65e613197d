"""Ground states of -alpha H_p u + beta (-Delta_p)^s u = |u|^(q-2) u - m |u|^(p-2) u.

Descent on the reduced energy ``I(u) = max_t J(t u)`` with

    J(u) = alpha/p E_loc(u) + beta/p E_nl(u) - int F(u).

Every accepted iterate is rescaled onto the Nehari set (the maximizer of the
fibering map ``t -> J(t u)``), so ``I`` equals ``J`` along the iterates and
the Armijo rule makes the recorded energies non-increasing. Search
directions are energy gradients preconditioned by a constant-coefficient
Fourier multiplier.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .energy import (OperatorParams, energy_norm, local_energy, local_flux,
                     nonlocal_energy_and_operator, resolve_diagonal)
from .errors import InputError, SolverError
from .finsler import FinslerNorm
from .gridfn import GridFunction, GridSpec, bump_tests, divergence, integrate, sample
from .nonlinearity import Nonlinearity

log = logging.getLogger(__name__)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SolverConfig:
    params: OperatorParams
    norm: FinslerNorm
    f: Nonlinearity
    grid: GridSpec
    init: str | GridFunction = "gaussian"
    max_iters: int = 2000
    step0: float = 1.0
    tol_grad: float = 1e-4
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    diagonal: str = "auto"
    test_count: int = 20
    fibering_bracket: tuple[float, float] = (1e-3, 1e3)
    fibering_tol: float = 1e-10
    symmetric: bool = True

    def validate(self) -> None:
        p = self.params.p
        if self.f.kind != "power_minus_mass":
            raise InputError("the solver needs a power_minus_mass nonlinearity")
        if not self.f.q > p:
            raise InputError(f"the solver needs q > p (q = {self.f.q}, p = {p})")
        if self.norm.dim != self.params.n or self.grid.dim != self.params.n:
            raise InputError("dimension mismatch between params, norm and grid")
        if not self.tol_grad > 0 or not self.step0 > 0:
            raise InputError("tol_grad and step0 must be positive")
        if not (0 < self.armijo_c < 1 and 0 < self.armijo_shrink < 1):
            raise InputError("armijo_c and armijo_shrink must lie in (0, 1)")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise InputError("max_iters must be a nonnegative integer")
        resolve_diagonal(self.diagonal, self.params.n)


@dataclass
class SolverTrace:
    iterates_energy: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    final_grad_norm: float = float("nan")
    iterations_used: int = 0
    converged: bool = False


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Maximizer of a unimodal ``fn`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def fractional_symbol_constant(n: int, s: float) -> float:
    """``int (1 - cos z_1) / |z|^(n+2s) dz``: the p = 2 operator has symbol ``c |xi|^(2s)``."""
    return np.pi ** (n / 2) * gamma_fn(1 - s) / (s * 4 ** s * gamma_fn(n / 2 + s))


class _State:
    """Energies and the gradient of ``J`` at one grid function."""

    def __init__(self, cfg: SolverConfig, vals: np.ndarray):
        prm, spec = cfg.params, cfg.grid
        self.vals = vals
        u = GridFunction(spec, vals)
        self.loc = local_energy(u, cfg.norm, prm) if prm.alpha else 0.0
        self.nl, self.op = 0.0, None
        if prm.beta:
            self.nl, self.op = nonlocal_energy_and_operator(u, prm, cfg.diagonal)
        self.quad = (prm.alpha * self.loc + prm.beta * self.nl) / prm.p

    def fibering(self, cfg: SolverConfig, t: float) -> float:
        F = integrate(cfg.f.F(t * self.vals, cfg.params.p), cfg.grid)
        return t ** cfg.params.p * self.quad - F

    def gradient(self, cfg: SolverConfig) -> np.ndarray:
        prm, spec = cfg.params, cfg.grid
        u = GridFunction(spec, self.vals)
        g = -cfg.f.f(self.vals, prm.p)
        if prm.alpha:
            g = g - prm.alpha * divergence(local_flux(u, cfg.norm, prm), spec)
        if prm.beta:
            g = g + 2.0 * prm.beta * self.op
        g[spec.boundary_mask()] = 0.0
        return g

    def scaled(self, cfg: SolverConfig, t: float) -> "_State":
        """State of ``t u`` from homogeneity, without a new O(N^2) sweep."""
        p = cfg.params.p
        out = object.__new__(_State)
        out.vals = t * self.vals
        out.loc = t ** p * self.loc
        out.nl = t ** p * self.nl
        out.op = None if self.op is None else t ** (p - 1) * self.op
        out.quad = t ** p * self.quad
        return out


def _preconditioner(cfg: SolverConfig) -> np.ndarray:
    prm, spec = cfg.params, cfg.grid
    h, N = spec.spacing, spec.points_per_axis
    k = 2 * np.pi * np.fft.fftfreq(N, d=h)
    kr = 2 * np.pi * np.fft.rfftfreq(N, d=h)
    axes = [k] * (spec.dim - 1) + [kr]
    grids = np.meshgrid(*axes, indexing="ij")
    # compact symbol, not the wide one of the nodal stencil: it keeps the
    # checkerboard modes (which the nodal energy barely sees) nearly frozen
    compact = sum((2 * np.sin(g * h / 2) / h) ** 2 for g in grids)
    sym = cfg.f.m + prm.alpha * compact
    if prm.beta:
        sym = sym + 2 * prm.beta * fractional_symbol_constant(prm.n, prm.s) * compact ** prm.s
    return sym


def mirror_axes(vals: np.ndarray, rtol: float = 1e-12) -> tuple[int, ...]:
    """Axes along which ``vals`` is even under ``i -> N - 1 - i``."""
    scale = np.max(np.abs(vals))
    return tuple(a for a in range(vals.ndim)
                 if np.max(np.abs(vals - np.flip(vals, axis=a))) <= rtol * scale)


def symmetrize(vals: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    for a in axes:
        vals = 0.5 * (vals + np.flip(vals, axis=a))
    return vals


def _nehari_project(cfg: SolverConfig, st: _State) -> tuple[_State, float]:
    lo, hi = cfg.fibering_bracket
    t = golden_section_max(lambda t: st.fibering(cfg, t), lo, hi, cfg.fibering_tol)
    if not (lo * 1.01 < t < hi * 0.99):
        raise SolverError(f"fibering maximizer {t:g} hit the bracket [{lo:g}, {hi:g}]")
    out = st.scaled(cfg, t)
    return out, out.fibering(cfg, 1.0)


def ground_state(config: SolverConfig) -> tuple[GridFunction, SolverTrace]:
    """Approximate a ground state; returns the final iterate and its trace."""
    config.validate()
    cfg, spec = config, config.grid
    if isinstance(cfg.init, GridFunction):
        if cfg.init.spec != spec:
            raise InputError("initial guess lives on a different grid")
        u0 = cfg.init.values.copy()
    else:
        name, _, arg = cfg.init.partition(":")
        kw = {}
        if name == "gaussian" and arg:
            kw["scale"] = float(arg)
        if name == "bump" and arg:
            kw["radius"] = float(arg)
        u0 = sample(name, spec, **kw).values.copy()
    u0[spec.boundary_mask()] = 0.0
    if not np.any(u0):
        raise InputError("initial guess vanishes identically: the fibering map is degenerate")
    # Reflection-even iterates stay even only up to rounding, and on grids where
    # the even state is a saddle of the discrete energy the rounding grows; the
    # descent is therefore confined to the symmetry class of the initial guess.
    sym = mirror_axes(u0) if cfg.symmetric else ()
    u0 = symmetrize(u0, sym)

    w = spec.weights()
    tests = bump_tests(spec, cfg.test_count)
    test_vals = [t.values for t in tests]
    test_norms = [energy_norm(t, cfg.norm, cfg.params, cfg.diagonal) for t in tests]
    precond = _preconditioner(cfg)
    axes = tuple(range(spec.dim))

    st, energy = _nehari_project(cfg, _State(cfg, u0))
    trace = SolverTrace(iterates_energy=[energy])
    for it in range(cfg.max_iters + 1):
        g = st.gradient(cfg)
        res = max(abs(integrate(g * phi, spec)) / nrm for phi, nrm in zip(test_vals, test_norms))
        trace.residuals.append(res)
        trace.final_grad_norm = res
        trace.iterations_used = it
        if not np.isfinite(res):
            raise SolverError("non-finite gradient")
        if res <= cfg.tol_grad:
            trace.converged = True
            break
        if it == cfg.max_iters:
            break
        d = -np.fft.irfftn(np.fft.rfftn(g, axes=axes) / precond, s=spec.shape, axes=axes)
        d[spec.boundary_mask()] = 0.0
        d = symmetrize(d, sym)
        slope = float(np.sum(w * g * d))
        if not slope < 0:
            log.warning("search direction is not a descent direction (slope %g)", slope)
            break
        tau, accepted = cfg.step0, False
        while tau > 1e-14:
            trial = _State(cfg, st.vals + tau * d)
            trial, e_trial = _nehari_project(cfg, trial)
            if not np.isfinite(e_trial):
                raise SolverError("energy became non-finite")
            if e_trial <= energy + cfg.armijo_c * tau * slope:
                accepted = True
                break
            tau *= cfg.armijo_shrink
        if not accepted:
            log.warning("line search failed at iteration %d", it)
            break
        st, energy = trial, e_trial
        trace.iterates_energy.append(energy)
        log.debug("iter %d energy %.12g residual %.3e step %.3g", it, energy, res, tau)
    return GridFunction(spec, st.vals), trace
