"""Energy terms and operators of  -alpha H_p u + beta (-Delta_p)^s u = f(u).

Discretization
--------------
* local energy  ``int H(grad u)^p`` : trapezoidal rule on the nodal
  finite-difference gradient.
* Gagliardo energy ``[u]_{s,p}^p`` : double node sum with the diagonal
  ``x = y`` excluded, plus the pairs with one point outside the box (where
  ``u`` is extended by zero), ``2 int |u(x)|^p T(x) dx`` with
  ``T(x) = int_{y outside} |x - y|^{-n-sp} dy``.
* In one dimension the missing diagonal cell is restored with the
  zeta-function correction ``-2 zeta(-a) h^(1+a) |u'|^p``,
  ``a = p - 1 - sp`` (``diagonal="corrected"``, the default there).

The fractional operator is the literal principal-value sum, with no
normalization constant. Its weak form satisfies
``int int J_p(u(x)-u(y)) (phi(x)-phi(y)) dmu = 2 <(-Delta_p)^s u, phi>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import zeta

from .errors import InputError
from .finsler import FinslerNorm
from .gridfn import (GridFunction, GridSpec, divergence, gradient, gradient_transpose,
                     integrate)
from .nonlinearity import Nonlinearity, signed_pow
from .reduce import pairwise_sum, run_blocks, total

BLOCK_ELEMENTS = 1 << 20
# node-pair sweeps are O(M^2); beyond this they take hours on a desk machine
MAX_NONLOCAL_NODES = 1 << 16

TAIL_POLICIES = ("zero_extension", "reported_bound")
DIAGONAL_POLICIES = ("auto", "excluded", "corrected")


@dataclass(frozen=True)
class OperatorParams:
    """Dimension and exponents. ``(alpha, beta)`` must be ``(1, 0)``,
    ``(1, gamma)`` with ``gamma > 0`` or ``(0, 1)``."""

    n: int
    p: float
    s: float = 0.5
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"n must be a positive integer, got {self.n}")
        if not (np.isfinite(self.p) and self.p > 1):
            raise InputError(f"p must exceed 1, got {self.p}")
        if not 0 < self.s < 1:
            raise InputError(f"s must lie in (0, 1), got {self.s}")
        ok = ((self.alpha == 1 and self.beta >= 0 and np.isfinite(self.beta))
              or (self.alpha == 0 and self.beta == 1))
        if not ok:
            raise InputError(
                f"(alpha, beta) = ({self.alpha}, {self.beta}) is not one of "
                "(1, 0), (1, gamma > 0), (0, 1)")

    @property
    def case(self) -> str:
        if self.beta == 0:
            return "local"
        return "nonlocal" if self.alpha == 0 else "mixed"

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def kernel_exponent(self) -> float:
        return self.n + self.s * self.p


@dataclass
class EnergyBreakdown:
    local_term: float
    nonlocal_term: float
    potential_term: float
    tail_bound: float
    diagonal_policy: str
    nehari_term: float = 0.0
    decay_margin: float = 0.0


def _check_dims(u: GridFunction, norm: FinslerNorm | None, params: OperatorParams):
    if u.spec.dim != params.n:
        raise InputError(f"grid dimension {u.spec.dim} != params.n = {params.n}")
    if norm is not None and norm.dim != params.n:
        raise InputError(f"norm dimension {norm.dim} != params.n = {params.n}")


def _check_pair_budget(spec: GridSpec) -> None:
    if spec.size > MAX_NONLOCAL_NODES:
        raise InputError(f"{spec.size} nodes exceed the nonlocal limit of {MAX_NONLOCAL_NODES}")


def resolve_diagonal(policy: str, n: int) -> str:
    if policy not in DIAGONAL_POLICIES:
        raise InputError(f"unknown diagonal policy {policy!r}")
    if policy == "auto":
        return "corrected" if n == 1 else "excluded"
    if policy == "corrected" and n != 1:
        raise InputError("the zeta diagonal correction is only available for n = 1")
    return policy


# ---------------------------------------------------------------- local part

def local_energy(u: GridFunction, norm: FinslerNorm, params: OperatorParams) -> float:
    """``int H(grad u)^p dx``."""
    _check_dims(u, norm, params)
    g = gradient(u).pointwise()
    return integrate(norm._eval(g) ** params.p, u.spec)


def local_flux(u: GridFunction, norm: FinslerNorm, params: OperatorParams) -> np.ndarray:
    """Nodal flux ``H(grad u)^(p-1) grad_xi H(grad u)``, shape ``(..., n)``."""
    _check_dims(u, norm, params)
    return norm.flux(gradient(u).pointwise(), params.p)


def apply_anisotropic_plap(u: GridFunction, norm: FinslerNorm,
                           params: OperatorParams) -> GridFunction:
    """``-H_p u`` at interior nodes; zero on the boundary layer."""
    return GridFunction(u.spec, -divergence(local_flux(u, norm, params), u.spec))


def local_form(u: GridFunction, phi: GridFunction, norm: FinslerNorm,
               params: OperatorParams) -> float:
    """``int H(grad u)^(p-1) grad_xi H(grad u) . grad phi dx``."""
    flux = local_flux(u, norm, params)
    gphi = gradient(phi).pointwise()
    return integrate(np.sum(flux * gphi, axis=-1), u.spec)


# ------------------------------------------------------------- nonlocal part

@lru_cache(maxsize=16)
def _kernel_table(spec: GridSpec, exponent: float) -> np.ndarray:
    """``|k h|^(-exponent)`` for every nonnegative integer offset ``k``; 0 at ``k = 0``."""
    k = np.indices(spec.shape).reshape(spec.dim, -1)
    k2 = np.sum(k * k, axis=0).astype(float)
    dist = spec.spacing * np.sqrt(np.where(k2 > 0, k2, 1.0))
    table = np.where(k2 > 0, dist ** (-exponent), 0.0)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=16)
def tail_integrals(spec: GridSpec, sigma: float) -> np.ndarray:
    """``T(x) = int_{|y_k| > L + h/2 for some k} |x - y|^(-n-sigma) dy`` at every node.

    The complement is measured from the cell-padded box so that ``T`` stays
    finite on the boundary layer. Writing ``T`` in polar form and mapping each
    face of the box to the unit sphere gives
    ``T = (1/sigma) sum_faces d^(-sigma) int prod sec^2(phi_j)
    (1 + sum tan^2 phi_j)^(-(n+sigma)/2) dphi``, where ``d`` is the distance to
    the face plane. The 1-D case is closed form; otherwise Gauss-Legendre in the
    angles ``phi_j``.
    """
    n = spec.dim
    Lp = spec.half_width + 0.5 * spec.spacing
    x = spec.coords().reshape(n, -1).T
    if n == 1:
        t = ((Lp - x[:, 0]) ** (-sigma) + (Lp + x[:, 0]) ** (-sigma)) / sigma
        t.setflags(write=False)
        return t
    order = {2: 32, 3: 16}.get(n, 8)
    gx, gw = np.polynomial.legendre.leggauss(order)
    m = n - 1
    out = np.zeros(x.shape[0])
    chunk = max(1, (1 << 22) // order ** m)
    for k in range(n):
        others = [j for j in range(n) if j != k]
        for side in (1.0, -1.0):
            for start in range(0, x.shape[0], chunk):
                xs = x[start:start + chunk]
                d = Lp - side * xs[:, k]
                lo = np.arctan((-Lp - xs[:, others]) / d[:, None])
                hi = np.arctan((Lp - xs[:, others]) / d[:, None])
                mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
                ssum = np.ones((xs.shape[0],) + (order,) * m)
                jac = np.ones_like(ssum)
                for j in range(m):
                    shape = (xs.shape[0],) + tuple(order if i == j else 1 for i in range(m))
                    phi = (mid[:, j, None] + half[:, j, None] * gx).reshape(shape)
                    t2 = np.tan(phi) ** 2
                    ssum = ssum + t2
                    jac = jac * (1.0 + t2) * (half[:, j].reshape((-1,) + (1,) * m)
                                              * gw.reshape(shape[1:]))
                vals = jac * ssum ** (-(n + sigma) / 2)
                integral = vals.reshape(xs.shape[0], -1).sum(axis=1)
                out[start:start + chunk] += d ** (-sigma) * integral
    out /= sigma
    out.setflags(write=False)
    return out


def _pair_rows(spec: GridSpec, exponent: float,
               terms: list[Callable[[slice, np.ndarray], np.ndarray]]) -> list[np.ndarray]:
    """Row sums ``sum_j term(i, j) K_ij`` over node pairs, diagonal excluded.

    Each ``term(rows, K)`` receives the kernel block ``K`` of shape
    ``(len(rows), M)`` and returns the matrix to be reduced along its rows.
    Each row is reduced with the fixed pairwise tree.
    """
    _check_pair_budget(spec)
    n, M, N = spec.dim, spec.size, spec.points_per_axis
    table = _kernel_table(spec, exponent)
    idx = np.indices(spec.shape).reshape(n, -1).T
    strides = N ** np.arange(n - 1, -1, -1)
    cols = np.arange(M)
    outs = [np.empty(M) for _ in terms]

    def work(start: int, stop: int) -> None:
        sl = slice(start, stop)
        if n == 1:
            off = np.abs(cols[sl, None] - cols[None, :])
        else:
            off = np.abs(idx[sl, None, :] - idx[None, :, :]) @ strides
        K = table[off]
        for out, term in zip(outs, terms):
            out[sl] = pairwise_sum(term(sl, K), axis=1)

    run_blocks(work, M, max(1, BLOCK_ELEMENTS // M))
    return outs


def _zeta_coefficient(params: OperatorParams) -> tuple[float, float]:
    """``(-2 zeta(-a), 1 + a)`` with ``a = p - 1 - sp``."""
    a = params.p - 1.0 - params.sp
    return -2.0 * float(zeta(-a)), 1.0 + a


def _nonlocal(u: GridFunction, params: OperatorParams, diagonal: str,
              energy: bool, operator: bool):
    spec = u.spec
    p = params.p
    vals = u.values.ravel()
    w = spec.weights().ravel()
    terms = []
    if energy:
        if p == 2:
            terms.append(lambda sl, K: w * np.square(vals[sl, None] - vals) * K)
        else:
            terms.append(lambda sl, K: w * np.abs(vals[sl, None] - vals) ** p * K)
    if operator:
        terms.append(lambda sl, K: w * signed_pow(vals[sl, None] - vals, p - 1) * K)
    rows = _pair_rows(spec, params.kernel_exponent, terms)
    T = tail_integrals(spec, params.sp)
    policy = resolve_diagonal(diagonal, spec.dim)
    if policy == "corrected":
        c, e = _zeta_coefficient(params)
        scale = c * spec.spacing ** e
        du = gradient(u).components[0]

    result = {}
    if energy:
        row_e = rows.pop(0)
        result["box"] = total(w * row_e)
        result["tail"] = 2.0 * total(w * np.abs(vals) ** p * T)
        result["diag"] = scale * total(w * np.abs(du) ** p) if policy == "corrected" else 0.0
    if operator:
        op = rows.pop(0) + signed_pow(vals, p - 1) * T
        if policy == "corrected":
            op = op - 0.5 * scale * gradient_transpose(signed_pow(du, p - 1), spec)
        result["operator"] = op.reshape(spec.shape)
    result["policy"] = policy
    result["T"] = T
    return result


def _tail_bound(u: GridFunction, params: OperatorParams, T: np.ndarray) -> float:
    p = params.p
    a = np.abs(u.values.ravel())
    w = u.spec.weights().ravel()
    M = u.decay_margin
    bound = 2.0 * total(w * a ** p * T)
    if M > 0:
        bound += 2.0 * p * M * total(w * (a + M) ** (p - 1) * T)
    return bound


def gagliardo(u: GridFunction, params: OperatorParams,
              tail_policy: str = "zero_extension",
              diagonal: str = "auto") -> tuple[float, float]:
    """``([u]_{s,p}^p, tail_bound)``.

    With ``zero_extension`` the value includes the out-of-box pairs; with
    ``reported_bound`` it is the in-box double integral only. ``tail_bound``
    is the size of the out-of-box pair energy (plus a first-order term in the
    decay margin), which bounds what truncation to the box can change.
    """
    _check_dims(u, None, params)
    if tail_policy not in TAIL_POLICIES:
        raise InputError(f"unknown tail policy {tail_policy!r}")
    if not np.any(u.values):
        resolve_diagonal(diagonal, u.spec.dim)
        return 0.0, 0.0
    r = _nonlocal(u, params, diagonal, energy=True, operator=False)
    value = r["box"] + r["diag"]
    if tail_policy == "zero_extension":
        value += r["tail"]
    return value, _tail_bound(u, params, r["T"])


def apply_fractional_plap(u: GridFunction, params: OperatorParams,
                          diagonal: str = "auto") -> GridFunction:
    """``(-Delta_p)^s u`` at every node (principal value, zero extension)."""
    _check_dims(u, None, params)
    return GridFunction(u.spec, _nonlocal(u, params, diagonal, False, True)["operator"])


def nonlocal_energy_and_operator(u: GridFunction, params: OperatorParams,
                                 diagonal: str = "auto") -> tuple[float, np.ndarray]:
    """Zero-extension Gagliardo energy and fractional operator in one sweep."""
    _check_dims(u, None, params)
    r = _nonlocal(u, params, diagonal, True, True)
    return r["box"] + r["diag"] + r["tail"], r["operator"]


def nonlocal_form(u: GridFunction, phi: GridFunction, params: OperatorParams,
                  diagonal: str = "auto") -> float:
    """``int int J_p(u(x)-u(y)) (phi(x)-phi(y)) dmu_{s,p}`` as a direct double sum."""
    _check_dims(u, None, params)
    if u.spec != phi.spec:
        raise InputError("u and phi live on different grids")
    spec, p = u.spec, params.p
    vals, pv = u.values.ravel(), phi.values.ravel()
    w = spec.weights().ravel()
    (rows,) = _pair_rows(spec, params.kernel_exponent, [
        lambda sl, K: w * signed_pow(vals[sl, None] - vals, p - 1)
        * (pv[sl, None] - pv) * K])
    T = tail_integrals(spec, params.sp)
    out = total(w * rows) + 2.0 * total(w * signed_pow(vals, p - 1) * pv * T)
    if resolve_diagonal(diagonal, spec.dim) == "corrected":
        c, e = _zeta_coefficient(params)
        du = gradient(u).components[0]
        dphi = gradient(phi).components[0]
        out += c * spec.spacing ** e * total(w * signed_pow(du, p - 1) * dphi)
    return out


def pair_energy_matrix(u: GridFunction, params: OperatorParams) -> np.ndarray:
    """Dense ``w_i w_j |u_i - u_j|^p K_ij`` (small grids only; diagnostics)."""
    spec = u.spec
    vals = u.values.ravel()
    w = spec.weights().ravel()
    table = _kernel_table(spec, params.kernel_exponent)
    idx = np.indices(spec.shape).reshape(spec.dim, -1).T
    strides = spec.points_per_axis ** np.arange(spec.dim - 1, -1, -1)
    K = table[np.abs(idx[:, None, :] - idx[None, :, :]) @ strides]
    return w[:, None] * w[None, :] * np.abs(vals[:, None] - vals[None, :]) ** params.p * K


# ------------------------------------------------------------ potential part

def potential_integral(u: GridFunction, f: Nonlinearity, p: float | None = None,
                       with_nehari: bool = False):
    """``int F(u)``; with ``with_nehari`` also ``int u f(u)``."""
    F = integrate(f.F(u.values, p), u.spec)
    if not with_nehari:
        return F
    return F, integrate(u.values * f.f(u.values, p), u.spec)


# ----------------------------------------------------------------- assembled

def energy_breakdown(u: GridFunction, norm: FinslerNorm, params: OperatorParams,
                     f: Nonlinearity, tail_policy: str = "zero_extension",
                     diagonal: str = "auto") -> EnergyBreakdown:
    """All energy terms of ``u``. Terms with a zero coefficient are not evaluated."""
    _check_dims(u, norm, params)
    loc = local_energy(u, norm, params) if params.alpha else 0.0
    if params.beta:
        nl, tail = gagliardo(u, params, tail_policy, diagonal)
    else:
        nl, tail = 0.0, 0.0
    F, ufu = potential_integral(u, f, params.p, with_nehari=True)
    return EnergyBreakdown(loc, nl, F, tail, resolve_diagonal(diagonal, params.n),
                           nehari_term=ufu, decay_margin=u.decay_margin)


def energy_norm(phi: GridFunction, norm: FinslerNorm, params: OperatorParams,
                diagonal: str = "auto") -> float:
    """``(alpha ||H(grad phi)||_p^p + beta [phi]_{s,p}^p)^(1/p)``."""
    e = 0.0
    if params.alpha:
        e += params.alpha * local_energy(phi, norm, params)
    if params.beta:
        e += params.beta * gagliardo(phi, params, diagonal=diagonal)[0]
    return e ** (1.0 / params.p)


def weak_residual(u: GridFunction, norm: FinslerNorm, params: OperatorParams,
                  f: Nonlinearity, test_functions: list[GridFunction],
                  diagonal: str = "auto") -> float:
    """Largest normalized defect of the weak formulation over ``test_functions``.

    For each ``phi``: ``|alpha int flux . grad phi + beta int int J_p (phi(x) -
    phi(y)) dmu - int f(u) phi| / ||phi||``, where ``||phi||`` is the energy
    norm. The nonlocal term is evaluated as ``2 <(-Delta_p)^s u, phi>``.
    """
    _check_dims(u, norm, params)
    if not test_functions:
        raise InputError("at least one test function is required")
    for phi in test_functions:
        if phi.spec != u.spec:
            raise InputError("test functions must share the grid of u")
        if phi.decay_margin != 0.0:
            raise InputError("test functions must vanish on the boundary layer")
    if not np.any(u.values):
        return 0.0
    flux = local_flux(u, norm, params) if params.alpha else None
    op = apply_fractional_plap(u, params, diagonal).values if params.beta else None
    fu = f.f(u.values, params.p)
    worst = 0.0
    for phi in test_functions:
        lhs = 0.0
        if params.alpha:
            gphi = gradient(phi).pointwise()
            lhs += params.alpha * integrate(np.sum(flux * gphi, axis=-1), u.spec)
        if params.beta:
            lhs += params.beta * 2.0 * integrate(op * phi.values, u.spec)
        r = abs(lhs - integrate(fu * phi.values, u.spec))
        worst = max(worst, r / energy_norm(phi, norm, params, diagonal))
    return worst
