"""Finsler-Minkowski norms on R^n.

Three families are supported:

* ``euclidean``            ``|x|``
* ``hq`` (q >= 1)          ``(sum |x_i|^q)^(1/q)``
* ``hlm`` (lambda, mu > 0) ``sqrt(lambda * sqrt(sum x_i^4) + mu * sum x_i^2)``

Each norm evaluates on arrays of shape ``(..., n)`` and has a closed-form
gradient away from the origin. ``check_minkowski_properties`` samples the
axioms (positivity, absolute homogeneity, Euclidean comparability), the Euler
relation, the gradient sign rule and a strict-convexity probe.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.stats import qmc
from scipy.special import ndtri

from .errors import DomainError, InputError

SPHERE_SAMPLES = 100_000


@dataclass(frozen=True)
class FinslerNorm:
    kind: str
    dim: int
    q: float = 2.0
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "hq", "hlm"):
            raise InputError(f"unknown norm kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dimension must be a positive integer, got {self.dim}")
        if self.kind == "hq" and not (np.isfinite(self.q) and self.q >= 1.0):
            raise InputError(f"hq exponent must be >= 1, got {self.q}")
        if self.kind == "hlm" and not (self.lam > 0 and self.mu > 0):
            raise InputError(f"hlm needs lambda, mu > 0, got {self.lam}, {self.mu}")

    @classmethod
    def euclidean(cls, dim: int) -> "FinslerNorm":
        return cls("euclidean", dim)

    @classmethod
    def hq(cls, q: float, dim: int) -> "FinslerNorm":
        return cls("hq", dim, q=float(q))

    @classmethod
    def hlm(cls, lam: float, mu: float, dim: int) -> "FinslerNorm":
        return cls("hlm", dim, lam=float(lam), mu=float(mu))

    @classmethod
    def parse(cls, text: str, dim: int) -> "FinslerNorm":
        """Parse ``euclidean``, ``hq:<q>`` or ``hlm:<lambda>,<mu>``."""
        head, _, tail = text.strip().partition(":")
        try:
            if head == "euclidean" and not tail:
                return cls.euclidean(dim)
            if head == "hq":
                return cls.hq(float(tail), dim)
            if head == "hlm":
                lam, mu = (float(t) for t in tail.split(","))
                return cls.hlm(lam, mu, dim)
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed norm specification {text!r}") from exc
        raise InputError(f"malformed norm specification {text!r}")

    def label(self) -> str:
        if self.kind == "hq":
            return f"hq:{self.q:g}"
        if self.kind == "hlm":
            return f"hlm:{self.lam:g},{self.mu:g}"
        return "euclidean"

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise InputError(
                f"expected vectors of length {self.dim}, got shape {x.shape}")
        return x

    def __call__(self, x) -> np.ndarray | float:
        return self.eval(x)

    def eval(self, x) -> np.ndarray | float:
        x = self._check(x)
        out = self._eval(x)
        return float(out) if out.ndim == 0 else out

    def _eval(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "euclidean":
            return np.sqrt(np.sum(x * x, axis=-1))
        if self.kind == "hq":
            # scale by the max entry so |x_i|^q neither overflows nor underflows
            a = np.abs(x)
            top = np.max(a, axis=-1)
            safe = np.where(top > 0, top, 1.0)
            r = a / safe[..., None]
            return top * np.sum(r ** self.q, axis=-1) ** (1.0 / self.q)
        x2 = x * x
        return np.sqrt(self.lam * np.sqrt(np.sum(x2 * x2, axis=-1))
                       + self.mu * np.sum(x2, axis=-1))

    def grad(self, x) -> np.ndarray:
        """Gradient of H at nonzero ``x`` (shape ``(..., n)``)."""
        x = self._check(x)
        h = self._eval(x)
        if np.any(h == 0):
            raise DomainError("the gradient of H is undefined at the origin")
        return self._grad(x, h)

    def _grad(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        hh = h[..., None]
        if self.kind == "euclidean":
            return x / hh
        if self.kind == "hq":
            r = np.abs(x) / hh
            return np.sign(x) * r ** (self.q - 1.0)
        x2 = x * x
        s4 = np.sqrt(np.sum(x2 * x2, axis=-1))[..., None]
        return (self.lam * x2 * x / s4 + self.mu * x) / hh

    def flux(self, g, p: float) -> np.ndarray:
        """``H(g)^(p-1) grad H(g)``, extended by zero where ``g = 0``."""
        g = self._check(g)
        zero = self._eval(g) == 0
        safe_g = np.where(zero[..., None], 1.0, g)
        h = self._eval(safe_g)
        out = h[..., None] ** (p - 1.0) * self._grad(safe_g, h)
        return np.where(zero[..., None], 0.0, out)

    @cached_property
    def comparability(self) -> tuple[float, float]:
        """Estimated ``(C1, C2)`` with ``C1 |x| <= H(x) <= C2 |x|``."""
        vals = self._eval(sphere_directions(self.dim, SPHERE_SAMPLES))
        return float(vals.min()), float(vals.max())

    @property
    def c1(self) -> float:
        return self.comparability[0]

    @property
    def c2(self) -> float:
        return self.comparability[1]


def eval_norm(norm: FinslerNorm, x) -> np.ndarray | float:
    return norm.eval(x)


def grad_norm(norm: FinslerNorm, x) -> np.ndarray:
    return norm.grad(x)


def sphere_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic, well-spread unit vectors in R^dim.

    In the plane these are equally spaced angles. Otherwise an unscrambled
    Halton sequence is pushed through the normal quantile function, and the
    coordinate axes and the main diagonals are prepended.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    pts = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    z = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * dim, indexing="ij")).reshape(dim, -1).T
    z = np.vstack([axes, signs, z])
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


@dataclass
class PropertyReport:
    norm: str
    dim: int
    samples: int
    seed: int
    positivity_ok: bool
    homogeneity_violation: float
    euler_violation: float
    sign_violation: float
    fd_gradient_violation: float
    comparability_violation: float
    c1: float
    c2: float
    grad_bound: float
    convexity_ok: bool
    convexity_min_gap: float
    tol: float = 1e-10
    warnings: list[str] = field(default_factory=list)

    @property
    def axioms(self) -> dict[str, bool]:
        return {
            "H1_positivity": self.positivity_ok,
            "H2_homogeneity": self.homogeneity_violation <= self.tol,
            "H3_comparability": (0 < self.c1 <= self.c2 < np.inf
                                 and self.comparability_violation <= 1e-6),
            "euler_relation": self.euler_violation <= self.tol,
            "gradient_sign": self.sign_violation <= self.tol,
            "gradient_bounded": bool(np.isfinite(self.grad_bound)),
        }

    @property
    def passed(self) -> bool:
        return all(self.axioms.values())

    @property
    def max_violation(self) -> float:
        return max(self.homogeneity_violation, self.euler_violation, self.sign_violation)


def check_minkowski_properties(norm: FinslerNorm, sample_count: int = 10_000,
                               seed: int = 0) -> PropertyReport:
    """Sample the norm axioms and the gradient identities at seeded points."""
    if int(sample_count) != sample_count or sample_count < 1:
        raise InputError(f"sample_count must be a positive integer, got {sample_count}")
    n = norm.dim
    rng = np.random.default_rng(seed)
    # random directions with magnitudes spread over six decades
    x = rng.standard_normal((sample_count, n))
    x *= (10.0 ** rng.uniform(-3, 3, sample_count))[:, None]
    t = rng.uniform(-10, 10, sample_count)
    t = np.where(t == 0, 1.0, t)

    hx = norm._eval(x)
    positivity_ok = bool(norm._eval(np.zeros(n)) == 0 and np.all(hx > 0))

    htx = norm._eval(t[:, None] * x)
    hom = np.abs(htx - np.abs(t) * hx) / norm._eval(np.abs(t)[:, None] * x)

    gx = norm._grad(x, hx)
    euler = np.abs(np.sum(x * gx, axis=-1) - hx) / hx
    gtx = norm._grad(t[:, None] * x, htx)
    gscale = np.maximum(np.max(np.abs(gx), axis=-1), np.finfo(float).tiny)
    sign = np.max(np.abs(gtx - np.sign(t)[:, None] * gx), axis=-1) / gscale

    # gradient vs central differences on the Euclidean unit sphere
    m = min(sample_count, 1000)
    e = x[:m] / np.linalg.norm(x[:m], axis=-1, keepdims=True)
    step = 1e-6
    fd = np.empty_like(e)
    for i in range(n):
        d = np.zeros(n)
        d[i] = step
        fd[:, i] = (norm._eval(e + d) - norm._eval(e - d)) / (2 * step)
    ge = norm._grad(e, norm._eval(e))
    fd_viol = np.max(np.abs(fd - ge), axis=-1) / np.linalg.norm(ge, axis=-1)

    c1, c2 = norm.comparability
    r = np.linalg.norm(x, axis=-1)
    ratio = hx / r
    comp = np.maximum(np.maximum(c1 - ratio, ratio - c2), 0.0) / c2

    # strict convexity: midpoints of non-parallel unit-vector pairs
    y = rng.standard_normal((sample_count, n))
    ex = x / r[:, None]
    ey = y / np.linalg.norm(y, axis=-1, keepdims=True)
    keep = np.abs(np.sum(ex * ey, axis=-1)) < 1 - 1e-6
    avg = 0.5 * (norm._eval(ex) + norm._eval(ey))
    gap = (avg - norm._eval(0.5 * (ex + ey))) / avg
    gap = gap[keep]
    min_gap = float(gap.min()) if gap.size else float("nan")
    convex_ok = bool(gap.size and min_gap > 1e-12)

    report = PropertyReport(
        norm=norm.label(), dim=n, samples=int(sample_count), seed=int(seed),
        positivity_ok=positivity_ok,
        homogeneity_violation=float(hom.max()),
        euler_violation=float(euler.max()),
        sign_violation=float(sign.max()),
        fd_gradient_violation=float(fd_viol.max()),
        comparability_violation=float(comp.max()),
        c1=c1, c2=c2,
        grad_bound=float(np.linalg.norm(gx, axis=-1).max()),
        convexity_ok=convex_ok, convexity_min_gap=min_gap,
    )
    if not convex_ok:
        report.warnings.append(
            f"strict convexity probe failed: midpoint gap {min_gap:.3e} "
            "(flat facets on the unit sphere)")
    if norm.kind == "hq" and norm.q == 1.0:
        report.warnings.append("hq:1 is not differentiable on the coordinate hyperplanes")
    return report


def ratio_spread(a: FinslerNorm, b: FinslerNorm, sample_count: int = 10_000,
                 seed: int = 0) -> float:
    """``max - min`` of ``a(x) / b(x)`` over random unit vectors.

    A positive spread shows the two norms are not scalar multiples of each other.
    """
    if a.dim != b.dim:
        raise InputError("norms act on different dimensions")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((sample_count, a.dim))
    x /= np.linalg.norm(x, axis=-1, keepdims=True)
    ratio = a._eval(x) / b._eval(x)
    return float(ratio.max() - ratio.min())
