"""Compactly supported functions sampled on a uniform box grid.

The box is ``[-L, L]^n`` with ``N`` nodes per axis including both endpoints,
so the spacing is ``h = 2L / (N - 1)``. Functions are understood to vanish
outside the box; ``decay_margin`` records how far that is from the truth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .reduce import total

MAX_NODES = 1 << 27


@dataclass(frozen=True)
class GridSpec:
    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dim must be a positive integer, got {self.dim}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise InputError(f"half_width must be positive, got {self.half_width}")
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < 8:
            raise InputError(f"points_per_axis must be an integer >= 8, got {self.points_per_axis}")
        if self.points_per_axis ** self.dim > MAX_NODES:
            raise InputError(
                f"{self.points_per_axis}^{self.dim} nodes exceed the limit of {MAX_NODES}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points_per_axis - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(n, N, ..., N)``."""
        ax = self.axis()
        return np.array(np.meshgrid(*[ax] * self.dim, indexing="ij"))

    def radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coords() ** 2, axis=0))

    def weights(self) -> np.ndarray:
        """Tensor-product trapezoidal weights."""
        w1 = np.full(self.points_per_axis, self.spacing)
        w1[[0, -1]] *= 0.5
        w = w1
        for _ in range(self.dim - 1):
            w = np.multiply.outer(w, w1)
        return w

    def boundary_mask(self) -> np.ndarray:
        """True on the outermost layer of nodes."""
        idx = np.indices(self.shape)
        last = self.points_per_axis - 1
        return np.any((idx == 0) | (idx == last), axis=0)


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    values: np.ndarray
    decay_margin: float = field(init=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.spec.shape:
            if vals.size != self.spec.size:
                raise InputError(
                    f"expected {self.spec.size} values for grid {self.spec.shape}, got {vals.size}")
            vals = vals.reshape(self.spec.shape)
        if not np.all(np.isfinite(vals)):
            raise InputError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "decay_margin",
                           float(np.max(np.abs(vals[self.spec.boundary_mask()]))))

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.spec, -self.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.spec, c * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_spec(self, other)
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same_spec(self, other)
        return GridFunction(self.spec, self.values - other.values)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.spec, fn(self.values))


@dataclass(frozen=True, eq=False)
class VectorGridFunction:
    spec: GridSpec
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != (self.spec.dim,) + self.spec.shape:
            raise InputError(
                f"expected {self.spec.dim} components of shape {self.spec.shape}")
        object.__setattr__(self, "components", comps)

    def pointwise(self) -> np.ndarray:
        """Components moved to the last axis, shape ``(N, ..., N, n)``."""
        return np.moveaxis(self.components, 0, -1)


def _same_spec(a: GridFunction, b: GridFunction) -> None:
    if a.spec != b.spec:
        raise InputError(f"grid mismatch: {a.spec} vs {b.spec}")


def gaussian(spec: GridSpec, scale: float = 1.0) -> GridFunction:
    if scale <= 0:
        raise InputError("gaussian scale must be positive")
    return GridFunction(spec, np.exp(-(spec.radius() / scale) ** 2))


def bump(spec: GridSpec, radius: float = 1.0, center=None) -> GridFunction:
    """``exp(-1 / (1 - |(x - c) / r|^2))`` inside the ball, zero outside."""
    if radius <= 0:
        raise InputError("bump radius must be positive")
    x = spec.coords()
    if center is not None:
        c = np.asarray(center, dtype=float).reshape((spec.dim,) + (1,) * spec.dim)
        x = x - c
    rho2 = np.sum(x ** 2, axis=0) / radius ** 2
    inside = rho2 < 1
    vals = np.zeros(spec.shape)
    vals[inside] = np.exp(-1.0 / (1.0 - rho2[inside]))
    return GridFunction(spec, vals)


def sech_soliton(spec: GridSpec) -> GridFunction:
    """``sqrt(2) sech(x)``, the positive solution of ``-u'' + u = u^3`` on R."""
    if spec.dim != 1:
        raise InputError("the sech soliton preset is only defined for n = 1")
    return GridFunction(spec, np.sqrt(2.0) / np.cosh(spec.axis()))


def read_table(path) -> GridFunction:
    """Read a ``custom_table`` file: header ``n L N`` then N^n values, row-major."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 3:
        raise InputError(f"{path}: missing 'n L N' header")
    try:
        n, L, N = int(tokens[0]), float(tokens[1]), int(tokens[2])
        vals = np.array([float(t) for t in tokens[3:]])
    except ValueError as exc:
        raise InputError(f"{path}: malformed table ({exc})") from exc
    spec = GridSpec(n, L, N)
    if vals.size != spec.size:
        raise InputError(f"{path}: expected {spec.size} values, found {vals.size}")
    return GridFunction(spec, vals.reshape(spec.shape))


def write_table(u: GridFunction, path) -> None:
    s = u.spec
    lines = [f"{s.dim} {s.half_width!r} {s.points_per_axis}"]
    lines += [repr(float(v)) for v in u.values.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def sample(preset: str, spec: GridSpec, **params) -> GridFunction:
    """Evaluate a named preset on ``spec``.

    ``gaussian`` (``scale``), ``bump`` (``radius``, ``center``), ``sech_soliton``
    and ``custom_table`` (``path``; the grid comes from the file).
    """
    if preset == "gaussian":
        return gaussian(spec, params.get("scale", 1.0))
    if preset == "bump":
        return bump(spec, params.get("radius", 1.0), params.get("center"))
    if preset in ("sech", "sech_soliton"):
        return sech_soliton(spec)
    if preset == "custom_table":
        return read_table(params["path"])
    raise InputError(f"unknown preset {preset!r}")


def gradient(u: GridFunction) -> VectorGridFunction:
    """Central differences inside, second-order one-sided on the boundary layer."""
    h = u.spec.spacing
    comps = [np.gradient(u.values, h, axis=d, edge_order=2) for d in range(u.spec.dim)]
    return VectorGridFunction(u.spec, np.array(comps))


def divergence(field: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Central-difference divergence of a nodal field of shape ``(..., n)``.

    Values on the boundary layer are set to zero.
    """
    h = spec.spacing
    out = np.zeros(spec.shape)
    for d in range(spec.dim):
        out += np.gradient(field[..., d], h, axis=d, edge_order=2)
    out[spec.boundary_mask()] = 0.0
    return out


def gradient_transpose(v: np.ndarray, spec: GridSpec) -> np.ndarray:
    """``-D^T (w v) / w`` for the 1D difference ``D`` used by ``gradient``.

    Equal to the central divergence away from the two outer nodes on each
    side; near the ends it is the exact counterpart of the one-sided stencils,
    so ``sum w phi(Du)`` has gradient ``-w * gradient_transpose(phi'(Du))``.
    """
    if spec.dim != 1:
        raise InputError("gradient_transpose is implemented for n = 1 only")
    h = spec.spacing
    wv = spec.weights() * v
    r = np.zeros_like(wv)
    r[2:] += wv[1:-1]
    r[:-2] -= wv[1:-1]
    r[0] += -3 * wv[0]
    r[1] += 4 * wv[0]
    r[2] -= wv[0]
    r[-1] += 3 * wv[-1]
    r[-2] -= 4 * wv[-1]
    r[-3] += wv[-1]
    return -r / (2 * h) / spec.weights()


def integrate(u: GridFunction | np.ndarray, spec: GridSpec | None = None) -> float:
    """Trapezoidal quadrature over the box with pairwise summation."""
    if isinstance(u, GridFunction):
        spec, vals = u.spec, u.values
    else:
        vals = np.asarray(u, dtype=float)
    return total(vals * spec.weights())


def dilate(u: GridFunction, lam: float) -> GridFunction:
    """Represent ``x -> u(lam x)``: same node values on the box of half-width ``L / lam``."""
    if not lam > 0:
        raise InputError(f"dilation factor must be positive, got {lam}")
    if lam == 1:
        return u
    s = u.spec
    return GridFunction(GridSpec(s.dim, s.half_width / lam, s.points_per_axis), u.values)


def bump_tests(spec: GridSpec, count: int = 20, radius: float | None = None) -> list[GridFunction]:
    """A fixed family of bump test functions supported well inside the box."""
    L = spec.half_width
    r = radius if radius is not None else L / 8
    if spec.dim == 1:
        centers = np.linspace(-L / 2, L / 2, count)[:, None]
    else:
        from scipy.stats import qmc
        pts = qmc.Halton(d=spec.dim, scramble=False).random(count + 1)[1:]
        centers = (2 * pts - 1) * (L / 2)
    tests = [bump(spec, r, c) for c in centers]
    for t in tests:
        if t.decay_margin != 0.0:
            raise InputError("test bump radius too large for the box")
    return tests
