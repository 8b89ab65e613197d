"""Scalar and coupled nonlinearities f, F = int_0^t f and g, g_u, g_v."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


def signed_pow(t, e: float) -> np.ndarray:
    """``|t|^(e-1) t``, i.e. ``J_p`` with ``p = e + 1``; safe at ``t = 0``."""
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.abs(t) ** e


@dataclass(frozen=True)
class Nonlinearity:
    """``signed_power``: ``f(t) = lam t_+^(q-1) - mu t_-^(q-1)``.
    ``power_minus_mass``: ``f(t) = |t|^(q-2) t - m |t|^(p-2) t``.

    ``p`` (the operator exponent) is only needed by ``power_minus_mass`` and by
    the growth classification; it is passed at call time.
    """

    kind: str
    q: float
    lam: float = 1.0
    mu: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if self.kind not in ("signed_power", "power_minus_mass"):
            raise InputError(f"unknown nonlinearity kind {self.kind!r}")
        if not self.q > 1:
            raise InputError(f"q must exceed 1, got {self.q}")
        if self.kind == "power_minus_mass" and not self.m > 0:
            raise InputError(f"mass must be positive, got {self.m}")

    @classmethod
    def signed_power(cls, q: float, lam: float = 1.0, mu: float = 1.0) -> "Nonlinearity":
        return cls("signed_power", float(q), lam=float(lam), mu=float(mu))

    @classmethod
    def power_minus_mass(cls, q: float, m: float = 1.0) -> "Nonlinearity":
        return cls("power_minus_mass", float(q), m=float(m))

    @classmethod
    def parse(cls, text: str) -> "Nonlinearity":
        """``sp:<q>,<lambda>,<mu>`` or ``pmm:<q>,<m>``."""
        head, _, tail = text.strip().partition(":")
        try:
            args = [float(a) for a in tail.split(",")]
        except ValueError as exc:
            raise InputError(f"malformed nonlinearity {text!r}") from exc
        if head == "sp" and len(args) == 3:
            return cls.signed_power(*args)
        if head == "pmm" and len(args) == 2:
            return cls.power_minus_mass(*args)
        raise InputError(f"malformed nonlinearity {text!r}")

    def label(self) -> str:
        if self.kind == "signed_power":
            return f"sp:{self.q:g},{self.lam:g},{self.mu:g}"
        return f"pmm:{self.q:g},{self.m:g}"

    def _need_p(self, p):
        if self.kind == "power_minus_mass" and p is None:
            raise InputError("power_minus_mass needs the operator exponent p")

    def f(self, t, p: float | None = None) -> np.ndarray:
        self._need_p(p)
        t = np.asarray(t, dtype=float)
        if self.kind == "signed_power":
            tp, tm = np.maximum(t, 0.0), np.maximum(-t, 0.0)
            return self.lam * tp ** (self.q - 1) - self.mu * tm ** (self.q - 1)
        return signed_pow(t, self.q - 1) - self.m * signed_pow(t, p - 1)

    def F(self, t, p: float | None = None) -> np.ndarray:
        self._need_p(p)
        t = np.asarray(t, dtype=float)
        if self.kind == "signed_power":
            tp, tm = np.maximum(t, 0.0), np.maximum(-t, 0.0)
            return (self.lam * tp ** self.q + self.mu * tm ** self.q) / self.q
        a = np.abs(t)
        return a ** self.q / self.q - self.m * a ** p / p

    def growth_class(self, p: float) -> str:
        """``f1`` when ``|f(t)| <= C |t|^(p-1)`` globally, else ``f2``."""
        if self.kind == "signed_power" and np.isclose(self.q, p, rtol=1e-12, atol=0):
            return "f1"
        return "f2"


@dataclass(frozen=True)
class SystemNonlinearity:
    """``g(t, s) = (lam |t|^q + mu |s|^q) / q`` with closed-form partials."""

    q: float
    lam: float = 1.0
    mu: float = 1.0
    kind: str = "decoupled_powers"

    def __post_init__(self):
        if self.kind != "decoupled_powers":
            raise InputError(f"unknown system nonlinearity {self.kind!r}")
        if not self.q > 1:
            raise InputError(f"q must exceed 1, got {self.q}")

    @classmethod
    def parse(cls, text: str) -> "SystemNonlinearity":
        """``dp:<q>,<lambda>,<mu>``."""
        head, _, tail = text.strip().partition(":")
        try:
            args = [float(a) for a in tail.split(",")]
        except ValueError as exc:
            raise InputError(f"malformed system nonlinearity {text!r}") from exc
        if head != "dp" or len(args) != 3:
            raise InputError(f"malformed system nonlinearity {text!r}")
        return cls(*args)

    def label(self) -> str:
        return f"dp:{self.q:g},{self.lam:g},{self.mu:g}"

    def g(self, t, s) -> np.ndarray:
        t, s = np.asarray(t, dtype=float), np.asarray(s, dtype=float)
        return (self.lam * np.abs(t) ** self.q + self.mu * np.abs(s) ** self.q) / self.q

    def g_u(self, t, s) -> np.ndarray:
        return self.lam * signed_pow(t, self.q - 1)

    def g_v(self, t, s) -> np.ndarray:
        return self.mu * signed_pow(s, self.q - 1)

    def growth_class(self, p: float) -> str:
        return "g1" if np.isclose(self.q, p, rtol=1e-12, atol=0) else "g2"

    def components(self) -> tuple[Nonlinearity, Nonlinearity]:
        """Scalar nonlinearities with ``F_u(t) = lam |t|^q / q`` and ``F_v(s) = mu |s|^q / q``."""
        return (Nonlinearity.signed_power(self.q, self.lam, self.lam),
                Nonlinearity.signed_power(self.q, self.mu, self.mu))
