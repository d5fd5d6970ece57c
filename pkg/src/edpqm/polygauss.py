"""Exact integration of polynomial x Gaussian integrands.

Every norm, moment and matrix element in the package reduces to integrals of
the form ``∫ p(x) exp(-alpha x^2) dx`` over the real line.  They are evaluated
here by expanding ``p`` in monomials and summing closed-form Gaussian moments,
so no quadrature error enters the reproduced tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np


class DivergentIntegralError(ValueError):
    """Raised when a Gaussian weight does not decay (alpha <= 0)."""


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial stored as coefficients in increasing powers of x."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        c = [float(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return Polynomial(a)

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial([factor * c for c in self.coeffs])

    def compose_scaled(self, s: float) -> "Polynomial":
        """Return the polynomial ``x -> p(s * x)``."""
        return Polynomial([c * s**i for i, c in enumerate(self.coeffs)])

    @classmethod
    def monomial(cls, power: int, coeff: float = 1.0) -> "Polynomial":
        return cls([0.0] * power + [coeff])


@dataclass(frozen=True)
class GaussianWeight:
    """The weight ``exp(-alpha x^2)``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DivergentIntegralError(
                f"Gaussian weight needs alpha > 0, got {self.alpha!r}"
            )


@lru_cache(maxsize=None)
def hermite(n: int) -> Polynomial:
    """Physicists' Hermite polynomial H_n from H_{n+1} = 2x H_n - 2n H_{n-1}."""
    if n < 0:
        raise ValueError("Hermite degree must be non-negative")
    prev = np.array([1.0])
    if n == 0:
        return Polynomial(prev)
    cur = np.array([0.0, 2.0])
    for k in range(1, n):
        nxt = np.zeros(k + 2)
        nxt[1:] += 2.0 * cur
        nxt[: k] -= 2.0 * k * prev
        prev, cur = cur, nxt
    return Polynomial(cur)


def gaussian_moment(m: int, alpha: float) -> float:
    """Return ``∫ x^m exp(-alpha x^2) dx`` over the real line."""
    if not alpha > 0:
        raise DivergentIntegralError(f"moment integral diverges for alpha={alpha!r}")
    if m < 0:
        raise ValueError("moment order must be non-negative")
    if m % 2:
        return 0.0
    k = m // 2
    # (2k-1)!! / (2 alpha)^k, built as a running product to stay in range
    value = math.sqrt(math.pi / alpha)
    for i in range(1, k + 1):
        value *= (2 * i - 1) / (2.0 * alpha)
    return value


def gaussian_integral(p: Polynomial, w: GaussianWeight) -> float:
    """Exact ``∫ p(x) exp(-alpha x^2) dx``."""
    terms = [c * gaussian_moment(m, w.alpha) for m, c in enumerate(p.coeffs) if m % 2 == 0]
    return math.fsum(terms)


def weighted_overlap(
    pA: Polynomial,
    sA: float,
    pB: Polynomial,
    sB: float,
    extra: Polynomial,
    w: GaussianWeight,
) -> float:
    """Exact ``∫ pA(sA x) pB(sB x) extra(x) exp(-alpha x^2) dx``.

    This is the single primitive behind all wavefunction integrals: with
    ``pA = H_j``, ``sA = sqrt(lambda_j)`` and ``alpha = (lambda_j + lambda_k)/2``
    it gives overlaps of oscillator-type states with any polynomial operator
    and weight correction folded into ``extra``.
    """
    integrand = pA.compose_scaled(sA) * pB.compose_scaled(sB) * extra
    return gaussian_integral(integrand, w)
