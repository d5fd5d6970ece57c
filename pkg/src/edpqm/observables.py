"""Modified inner-product algebra for energy-dependent oscillators.

States of different energies are orthogonal only under the pair weight
``1 - phi_jk(x)`` where ``phi_jk`` is the difference quotient of the potential
in energy (its energy derivative on the diagonal).  For the oscillator family
``phi_jk(x) = w_jk x^2``, so every quantity below is an exact polynomial x
Gaussian integral evaluated by :func:`edpqm.polygauss.weighted_overlap`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .polygauss import GaussianWeight, Polynomial, hermite, weighted_overlap
from .spectra import (
    EigenState,
    Kind,
    NonPositiveNorm,
    OscillatorModel,
    SpectrumError,
    solve,
)

__all__ = [
    "WeightKernel",
    "MatrixElement",
    "NonPositiveNorm",
    "NoCriticalOrder",
    "PathologicalOperator",
    "weight_kernel",
    "norm_constant",
    "modified_inner",
    "moment",
    "moment_closed_form",
    "moment_leading_factor",
    "critical_moment_order",
    "closure_sum",
    "closure_correction",
    "dipole_sum_rule",
    "double_commutator_average",
]


class NoCriticalOrder(SpectrumError):
    pass


class PathologicalOperator(SpectrumError):
    """The operator has a pole inside the integration support."""


@dataclass(frozen=True)
class WeightKernel:
    """``phi_jk(x) = phi_coeff * x^2``."""

    pair: tuple[int, int]
    phi_coeff: float

    def weight_poly(self) -> Polynomial:
        return Polynomial([1.0, 0.0, -self.phi_coeff])


@dataclass(frozen=True)
class MatrixElement:
    bra: int
    ket: int
    power: int
    value: float


def weight_kernel(j: EigenState, k: EigenState) -> WeightKernel:
    return WeightKernel((j.n, k.n), j.model.weight_coeff(j.energy, k.energy))


def _raw_overlap(j: EigenState, k: EigenState, extra: Polynomial) -> float:
    """Integral of the un-normalized product H_j H_k exp(...) * extra."""
    return weighted_overlap(
        hermite(j.n),
        math.sqrt(j.lam),
        hermite(k.n),
        math.sqrt(k.lam),
        extra,
        GaussianWeight(0.5 * (j.lam + k.lam)),
    )


def norm_constant(state: EigenState) -> float:
    """C_n^2 making the modified norm of the state equal to one.

    Raises NonPositiveNorm when the weighted integral is not positive.
    """
    integral = _raw_overlap(state, state, weight_kernel(state, state).weight_poly())
    if not integral > 0:
        raise NonPositiveNorm(state.n, integral)
    return 1.0 / integral


def _norm(state: EigenState) -> float:
    return math.sqrt(norm_constant(state))


def modified_inner(j: EigenState, k: EigenState, power: int = 0) -> MatrixElement:
    """``∫ Psi_j (1 - phi_jk) x^power Psi_k dx`` with normalized states."""
    if j.model != k.model:
        raise ValueError("states belong to different models")
    extra = weight_kernel(j, k).weight_poly() * Polynomial.monomial(power)
    value = _norm(j) * _norm(k) * _raw_overlap(j, k, extra)
    return MatrixElement(j.n, k.n, power, value)


def moment(state: EigenState, k_even: int) -> float:
    """``<x^k>_n`` under the diagonal weight; negative values are returned as is."""
    if k_even < 0 or k_even % 2:
        raise ValueError("moment order must be a non-negative even integer")
    return modified_inner(state, state, k_even).value


def moment_closed_form(state: EigenState) -> float:
    """Closed-form mean-square radius for any family with ``phi_nn = w x^2``.

    Specializes to the linear (w = gamma/2) and square-root
    (w = gamma / (4 sqrt(E))) expressions.
    """
    N = 2 * state.n + 1
    lam = state.lam
    w = state.weight_diag
    return (
        N / (2 * lam)
        / (1 - w * N / (2 * lam))
        * (1 - 3 * w * (N * N + 1) / (4 * lam * N))
    )


def moment_leading_factor(state: EigenState, k: int) -> float:
    """Leading-order sign factor of ``<x^k>_n``.

    ``1 - gamma (k+1) / (4 lam)`` for linear dependence and
    ``1 - gamma (k+1) / (4 lam sqrt(E))`` for the square-root one; other
    families use ``1 - w_nn (k+1) / (2 lam)``, which matches the linear case.
    """
    kind = state.model.kind
    if kind is Kind.LINEAR:
        return 1.0 - state.gamma * (k + 1) / (4.0 * state.lam)
    if kind is Kind.SQRT:
        return 1.0 - state.gamma * (k + 1) / (4.0 * state.lam * math.sqrt(state.energy))
    return 1.0 - state.weight_diag * (k + 1) / (2.0 * state.lam)


def critical_moment_order(state: EigenState, k_limit: int = 100_000) -> int:
    """Smallest even k whose leading factor is negative."""
    if state.gamma <= 0:
        raise NoCriticalOrder(f"gamma={state.gamma} <= 0: all moment factors exceed 1")
    for k in range(2, k_limit + 1, 2):
        if moment_leading_factor(state, k) < 0:
            return k
    raise NoCriticalOrder(f"no critical order below k={k_limit}")


@dataclass
class ClosureReport:
    j: int
    power: int
    contributions: list[float]
    exact: float

    def partial_sum(self, n_max: int) -> float:
        return math.fsum(self.contributions[: n_max + 1])

    @property
    def partial_sums(self) -> list[float]:
        return list(np.cumsum(self.contributions))


def _states(model: OscillatorModel, n_max: int) -> list[EigenState]:
    return [solve(model, n) for n in range(n_max + 1)]


def closure_sum(j: int, power: int, n_max: int, model: OscillatorModel) -> ClosureReport:
    """Sum over intermediate states of ``|<n|x^power|j>|^2`` next to ``<x^(2 power)>_j``."""
    states = _states(model, max(n_max, j))
    target = states[j]
    contributions = [
        modified_inner(states[n], target, power).value ** 2 for n in range(n_max + 1)
    ]
    return ClosureReport(j, power, contributions, moment(target, 2 * power))


def closure_correction(n: int, j: int, model: OscillatorModel) -> float:
    """``∫ Psi_j Psi_n [phi_nn - phi_nj] dx``.

    Vanishes identically for linear dependence, where phi is state-independent.
    """
    states = _states(model, max(n, j))
    sn, sj = states[n], states[j]
    dw = weight_kernel(sn, sn).phi_coeff - weight_kernel(sn, sj).phi_coeff
    if dw == 0.0:
        return 0.0
    return dw * _norm(sn) * _norm(sj) * _raw_overlap(sj, sn, Polynomial.monomial(2))


@dataclass
class SumRuleReport:
    model: OscillatorModel
    terms: list[float]
    exact: Optional[float]

    def partial_sum(self, n_max: int) -> float:
        return math.fsum(self.terms[: n_max + 1])


def dipole_sum_rule(model: OscillatorModel, n_max: int = 7) -> SumRuleReport:
    """Energy-weighted dipole sum ``sum_n (E_n - E_0) |<n|x|0>|^2``.

    The closed-form right-hand side ``1/2 [1 - gamma/(4 lam_0)]^-1`` is
    attached for linear dependence only.
    """
    states = _states(model, n_max)
    g = states[0]
    terms = [
        (s.energy - g.energy) * modified_inner(s, g, 1).value ** 2 for s in states
    ]
    exact = None
    if model.kind is Kind.LINEAR:
        exact = 0.5 / (1.0 - model.gamma / (4.0 * g.lam))
    return SumRuleReport(model, terms, exact)


@dataclass
class OperatorAverage:
    value: float
    method: str
    pathological: bool = False
    note: str = ""


def double_commutator_average(state: EigenState, support: Optional[float] = None) -> OperatorAverage:
    """Average of ``[[H, x], x] = -(1 - gamma x^2/2)^-1`` under the modified product.

    Computed by quadrature of the rational integrand over ``[-X, X]`` with
    ``X = 12 / sqrt(lam)``.  When the pole at ``x^2 = 2/gamma`` falls inside
    the support the closed form ``-[1 - gamma/(4 lam)]^-1`` is returned with
    ``pathological=True`` and a warning.
    """
    if state.model.kind is not Kind.LINEAR:
        raise ValueError("the double commutator is defined here for linear dependence")
    g = state.gamma
    X = support if support is not None else 12.0 / math.sqrt(state.lam)
    closed = -1.0 / (1.0 - g / (4.0 * state.lam))
    if g > 0 and 2.0 / g <= X * X:
        pole = math.sqrt(2.0 / g)
        msg = f"pole of the double commutator at |x|={pole:.6g} lies inside [-{X:.3g}, {X:.3g}]"
        warnings.warn(msg + "; using the closed form", RuntimeWarning, stacklevel=2)
        return OperatorAverage(closed, "closed_form", True, msg)

    c2 = norm_constant(state)
    H = hermite(state.n)
    s = math.sqrt(state.lam)
    w = weight_kernel(state, state).phi_coeff

    def integrand(x):
        psi2 = c2 * H(s * x) ** 2 * math.exp(-state.lam * x * x)
        return -psi2 * (1.0 - w * x * x) / (1.0 - 0.5 * g * x * x)

    value = quad(integrand, -X, X, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    return OperatorAverage(value, "quadrature")


def pathological_pole(gamma: float) -> Optional[float]:
    """Position of the double-commutator pole (gamma > 0), else None."""
    return math.sqrt(2.0 / gamma) if gamma > 0 else None


def table_grid(model: OscillatorModel, n_max: int, power: int = 0) -> np.ndarray:
    """Matrix of ``<j|x^power|k>`` for j, k <= n_max."""
    states = _states(model, n_max)
    out = np.empty((n_max + 1, n_max + 1))
    for a, sa in enumerate(states):
        for b, sb in enumerate(states):
            out[a, b] = modified_inner(sa, sb, power).value
    return out
