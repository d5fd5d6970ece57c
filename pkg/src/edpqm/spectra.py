"""Self-consistent levels of the energy-dependent oscillator family.

The model is ``V(x, E) = (1 + gamma f(E)) x^2 / 2`` with hbar = m = omega = 1.
For a level with n quanta the frozen oscillator has frequency
``lam = sqrt(1 + gamma f(E))`` and energy ``lam (n + 1/2)``, so a
self-consistent level solves

    4 E^2 = (2n + 1)^2 (1 + gamma f(E)),     lam = 2E / (2n + 1).

Linear and quadratic ``f`` have closed-form roots; the square-root and
user-supplied dependences are bracketed and solved numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .potdsl import DomainError, Function

ROOT_XTOL = 1e-13


class SpectrumError(RuntimeError):
    pass


class ComplexEigenvalue(SpectrumError):
    """Level ``critical_n`` and everything above it has no real eigenvalue."""

    def __init__(self, critical_n: int, gamma: float, partial=None):
        self.critical_n = critical_n
        self.gamma = gamma
        self.partial = list(partial or [])
        super().__init__(
            f"eigenvalue becomes complex from n={critical_n} on (gamma={gamma})"
        )


class BracketError(SpectrumError):
    pass


class NonPositiveNorm(SpectrumError):
    """The modified norm of a state is not positive: the theory breaks down."""

    def __init__(self, n: int, factor: float):
        self.n = n
        self.factor = factor
        super().__init__(f"modified norm factor {factor:.6g} <= 0 for n={n}")


class Kind(enum.Enum):
    LINEAR = "linear"
    SQRT = "sqrt"
    QUADRATIC = "quadratic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class EDependence:
    """The energy dependence ``f(E)`` of the oscillator strength."""

    kind: Kind
    expr: Optional[Function] = None

    def __post_init__(self):
        if (self.kind is Kind.CUSTOM) != (self.expr is not None):
            raise ValueError("a custom dependence needs an expression, and only it")

    @classmethod
    def parse(cls, name: str) -> "EDependence":
        """``'linear'``, ``'sqrt'``, ``'quadratic'`` or an expression in E."""
        try:
            return cls(Kind(name.strip().lower()))
        except ValueError:
            return cls(Kind.CUSTOM, Function(name))

    def __call__(self, E):
        if self.kind is Kind.LINEAR:
            return E
        if self.kind is Kind.SQRT:
            return np.sqrt(E) if isinstance(E, np.ndarray) else math.sqrt(E)
        if self.kind is Kind.QUADRATIC:
            return E * E
        return self.expr(0.0, E)

    def derivative(self, E: float) -> float:
        if self.kind is Kind.LINEAR:
            return 1.0
        if self.kind is Kind.SQRT:
            return 0.5 / math.sqrt(E)
        if self.kind is Kind.QUADRATIC:
            return 2.0 * E
        h = 1e-5 * max(1.0, abs(E))
        return (self(E + h) - self(E - h)) / (2 * h)

    def divided_difference(self, Ej: float, Ek: float) -> float:
        """``(f(Ej) - f(Ek)) / (Ej - Ek)``, the derivative when ``Ej == Ek``."""
        if Ej == Ek:
            return self.derivative(Ej)
        if self.kind is Kind.LINEAR:
            return 1.0
        if self.kind is Kind.SQRT:
            return 1.0 / (math.sqrt(Ej) + math.sqrt(Ek))
        if self.kind is Kind.QUADRATIC:
            return Ej + Ek
        return (self(Ej) - self(Ek)) / (Ej - Ek)

    @property
    def label(self) -> str:
        return self.expr.src if self.kind is Kind.CUSTOM else self.kind.value


@dataclass(frozen=True)
class OscillatorModel:
    gamma: float
    dependence: EDependence = EDependence(Kind.LINEAR)

    @classmethod
    def linear(cls, gamma):
        return cls(gamma, EDependence(Kind.LINEAR))

    @classmethod
    def sqrt(cls, gamma):
        return cls(gamma, EDependence(Kind.SQRT))

    @classmethod
    def quadratic(cls, gamma):
        return cls(gamma, EDependence(Kind.QUADRATIC))

    @property
    def kind(self) -> Kind:
        return self.dependence.kind

    def residual(self, n: int, E: float) -> float:
        N = 2 * n + 1
        return 4 * E * E - N * N * (1 + self.gamma * self.dependence(E))

    def weight_coeff(self, Ej: float, Ek: float) -> float:
        """Coefficient ``w`` of the pair weight ``phi_jk(x) = w x^2``."""
        return 0.5 * self.gamma * self.dependence.divided_difference(Ej, Ek)


@dataclass(frozen=True)
class EigenState:
    """One self-consistent level: ``Psi_n = C_n H_n(sqrt(lam) x) exp(-lam x^2/2)``."""

    n: int
    energy: float
    lam: float
    model: OscillatorModel = field(repr=False)

    @property
    def gamma(self) -> float:
        return self.model.gamma

    @property
    def weight_diag(self) -> float:
        return self.model.weight_coeff(self.energy, self.energy)

    @property
    def norm_factor(self) -> float:
        """``1 - w_nn <x^2>`` in units of the plain oscillator norm."""
        return 1.0 - self.weight_diag * (2 * self.n + 1) / (2 * self.lam)

    @property
    def norm_sq(self) -> float:
        """C_n^2 in closed form; raises NonPositiveNorm on breakdown."""
        factor = self.norm_factor
        if not factor > 0:
            raise NonPositiveNorm(self.n, factor)
        plain = math.sqrt(self.lam / math.pi) / (2.0**self.n * math.factorial(self.n))
        return plain / factor


def _state(model, n, E):
    return EigenState(n, E, 2 * E / (2 * n + 1), model)


def linear_energy(gamma: float, n: int, branch: int = +1) -> float:
    """Root of 4E^2 = (2n+1)^2 (1 + gamma E) on the given branch (+1 or -1)."""
    N = 2 * n + 1
    a = N * gamma / 4.0
    root = math.sqrt(1.0 + a * a)
    # E = (N/2)(a ± root); rewrite the cancelling branch as a quotient
    if branch > 0:
        return 0.5 * N * (a + root) if a >= 0 else 0.5 * N / (root - a)
    return 0.5 * N * (a - root) if a <= 0 else -0.5 * N / (root + a)


def solve_linear(gamma: float, n: int) -> EigenState:
    """Positive-energy level for f(E) = E; the negative branch is discarded."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return _state(OscillatorModel.linear(gamma), n, linear_energy(gamma, n))


def _bisect(func, lo, hi):
    return brentq(func, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def solve_sqrt(gamma: float, n: int) -> EigenState:
    """Unique non-negative root of 4E^2 - (2n+1)^2 (1 + gamma sqrt(E)) = 0."""
    if n < 0:
        raise ValueError("n must be non-negative")
    model = OscillatorModel.sqrt(gamma)
    N = 2 * n + 1
    func = lambda E: model.residual(n, E)
    hi = N * (1 + abs(gamma)) + 1.0
    for _ in range(60):
        if func(hi) > 0:
            break
        hi *= 2.0
    else:
        raise BracketError(f"no sign change for sqrt dependence, n={n}, gamma={gamma}")
    return _state(model, n, _bisect(func, 0.0, hi))


def quadratic_critical_n(gamma: float) -> Optional[int]:
    """Smallest n with 4 - (2n+1)^2 gamma <= 0, or None when gamma <= 0."""
    if gamma <= 0:
        return None
    n = 0
    while 4 - (2 * n + 1) ** 2 * gamma > 0:
        n += 1
    return n


def solve_quadratic(gamma: float, n: int) -> EigenState:
    """E_n = (2n+1) / sqrt(4 - (2n+1)^2 gamma) when the radicand is positive."""
    if n < 0:
        raise ValueError("n must be non-negative")
    N = 2 * n + 1
    radicand = 4 - N * N * gamma
    if radicand <= 0:
        raise ComplexEigenvalue(quadratic_critical_n(gamma), gamma)
    return _state(OscillatorModel.quadratic(gamma), n, N / math.sqrt(radicand))


def solve_custom(
    model: OscillatorModel,
    n: int,
    window: tuple[float, float] = (1e-9, 50.0),
    cells: int = 200,
) -> list[EigenState]:
    """All self-consistent levels with ``n`` quanta inside ``window``.

    Uses a sign-change scan over a uniform lattice followed by bracketed
    root refinement. Lattice points where ``f`` cannot be evaluated, or where
    the frozen oscillator is not confining, are skipped.
    """
    lo, hi = window
    grid = np.linspace(lo, hi, cells + 1)
    N = 2 * n + 1

    def func(E):
        fE = model.dependence(E)
        if not 1 + model.gamma * fE > 0:
            return None
        return 4 * E * E - N * N * (1 + model.gamma * fE)

    values = []
    for E in grid:
        try:
            values.append(func(E))
        except DomainError:
            values.append(None)
    states = []
    for i in range(cells):
        a, b = values[i], values[i + 1]
        if a is None or b is None:
            continue
        if a == 0.0:
            root = grid[i]
        elif a * b < 0:
            root = _bisect(lambda E: func(E), grid[i], grid[i + 1])
        else:
            continue
        if root > 0:
            states.append(_state(model, n, root))
    if values[-1] == 0.0 and grid[-1] > 0:
        states.append(_state(model, n, grid[-1]))
    return states


def solve(model: OscillatorModel, n: int, window=(1e-9, 50.0)) -> EigenState:
    """The level with ``n`` quanta; custom dependences must have one root."""
    kind = model.kind
    if kind is Kind.LINEAR:
        return _state(model, n, linear_energy(model.gamma, n))
    if kind is Kind.SQRT:
        return _state(model, n, solve_sqrt(model.gamma, n).energy)
    if kind is Kind.QUADRATIC:
        return _state(model, n, solve_quadratic(model.gamma, n).energy)
    roots = solve_custom(model, n, window)
    if len(roots) != 1:
        raise SpectrumError(f"expected one level n={n} in {window}, found {len(roots)}")
    return roots[0]


def asymptote(model: OscillatorModel) -> Optional[float]:
    """Accumulation point of E_n for gamma < 0, None otherwise."""
    g = model.gamma
    if g >= 0:
        return None
    if model.kind is Kind.LINEAR:
        return -1.0 / g
    if model.kind is Kind.SQRT:
        return 1.0 / g**2
    if model.kind is Kind.QUADRATIC:
        return 1.0 / math.sqrt(-g)
    return None


@dataclass
class SpectrumReport:
    model: OscillatorModel
    states: list[EigenState]
    asymptote: Optional[float] = None
    negative_branch: list[float] = field(default_factory=list)
    complex_from: Optional[int] = None

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])


def spectrum_scan(
    model: OscillatorModel, n_max: int, window=(1e-9, 50.0), strict: bool = True
) -> SpectrumReport:
    """Levels n = 0..n_max with asymptote metadata.

    For the quadratic family a ComplexEigenvalue is raised (carrying the
    partial report) when ``strict``; otherwise the report is returned with
    ``complex_from`` set.
    """
    report = SpectrumReport(model, [], asymptote(model))
    for n in range(n_max + 1):
        if model.kind is Kind.CUSTOM:
            report.states.extend(solve_custom(model, n, window))
            continue
        try:
            report.states.append(solve(model, n, window))
        except ComplexEigenvalue as exc:
            report.complex_from = exc.critical_n
            if strict:
                raise ComplexEigenvalue(exc.critical_n, model.gamma, report.states) from None
            break
        if model.kind is Kind.LINEAR:
            report.negative_branch.append(linear_energy(model.gamma, n, branch=-1))
    return report
