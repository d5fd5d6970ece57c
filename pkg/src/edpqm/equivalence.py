"""Mapping a linear-in-energy potential onto ordinary quantum mechanics.

For ``H(E) = H0 + E V`` the modified product is ``<f|(1 - V)|g>``, i.e. the
metric operator is ``kappa = 1 - V``.  With ``eta = sqrt(kappa)`` and
``xi = 1/eta`` the states ``chi = eta psi`` are eigenfunctions of the
ordinary Hamiltonian ``H~ = xi H0 xi`` under the plain product.

The concrete model here is ``H0 = -1/2 d^2/dx^2 + A x^2`` with ``V = -K x^2``,
whose discrete levels are known in closed form and lie below ``A/K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .generalsolver import GridFunction
from .polygauss import GaussianWeight, Polynomial, hermite, weighted_overlap
from .spectra import linear_energy


class KappaNonPositive(ValueError):
    pass


@dataclass(frozen=True)
class LinearEModel:
    """``V0 = A x^2`` and ``V = -K x^2``, so ``1 - V = 1 + K x^2 > 0``."""

    a_coeff: float
    k_coeff: float

    def __post_init__(self):
        if not (self.a_coeff > 0 and self.k_coeff > 0):
            raise ValueError("A and K must both be positive")

    @classmethod
    def from_toy(cls, gamma: float, literal: bool = False) -> "LinearEModel":
        """Model matching the toy ``(1 + gamma E) x^2 / 2`` for gamma < 0.

        ``literal=True`` uses ``K = |gamma|`` instead of the matching
        ``K = |gamma| / 2``; it exists to show that the former gives the wrong
        spectrum.
        """
        if gamma >= 0:
            raise ValueError("only gamma < 0 maps onto a positive metric")
        return cls(0.5, -gamma if literal else -0.5 * gamma)

    @property
    def continuum_threshold(self) -> float:
        return self.a_coeff / self.k_coeff

    def v0(self, x):
        return self.a_coeff * x * x

    def v(self, x):
        return -self.k_coeff * x * x

    def dv(self, x):
        return -2.0 * self.k_coeff * x

    def kappa(self, x):
        return 1.0 + self.k_coeff * x * x

    def eta(self, x):
        return np.sqrt(self.kappa(x))

    def xi(self, x):
        return 1.0 / self.eta(x)


@dataclass(frozen=True)
class MultiplicationOperator:
    """Pointwise operator built from ``1 - V(x)``."""

    v: Callable
    role: str  # "kappa", "eta" or "xi"

    def __call__(self, x):
        kappa = 1.0 - self.v(x)
        if self.role == "kappa":
            return kappa
        if np.any(kappa <= 0):
            raise KappaNonPositive("1 - V(x) must be positive")
        eta = np.sqrt(kappa)
        return eta if self.role == "eta" else 1.0 / eta


@dataclass
class KappaDiagnosis:
    passed: bool
    first_violation: Optional[float] = None
    boundaries: list[float] = field(default_factory=list)
    min_kappa: float = math.nan

    def __str__(self):
        if self.passed:
            return f"PASS (min 1-V = {self.min_kappa:.6g})"
        bnd = ", ".join(f"{b:.9g}" for b in self.boundaries)
        return f"FAIL: 1-V <= 0 from x = {self.first_violation:.9g}; 1-V = 0 at [{bnd}]"


def check_kappa_positive(v: Callable, domain=(-20.0, 20.0), samples: int = 4001) -> KappaDiagnosis:
    """Sample ``1 - V(x)`` on ``domain``; locate the zeros of any violating region.

    Zeros are refined by root bracketing, so their positions are exact to
    about 1e-12 regardless of the sampling density.
    """
    x = np.linspace(domain[0], domain[1], samples)
    vals = 1.0 - np.asarray(v(x), dtype=float) * np.ones_like(x)
    bad = np.flatnonzero(vals <= 0)
    if bad.size == 0:
        return KappaDiagnosis(True, min_kappa=float(vals.min()))
    kappa = lambda t: 1.0 - float(np.asarray(v(np.array([t])))[0])
    boundaries = []
    for i in range(samples - 1):
        if (vals[i] > 0) != (vals[i + 1] > 0):
            boundaries.append(brentq(kappa, x[i], x[i + 1], xtol=1e-14, rtol=1e-15))
    return KappaDiagnosis(False, float(x[bad[0]]), boundaries, float(vals.min()))


def toy_v_hat(gamma: float) -> Callable:
    """The energy-slope operator ``V = (gamma/2) x^2`` of the linear toy model."""
    return lambda x: 0.5 * gamma * np.asarray(x) ** 2


def qm2_energy(model: LinearEModel, n: int) -> float:
    """Discrete level ``((2n+1)/4) [sqrt(8A + (2n+1)^2 K^2) - (2n+1) K]``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    N = 2 * n + 1
    A, K = model.a_coeff, model.k_coeff
    root = math.sqrt(8 * A + N * N * K * K)
    # rationalized: avoids cancellation for large (2n+1) K
    E = 0.25 * N * 8 * A / (root + N * K)
    if not E < model.continuum_threshold:
        raise ValueError("discrete level would enter the continuum")
    return E


def qm2_lambda(model: LinearEModel, n: int) -> float:
    """Gaussian width ``sqrt(2 (A - K E_n))``, equal to ``2 E_n / (2n+1)``."""
    return math.sqrt(2.0 * (model.a_coeff - model.k_coeff * qm2_energy(model, n)))


def _qm1_norm_sq(model: LinearEModel, n: int) -> float:
    lam = qm2_lambda(model, n)
    integral = weighted_overlap(
        hermite(n), math.sqrt(lam), hermite(n), math.sqrt(lam),
        Polynomial([1.0, 0.0, model.k_coeff]), GaussianWeight(lam),
    )
    return 1.0 / integral


def default_grid(model: LinearEModel, n_max: int = 0, dx: float = 1e-3) -> np.ndarray:
    lam = min(qm2_lambda(model, n) for n in range(n_max + 1))
    X = 12.0 / math.sqrt(lam)
    m = int(math.ceil(X / dx))
    return dx * np.arange(-m, m + 1)


def qm1_wavefunction(model: LinearEModel, n: int, x: Optional[np.ndarray] = None) -> GridFunction:
    """``psi^n = C_n H_n(sqrt(lam) x) exp(-lam x^2/2)``, the toy-model state itself."""
    x = default_grid(model, n) if x is None else x
    lam = qm2_lambda(model, n)
    c = math.sqrt(_qm1_norm_sq(model, n))
    vals = c * hermite(n)(math.sqrt(lam) * x) * np.exp(-0.5 * lam * x * x)
    return GridFunction(float(x[0]), float(x[1] - x[0]), vals)


def qm2_wavefunction(model: LinearEModel, n: int, x: Optional[np.ndarray] = None) -> GridFunction:
    """``chi_n = sqrt(1 + K x^2) psi^n``, normalized under the plain product."""
    psi = qm1_wavefunction(model, n, x)
    return GridFunction(psi.x0, psi.dx, psi.values * model.eta(psi.x))


def _d2(f: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order second derivative; values beyond the grid are zero."""
    p = np.pad(f, 2)
    return (-p[:-4] + 16 * p[1:-3] - 30 * p[2:-2] + 16 * p[3:-1] - p[4:]) / (12 * dx * dx)


def _d1(f: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order first derivative; values beyond the grid are zero."""
    p = np.pad(f, 2)
    return (p[:-4] - 8 * p[1:-3] + 8 * p[3:-1] - p[4:]) / (12 * dx)


def _xi_on_grid(v: Callable, x: np.ndarray) -> np.ndarray:
    kappa = 1.0 - np.asarray(v(x), dtype=float)
    if np.any(kappa <= 0):
        bad = x[np.flatnonzero(kappa <= 0)[0]]
        raise KappaNonPositive(f"1 - V <= 0 at x = {bad:.6g}")
    return 1.0 / np.sqrt(kappa)


def apply_h_tilde(model, f: GridFunction) -> GridFunction:
    """``H~ f = xi H0 (xi f)`` with ``H0 = -1/2 d^2/dx^2 + V0``.

    ``model`` is a LinearEModel or a ``(v0, v)`` pair of callables.
    """
    v0, v = _pair(model)
    x = f.x
    xi = _xi_on_grid(v, x)
    g = xi * f.values
    h0g = -0.5 * _d2(g, f.dx) + v0(x) * g
    return GridFunction(f.x0, f.dx, xi * h0g)


def apply_h_tilde_expanded(model: LinearEModel, f: GridFunction) -> GridFunction:
    """The same operator written out as a differential operator.

    ``1/(1+Kx^2) {V0 - 1/2 [d^2 - 2Kx/(1+Kx^2) d - K (1-2Kx^2)/(1+Kx^2)^2]}``.
    Kept as a regression check of the compositional form.
    """
    x = f.x
    K = model.k_coeff
    u = 1.0 + K * x * x
    y = f.values
    bracket = _d2(y, f.dx) - 2 * K * x / u * _d1(y, f.dx) - K * (1 - 2 * K * x * x) / u**2 * y
    return GridFunction(f.x0, f.dx, (model.v0(x) * y - 0.5 * bracket) / u)


def apply_momentum_qm1(model, f: GridFunction) -> GridFunction:
    """``P f = xi (-i d/dx) (eta f)``; complex-valued."""
    _, v = _pair(model)
    x = f.x
    xi = _xi_on_grid(v, x)
    eta = 1.0 / xi
    return GridFunction(f.x0, f.dx, xi * (-1j) * _d1(eta * f.values, f.dx))


def momentum_correction(model: LinearEModel, x, printed: bool = False):
    """Multiplicative part ``c(x)`` of ``P = -i d/dx + i c(x)``.

    The compositional definition gives ``c = V'/(2(1 - V))``; ``printed=True``
    returns the variant ``V'/(2 sqrt(1 - V))`` for comparison.
    """
    x = np.asarray(x, dtype=float)
    kappa = 1.0 - model.v(x)
    denom = np.sqrt(kappa) if printed else kappa
    return model.dv(x) / (2.0 * denom)


def _pair(model):
    if isinstance(model, LinearEModel):
        return model.v0, model.v
    v0, v = model
    return v0, v


@dataclass
class LevelCheck:
    n: int
    qm2: float
    toy: float

    @property
    def diff(self) -> float:
        return abs(self.qm2 - self.toy)


@dataclass
class CrossCheckReport:
    gamma: float
    model: LinearEModel
    levels: list[LevelCheck]
    tolerance: float = 1e-10

    @property
    def mismatches(self) -> list[LevelCheck]:
        return [lv for lv in self.levels if not lv.diff <= self.tolerance]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def cross_check_toy(gamma: float, n_max: int, literal: bool = False, tolerance: float = 1e-10) -> CrossCheckReport:
    """Compare closed-form levels of the mapped model with the toy spectrum."""
    model = LinearEModel.from_toy(gamma, literal=literal)
    levels = [
        LevelCheck(n, qm2_energy(model, n), linear_energy(gamma, n)) for n in range(n_max + 1)
    ]
    return CrossCheckReport(gamma, model, levels, tolerance)


def eigen_residual(model: LinearEModel, n: int, dx: float = 1e-3, interior: float = 0.9) -> float:
    """``||H~ chi_n - E_n chi_n|| / ||chi_n||`` over the inner part of the grid."""
    x = default_grid(model, n, dx)
    chi = qm2_wavefunction(model, n, x)
    r = apply_h_tilde(model, chi).values - qm2_energy(model, n) * chi.values
    mask = np.abs(x) <= interior * x[-1]
    return math.sqrt(np.sum(r[mask] ** 2) / np.sum(chi.values[mask] ** 2))


def gram_qm2(model: LinearEModel, n_max: int, dx: float = 1e-3) -> np.ndarray:
    x = default_grid(model, n_max, dx)
    chis = [qm2_wavefunction(model, n, x) for n in range(n_max + 1)]
    return np.array([[a.inner(b) for b in chis] for a in chis])


def modified_product_qm1(model: LinearEModel, n: int, k: int) -> float:
    """``∫ psi^n (1 - V) psi^k dx`` by exact polynomial integration."""
    ln, lk = qm2_lambda(model, n), qm2_lambda(model, k)
    raw = weighted_overlap(
        hermite(n), math.sqrt(ln), hermite(k), math.sqrt(lk),
        Polynomial([1.0, 0.0, model.k_coeff]), GaussianWeight(0.5 * (ln + lk)),
    )
    return math.sqrt(_qm1_norm_sq(model, n) * _qm1_norm_sq(model, k)) * raw


@dataclass
class EquivalenceRow:
    n: int
    qm2_energy: float
    toy_energy: Optional[float]
    residual: float
    gram_deviation: float
    product_deviation: float


def verify_equivalence(model: LinearEModel, n_max: int, dx: float = 1e-3) -> list[EquivalenceRow]:
    """Per-level summary of the equivalence checks."""
    gram = gram_qm2(model, n_max, dx)
    toy_gamma = -2.0 * model.k_coeff if model.a_coeff == 0.5 else None
    rows = []
    for n in range(n_max + 1):
        prod_dev = max(
            abs(modified_product_qm1(model, n, k) - gram[n, k]) for k in range(n_max + 1)
        )
        gram_dev = float(np.max(np.abs(gram[n] - np.eye(n_max + 1)[n])))
        rows.append(
            EquivalenceRow(
                n,
                qm2_energy(model, n),
                linear_energy(toy_gamma, n) if toy_gamma is not None else None,
                eigen_residual(model, n, dx),
                gram_dev,
                prod_dev,
            )
        )
    return rows
