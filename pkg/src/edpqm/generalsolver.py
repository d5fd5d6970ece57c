"""Self-consistent levels of an arbitrary potential V(x, E) = V0(x) + g(E) V1(x).

For a frozen energy argument z the Hamiltonian ``-1/2 d^2/dx^2 + V0 + g(z) V1``
is an ordinary one, with eigenvalues E_n(z) found by Numerov shooting on
[-L, L] with Dirichlet ends.  A level of the energy-dependent problem is a
fixed point ``E_n(z) = z``; several may exist for the same n, and the
admissible z window is always a user choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .potdsl import DomainError, Function

EIGEN_XTOL = 1e-12
FIXED_POINT_XTOL = 1e-11


class SolverError(RuntimeError):
    pass


class NotConfining(SolverError):
    pass


class NodeCountUnreachable(SolverError):
    pass


@dataclass(frozen=True)
class GridFunction:
    """Values sampled on the uniform grid ``x0 + i dx``."""

    x0: float
    dx: float
    values: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.values))

    def norm(self) -> float:
        return math.sqrt(abs(self.inner(self)))

    def inner(self, other: "GridFunction") -> complex | float:
        """Plain overlap ``∫ conj(f) g dx``; resamples when grids differ."""
        if self.same_grid(other):
            return _trapezoid(np.conj(self.values) * other.values, self.dx)
        x = _common_grid([self, other])
        return _trapezoid(np.conj(self.resample(x)) * other.resample(x), x[1] - x[0])

    def same_grid(self, other: "GridFunction") -> bool:
        return (
            len(self.values) == len(other.values)
            and math.isclose(self.x0, other.x0, rel_tol=0, abs_tol=1e-12)
            and math.isclose(self.dx, other.dx, rel_tol=1e-12)
        )

    def resample(self, x: np.ndarray) -> np.ndarray:
        """Cubic-spline values at ``x``, zero outside the grid."""
        xs = self.x
        out = np.zeros(len(x), dtype=self.values.dtype)
        inside = (x >= xs[0]) & (x <= xs[-1])
        if np.iscomplexobj(self.values):
            spline_re = CubicSpline(xs, self.values.real)
            spline_im = CubicSpline(xs, self.values.imag)
            out[inside] = spline_re(x[inside]) + 1j * spline_im(x[inside])
        else:
            out[inside] = CubicSpline(xs, self.values)(x[inside])
        return out

    def sign_changes(self, rel_floor: float = 1e-8) -> int:
        v = self.values.real
        big = v[np.abs(v) > rel_floor * np.abs(v).max()]
        return int(np.count_nonzero(np.diff(np.sign(big))))

    def __mul__(self, factor):
        return GridFunction(self.x0, self.dx, self.values * factor)

    __rmul__ = __mul__


def _trapezoid(y, dx):
    return dx * (np.sum(y) - 0.5 * (y[0] + y[-1]))


def _common_grid(funcs: Sequence[GridFunction]) -> np.ndarray:
    lo = min(f.x0 for f in funcs)
    hi = max(f.x[-1] for f in funcs)
    dx = min(f.dx for f in funcs)
    return np.linspace(lo, hi, int(round((hi - lo) / dx)) + 1)


@njit(cache=True)
def _shoot(q, h2, lo, hi, step):
    """Numerov for y'' = q y from index ``lo`` toward ``hi`` (inclusive).

    Returns the solution (zero outside the integrated range) and the number of
    sign changes.  Large values are rescaled by positive factors.
    """
    n = q.shape[0]
    y = np.zeros(n)
    a = 1.0 - h2 * q / 12.0
    y[lo] = 0.0
    y[lo + step] = 1e-30
    nodes = 0
    last_sign = 1.0
    i = lo + step
    while i != hi:
        y[i + step] = (2.0 * (1.0 + 5.0 * h2 * q[i] / 12.0) * y[i] - a[i - step] * y[i - step]) / a[i + step]
        v = y[i + step]
        if v != 0.0:
            s = 1.0 if v > 0.0 else -1.0
            if s != last_sign:
                nodes += 1
                last_sign = s
        if abs(v) > 1e150:
            j = lo
            while j != i + 2 * step:
                y[j] *= 1e-150
                j += step
        i += step
    return y, nodes


@dataclass
class GeneralPotential:
    """``V(x, E) = v0(x) + g(E) v1(x)`` on the domain ``[-L, L]``.

    ``domain_halfwidth=None`` picks L per frozen potential from its curvature
    at the origin.  Callables take numpy arrays (v0, v1) or floats (g).
    """

    v0: Callable
    v1: Callable
    g: Callable
    domain_halfwidth: Optional[float] = None
    grid_points: int = 4001
    sources: tuple[str, str, str] = field(default=("", "", ""), compare=False)

    def __post_init__(self):
        if self.grid_points < 1000:
            raise ValueError("grid_points must be at least 1000")
        if self.domain_halfwidth is not None and not self.domain_halfwidth > 0:
            raise ValueError("domain_halfwidth must be positive")

    @classmethod
    def from_strings(cls, v0: str, v1: str, g: str, **kwargs) -> "GeneralPotential":
        f0, f1, fg = Function(v0), Function(v1), Function(g)
        for name, f, var in (("v0", f0, "E"), ("v1", f1, "E"), ("g", fg, "x")):
            if f.depends_on(var):
                raise ValueError(f"{name} must not depend on {var}: {f.src!r}")
        return cls(
            lambda x: f0(x=x) + np.zeros_like(x),
            lambda x: f1(x=x) + np.zeros_like(x),
            lambda E: float(fg(E=E)),
            sources=(v0, v1, g),
            **kwargs,
        )

    def frozen(self, z: float) -> Callable[[np.ndarray], np.ndarray]:
        gz = self.g(z)
        if not math.isfinite(gz):
            raise SolverError(f"g({z}) is not finite")
        return lambda x: self.v0(x) + gz * self.v1(x)


def toy_potential(gamma: float, f: str = "E", **kwargs) -> GeneralPotential:
    """Encode ``(1 + gamma f(E)) x^2 / 2`` as v0 = x^2/2, v1 = gamma x^2/2, g = f."""
    return GeneralPotential.from_strings("0.5*x^2", f"{0.5 * gamma!r}*x^2", f, **kwargs)


def _wall_halfwidth(V: Callable, rise: float = 200.0) -> Optional[float]:
    """Smallest L (on a 1.25 ratio ladder) where V(+-L) exceeds V(0) by ``rise``."""
    v_min = float(V(np.array([0.0]))[0])
    L = 1.0
    while L < 1e3:
        walls = V(np.array([-L, L]))
        if walls.min() - v_min >= rise:
            return L
        L *= 1.25
    return None


def _auto_halfwidth(V: Callable) -> float:
    """12 oscillator lengths from the curvature at the origin, capped where the
    walls are already high (soft-bottomed wells such as x^4 would otherwise
    get an enormous, stiff box)."""
    h = 1e-3
    v = V(np.array([-h, 0.0, h]))
    curv = (v[0] - 2 * v[1] + v[2]) / h**2
    wall = _wall_halfwidth(V)
    if curv > 1e-8:
        L = min(12.0 / math.sqrt(math.sqrt(curv)), 120.0)
        return L if wall is None else min(L, wall)
    if wall is None:
        raise NotConfining("potential does not rise by 200 within |x| < 1000; set domain_halfwidth")
    return wall


@dataclass
class FrozenLevel:
    energy: float
    psi: GridFunction
    nodes: int


def eigen_of_fixed_z(pot: GeneralPotential, z: float, n: int) -> FrozenLevel:
    """The n-th eigenvalue (n nodes) of the Hamiltonian frozen at ``z``."""
    V = pot.frozen(z)
    L = pot.domain_halfwidth or _auto_halfwidth(V)
    return eigen_of_potential(V, n, L, pot.grid_points)


def eigen_of_potential(V: Callable, n: int, L: float, N: int = 4001) -> FrozenLevel:
    """Numerov shooting with node counting and two-sided Casoratian matching."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = np.linspace(-L, L, N)
    h = x[1] - x[0]
    h2 = h * h
    v = np.asarray(V(x), dtype=float)
    if not np.all(np.isfinite(v)):
        raise NotConfining("potential is not finite on the grid")
    v_min = v.min()
    e_top = min(v[0], v[-1])
    if not e_top > v_min:
        raise NotConfining(f"walls at +-{L:g} are not above the well bottom")

    def count(E):
        return _shoot(2.0 * (v - E), h2, 0, N - 1, 1)[1]

    if count(e_top) < n + 1:
        raise NodeCountUnreachable(
            f"level n={n} lies above the wall height {e_top:.6g} on [-{L:g}, {L:g}]"
        )
    lo, hi = v_min, e_top
    c_lo, c_hi = count(lo), count(e_top)
    while c_hi - c_lo > 1 or c_lo != n:
        mid = 0.5 * (lo + hi)
        c = count(mid)
        if c >= n + 1:
            hi, c_hi = mid, c
        else:
            lo, c_lo = mid, c
        if hi - lo < 1e-14 * max(1.0, abs(hi)):
            break

    def matching(E):
        q = 2.0 * (v - E)
        m = _matching_index(v, E)
        yl = _shoot(q, h2, 0, m + 1, 1)[0]
        yr = _shoot(q, h2, N - 1, m, -1)[0]
        a = 1.0 - h2 * q / 12.0
        wl0, wl1 = a[m] * yl[m], a[m + 1] * yl[m + 1]
        wr0, wr1 = a[m] * yr[m], a[m + 1] * yr[m + 1]
        sl = math.hypot(wl0, wl1)
        sr = math.hypot(wr0, wr1)
        return (wl0 * wr1 - wl1 * wr0) / (sl * sr), m, yl, yr

    f_lo, f_hi = matching(lo)[0], matching(hi)[0]
    if f_lo * f_hi < 0:
        E = brentq(lambda e: matching(e)[0], lo, hi, xtol=EIGEN_XTOL, rtol=1e-15, maxiter=300)
    else:
        # matching point moved across the bracket; fall back to one-sided shooting
        end = lambda e: _shoot(2.0 * (v - e), h2, 0, N - 1, 1)[0][-1]
        E = brentq(end, lo, hi, xtol=EIGEN_XTOL, rtol=1e-15, maxiter=300)

    _, m, yl, yr = matching(E)
    y = np.empty(N)
    ref = m if abs(yr[m]) > abs(yr[m + 1]) else m + 1
    y[: m + 1] = yl[: m + 1]
    y[m + 1 :] = yr[m + 1 :] * (yl[ref] / yr[ref])
    y /= math.sqrt(_trapezoid(y * y, h))
    # convention: positive on the left-most lobe
    first = np.flatnonzero(np.abs(y) > 1e-6 * np.abs(y).max())[0]
    if y[first] < 0:
        y = -y
    psi = GridFunction(float(x[0]), float(h), y)
    return FrozenLevel(float(E), psi, psi.sign_changes())


def _matching_index(v, E):
    """Right classical turning point, kept away from the grid ends."""
    N = len(v)
    allowed = np.flatnonzero(v < E)
    m = int(allowed[-1]) if allowed.size else N // 2
    return min(max(m, 2), N - 3)


@dataclass
class FixedPointRoot:
    n: int
    z: float
    m: int
    bracket: tuple[float, float]
    residual: float
    psi: Optional[GridFunction] = field(default=None, repr=False)


@dataclass
class FixedPointScan:
    n: int
    roots: list[FixedPointRoot]
    scan: tuple[float, float]
    cells: int
    skipped_cells: int = 0

    @property
    def resolution(self) -> float:
        """Roots closer than this are not resolved by the lattice."""
        return (self.scan[1] - self.scan[0]) / self.cells


def find_fixed_points(
    pot: GeneralPotential,
    n: int,
    scan: tuple[float, float],
    max_roots: Optional[int] = None,
    cells: int = 200,
) -> list[FixedPointRoot]:
    """All roots of ``E_n(z) - z`` in ``scan``, ascending."""
    return scan_fixed_points(pot, n, scan, max_roots, cells).roots


def scan_fixed_points(
    pot: GeneralPotential,
    n: int,
    scan: tuple[float, float],
    max_roots: Optional[int] = None,
    cells: int = 200,
) -> FixedPointScan:
    """Like :func:`find_fixed_points` but also reports lattice diagnostics.

    Lattice points where the frozen problem cannot be solved (g undefined,
    potential not confining, level above the walls) are skipped.
    """
    z_lo, z_hi = scan
    if not (math.isfinite(z_lo) and math.isfinite(z_hi) and z_hi > z_lo):
        raise ValueError(f"scan window must be finite and increasing, got {scan}")
    zs = np.linspace(z_lo, z_hi, cells + 1)

    def F(z):
        return eigen_of_fixed_z(pot, z, n).energy - z

    values: list[Optional[float]] = []
    for z in zs:
        try:
            values.append(F(z))
        except (DomainError, SolverError, ValueError, ZeroDivisionError):
            values.append(None)
    result = FixedPointScan(n, [], (z_lo, z_hi), cells, sum(v is None for v in values))
    for i in range(cells):
        a, b = values[i], values[i + 1]
        if a is None or b is None:
            continue
        if a == 0.0:
            z = zs[i]
        elif a * b < 0:
            z = brentq(F, zs[i], zs[i + 1], xtol=FIXED_POINT_XTOL, rtol=1e-15, maxiter=200)
        else:
            continue
        level = eigen_of_fixed_z(pot, z, n)
        result.roots.append(
            FixedPointRoot(n, float(z), len(result.roots) + 1, (zs[i], zs[i + 1]),
                           level.energy - z, level.psi)
        )
        if max_roots is not None and len(result.roots) >= max_roots:
            break
    return result


@dataclass
class GramReport:
    gram: np.ndarray
    singular_values: np.ndarray
    threshold: float = 1e-8

    @property
    def smallest_singular_value(self) -> float:
        return float(self.singular_values.min())

    @property
    def independent(self) -> bool:
        return self.smallest_singular_value > self.threshold


def independence_check(roots: Sequence, threshold: float = 1e-8) -> GramReport:
    """Gram matrix of plain overlaps of the fixed-point eigenvectors.

    Accepts FixedPointRoot objects or GridFunctions.  Near-singular Gram
    matrices mean the stationary states cannot carry any scalar product that
    makes them orthogonal.
    """
    funcs = [r.psi if isinstance(r, FixedPointRoot) else r for r in roots]
    if any(f is None for f in funcs):
        raise ValueError("every root must carry its eigenvector")
    k = len(funcs)
    gram = np.eye(k)
    if k > 1:
        x = _common_grid(funcs)
        dx = x[1] - x[0]
        samples = [f.resample(x) for f in funcs]
        samples = [s / math.sqrt(_trapezoid(s * s, dx)) for s in samples]
        for i in range(k):
            for j in range(k):
                gram[i, j] = _trapezoid(samples[i] * samples[j], dx)
    sv = np.linalg.svd(gram, compute_uv=False)
    return GramReport(gram, sv, threshold)
