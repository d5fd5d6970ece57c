"""Quantum mechanics with energy-dependent potentials."""

from .polygauss import GaussianWeight, Polynomial, gaussian_integral, hermite
from .potdsl import DomainError, Function, ParseError, parse, pretty
from .spectra import (
    ComplexEigenvalue,
    EDependence,
    EigenState,
    Kind,
    NonPositiveNorm,
    OscillatorModel,
    solve,
    solve_linear,
    solve_quadratic,
    solve_sqrt,
    spectrum_scan,
)
from .observables import (
    closure_correction,
    closure_sum,
    critical_moment_order,
    dipole_sum_rule,
    modified_inner,
    moment,
    norm_constant,
)

__version__ = "0.1.0"
