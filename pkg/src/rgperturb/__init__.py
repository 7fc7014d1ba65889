"""Renormalization-group perturbation engine for ODEs and a difference equation.

Computes secular coefficients of naive perturbation series as exact truncated
series over Q(i), derives the RG equations and renormalized expansions,
machine-checks the functional identities they satisfy, and cross-checks
against direct numerical integration.
"""

from .gaussrat import GaussianRational, gq
from .poly import PolyContext, MultiPoly, HarmonicSeries, resolve_shift, from_expression
from .expressions import parse_expression, render_expression
from .systems import ODESystemSpec, SpecError, parse_spec, oscillator_to_firstorder
from .engine import (
    SecularTable,
    expand_table,
    expand_semisimple,
    expand_nilpotent,
    expand_scalar,
)
from .renorm import (
    RGSystem,
    RenExpansion,
    renormalized_amplitudes,
    derive_rg,
    renormalized_expansion,
    invert_amplitudes,
    polar_transform,
    PolarPairingError,
)
from .checks import CheckReport, run_all_checks, random_spec
from .demos import load_builtin, builtin_names

__version__ = "0.1.0"

__all__ = [
    "GaussianRational", "gq",
    "PolyContext", "MultiPoly", "HarmonicSeries", "resolve_shift", "from_expression",
    "parse_expression", "render_expression",
    "ODESystemSpec", "SpecError", "parse_spec", "oscillator_to_firstorder",
    "SecularTable", "expand_table", "expand_semisimple", "expand_nilpotent",
    "expand_scalar",
    "RGSystem", "RenExpansion", "renormalized_amplitudes", "derive_rg",
    "renormalized_expansion", "invert_amplitudes", "polar_transform",
    "PolarPairingError",
    "CheckReport", "run_all_checks", "random_spec",
    "load_builtin", "builtin_names",
]
