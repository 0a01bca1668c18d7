"""Pseudo-spectral Zakharov-Kuznetsov solver with an identity-verification harness."""

from .domain import (DomainSpec, PhysicalField, SpectralField, boundary_trace, build_domain,
                     forward_transform, inverse_transform, mode_field, project_dealias,
                     random_field, x_mean)
from .forcing import ForcingSpec
from .functionals import (EnergyReport, NormReport, energy_E1, grad_l2, l2_norm, lp_norm,
                          norm_report, seminorm2)
from .operators import LinearSymbol, SolverParams, diff, linear_symbol, nonlinear_term, rhs
from .timestepper import (BlowUpError, DiagnosticsRecord, SimState, integrate, run,
                          stability_dt, step)

__version__ = "0.1.0"

__all__ = [
    "DomainSpec", "PhysicalField", "SpectralField", "boundary_trace", "build_domain",
    "forward_transform", "inverse_transform", "mode_field", "project_dealias", "random_field",
    "x_mean", "ForcingSpec", "EnergyReport", "NormReport", "energy_E1", "grad_l2", "l2_norm",
    "lp_norm", "norm_report", "seminorm2", "LinearSymbol", "SolverParams", "diff",
    "linear_symbol", "nonlinear_term", "rhs", "BlowUpError", "DiagnosticsRecord", "SimState",
    "integrate", "run", "stability_dt", "step",
]
