"""Pohozaev and Nehari identities for anisotropic local, fractional and mixed
p-Laplacian problems on R^n, checked on truncated uniform grids."""
from .energy import (EnergyBreakdown, OperatorParams, apply_anisotropic_plap,
                     apply_fractional_plap, energy_breakdown, energy_norm, gagliardo,
                     local_energy, local_form, nonlocal_form, potential_integral,
                     weak_residual)
from .errors import DomainError, InputError, SolverError
from .finsler import (FinslerNorm, PropertyReport, check_minkowski_properties,
                      eval_norm, grad_norm)
from .gridfn import (GridFunction, GridSpec, VectorGridFunction, bump_tests, dilate,
                     divergence, gradient, integrate, read_table, sample, write_table)
from .identities import (NonexistenceVerdict, PohozaevReport, critical_exponents,
                         dilation_derivative_check, nehari_residual,
                         nonexistence_analysis, pohozaev_residual,
                         system_nonexistence_analysis, system_pohozaev_residual)
from .nonlinearity import Nonlinearity, SystemNonlinearity
from .solver import SolverConfig, SolverTrace, ground_state

__version__ = "0.1.0"
