"""Damped f-deformed oscillator in a truncated Fock basis."""

__version__ = "0.1.0"

from .bath import BathSpec, CoefficientTables, build_coefficients, thermal_occupation
from .deformation import (
    DeformationProfile,
    SpectrumTable,
    build_spectrum,
    commutator_gap,
    energy,
    f2,
    omega,
)
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    evolve,
    steady_state_closed_form,
    steady_state_detailed_balance,
    steady_state_numeric,
)
from .liouvillian import apply_rhs, assemble_dense, build_stencil
from .states import (
    DensityMatrix,
    f_coherent_state,
    fock_state,
    min_eigenvalue,
    observables,
    thermal_steady_state,
)
