"""Spin-S harmonic oscillator in a parabolic magnetic field.

Closed-form spectra and eigenfunctions, an independent finite-difference
diagonalization oracle, transition lines and level crossings, and the
inverse problem of identifying the trap frequency from the spin-sublevel
splittings of a single oscillator level.
"""

from .constants import CONSTANTS, ELECTRON_MASS, GAMMA_ELECTRON, HBAR, oscillator_length
from .core import (
    DerivedParams,
    EnergyDecomposition,
    EnergyLevel,
    FieldProfile,
    SpinLevelIndex,
    SpinSystem,
    derived_params,
    effective_frequency,
    eigenfunction,
    eigenfunction_center,
    energy_decomposition,
    energy_level,
    energy_levels,
    gbar_critical,
    hermite,
    oscillator_wavefunction,
    scaled_spin_number,
    stability_check,
)
from .errors import (
    ConvergenceError,
    DissociationError,
    InversionError,
    PhysicsError,
    UnidentifiableError,
)
from .oracle import (
    Grid,
    SectorMatrix,
    ValidationReport,
    auto_grid,
    build_sector_hamiltonian,
    converged_spectrum,
    expectation_position,
    lowest_eigenpairs,
    lowest_eigenvalues,
    validate_levels,
)
from .spectroscopy import (
    CrossingPoint,
    CrossingScanResult,
    InversionResult,
    RegimeWeights,
    TransitionLine,
    crossing_scan,
    identify_frequency,
    regime_weights,
    transition_lines,
)

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS",
    "ELECTRON_MASS",
    "GAMMA_ELECTRON",
    "HBAR",
    "oscillator_length",
    "DerivedParams",
    "EnergyDecomposition",
    "EnergyLevel",
    "FieldProfile",
    "SpinLevelIndex",
    "SpinSystem",
    "derived_params",
    "effective_frequency",
    "eigenfunction",
    "eigenfunction_center",
    "energy_decomposition",
    "energy_level",
    "energy_levels",
    "gbar_critical",
    "hermite",
    "oscillator_wavefunction",
    "scaled_spin_number",
    "stability_check",
    "ConvergenceError",
    "DissociationError",
    "InversionError",
    "PhysicsError",
    "UnidentifiableError",
    "Grid",
    "SectorMatrix",
    "ValidationReport",
    "auto_grid",
    "build_sector_hamiltonian",
    "converged_spectrum",
    "expectation_position",
    "lowest_eigenpairs",
    "lowest_eigenvalues",
    "validate_levels",
    "CrossingPoint",
    "CrossingScanResult",
    "InversionResult",
    "RegimeWeights",
    "TransitionLine",
    "crossing_scan",
    "identify_frequency",
    "regime_weights",
    "transition_lines",
    "__version__",
]
