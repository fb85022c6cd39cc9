"""Physical constants and unit helpers shared across the package."""

import math

#: Reduced Planck constant, J*s (CODATA 2018).
HBAR = 1.054571817e-34

#: Electron gyromagnetic ratio, rad/(s*T).  Signed: negative for the electron.
GAMMA_ELECTRON = -1.76085963e11

#: Electron mass, kg (CODATA 2018).
ELECTRON_MASS = 9.1093837015e-31

TWO_PI = 2.0 * math.pi

#: Named constants table for programmatic lookup (CLI, scripts, tests).
CONSTANTS: dict[str, float] = {
    "hbar_J_s": HBAR,
    "gamma_electron_rad_per_s_T": GAMMA_ELECTRON,
    "electron_mass_kg": ELECTRON_MASS,
}

OMEGA_UNITS = ("rad/s", "Hz")


def omega_to_rad_per_s(value: float, unit: str) -> float:
    """Convert an angular-frequency value to rad/s.

    ``unit`` is one of ``"rad/s"`` (no-op) or ``"Hz"`` (multiplied by 2*pi).
    """
    if unit == "rad/s":
        return float(value)
    if unit == "Hz":
        return TWO_PI * float(value)
    raise ValueError(f"unknown omega unit {unit!r} (expected one of {OMEGA_UNITS})")


def oscillator_length(mass: float, omega: float) -> float:
    """Characteristic oscillator length sqrt(hbar / (mass * omega)) in meters."""
    if mass <= 0.0 or omega <= 0.0:
        raise ValueError("invalid system: mass and omega must be positive")
    return math.sqrt(HBAR / (mass * omega))
