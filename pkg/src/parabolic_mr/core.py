"""Closed-form physics of a spin-S harmonic oscillator in a parabolic magnetic field.

The field profile is B(x) = b0 + g*x + gbar*x^2 along z.  For each spin
projection M the Hamiltonian reduces to a shifted oscillator with effective
frequency omega_eff = omega*sqrt(1 - mbar), where the scaled spin number

    mbar = 2*gamma*gbar*hbar*M / (omega^2 * mass)

measures how close the sector is to losing its bound spectrum (mbar >= 1:
the quadratic field term overwhelms the trap and the sector dissociates).

Everything here is exact closed form; the grid diagonalization in
:mod:`parabolic_mr.oracle` independently validates each expression.
Internally energies are handled in units of hbar*omega and lengths in units
of sqrt(hbar/(mass*omega)); joules and meters appear only at the API surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, oscillator_length
from .errors import DissociationError

#: Upward Hermite recurrence stays well-conditioned far beyond this, but the
#: polynomial values themselves overflow float64 around n ~ 300 for large xi.
MAX_HERMITE_ORDER = 200


@dataclass(frozen=True)
class SpinSystem:
    """Particle and trap parameters.

    mass: kg; gamma: signed gyromagnetic ratio, rad/(s*T); spin: half-integer
    S >= 0; omega: trap angular frequency, rad/s; offset: position of the
    potential minimum, m; sample_half_length: optional sample half-size l, m
    (when given, the offset must satisfy |offset| < l).
    """

    mass: float
    gamma: float
    spin: float
    omega: float
    offset: float = 0.0
    sample_half_length: float | None = None

    def __post_init__(self) -> None:
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError("invalid system: mass must be positive and finite")
        if not (self.omega > 0.0 and math.isfinite(self.omega)):
            raise ValueError("invalid system: omega must be positive and finite")
        if not math.isfinite(self.gamma):
            raise ValueError("invalid system: gamma must be finite")
        two_s = 2.0 * self.spin
        if self.spin < 0.0 or two_s != round(two_s):
            raise ValueError("invalid system: 2*spin must be a nonnegative integer")
        if not math.isfinite(self.offset):
            raise ValueError("invalid system: offset must be finite")
        if self.sample_half_length is not None:
            if not (self.sample_half_length > 0.0):
                raise ValueError("invalid system: sample_half_length must be positive")
            if abs(self.offset) >= self.sample_half_length:
                raise ValueError(
                    "invalid system: |offset| must be smaller than sample_half_length"
                )

    def levels(self) -> tuple[float, ...]:
        """All spin projections -S, -S+1, ..., S (exact half-integers)."""
        count = int(round(2.0 * self.spin)) + 1
        return tuple(-self.spin + i for i in range(count))


@dataclass(frozen=True)
class FieldProfile:
    """Field coefficients of B(x) = b0 + g*x + gbar*x^2.

    b0: T; g: linear gradient, T/m; gbar: second-derivative parameter, T/m^2.
    No sign restrictions.
    """

    b0: float
    g: float
    gbar: float

    def __post_init__(self) -> None:
        for name in ("b0", "g", "gbar"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"invalid field: {name} must be finite")


@dataclass(frozen=True)
class SpinLevelIndex:
    """A spin projection M; must be a half-integer."""

    m_quantum: float

    def __post_init__(self) -> None:
        two_m = 2.0 * self.m_quantum
        if not math.isfinite(two_m) or two_m != round(two_m):
            raise ValueError("m_quantum must be a half-integer")


@dataclass(frozen=True)
class DerivedParams:
    """Per-projection derived quantities.

    omega_eff and center are NaN when the sector is dissociated (mbar >= 1).
    """

    m_quantum: float
    mbar: float
    omega_eff: float
    center: float
    gbar_crit: float
    stable: bool


@dataclass(frozen=True)
class EnergyLevel:
    """A labeled eigenvalue: projection M, oscillator number n, energy in J."""

    m_quantum: float
    n: int
    energy: float


@dataclass(frozen=True)
class EnergyDecomposition:
    """Four-term split of the b0 = 0 spectrum (all terms in J).

    quantum_term:        hbar*omega*(n + 1/2) * sqrt(1 - mbar)
    classical_mixed_term: -(m*omega^2*(g/gbar)*a/2) * mbar/(1 - mbar)
    classical_a_term:    -(m*omega^2*a^2/2)        * mbar/(1 - mbar)
    classical_g_term:    -(m*omega^2*(g/gbar)^2/2) * mbar^2/(4*(1 - mbar))

    ``total`` is always the exact floating-point sum of the four parts.
    """

    quantum_term: float
    classical_mixed_term: float
    classical_a_term: float
    classical_g_term: float
    total: float


def _projection(system: SpinSystem, m: float | SpinLevelIndex) -> float:
    """Validate M against the system's spin and return it as a float."""
    mq = m.m_quantum if isinstance(m, SpinLevelIndex) else float(m)
    steps = system.spin - mq
    if steps < 0.0 or mq < -system.spin or steps != round(steps):
        raise ValueError(
            f"m_quantum={mq} is not a valid projection for spin={system.spin}"
        )
    return mq


def _require_int(n: int, name: str = "n") -> int:
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"{name} must be a nonnegative integer")
    return int(n)


def hermite(n: int, xi):
    """Physicists' Hermite polynomial H_n(xi) by the three-term recurrence.

    Accepts a scalar or ndarray ``xi``.  Guarded at n <= 200.
    """
    n = _require_int(n)
    if n > MAX_HERMITE_ORDER:
        raise ValueError(f"order too large: n={n} exceeds {MAX_HERMITE_ORDER}")
    scalar = not isinstance(xi, np.ndarray)
    x = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("xi must be finite")
    h_prev = np.ones_like(x)
    if n == 0:
        return float(h_prev) if scalar else h_prev
    h = 2.0 * x
    for k in range(1, n):
        h, h_prev = 2.0 * x * h - 2.0 * k * h_prev, h
    return float(h) if scalar else h


def _hermite_normalized(n: int, xi: np.ndarray) -> np.ndarray:
    """H_n(xi) / sqrt(2^n n!) via a normalized recurrence (no factorial overflow)."""
    h_prev = np.ones_like(xi)
    if n == 0:
        return h_prev
    h = math.sqrt(2.0) * xi
    for k in range(1, n):
        h, h_prev = (
            math.sqrt(2.0 / (k + 1)) * xi * h - math.sqrt(k / (k + 1.0)) * h_prev,
            h,
        )
    return h


def oscillator_wavefunction(n: int, omega: float, mass: float, x):
    """Normalized oscillator eigenfunction psi_n(omega; x), units m^(-1/2).

    psi_n(x) = (m*omega/(pi*hbar))^(1/4) / sqrt(2^n n!) * H_n(xi) * exp(-xi^2/2)
    with xi = x*sqrt(m*omega/hbar).  Accepts scalar or ndarray ``x``.
    """
    n = _require_int(n)
    if n > MAX_HERMITE_ORDER:
        raise ValueError(f"order too large: n={n} exceeds {MAX_HERMITE_ORDER}")
    if not (omega > 0.0 and mass > 0.0):
        raise ValueError("invalid system: omega and mass must be positive")
    scalar = not isinstance(x, np.ndarray)
    xs = np.asarray(x, dtype=float)
    scale = math.sqrt(mass * omega / HBAR)
    norm = (mass * omega / (HBAR * math.pi)) ** 0.25
    xi = scale * xs
    val = norm * _hermite_normalized(n, xi) * np.exp(-0.5 * xi * xi)
    return float(val) if scalar else val


def scaled_spin_number(
    system: SpinSystem, field: FieldProfile, m: float | SpinLevelIndex
) -> float:
    """mbar = 2*gamma*gbar*hbar*M / (omega^2 * mass); may carry either sign."""
    mq = _projection(system, m)
    return 2.0 * system.gamma * field.gbar * HBAR * mq / (system.omega**2 * system.mass)


def effective_frequency(
    system: SpinSystem, field: FieldProfile, m: float | SpinLevelIndex
) -> float:
    """Sector frequency omega*sqrt(1 - mbar); raises once mbar >= 1."""
    mq = _projection(system, m)
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"dissociation: effective frequency imaginary for m_quantum={mq} "
            f"(mbar={mbar})"
        )
    return system.omega * math.sqrt(1.0 - mbar)


def gbar_critical(system: SpinSystem) -> float:
    """Dissociation bound mass*omega^2 / (2*|gamma|*hbar*S); inf for S = 0 or gamma = 0."""
    if system.spin == 0.0 or system.gamma == 0.0:
        return math.inf
    return system.mass * system.omega**2 / (2.0 * abs(system.gamma) * HBAR * system.spin)


def derived_params(
    system: SpinSystem, field: FieldProfile, m: float | SpinLevelIndex
) -> DerivedParams:
    """mbar, effective frequency, eigenfunction center and stability for one M."""
    mq = _projection(system, m)
    mbar = scaled_spin_number(system, field, mq)
    crit = gbar_critical(system)
    if mbar >= 1.0:
        return DerivedParams(mq, mbar, math.nan, math.nan, crit, False)
    return DerivedParams(
        mq,
        mbar,
        system.omega * math.sqrt(1.0 - mbar),
        eigenfunction_center(system, field, mq),
        crit,
        True,
    )


def stability_check(system: SpinSystem, field: FieldProfile) -> DerivedParams:
    """Evaluate the dissociation bound at the worst spin projection.

    The sector with the largest mbar pairs the sign of gamma*gbar with the
    adverse projection +/-S, so the whole system is stable iff
    |gbar| < gbar_crit = mass*omega^2/(2*|gamma|*hbar*S).  The boundary
    |gbar| = gbar_crit counts as dissociated (the ground state there is not
    normalizable).  S = 0 (or gamma = 0) is unconditionally stable.
    """
    crit = gbar_critical(system)
    if system.gamma * field.gbar >= 0.0:
        worst = system.spin
    else:
        worst = -system.spin
    mbar = scaled_spin_number(system, field, worst)
    stable = abs(field.gbar) < crit
    if not stable:
        return DerivedParams(worst, mbar, math.nan, math.nan, crit, False)
    return DerivedParams(
        worst,
        mbar,
        system.omega * math.sqrt(1.0 - mbar),
        eigenfunction_center(system, field, worst),
        crit,
        True,
    )


def _field_at_offset(system: SpinSystem, field: FieldProfile) -> float:
    """B evaluated at the trap minimum: b0 + g*a + gbar*a^2."""
    a = system.offset
    return field.b0 + field.g * a + field.gbar * a * a


def _gradient_at_offset(system: SpinSystem, field: FieldProfile) -> float:
    """dB/dx at the trap minimum: g + 2*gbar*a."""
    return field.g + 2.0 * field.gbar * system.offset


def energy_level(
    system: SpinSystem, field: FieldProfile, m: float | SpinLevelIndex, n: int
) -> float:
    """Exact eigenvalue E_{M,n} in joules.

    E = hbar*omega_eff*(n + 1/2)
        - gamma*(b0 + g*a + gbar*a^2)*hbar*M
        - gamma^2*(g + 2*gbar*a)^2*hbar^2*M^2 / (2*mass*omega_eff^2)

    Raises :class:`DissociationError` when mbar >= 1 for this M.
    """
    mq = _projection(system, m)
    n = _require_int(n)
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"dissociation: effective frequency imaginary for m_quantum={mq} "
            f"(mbar={mbar})"
        )
    # Dimensionless pieces in units of hbar*omega; scale back once at the end.
    quantum = math.sqrt(1.0 - mbar) * (n + 0.5)
    zeeman = system.gamma * _field_at_offset(system, field) * mq / system.omega
    slope = system.gamma * _gradient_at_offset(system, field) * mq / system.omega
    shift = slope * slope * HBAR / (2.0 * system.mass * system.omega * (1.0 - mbar))
    return HBAR * system.omega * (quantum - zeeman - shift)


def energy_levels(
    system: SpinSystem, field: FieldProfile, pairs
) -> list[EnergyLevel]:
    """Evaluate ``energy_level`` for an iterable of (M, n) pairs."""
    return [
        EnergyLevel(_projection(system, m), _require_int(n), energy_level(system, field, m, n))
        for m, n in pairs
    ]


def energy_decomposition(
    system: SpinSystem, field: FieldProfile, m: float | SpinLevelIndex, n: int
) -> EnergyDecomposition:
    """Quantum/classical four-term split of E_{M,n}; requires b0 = 0 and gbar != 0.

    The total reproduces :func:`energy_level` exactly (algebraically); the
    split exposes the competing rescaled-quantum and classical-oscillator
    weights sqrt(1 - mbar) and mbar^2/(4*(1 - mbar)).
    """
    mq = _projection(system, m)
    n = _require_int(n)
    if field.b0 != 0.0:
        raise ValueError("decomposition undefined: requires b0 = 0")
    if field.gbar == 0.0:
        raise ValueError("decomposition undefined: requires gbar != 0")
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"dissociation: effective frequency imaginary for m_quantum={mq} "
            f"(mbar={mbar})"
        )
    a = system.offset
    # The (g/gbar) ratios are folded away via mbar/gbar = 2*gamma*hbar*M/(omega^2*mass),
    # which keeps every term finite as gbar -> 0 (each is algebraically gbar-free
    # or carries mbar's own factor of gbar).
    quantum = HBAR * system.omega * (n + 0.5) * math.sqrt(1.0 - mbar)
    mixed = -system.gamma * field.g * a * HBAR * mq / (1.0 - mbar)
    pure_a = -0.5 * system.mass * system.omega**2 * a * a * mbar / (1.0 - mbar)
    pure_g = -((system.gamma * field.g * HBAR * mq) ** 2) / (
        2.0 * system.mass * system.omega**2 * (1.0 - mbar)
    )
    total = quantum + mixed + pure_a + pure_g
    return EnergyDecomposition(quantum, mixed, pure_a, pure_g, total)


def eigenfunction_center(
    system: SpinSystem, field: FieldProfile, m: float | SpinLevelIndex
) -> float:
    """Center of the sector-M eigenfunctions, in meters.

    x_c = a + gamma*(g + 2*gbar*a)*hbar*M / (mass*omega_eff^2); note the
    single power of hbar (the grid oracle's position expectation pins this
    down to relative 1e-6).
    """
    mq = _projection(system, m)
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"dissociation: effective frequency imaginary for m_quantum={mq} "
            f"(mbar={mbar})"
        )
    shift = (
        system.gamma
        * _gradient_at_offset(system, field)
        * HBAR
        * mq
        / (system.mass * system.omega**2 * (1.0 - mbar))
    )
    return system.offset + shift


def eigenfunction(
    system: SpinSystem,
    field: FieldProfile,
    m: float | SpinLevelIndex,
    n: int,
    x,
):
    """Sector eigenfunction phi_{M,n}(x) = psi_n(omega_eff; x - x_c), m^(-1/2)."""
    omega_eff = effective_frequency(system, field, m)
    center = eigenfunction_center(system, field, m)
    return oscillator_wavefunction(n, omega_eff, system.mass, x - center)

