"""Independent grid diagonalization of the per-projection Hamiltonian.

For a fixed spin projection M the Hamiltonian is

    H_M = -hbar^2/(2*mass) d^2/dx^2 + mass*omega^2*(x - a)^2/2
          - gamma*hbar*M*(b0 + g*x + gbar*x^2)

It is discretized with the 3-point Laplacian on a uniform grid in the
dimensionless coordinate u = x/lambda, lambda = sqrt(hbar/(mass*omega)),
with energies in units of hbar*omega, giving a symmetric tridiagonal matrix

    diagonal_i     = 1/du^2 + V_M(lambda*u_i)/(hbar*omega)
    off_diagonal_i = -1/(2*du^2)

Dirichlet walls sit just outside the grid; domains are sized so the
analytic ground-state tail at the wall is below 1e-16 and wall error is
negligible against the requested tolerance.

Raw finite-difference eigenvalues carry an O(du^2) bias (they approach the
continuum from below), so ``converged_spectrum`` refines du by factors of 2
and Richardson-extrapolates to O(du^6) before checking agreement.  The
eigensolver itself is bisection on Sturm sequences plus inverse iteration
(LAPACK stebz/stein through scipy), chosen because only the few lowest
levels are needed and the result is deterministic.

This module validates the closed forms in :mod:`parabolic_mr.core`; it never
calls them for the quantities under test (the potential above is typed out
directly), only for meshing hints (where to center the grid) and for the
final unit conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .constants import HBAR, oscillator_length
from .core import (
    FieldProfile,
    SpinLevelIndex,
    SpinSystem,
    _projection,
    eigenfunction_center,
    energy_level,
    scaled_spin_number,
)
from .errors import ConvergenceError, DissociationError

#: Hard cap on refinement size (matrix dimension).
MAX_GRID_POINTS = 2**18 + 1

#: Tail margin beyond the classical turning point, in effective lengths.
#: exp(-u^2/2) < 1e-16 requires u > 8.6; 9 keeps the wall error negligible.
TAIL_MARGIN = 9.0


@dataclass(frozen=True)
class Grid:
    """Uniform grid in the dimensionless coordinate u = x/length_scale.

    ``length_scale`` is meters per grid unit (1.0 for synthetic matrices).
    """

    u_min: float
    u_max: float
    n_points: int
    length_scale: float = 1.0

    def __post_init__(self) -> None:
        if not (self.u_min < self.u_max):
            raise ValueError("grid too coarse: u_min must be below u_max")
        if self.n_points < 64:
            raise ValueError("grid too coarse: need at least 64 points")

    @property
    def du(self) -> float:
        return (self.u_max - self.u_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.n_points)


@dataclass(frozen=True, eq=False)
class SectorMatrix:
    """Symmetric tridiagonal discretization of H_M/(hbar*omega).

    ``grid`` is None for synthetic matrices assembled directly in tests.
    """

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    m_quantum: float = 0.0
    grid: Grid | None = None

    def __post_init__(self) -> None:
        if self.diagonal.ndim != 1 or self.off_diagonal.ndim != 1:
            raise ValueError("diagonal and off_diagonal must be 1-D arrays")
        if self.off_diagonal.shape[0] != self.diagonal.shape[0] - 1:
            raise ValueError("off_diagonal must have length n_points - 1")


@dataclass(frozen=True)
class RefinementStep:
    """One grid level of the convergence history (energies in hbar*omega units)."""

    n_points: int
    du: float
    eigenvalues: tuple[float, ...]
    #: raw eigenvalue change against the previous (coarser) grid, or None
    delta: tuple[float, ...] | None = None
    #: observed convergence order log2(delta_prev/delta), ~2 for the 3-point stencil
    order: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SectorConvergence:
    """Convergence record for one sector solve."""

    m_quantum: float
    grid: Grid
    converged: bool
    steps: tuple[RefinementStep, ...]
    #: Richardson-extrapolated eigenvalues, hbar*omega units
    extrapolated: tuple[float, ...]

    def order_estimates(self) -> list[float]:
        out: list[float] = []
        for step in self.steps:
            if step.order is not None:
                out.extend(v for v in step.order if math.isfinite(v))
        return out


@dataclass(frozen=True)
class LevelRecord:
    m_quantum: float
    n: int
    analytic_j: float
    numeric_j: float
    rel_error: float


@dataclass(frozen=True)
class ValidationReport:
    """Analytic-vs-numeric comparison over a set of levels."""

    records: tuple[LevelRecord, ...]
    sectors: tuple[SectorConvergence, ...]
    tolerance: float
    converged: bool
    max_rel_error: float = dataclass_field(default=math.nan)

    def passed(self) -> bool:
        return self.converged and self.max_rel_error < self.tolerance

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "converged": self.converged,
            "max_rel_error": self.max_rel_error,
            "passed": self.passed(),
            "records": [
                {
                    "m_quantum": r.m_quantum,
                    "n": r.n,
                    "analytic_J": r.analytic_j,
                    "numeric_J": r.numeric_j,
                    "rel_error": r.rel_error,
                }
                for r in self.records
            ],
            "sectors": [
                {
                    "m_quantum": s.m_quantum,
                    "n_points": s.grid.n_points,
                    "u_min": s.grid.u_min,
                    "u_max": s.grid.u_max,
                    "length_scale_m": s.grid.length_scale,
                    "refinements": len(s.steps),
                    "median_order": (
                        float(np.median(s.order_estimates()))
                        if s.order_estimates()
                        else None
                    ),
                }
                for s in self.sectors
            ],
        }


def auto_grid(
    system: SpinSystem,
    field: FieldProfile,
    m: float | SpinLevelIndex,
    k: int,
    n_points: int,
) -> Grid:
    """Grid centered on the sector eigenfunctions, sized for the k lowest levels.

    The half-width is (sqrt(2k+1) + 9) effective oscillator lengths, i.e. the
    classical turning point of level k plus the tail margin.
    """
    mq = _projection(system, m)
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"unbounded below: no discrete spectrum guaranteed for m_quantum={mq} "
            f"(mbar={mbar})"
        )
    lam = oscillator_length(system.mass, system.omega)
    u_center = eigenfunction_center(system, field, mq) / lam
    stretch = (1.0 - mbar) ** -0.25  # effective length / base length
    half_width = (math.sqrt(2.0 * k + 1.0) + TAIL_MARGIN) * stretch
    return Grid(u_center - half_width, u_center + half_width, n_points, lam)


def build_sector_hamiltonian(
    system: SpinSystem,
    field: FieldProfile,
    m: float | SpinLevelIndex,
    grid: Grid,
) -> SectorMatrix:
    """3-point finite-difference matrix of H_M/(hbar*omega) on ``grid``."""
    mq = _projection(system, m)
    lam = oscillator_length(system.mass, system.omega)
    u = grid.points()
    x = lam * u
    a = system.offset
    # V_M(x)/(hbar*omega): trap term in grid units plus the spin-field coupling
    trap = 0.5 * (u - a / lam) ** 2
    coupling = (system.gamma * mq / system.omega) * (
        field.b0 + field.g * x + field.gbar * x * x
    )
    v = trap - coupling
    if not np.all(np.isfinite(v)):
        raise ValueError("potential not finite on the grid domain")
    du = grid.du
    diagonal = 1.0 / du**2 + v
    off_diagonal = np.full(grid.n_points - 1, -0.5 / du**2)
    return SectorMatrix(diagonal, off_diagonal, mq, grid)


def _tridiagonal_eigh(
    mat: SectorMatrix, k: int, tol: float, eigvals_only: bool
):
    try:
        return eigh_tridiagonal(
            mat.diagonal,
            mat.off_diagonal,
            eigvals_only=eigvals_only,
            select="i",
            select_range=(0, k - 1),
            tol=tol,
        )
    except LinAlgError as exc:
        raise ConvergenceError(f"eigenvector not converged: {exc}") from exc


def lowest_eigenpairs(
    mat: SectorMatrix, k: int, tol: float = 1e-14
) -> tuple[np.ndarray, np.ndarray]:
    """k lowest (eigenvalue, eigenvector) pairs of the tridiagonal matrix.

    Eigenvalues ascend; ``tol`` is the absolute bisection tolerance in matrix
    units.  Eigenvectors come back as columns normalized under the grid
    quadrature weight (sum |psi_i|^2 du = 1; du = 1 for synthetic matrices),
    with a deterministic sign (largest-magnitude component positive).
    """
    n = mat.diagonal.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k={k} out of range for matrix of size {n}")
    if not (tol > 0.0):
        raise ValueError("tol must be positive")
    values, vectors = _tridiagonal_eigh(mat, k, tol, eigvals_only=False)
    du = mat.grid.du if mat.grid is not None else 1.0
    vectors = vectors / math.sqrt(du)
    for j in range(vectors.shape[1]):
        lead = np.argmax(np.abs(vectors[:, j]))
        if vectors[lead, j] < 0.0:
            vectors[:, j] = -vectors[:, j]
    return values, vectors


def lowest_eigenvalues(mat: SectorMatrix, k: int, tol: float = 1e-14) -> np.ndarray:
    """Values-only fast path of :func:`lowest_eigenpairs`."""
    n = mat.diagonal.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k={k} out of range for matrix of size {n}")
    if not (tol > 0.0):
        raise ValueError("tol must be positive")
    return _tridiagonal_eigh(mat, k, tol, eigvals_only=True)


def expectation_position(vec: np.ndarray, grid: Grid) -> float:
    """<x> = sum x_i |psi_i|^2 dx for a quadrature-normalized eigenvector, in m."""
    du = grid.du
    u_mean = float(np.sum(grid.points() * vec * vec) * du)
    return grid.length_scale * u_mean


def converged_spectrum(
    system: SpinSystem,
    field: FieldProfile,
    m: float | SpinLevelIndex,
    k: int,
    tol: float = 1e-8,
    n_points_start: int = 513,
) -> tuple[np.ndarray, SectorConvergence]:
    """Grid-refined lowest k eigenvalues of sector M, in joules.

    Solves on grids with (n_points - 1) doubling each refinement, Richardson
    extrapolates (depth 2, error O(du^6)), and stops once two successive
    extrapolants agree per-eigenvalue to 0.1*tol relative (the comparison
    scale is floored at half the sector level spacing so eigenvalues passing
    through zero cannot stall the check).  Raises ``ConvergenceError`` if the
    point cap is hit first and ``DissociationError`` for mbar >= 1.
    """
    mq = _projection(system, m)
    if tol < 1e-12:
        raise ValueError("tol must be at least 1e-12")
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"unbounded below: no discrete spectrum guaranteed for m_quantum={mq} "
            f"(mbar={mbar})"
        )
    spacing = math.sqrt(1.0 - mbar)  # level spacing in hbar*omega units

    raw: list[np.ndarray] = []
    tables: list[list[np.ndarray]] = []
    steps: list[RefinementStep] = []
    grid: Grid | None = None
    prev_diag: np.ndarray | None = None
    base = n_points_start - 1
    level = 0
    while base * 2**level + 1 <= MAX_GRID_POINTS:
        n_points = base * 2**level + 1
        grid = auto_grid(system, field, mq, k, n_points)
        mat = build_sector_hamiltonian(system, field, mq, grid)
        values = lowest_eigenvalues(mat, k)
        raw.append(values)

        table = [values]
        depth = min(level, 2)
        for q in range(1, depth + 1):
            table.append(
                ((4.0**q) * table[q - 1] - tables[level - 1][q - 1]) / (4.0**q - 1.0)
            )
        tables.append(table)
        diag = table[-1]

        delta = order = None
        if level >= 1:
            d_now = raw[level] - raw[level - 1]
            delta = tuple(float(v) for v in d_now)
            if level >= 2:
                d_prev = raw[level - 1] - raw[level - 2]
                with np.errstate(divide="ignore", invalid="ignore"):
                    order = tuple(
                        float(v) for v in np.log2(np.abs(d_prev) / np.abs(d_now))
                    )
        steps.append(
            RefinementStep(n_points, grid.du, tuple(float(v) for v in values), delta, order)
        )

        if prev_diag is not None and level >= 3:
            scale = np.maximum(np.abs(diag), 0.5 * spacing)
            if np.all(np.abs(diag - prev_diag) <= 0.1 * tol * scale):
                report = SectorConvergence(
                    mq, grid, True, tuple(steps), tuple(float(v) for v in diag)
                )
                return HBAR * system.omega * diag, report
        prev_diag = diag
        level += 1
    raise ConvergenceError(
        f"oracle did not converge for m_quantum={mq} within {MAX_GRID_POINTS} points"
    )


def validate_levels(
    system: SpinSystem,
    field: FieldProfile,
    levels,
    tol: float = 1e-8,
) -> ValidationReport:
    """Compare closed-form energies against the converged grid spectrum.

    ``levels`` is an iterable of (M, n) pairs; each distinct M triggers one
    sector solve sized for its largest requested n.
    """
    wanted: dict[float, list[int]] = {}
    for m, n in levels:
        mq = _projection(system, m)
        wanted.setdefault(mq, []).append(int(n))
    if not wanted:
        raise ValueError("no levels requested")

    records: list[LevelRecord] = []
    sectors: list[SectorConvergence] = []
    for mq in sorted(wanted):
        k = max(wanted[mq]) + 1
        numeric, report = converged_spectrum(system, field, mq, k, tol)
        sectors.append(report)
        for n in sorted(set(wanted[mq])):
            analytic = energy_level(system, field, mq, n)
            num = float(numeric[n])
            denom = abs(analytic)
            rel = abs(num - analytic) / denom if denom > 0.0 else math.inf
            records.append(LevelRecord(mq, n, analytic, num, rel))
    max_rel = max(r.rel_error for r in records)
    return ValidationReport(
        tuple(records),
        tuple(sectors),
        tol,
        all(s.converged for s in sectors),
        max_rel,
    )
