"""Observables built on the closed-form spectrum.

Transition-line lists, level-crossing scans versus the quadratic field
parameter, quantum/classical regime weights, and the inverse problem of
recovering the trap frequency from the spin-sublevel splittings of a single
oscillator level.

Line energies are evaluated from the analytically cancelled pairwise
difference of eigenvalues rather than by subtracting two large energies;
besides avoiding cancellation error, this makes the homogeneous-field line
set (g = gbar = 0) exactly independent of omega, bit for bit, which is the
physical statement that a uniform field cannot reveal the trap frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .constants import HBAR, TWO_PI
from .core import (
    FieldProfile,
    SpinLevelIndex,
    SpinSystem,
    _gradient_at_offset,
    _field_at_offset,
    _projection,
    _require_int,
    energy_level,
    scaled_spin_number,
)
from .errors import DissociationError, InversionError

SELECTION_RULES = ("deltaM1_fixed_n", "deltaN1_fixed_M", "all_pairs_within")

#: |delta E| dips below this fraction of the level scale without a sign flip
#: are flagged as possible tangencies (even-order contacts are not crossings).
TANGENCY_FRACTION = 1e-6


@dataclass(frozen=True)
class TransitionLine:
    """One spectral line between labeled levels; delta_e is a magnitude (J)."""

    m_from: float
    n_from: int
    m_to: float
    n_to: int
    delta_e: float
    frequency_hz: float
    frequency_rad: float


@dataclass(frozen=True)
class CrossingPoint:
    """A gbar value where two labeled levels coincide."""

    gbar: float
    level_a: tuple[float, int]
    level_b: tuple[float, int]
    energy: float
    bracket_width: float


@dataclass(frozen=True)
class CrossingScanResult:
    crossings: tuple[CrossingPoint, ...]
    #: pairs degenerate over the whole scan ("degenerate, no isolated crossings")
    degenerate_pairs: tuple[tuple[tuple[float, int], tuple[float, int]], ...]
    #: (gbar, pair) where |delta E| dipped below tolerance without a sign flip
    tangency_candidates: tuple[tuple[float, tuple[tuple[float, int], tuple[float, int]]], ...]


@dataclass(frozen=True)
class RegimeWeights:
    """Competing weights of the a = 0 spectrum split.

    quantum_weight = sqrt(1 - mbar) multiplies hbar*omega*(n + 1/2);
    classical_weight = mbar^2/(4*(1 - mbar)) multiplies the classical
    oscillator energy scale mass*omega^2*(g/gbar)^2/2.
    """

    quantum_weight: float
    classical_weight: float
    classical_energy_scale: float
    ratio: float


@dataclass(frozen=True)
class InversionResult:
    omega_estimate: float
    residual_rms_hz: float
    bracket: tuple[float, float]
    identifiable: bool
    reason: str | None = None


def _check_sector_stable(system: SpinSystem, field: FieldProfile, mq: float) -> None:
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"dissociation: sector m_quantum={mq} is unstable (mbar={mbar})"
        )


def _check_sectors_stable(system: SpinSystem, field: FieldProfile, ms) -> None:
    """Raise naming the worst offending projection if any sector is unstable."""
    worst: tuple[float, float] | None = None
    for mq in ms:
        mbar = scaled_spin_number(system, field, mq)
        if mbar >= 1.0 and (worst is None or mbar > worst[1]):
            worst = (mq, mbar)
    if worst is not None:
        raise DissociationError(
            f"dissociation: sector m_quantum={worst[0]} is unstable (mbar={worst[1]})"
        )


def _pair_delta_e(
    system: SpinSystem,
    field: FieldProfile,
    level_a: tuple[float, int],
    level_b: tuple[float, int],
) -> float:
    """Signed E_a - E_b with the common Zeeman and shift factors cancelled."""
    (ma, na), (mb, nb) = level_a, level_b
    ra = math.sqrt(1.0 - scaled_spin_number(system, field, ma))
    rb = math.sqrt(1.0 - scaled_spin_number(system, field, mb))
    osc = HBAR * system.omega * ((na + 0.5) * ra - (nb + 0.5) * rb)
    zeeman = system.gamma * _field_at_offset(system, field) * HBAR * (ma - mb)
    slope = system.gamma * _gradient_at_offset(system, field)
    shift_scale = slope * slope * HBAR * HBAR / (2.0 * system.mass * system.omega**2)
    shift = shift_scale * (ma * ma / (ra * ra) - mb * mb / (rb * rb))
    return osc - zeeman - shift


def _make_line(
    system: SpinSystem,
    field: FieldProfile,
    level_a: tuple[float, int],
    level_b: tuple[float, int],
) -> TransitionLine:
    de = _pair_delta_e(system, field, level_a, level_b)
    if de >= 0.0:
        lo, hi = level_b, level_a
    else:
        lo, hi = level_a, level_b
        de = -de
    return TransitionLine(
        m_from=lo[0],
        n_from=lo[1],
        m_to=hi[0],
        n_to=hi[1],
        delta_e=de,
        frequency_hz=de / (TWO_PI * HBAR),
        frequency_rad=de / HBAR,
    )


def transition_lines(
    system: SpinSystem,
    field: FieldProfile,
    n: int = 0,
    rule: str = "deltaM1_fixed_n",
    *,
    m: float | SpinLevelIndex | None = None,
    n_max: int | None = None,
    cutoff_hz: float | None = None,
) -> list[TransitionLine]:
    """Spectral lines under a selection rule, sorted by ascending frequency.

    deltaM1_fixed_n   the 2S lines between adjacent projections at fixed n
                      (the spin-sublevel spectrum of one oscillator level);
    deltaN1_fixed_M   lines (m, j) -> (m, j+1) for j = 0..n, for the fixed
                      projection given by ``m``;
    all_pairs_within  every pair of distinct levels with quantum numbers up
                      to ``n_max`` (default: n), optionally dropping lines
                      above ``cutoff_hz``.

    Raises :class:`DissociationError` naming the first unstable projection.
    """
    n = _require_int(n)
    if rule not in SELECTION_RULES:
        raise ValueError(f"unknown selection rule {rule!r} (expected one of {SELECTION_RULES})")

    pairs: list[tuple[tuple[float, int], tuple[float, int]]] = []
    if rule == "deltaM1_fixed_n":
        ladder = system.levels()
        _check_sectors_stable(system, field, ladder)
        pairs = [((ladder[i + 1], n), (ladder[i], n)) for i in range(len(ladder) - 1)]
    elif rule == "deltaN1_fixed_M":
        if m is None:
            raise ValueError("rule deltaN1_fixed_M requires the fixed projection m")
        mq = _projection(system, m)
        _check_sector_stable(system, field, mq)
        pairs = [((mq, j + 1), (mq, j)) for j in range(n + 1)]
    else:  # all_pairs_within
        top = n if n_max is None else _require_int(n_max, "n_max")
        levels = [(mq, j) for mq in system.levels() for j in range(top + 1)]
        _check_sectors_stable(system, field, system.levels())
        pairs = [
            (levels[i], levels[j])
            for i in range(len(levels))
            for j in range(i + 1, len(levels))
        ]

    lines = [_make_line(system, field, a, b) for a, b in pairs]
    if cutoff_hz is not None:
        lines = [l for l in lines if l.frequency_hz <= cutoff_hz]
    lines.sort(key=lambda l: (l.frequency_hz, l.m_from, l.n_from, l.m_to, l.n_to))
    return lines


def _stability_interval(system: SpinSystem, mq: float) -> tuple[float, float]:
    """Open gbar interval on which sector M stays bound."""
    slope = 2.0 * system.gamma * HBAR * mq / (system.omega**2 * system.mass)
    if slope == 0.0:
        return (-math.inf, math.inf)
    bound = 1.0 / slope
    return (bound, math.inf) if bound < 0.0 else (-math.inf, bound)


def crossing_scan(
    system: SpinSystem,
    field_base: FieldProfile,
    gbar_range: tuple[float, float],
    levels,
    steps: int = 64,
) -> CrossingScanResult:
    """Locate level crossings of E_{M,n}(gbar) over a gbar range.

    Evaluates every pair's energy difference on a ``steps``-interval grid,
    brackets sign changes, and bisects each to relative gbar width 1e-10 and
    |E_a - E_b| < 1e-10 * max(|E_a|, |E_b|).  The range is clipped to the
    intersection of all sectors' stability intervals; pairs that are
    degenerate over the whole scan are reported separately, as are |delta E|
    dips without a sign flip (possible tangencies).
    """
    level_list = [( _projection(system, m), _require_int(nn)) for m, nn in levels]
    if not level_list:
        raise ValueError("empty level list")
    if len(set(level_list)) != len(level_list):
        raise ValueError("identical levels in pair list: each (m_quantum, n) must be unique")
    if steps < 16:
        raise ValueError("steps must be at least 16")
    g_lo, g_hi = float(gbar_range[0]), float(gbar_range[1])
    if not (g_lo < g_hi):
        raise ValueError("gbar_range must be an increasing pair")

    lo_allowed, hi_allowed = -math.inf, math.inf
    for mq, _ in level_list:
        s_lo, s_hi = _stability_interval(system, mq)
        lo_allowed, hi_allowed = max(lo_allowed, s_lo), min(hi_allowed, s_hi)
    margin = 1e-12 * max(abs(lo_allowed), abs(hi_allowed), 1.0)
    if math.isfinite(lo_allowed):
        g_lo = max(g_lo, lo_allowed + margin)
    if math.isfinite(hi_allowed):
        g_hi = min(g_hi, hi_allowed - margin)
    if not (g_lo < g_hi):
        raise DissociationError("scan range entirely dissociated for the requested levels")

    def energy(level: tuple[float, int], gbar: float) -> float:
        return energy_level(system, replace(field_base, gbar=gbar), level[0], level[1])

    def diff(pair, gbar: float) -> float:
        return _pair_delta_e(system, replace(field_base, gbar=gbar), pair[0], pair[1])

    gs = [g_lo + (g_hi - g_lo) * i / steps for i in range(steps + 1)]
    g_scale = max(abs(g_lo), abs(g_hi))

    crossings: list[CrossingPoint] = []
    degenerate = []
    tangencies = []
    for i in range(len(level_list)):
        for j in range(i + 1, len(level_list)):
            pair = (level_list[i], level_list[j])
            ds = [diff(pair, g) for g in gs]
            e_scale = max(abs(energy(pair[0], gs[0])), abs(energy(pair[1], gs[0])))
            if all(d == 0.0 for d in ds):
                degenerate.append(pair)
                continue
            for idx in range(steps):
                d_a, d_b = ds[idx], ds[idx + 1]
                if d_a == 0.0:
                    if idx == 0:
                        crossings.append(
                            CrossingPoint(gs[idx], pair[0], pair[1], energy(pair[0], gs[idx]), 0.0)
                        )
                    continue
                if d_b == 0.0:
                    crossings.append(
                        CrossingPoint(gs[idx + 1], pair[0], pair[1], energy(pair[0], gs[idx + 1]), 0.0)
                    )
                    continue
                if (d_a > 0.0) == (d_b > 0.0):
                    interior = min(abs(d_a), abs(d_b))
                    if interior < TANGENCY_FRACTION * e_scale and 0 < idx < steps - 1:
                        if abs(ds[idx]) <= abs(ds[idx - 1]) and abs(ds[idx]) <= abs(ds[idx + 1]):
                            tangencies.append((gs[idx], pair))
                    continue
                a, b, fa = gs[idx], gs[idx + 1], d_a
                for _ in range(200):
                    mid = 0.5 * (a + b)
                    fm = diff(pair, mid)
                    e_a, e_b = energy(pair[0], mid), energy(pair[1], mid)
                    width_ok = (b - a) <= 1e-10 * max(abs(a), abs(b), g_scale)
                    energy_ok = abs(e_a - e_b) <= 1e-10 * max(abs(e_a), abs(e_b))
                    if (width_ok and energy_ok) or fm == 0.0:
                        crossings.append(CrossingPoint(mid, pair[0], pair[1], e_a, b - a))
                        break
                    if (fm > 0.0) == (fa > 0.0):
                        a, fa = mid, fm
                    else:
                        b = mid
                else:
                    crossings.append(
                        CrossingPoint(0.5 * (a + b), pair[0], pair[1], energy(pair[0], 0.5 * (a + b)), b - a)
                    )

    crossings.sort(key=lambda c: (c.gbar, c.level_a, c.level_b))
    return CrossingScanResult(tuple(crossings), tuple(degenerate), tuple(tangencies))


def regime_weights(
    system: SpinSystem,
    field: FieldProfile,
    m: float | SpinLevelIndex,
    n: int,
) -> RegimeWeights:
    """Quantum vs classical weights of the a = 0, b0 = 0 spectrum split.

    The ratio (classical term / quantum term for the queried n) grows as g^2
    at fixed gbar: the linear gradient amplifies the classical oscillation.
    """
    mq = _projection(system, m)
    n = _require_int(n)
    if field.b0 != 0.0 or system.offset != 0.0 or field.gbar == 0.0:
        raise ValueError(
            "regime weights undefined for these parameters "
            "(require b0 = 0, offset = 0, gbar != 0)"
        )
    mbar = scaled_spin_number(system, field, mq)
    if mbar >= 1.0:
        raise DissociationError(
            f"dissociation: sector m_quantum={mq} is unstable (mbar={mbar})"
        )
    quantum_weight = math.sqrt(1.0 - mbar)
    classical_weight = mbar * mbar / (4.0 * (1.0 - mbar))
    ratio_gv = field.g / field.gbar
    classical_scale = 0.5 * system.mass * system.omega**2 * ratio_gv * ratio_gv
    quantum_energy = HBAR * system.omega * (n + 0.5)
    ratio = classical_weight * classical_scale / (quantum_weight * quantum_energy)
    return RegimeWeights(quantum_weight, classical_weight, classical_scale, ratio)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_minimize(f, lo: float, hi: float, rel_tol: float) -> float:
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rel_tol * max(abs(a), abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def identify_frequency(
    lines_hz,
    system_template: SpinSystem,
    field: FieldProfile,
    n: int,
    bracket: tuple[float, float],
    *,
    scan_points: int = 512,
    fit_tol_hz: float | None = None,
) -> InversionResult:
    """Recover the trap frequency from measured spin-sublevel line frequencies.

    ``lines_hz`` holds the measured frequencies (Hz) of the adjacent-M lines
    of oscillator level ``n``; ``system_template`` supplies every parameter
    except omega, which is scanned over ``bracket`` (rad/s).  The RMS misfit
    between measured and model lines (matched in sorted order when the full
    2S-line set is given, otherwise to the nearest model line) is minimized
    by a coarse scan followed by golden-section refinement to relative 1e-10.

    With g = gbar = 0 the line set carries no frequency information and the
    result comes back with ``identifiable=False`` ("homogeneous field"); the
    same happens when the residual is flat over the bracket (relative
    variation below 1e-12).  A residual minimum on the bracket edge raises
    :class:`InversionError`.
    """
    measured = sorted(float(v) for v in lines_hz)
    if not measured:
        raise ValueError("at least one measured line is required")
    if system_template.spin == 0.0:
        raise ValueError("spin 0 has no adjacent-M lines to fit")
    n = _require_int(n)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 < lo < hi):
        raise ValueError("bracket must be an increasing pair of positive rad/s values")

    if field.g == 0.0 and field.gbar == 0.0:
        return InversionResult(
            math.nan, math.nan, (lo, hi), False, "unidentifiable: homogeneous field"
        )

    # clip the bracket to frequencies at which every sector stays bound
    if field.gbar != 0.0 and system_template.spin > 0.0:
        omega_floor = math.sqrt(
            2.0 * abs(system_template.gamma * field.gbar) * HBAR * system_template.spin
            / system_template.mass
        )
        lo = max(lo, omega_floor * (1.0 + 1e-9))
        if not (lo < hi):
            raise InversionError(
                "bracket does not contain optimum: entire bracket dissociated"
            )

    def model(omega: float) -> list[float]:
        candidate = replace(system_template, omega=omega)
        return [l.frequency_hz for l in transition_lines(candidate, field, n)]

    def residual(omega: float) -> float:
        freqs = model(omega)
        if len(freqs) == len(measured):
            sq = sum((f - y) ** 2 for f, y in zip(freqs, measured))
        else:
            sq = sum(min((f - y) ** 2 for f in freqs) for y in measured)
        return math.sqrt(sq / len(measured))

    xs = [lo + (hi - lo) * i / (scan_points - 1) for i in range(scan_points)]
    fs = [residual(x) for x in xs]
    f_min, f_max = min(fs), max(fs)
    if (f_max - f_min) <= 1e-12 * max(f_max, 1e-300):
        return InversionResult(
            math.nan, f_min, (lo, hi), False, "unidentifiable: residual flat in omega"
        )
    basins = [
        i
        for i in range(1, len(xs) - 1)
        if fs[i] <= fs[i - 1] and fs[i] <= fs[i + 1]
    ]
    i_min = fs.index(f_min)
    if (i_min == 0 or i_min == len(xs) - 1) and (
        not basins or f_min < min(fs[i] for i in basins)
    ):
        raise InversionError("bracket does not contain optimum")

    # refine the few deepest basins: a noiseless data set has an exactly-zero
    # residual at the true frequency, which beats any near-alias after refinement
    basins.sort(key=lambda i: fs[i])
    estimate = rms = None
    for i in basins[:3]:
        candidate = _golden_minimize(residual, xs[i - 1], xs[i + 1], 1e-10)
        value = residual(candidate)
        if rms is None or value < rms:
            estimate, rms = candidate, value
    if fit_tol_hz is not None and rms > fit_tol_hz:
        return InversionResult(
            estimate, rms, (lo, hi), False, "residual above fit tolerance"
        )
    return InversionResult(estimate, rms, (lo, hi), True, None)
