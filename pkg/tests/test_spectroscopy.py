import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import build_scenario, random_stable_scenario, stable_setups
from parabolic_mr import (
    HBAR,
    DissociationError,
    FieldProfile,
    InversionError,
    SpinSystem,
    converged_spectrum,
    crossing_scan,
    energy_level,
    gbar_critical,
    identify_frequency,
    regime_weights,
    scaled_spin_number,
    transition_lines,
)
from parabolic_mr.cli import figure1_scenario
from parabolic_mr.spectroscopy import _pair_delta_e

TWO_PI = 2.0 * math.pi


def larmor_system(**overrides):
    params = dict(mass=1e-26, gamma=-1.76085963e11, spin=1.5, omega=1e5, offset=0.0)
    params.update(overrides)
    return SpinSystem(**params)


class TestTransitionLines:
    def test_homogeneous_field_gives_larmor_ladder(self):
        system = larmor_system()
        field = FieldProfile(0.02, 0.0, 0.0)
        lines = transition_lines(system, field, n=1)
        assert len(lines) == 3  # 2S lines
        larmor = abs(system.gamma) * field.b0 / TWO_PI
        for line in lines:
            assert line.frequency_hz == pytest.approx(larmor, rel=1e-14)

    def test_homogeneous_lines_independent_of_omega_and_n_bitwise(self):
        field = FieldProfile(0.02, 0.0, 0.0)
        reference = None
        for omega in (1e4, 3.7e4, 2.2e5, 1e6):
            for n in (0, 4):
                freqs = tuple(
                    l.frequency_hz
                    for l in transition_lines(larmor_system(omega=omega), field, n)
                )
                if reference is None:
                    reference = freqs
                assert freqs == reference

    def test_delta_n_line_sits_at_trap_frequency(self):
        system = larmor_system(spin=1.0)
        field = FieldProfile(0.02, 0.0, 0.0)
        lines = transition_lines(system, field, n=0, rule="deltaN1_fixed_M", m=0.0)
        assert len(lines) == 1
        assert lines[0].frequency_hz == pytest.approx(system.omega / TWO_PI, rel=1e-14)
        assert lines[0].frequency_rad == pytest.approx(system.omega, rel=1e-14)

    def test_linear_gradient_spacing_pattern(self):
        # gbar = 0: adjacent-M line frequencies are evenly spaced by
        # gamma^2 g^2 hbar / (2 pi m omega^2), which carries the omega dependence
        # b0 = 0 keeps the line magnitudes small enough that the spacing
        # comparison is not ulp-limited
        system = larmor_system(spin=2.5, offset=2e-6)
        field = FieldProfile(0.0, 0.005, 0.0)
        lines = transition_lines(system, field, n=2)
        freqs = sorted(l.frequency_hz for l in lines)
        spacings = np.diff(freqs)
        expected = system.gamma**2 * field.g**2 * HBAR / (
            TWO_PI * system.mass * system.omega**2
        )
        assert spacings == pytest.approx([expected] * len(spacings), rel=1e-9)

    def test_lines_match_oracle_energies(self):
        system, field = build_scenario(1e-26, 1.2e5, 8e10, 1.5, 0.45, 0.6, 0.9, 0.2)
        n = 1
        lines = transition_lines(system, field, n)
        ladder = system.levels()
        numeric = {}
        for m in ladder:
            values, _ = converged_spectrum(system, field, m, n + 1, tol=1e-8)
            numeric[m] = values[n]
        for i in range(1, len(ladder)):
            expected = abs(numeric[ladder[i]] - numeric[ladder[i - 1]]) / (TWO_PI * HBAR)
            match = [
                l
                for l in lines
                if {l.m_from, l.m_to} == {ladder[i], ladder[i - 1]}
            ]
            assert len(match) == 1
            assert match[0].frequency_hz == pytest.approx(expected, rel=1e-8)

    @given(stable_setups(), st.integers(0, 3))
    def test_pair_difference_equals_energy_subtraction(self, setup, n):
        system, field, mq = setup
        ladder = system.levels()
        other = ladder[0] if mq != ladder[0] else ladder[-1]
        assume(other != mq)
        direct = energy_level(system, field, mq, n) - energy_level(system, field, other, n + 1)
        paired = _pair_delta_e(system, field, (mq, n), (other, n + 1))
        scale = max(abs(energy_level(system, field, mq, n)), abs(paired), HBAR * system.omega)
        assert abs(paired - direct) <= 1e-12 * scale

    def test_sorted_ascending_with_nonnegative_delta(self):
        system, field = build_scenario(1e-26, 1e5, -7e10, 2.5, -0.5, 1.0, 1.1, 0.7)
        lines = transition_lines(system, field, 0, rule="all_pairs_within", n_max=2)
        freqs = [l.frequency_hz for l in lines]
        assert freqs == sorted(freqs)
        assert all(l.delta_e >= 0.0 for l in lines)
        assert all(
            l.frequency_hz == pytest.approx(l.delta_e / (TWO_PI * HBAR), rel=1e-15)
            for l in lines
        )

    def test_all_pairs_count_and_cutoff(self):
        system = larmor_system(spin=1.0)
        field = FieldProfile(0.01, 0.001, 20.0)
        full = transition_lines(system, field, 0, rule="all_pairs_within", n_max=1)
        assert len(full) == 15  # C(6, 2) pairs of (M, n) levels
        cutoff = full[7].frequency_hz
        trimmed = transition_lines(
            system, field, 0, rule="all_pairs_within", n_max=1, cutoff_hz=cutoff
        )
        assert len(trimmed) == 8

    def test_dissociated_sector_named_in_error(self):
        system = larmor_system()
        bad = FieldProfile(0.0, 0.0, -1e7)  # gamma < 0: adverse sector is M = +3/2
        with pytest.raises(DissociationError, match="m_quantum=1.5"):
            transition_lines(system, field=bad, n=0)

    def test_delta_n_rule_requires_projection(self):
        system = larmor_system()
        with pytest.raises(ValueError, match="requires the fixed projection"):
            transition_lines(system, FieldProfile(0.0, 0.0, 0.0), 0, rule="deltaN1_fixed_M")

    def test_unknown_rule_rejected(self):
        system = larmor_system()
        with pytest.raises(ValueError, match="unknown selection rule"):
            transition_lines(system, FieldProfile(0.0, 0.0, 0.0), 0, rule="deltaM2")


class TestCrossingScan:
    def test_decoupled_spin_degenerate_pairs_reported(self):
        system = larmor_system(gamma=0.0, spin=1.0)
        field = FieldProfile(0.0, 0.0, 0.0)
        result = crossing_scan(
            system, field, (0.0, 1.0), [(-1.0, 0), (0.0, 0), (1.0, 0)], steps=16
        )
        assert not result.crossings
        assert len(result.degenerate_pairs) == 3  # every pair, no isolated crossings

    def test_duplicate_levels_rejected(self):
        system = larmor_system()
        with pytest.raises(ValueError, match="unique"):
            crossing_scan(system, FieldProfile(0.0, 0.0, 0.0), (0.0, 1.0), [(0.5, 0), (0.5, 0)])

    def test_empty_levels_rejected(self):
        system = larmor_system()
        with pytest.raises(ValueError, match="empty level list"):
            crossing_scan(system, FieldProfile(0.0, 0.0, 0.0), (0.0, 1.0), [])

    def test_too_few_steps_rejected(self):
        system = larmor_system()
        with pytest.raises(ValueError, match="steps"):
            crossing_scan(system, FieldProfile(0.0, 0.0, 0.0), (0.0, 1.0), [(0.5, 0), (1.5, 0)], steps=8)

    def test_fully_dissociated_range_rejected(self):
        system = larmor_system()
        crit = gbar_critical(system)
        with pytest.raises(DissociationError, match="dissociated"):
            crossing_scan(
                system,
                FieldProfile(0.0, 0.0, 0.0),
                (-3.0 * crit, -2.0 * crit),
                [(1.5, 0), (0.5, 0)],
                steps=16,
            )

    def test_range_clipped_to_stability(self):
        scenario = figure1_scenario()
        crit = gbar_critical(scenario.system)
        result = crossing_scan(
            scenario.system,
            scenario.field,
            (crit / 100, 10.0 * crit),
            scenario.all_levels(),
            steps=64,
        )
        assert all(c.gbar < crit for c in result.crossings)

    def test_figure_configuration_has_refined_crossings(self):
        scenario = figure1_scenario()
        levels = scenario.all_levels()
        result = crossing_scan(
            scenario.system,
            scenario.field,
            (scenario.gbar_min, scenario.gbar_max),
            levels,
            steps=scenario.scan_steps,
        )
        assert result.crossings
        for c in result.crossings:
            fld = replace(scenario.field, gbar=c.gbar)
            e_a = energy_level(scenario.system, fld, *c.level_a)
            e_b = energy_level(scenario.system, fld, *c.level_b)
            assert abs(e_a - e_b) < 1e-10 * max(abs(e_a), abs(e_b))
            assert c.level_a != c.level_b

    def test_each_crossing_is_one_sign_flip(self):
        scenario = figure1_scenario()
        levels = [(-1.5, 0), (1.5, 1)]
        steps = 64
        result = crossing_scan(
            scenario.system,
            scenario.field,
            (scenario.gbar_min, scenario.gbar_max),
            levels,
            steps=steps,
        )
        # recount sign changes on the same scan grid
        g_lo = scenario.gbar_min
        g_hi = min(scenario.gbar_max, gbar_critical(scenario.system))
        gs = np.linspace(g_lo, g_hi, steps + 1)
        diffs = []
        for g in gs:
            fld = replace(scenario.field, gbar=float(g))
            diffs.append(
                energy_level(scenario.system, fld, *levels[0])
                - energy_level(scenario.system, fld, *levels[1])
            )
        flips = sum(
            1 for i in range(steps) if (diffs[i] > 0) != (diffs[i + 1] > 0)
        )
        assert flips == len(result.crossings) > 0


class TestRegimeWeights:
    def test_m_zero_is_purely_quantum(self):
        system = larmor_system(spin=1.0)
        field = FieldProfile(0.0, 0.001, 30.0)
        weights = regime_weights(system, field, 0.0, 0)
        assert weights.quantum_weight == 1.0
        assert weights.classical_weight == 0.0

    def test_reference_point_mbar_tenth(self):
        system, field = build_scenario(1e-26, 1e5, 5e10, 1.0, 0.1, 0.0, 0.8, 0.0)
        assert scaled_spin_number(system, field, 1.0) == pytest.approx(0.1, rel=1e-12)
        weights = regime_weights(system, field, 1.0, 0)
        assert weights.quantum_weight == pytest.approx(math.sqrt(0.9), rel=1e-12)
        assert weights.classical_weight == pytest.approx(0.01 / 3.6, rel=1e-12)

    def test_doubling_gradient_quadruples_ratio(self):
        system, field = build_scenario(1e-26, 1e5, 5e10, 1.5, 0.2, 0.0, 0.8, 0.0)
        base = regime_weights(system, field, 1.5, 1)
        doubled = regime_weights(system, replace(field, g=2.0 * field.g), 1.5, 1)
        assert doubled.ratio == 4.0 * base.ratio

    def test_preconditions_enforced(self):
        system = larmor_system(spin=1.0)
        with pytest.raises(ValueError, match="regime weights undefined"):
            regime_weights(system, FieldProfile(0.1, 0.0, 30.0), 1.0, 0)
        with pytest.raises(ValueError, match="regime weights undefined"):
            regime_weights(system, FieldProfile(0.0, 0.0, 0.0), 1.0, 0)
        offset_system = larmor_system(spin=1.0, offset=1e-6)
        with pytest.raises(ValueError, match="regime weights undefined"):
            regime_weights(offset_system, FieldProfile(0.0, 0.0, 30.0), 1.0, 0)


class TestIdentifyFrequency:
    def test_noiseless_round_trip(self):
        rng = np.random.default_rng(3)
        system, field, _ = random_stable_scenario(rng, zero_b0=False)
        lines = [l.frequency_hz for l in transition_lines(system, field, 2)]
        template = replace(system, omega=1.0)
        result = identify_frequency(
            lines, template, field, 2, (system.omega / 3.0, system.omega * 3.0)
        )
        assert result.identifiable
        assert abs(result.omega_estimate - system.omega) / system.omega < 1e-6
        assert result.residual_rms_hz < 1e-6 * max(lines)

    def test_homogeneous_field_not_identifiable(self):
        system = larmor_system()
        field = FieldProfile(0.02, 0.0, 0.0)
        lines = [l.frequency_hz for l in transition_lines(system, field, 0)]
        result = identify_frequency(lines, system, field, 0, (1e4, 1e6))
        assert not result.identifiable
        assert "homogeneous field" in result.reason
        assert math.isnan(result.omega_estimate)

    def test_line_vector_omega_sensitivity(self):
        # identifiability precondition: finite-difference derivative is nonzero
        system, field = build_scenario(1e-26, 2e5, 6e10, 1.5, 0.3, 0.5, 0.7, 0.0)
        def line_vector(omega):
            return np.array(
                [l.frequency_hz for l in transition_lines(replace(system, omega=omega), field, 0)]
            )
        fd = (line_vector(system.omega * 1.001) - line_vector(system.omega * 0.999)) / (
            0.002 * system.omega
        )
        assert np.any(np.abs(fd) > 0.0)
        homogeneous = FieldProfile(0.01, 0.0, 0.0)
        def homog_vector(omega):
            return tuple(
                l.frequency_hz
                for l in transition_lines(replace(system, omega=omega), homogeneous, 0)
            )
        assert homog_vector(1e4) == homog_vector(1e6)

    def test_bracket_without_optimum_rejected(self):
        system, field = build_scenario(1e-26, 5e5, 6e10, 1.0, 0.3, 0.5, 0.7, 0.0)
        lines = [l.frequency_hz for l in transition_lines(system, field, 0)]
        with pytest.raises(InversionError, match="bracket does not contain optimum"):
            identify_frequency(lines, system, field, 0, (1e6, 5e6))

    def test_two_species_mixture_recovered_separately(self):
        field = FieldProfile(0.0, 0.0015, 25.0)
        species = [
            SpinSystem(mass=2.2e-26, gamma=7e10, spin=1.5, omega=1.1e5, offset=1e-6),
            SpinSystem(mass=2.2e-26, gamma=7e10, spin=1.5, omega=2.4e5, offset=1e-6),
        ]
        for system in species:
            lines = [l.frequency_hz for l in transition_lines(system, field, 1)]
            result = identify_frequency(
                lines, replace(system, omega=1.0), field, 1, (5e4, 5e5)
            )
            assert result.identifiable
            assert abs(result.omega_estimate - system.omega) / system.omega < 1e-6

    def test_requires_lines_and_ordered_bracket(self):
        system = larmor_system()
        field = FieldProfile(0.0, 0.001, 10.0)
        with pytest.raises(ValueError, match="at least one measured line"):
            identify_frequency([], system, field, 0, (1e4, 1e6))
        with pytest.raises(ValueError, match="bracket"):
            identify_frequency([1.0], system, field, 0, (1e6, 1e4))

    def test_fit_tolerance_gate(self):
        system, field = build_scenario(1e-26, 2e5, 6e10, 1.0, 0.3, 0.5, 0.7, 0.0)
        lines = [l.frequency_hz + 1e3 for l in transition_lines(system, field, 0)]
        result = identify_frequency(
            lines, system, field, 0, (system.omega / 2, system.omega * 2), fit_tol_hz=1e-3
        )
        assert not result.identifiable
        assert "fit tolerance" in result.reason
