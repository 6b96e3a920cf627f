"""Emitter photometry: hemisphere averaging, Planck intensity, the
power-balance temperature solve, and the visible enhancement factor."""

import numpy as np
import pytest

from optistack.materials import bundled_library
from optistack.photometry import (EmitterSpec, LuminosityCurve,
                                  N_ANGLE_NODES, TEMPERATURE_BRACKET_K,
                                  WAVELENGTH_GRID_NM,
                                  angle_averaged_emissivity,
                                  blackbody_intensity, effective_emissivity,
                                  enhancement_factor, load_photopic_curve,
                                  photometry_report, solve_emitter_temperature)
from optistack.structures import Structure


@pytest.fixture(scope="module")
def library():
    return bundled_library().subset(["MgF2", "TiO2"])


@pytest.fixture(scope="module")
def photopic():
    return load_photopic_curve()


def ir_mirror(periods):
    # quarter-wave pair tuned near 1200 nm, free-standing
    pairs = []
    for _ in range(periods):
        pairs += [("TiO2", 130.0), ("MgF2", 217.0)]
    return Structure.from_pairs(pairs)


class TestEmitterSpec:
    def test_defaults(self):
        e = EmitterSpec()
        assert e.power_w == 100.0
        assert e.calibration_power_w == 100.0
        assert e.view_factor == 1.0

    def test_calibration_defaults_to_power(self):
        e = EmitterSpec(power_w=60.0)
        assert e.calibration_power_w == 60.0
        e2 = EmitterSpec(power_w=60.0, calibration_power_w=100.0)
        assert e2.calibration_power_w == 100.0

    def test_validation(self):
        with pytest.raises(ValueError):
            EmitterSpec(power_w=0.0)
        with pytest.raises(ValueError):
            EmitterSpec(area_mm2=-1.0)
        with pytest.raises(ValueError):
            EmitterSpec(view_factor=0.0)
        with pytest.raises(ValueError):
            EmitterSpec(view_factor=1.2)
        with pytest.raises(ValueError):
            EmitterSpec(reference_temperature_k=0.0)
        with pytest.raises(ValueError):
            EmitterSpec(calibration_power_w=-5.0)


class TestLuminosityCurve:
    def test_interpolates_and_clamps_to_zero(self):
        curve = LuminosityCurve(np.array([500.0, 600.0]),
                                np.array([0.4, 0.8]))
        assert curve(550.0) == pytest.approx(0.6)
        assert curve(400.0) == 0.0
        assert curve(700.0) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            LuminosityCurve(np.array([500.0]), np.array([1.0]))
        with pytest.raises(ValueError):
            LuminosityCurve(np.array([600.0, 500.0]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            LuminosityCurve(np.array([500.0, 600.0]), np.array([0.5, 1.5]))
        with pytest.raises(ValueError):
            LuminosityCurve(np.array([500.0, 600.0]), np.array([0.5]))

    def test_bundled_curve_peaks_at_555(self, photopic):
        assert photopic(555.0) == pytest.approx(1.0, abs=1e-6)
        assert photopic(555.0) == photopic.values.max()
        # photopic response is dead in the deep UV and IR
        assert photopic(300.0) == 0.0
        assert photopic(5000.0) == 0.0

    def test_loader_rejects_wrong_header(self, tmp_path):
        bad = tmp_path / "v.csv"
        bad.write_text("wl,V\n555,1.0\n556,0.9\n")
        with pytest.raises(ValueError, match="header"):
            load_photopic_curve(str(bad))


class TestEffectiveEmissivity:
    def test_bare_emitter_is_black(self, library):
        wl = np.array([500.0, 1000.0])
        eps = effective_emissivity(None, library, wl, np.array([0.0]), 1.0)
        np.testing.assert_array_equal(eps, np.ones((2, 1)))

    def test_empty_structure_matched_media_is_black(self, library):
        wl = np.array([500.0, 1000.0])
        eps = effective_emissivity(Structure.from_pairs([]), library, wl,
                                   np.array([0.0, 0.4]), 0.9)
        np.testing.assert_array_equal(eps, np.ones((2, 2)))

    def test_view_factor_squared_scaling(self, library):
        # eps = 1 - f^2 R, so (1 - eps) must scale exactly with f^2
        wl = np.linspace(400.0, 2000.0, 9)
        angles = np.array([0.0, 0.3])
        s = ir_mirror(2)
        eps_full = effective_emissivity(s, library, wl, angles, 1.0)
        eps_part = effective_emissivity(s, library, wl, angles, 0.95)
        np.testing.assert_allclose(1.0 - eps_part,
                                   0.95 ** 2 * (1.0 - eps_full), atol=1e-12)

    def test_bounded_by_view_factor(self, library):
        wl = np.linspace(400.0, 3000.0, 14)
        s = ir_mirror(3)
        f = 0.9
        eps = effective_emissivity(s, library, wl, np.array([0.0, 0.5]), f)
        assert np.all(eps <= 1.0 + 1e-12)
        assert np.all(eps >= 1.0 - f ** 2 - 1e-12)


class TestAngleAverage:
    def test_kernel_normalization(self, library):
        # a black enclosure averages to exactly 1 at any node count
        wl = np.array([600.0, 1500.0])
        for n in (16, 64):
            avg = angle_averaged_emissivity(None, library, wl, 1.0, n_nodes=n)
            np.testing.assert_allclose(avg, 1.0, atol=1e-12)

    def test_matches_dense_trapezoid(self, library):
        wl = np.linspace(400.0, 2400.0, 51)
        s = ir_mirror(2)
        avg = angle_averaged_emissivity(s, library, wl, 1.0)
        # grazing incidence itself is outside the query domain; the
        # cos*sin kernel vanishes there so truncation costs ~1e-12
        delta = np.linspace(0.0, np.pi / 2.0 - 1e-6, 5001)
        eps = effective_emissivity(s, library, wl, delta, 1.0)
        kernel = 2.0 * np.cos(delta) * np.sin(delta)
        dense = np.trapezoid(eps * kernel, delta, axis=1)
        np.testing.assert_allclose(avg, dense, atol=1e-6)

    def test_node_doubling_converged(self, library):
        wl = np.linspace(300.0, 3000.0, 28)
        s = ir_mirror(3)
        a64 = angle_averaged_emissivity(s, library, wl, 1.0, n_nodes=64)
        a128 = angle_averaged_emissivity(s, library, wl, 1.0, n_nodes=128)
        assert np.max(np.abs(a64 - a128)) < 1e-8

    def test_default_node_count(self):
        assert N_ANGLE_NODES == 64


class TestBlackbodyIntensity:
    def test_wien_displacement_peak(self):
        for t in (2578.0, 3000.0, 4000.0):
            i = blackbody_intensity(WAVELENGTH_GRID_NM, t)
            peak = WAVELENGTH_GRID_NM[np.argmax(i)]
            assert abs(peak - 2.897771955e6 / t) <= 1.0

    def test_monotone_in_temperature(self):
        wl = np.linspace(300.0, 5000.0, 100)
        i1 = blackbody_intensity(wl, 2000.0)
        i2 = blackbody_intensity(wl, 2600.0)
        assert np.all(i2 > i1)

    def test_positive_and_finite_in_clipped_regime(self):
        i = blackbody_intensity(np.array([300.0]), 500.0)
        assert np.isfinite(i[0])
        assert i[0] > 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            blackbody_intensity(np.array([500.0]), 0.0)
        with pytest.raises(ValueError):
            blackbody_intensity(np.array([-500.0]), 3000.0)


class TestTemperatureSolve:
    def test_bare_emitter_sits_at_reference(self, library):
        t = solve_emitter_temperature(None, library, EmitterSpec())
        assert t == pytest.approx(2578.0, abs=1e-5)

    def test_monotone_in_power(self, library):
        temps = []
        for p in (80.0, 100.0, 120.0):
            e = EmitterSpec(power_w=p, calibration_power_w=100.0)
            temps.append(solve_emitter_temperature(None, library, e))
        assert temps[0] < temps[1] < temps[2]
        assert temps[1] == pytest.approx(2578.0, abs=1e-5)

    def test_solution_satisfies_power_balance(self, library):
        e = EmitterSpec(power_w=130.0, calibration_power_w=100.0)
        t = solve_emitter_temperature(None, library, e)
        wl = WAVELENGTH_GRID_NM
        radiated = np.trapezoid(blackbody_intensity(wl, t), wl)
        reference = np.trapezoid(blackbody_intensity(wl, 2578.0), wl)
        assert radiated == pytest.approx(1.3 * reference, rel=1e-6)

    def test_reflective_enclosure_runs_hotter(self, library):
        e = EmitterSpec()
        t_bare = solve_emitter_temperature(None, library, e)
        t_weak = solve_emitter_temperature(ir_mirror(2), library, e)
        t_strong = solve_emitter_temperature(ir_mirror(8), library, e)
        assert t_bare < t_weak < t_strong

    def test_lower_view_factor_runs_cooler(self, library):
        s = ir_mirror(6)
        t_full = solve_emitter_temperature(
            s, library, EmitterSpec(view_factor=1.0))
        t_part = solve_emitter_temperature(
            s, library, EmitterSpec(view_factor=0.95))
        assert t_part < t_full

    def test_no_bracket_raises(self, library):
        with pytest.raises(ValueError, match="bracket"):
            solve_emitter_temperature(None, library, EmitterSpec(
                power_w=1e5, calibration_power_w=100.0))
        with pytest.raises(ValueError, match="bracket"):
            solve_emitter_temperature(None, library, EmitterSpec(
                power_w=1e-4, calibration_power_w=100.0))

    def test_bracket_constant(self):
        assert TEMPERATURE_BRACKET_K == (500.0, 6000.0)


class TestEnhancementFactor:
    def test_bare_emitter_is_unity(self, library, photopic):
        chi = enhancement_factor(None, library, EmitterSpec(), photopic)
        assert chi == pytest.approx(1.0, abs=1e-6)

    def test_ir_mirror_boosts_visible_output(self, library, photopic):
        chi = enhancement_factor(ir_mirror(8), library, EmitterSpec(),
                                 photopic)
        assert chi > 1.0

    def test_stronger_mirror_boosts_more(self, library, photopic):
        chi_weak = enhancement_factor(ir_mirror(2), library, EmitterSpec(),
                                      photopic)
        chi_strong = enhancement_factor(ir_mirror(8), library, EmitterSpec(),
                                        photopic)
        assert chi_strong > chi_weak

    def test_view_factor_ordering(self, library, photopic):
        s = ir_mirror(8)
        chi_full = enhancement_factor(s, library,
                                      EmitterSpec(view_factor=1.0), photopic)
        chi_part = enhancement_factor(s, library,
                                      EmitterSpec(view_factor=0.95), photopic)
        assert chi_part < chi_full


class TestReport:
    def test_keys_and_consistency(self, library, photopic):
        s = ir_mirror(4)
        e = EmitterSpec()
        report = photometry_report(s, library, e, photopic)
        assert set(report) == {"t_solved_K", "chi", "f"}
        assert report["f"] == 1.0
        assert report["t_solved_K"] == pytest.approx(
            solve_emitter_temperature(s, library, e), abs=1e-9)
        assert report["chi"] == pytest.approx(
            enhancement_factor(s, library, e, photopic), abs=1e-9)

    def test_bare_report(self, library, photopic):
        report = photometry_report(None, library, EmitterSpec(), photopic)
        assert report["t_solved_K"] == pytest.approx(2578.0, abs=1e-5)
        assert report["chi"] == pytest.approx(1.0, abs=1e-6)
