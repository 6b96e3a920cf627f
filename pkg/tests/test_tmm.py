"""Optics core: closed-form oracles, conservation, symmetry."""

import numpy as np
import pytest

from optistack import (ComplexIndex, SpectrumQuery, SpectrumResult, Stack,
                       average_quantity, evaluate_stack)


def fresnel_rt(n1, n2, angle, pol):
    """Textbook single-interface amplitudes, computed independently."""
    c1 = np.cos(angle)
    s2 = n1 * np.sin(angle) / n2
    c2 = np.sqrt(1.0 - s2 * s2 + 0j)
    if c2.imag < 0:
        c2 = -c2
    if pol == "s":
        r = (n1 * c1 - n2 * c2) / (n1 * c1 + n2 * c2)
        t = 2 * n1 * c1 / (n1 * c1 + n2 * c2)
    else:
        r = (n2 * c1 - n1 * c2) / (n2 * c1 + n1 * c2)
        t = 2 * n1 * c1 / (n2 * c1 + n1 * c2)
    return r, t, c2


def fresnel_RT(n1, n2, angle, pol):
    r, t, c2 = fresnel_rt(n1, n2, angle, pol)
    R = abs(r) ** 2
    if pol == "s":
        flux = (n2 * c2).real / (n1 * np.cos(angle)).real
    else:
        flux = (n2 * np.conj(c2)).real / (n1 * np.cos(angle)).real
    return R, abs(t) ** 2 * flux


def bare_interface(n1, n2):
    return Stack(ambient=ComplexIndex(n1), layers=(),
                 substrate=ComplexIndex(n2.real, n2.imag))


class TestSingleInterface:
    def test_air_glass_normal_is_four_percent(self):
        stack = bare_interface(1.0, 1.5 + 0j)
        res = evaluate_stack(stack, SpectrumQuery(wavelengths=[550.0]))
        assert res.R[0, 0] == pytest.approx(0.04, abs=1e-12)

    def test_matches_fresnel_closed_form(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n1 = rng.uniform(1.0, 2.5)
            n2 = complex(rng.uniform(1.0, 5.0), rng.uniform(0.0, 3.0))
            angle = rng.uniform(0.0, 1.4)
            pol = rng.choice(["s", "p"])
            stack = bare_interface(n1, n2)
            query = SpectrumQuery(wavelengths=[600.0], angles=[angle],
                                  polarization=pol)
            res = evaluate_stack(stack, query)
            R_ref, T_ref = fresnel_RT(n1, n2, angle, pol)
            assert res.R[0, 0] == pytest.approx(R_ref, abs=1e-10)
            assert res.T[0, 0] == pytest.approx(T_ref, abs=1e-10)

    def test_total_internal_reflection(self):
        # glass to air beyond the critical angle: everything comes back
        stack = bare_interface(1.5, 1.0 + 0j)
        query = SpectrumQuery(wavelengths=[550.0], angles=[1.0],
                              polarization="s")
        res = evaluate_stack(stack, query)
        assert res.R[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert res.T[0, 0] == pytest.approx(0.0, abs=1e-12)


class TestQuarterWaveStack:
    N_H, N_L, N_SUB = 2.3, 1.38, 1.52
    LAMBDA0 = 550.0

    def quarter_wave_stack(self, n_pairs):
        d_h = self.LAMBDA0 / (4 * self.N_H)
        d_l = self.LAMBDA0 / (4 * self.N_L)
        layers = [(ComplexIndex(self.N_H), d_h)]
        layers += [(ComplexIndex(self.N_L), d_l),
                   (ComplexIndex(self.N_H), d_h)] * n_pairs
        return Stack(ambient=ComplexIndex(1.0), layers=tuple(layers),
                     substrate=ComplexIndex(self.N_SUB))

    @pytest.mark.parametrize("n_pairs", [1, 2, 3, 4, 5, 6])
    def test_reflectance_matches_admittance_formula(self, n_pairs):
        stack = self.quarter_wave_stack(n_pairs)
        res = evaluate_stack(stack, SpectrumQuery(wavelengths=[self.LAMBDA0]))
        rho = (self.N_H / self.N_L) ** (2 * n_pairs) * self.N_H ** 2 / self.N_SUB
        expected = ((1 - rho) / (1 + rho)) ** 2
        assert res.R[0, 0] == pytest.approx(expected, abs=1e-8)

    def test_reflectance_grows_with_pairs(self):
        values = [evaluate_stack(self.quarter_wave_stack(n),
                                 SpectrumQuery(wavelengths=[self.LAMBDA0])).R[0, 0]
                  for n in range(1, 7)]
        assert np.all(np.diff(values) > 0)


def random_stack(rng, lossless):
    n_layers = rng.integers(1, 9)
    layers = []
    for _ in range(n_layers):
        n = rng.uniform(1.2, 5.0)
        k = 0.0 if lossless else rng.uniform(0.0, 4.0)
        layers.append((ComplexIndex(n, k), rng.uniform(5.0, 500.0)))
    return Stack(ambient=ComplexIndex(rng.uniform(1.0, 1.8)),
                 layers=tuple(layers),
                 substrate=ComplexIndex(rng.uniform(1.0, 3.0)))


class TestConservation:
    def test_fuzzed_stacks_conserve_energy(self):
        # criterion-level fuzz: bounds plus the lossless zero-absorption law
        rng = np.random.default_rng(2)
        wl = np.array([420.0, 780.0, 1600.0])
        angles = np.array([0.0, 0.7])
        for i in range(10_000):
            lossless = i % 2 == 0
            stack = random_stack(rng, lossless)
            res = evaluate_stack(stack, SpectrumQuery(wavelengths=wl,
                                                      angles=angles))
            assert np.all(res.R >= -1e-12) and np.all(res.R <= 1 + 1e-9)
            assert np.all(res.T >= -1e-12) and np.all(res.T <= 1 + 1e-9)
            assert np.all(res.A <= 1 + 1e-9)
            if lossless:
                assert np.all(np.abs(res.A) < 1e-9)
            else:
                assert np.all(res.A >= -1e-9)

    def test_thick_absorber_is_opaque_not_nan(self):
        # the phase clip keeps exp() finite for arbitrarily thick lossy layers
        stack = Stack(ambient=ComplexIndex(1.0),
                      layers=((ComplexIndex(3.0, 3.5), 5e6),),
                      substrate=ComplexIndex(1.5))
        res = evaluate_stack(stack, SpectrumQuery(wavelengths=[500.0]))
        assert np.all(np.isfinite(res.R))
        assert res.T[0, 0] == pytest.approx(0.0, abs=1e-20)


class TestSymmetries:
    def test_reciprocity_lossless_normal_incidence(self):
        rng = np.random.default_rng(3)
        wl = np.array([500.0, 900.0])
        for _ in range(50):
            stack = random_stack(rng, lossless=True)
            flipped = Stack(ambient=stack.substrate,
                            layers=tuple(reversed(stack.layers)),
                            substrate=stack.ambient)
            r1 = evaluate_stack(stack, SpectrumQuery(wavelengths=wl)).R
            r2 = evaluate_stack(flipped, SpectrumQuery(wavelengths=wl)).R
            np.testing.assert_allclose(r1, r2, atol=1e-10)

    def test_s_equals_p_at_normal_incidence(self):
        rng = np.random.default_rng(4)
        wl = np.array([633.0])
        for _ in range(20):
            stack = random_stack(rng, lossless=False)
            qs = SpectrumQuery(wavelengths=wl, polarization="s")
            qp = SpectrumQuery(wavelengths=wl, polarization="p")
            np.testing.assert_allclose(evaluate_stack(stack, qs).R,
                                       evaluate_stack(stack, qp).R, atol=1e-12)

    def test_unpolarized_is_mean_of_s_and_p(self):
        stack = random_stack(np.random.default_rng(5), lossless=False)
        wl = np.array([550.0])
        q = {pol: SpectrumQuery(wavelengths=wl, angles=[0.9], polarization=pol)
             for pol in ("s", "p", "unpolarized")}
        rs = evaluate_stack(stack, q["s"]).R
        rp = evaluate_stack(stack, q["p"]).R
        ru = evaluate_stack(stack, q["unpolarized"]).R
        np.testing.assert_allclose(ru, (rs + rp) / 2, atol=1e-14)


class TestDispersiveLayers:
    def test_array_index_matches_per_wavelength_scalars(self):
        wl = np.array([400.0, 600.0, 800.0])
        n_arr = np.array([2.0 + 0.1j, 1.9 + 0.05j, 1.85 + 0.0j])
        stack = Stack(ambient=ComplexIndex(1.0), layers=((n_arr, 120.0),),
                      substrate=ComplexIndex(1.5))
        res = evaluate_stack(stack, SpectrumQuery(wavelengths=wl))
        for j in range(wl.size):
            single = Stack(ambient=ComplexIndex(1.0),
                           layers=((ComplexIndex(n_arr[j].real, n_arr[j].imag),
                                    120.0),),
                           substrate=ComplexIndex(1.5))
            ref = evaluate_stack(single, SpectrumQuery(wavelengths=[wl[j]]))
            assert res.R[j, 0] == pytest.approx(ref.R[0, 0], abs=1e-14)

    def test_lossless_single_layer_has_no_absorption(self):
        stack = Stack(ambient=ComplexIndex(1.0),
                      layers=((ComplexIndex(1.38), 99.6),),
                      substrate=ComplexIndex(1.5))
        wl = np.linspace(350, 2200, 64)
        res = evaluate_stack(stack, SpectrumQuery(wavelengths=wl,
                                                  angles=[0.0, 0.4, 1.2]))
        assert np.all(np.abs(res.A) < 1e-9)


class TestValidationAndShapes:
    def test_result_shape_is_wavelengths_by_angles(self):
        stack = bare_interface(1.0, 1.5 + 0j)
        res = evaluate_stack(stack, SpectrumQuery(
            wavelengths=np.linspace(400, 700, 7), angles=[0.0, 0.3, 0.6]))
        assert res.R.shape == res.T.shape == res.A.shape == (7, 3)

    def test_rejects_lossy_ambient(self):
        with pytest.raises(ValueError, match="lossless"):
            Stack(ambient=ComplexIndex(1.0, 0.5), layers=(),
                  substrate=ComplexIndex(1.5))

    def test_rejects_nonpositive_thickness(self):
        with pytest.raises(ValueError, match="thickness"):
            Stack(ambient=ComplexIndex(1.0),
                  layers=((ComplexIndex(2.0), 0.0),),
                  substrate=ComplexIndex(1.5))

    def test_rejects_descending_wavelengths(self):
        with pytest.raises(ValueError, match="ascending"):
            SpectrumQuery(wavelengths=[700.0, 500.0])

    def test_rejects_grazing_angle(self):
        with pytest.raises(ValueError, match="angles"):
            SpectrumQuery(wavelengths=[550.0], angles=[np.pi / 2])

    def test_rejects_unknown_polarization(self):
        with pytest.raises(ValueError, match="polarization"):
            SpectrumQuery(wavelengths=[550.0], polarization="circular")

    def test_rejects_negative_index_component(self):
        with pytest.raises(ValueError):
            ComplexIndex(-1.0)
        with pytest.raises(ValueError):
            ComplexIndex(1.5, -0.1)

    def test_average_quantity(self):
        res = SpectrumResult(wavelengths=np.array([1.0, 2.0]),
                             angles=np.array([0.0]),
                             R=np.array([[0.2], [0.4]]),
                             T=np.array([[0.5], [0.5]]),
                             A=np.array([[0.3], [0.1]]))
        assert average_quantity(res, "R") == pytest.approx(0.3)
        assert average_quantity(res, "A") == pytest.approx(0.2)
        with pytest.raises(ValueError, match="quantity"):
            average_quantity(res, "Q")
