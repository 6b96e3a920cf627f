"""Photometric evaluation of an incandescent emitter wrapped in a filter.

The filter returns a fraction of the emitted infrared back to the
filament, so the filament runs hotter at the same electrical power and
emits more of its output inside the visible band. The chain here:
hemisphere-averaged effective emissivity of the enclosure, Planck
intensity, the power-balance temperature solve, and the visible-light
enhancement factor relative to the bare emitter.

Unit convention: the spectral-intensity scale is calibrated so that the
bare (black) emitter at the calibration power reproduces the reference
temperature exactly; only intensity ratios enter every reported result.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.optimize import brentq

from .materials import MaterialLibrary
from .structures import Structure, build_stack
from .tmm import ComplexIndex, SpectrumQuery, evaluate_stack

__all__ = [
    "EmitterSpec",
    "LuminosityCurve",
    "load_photopic_curve",
    "effective_emissivity",
    "angle_averaged_emissivity",
    "blackbody_intensity",
    "solve_emitter_temperature",
    "enhancement_factor",
    "photometry_report",
]

H_PLANCK = 6.62607015e-34   # J s
C_LIGHT = 2.99792458e8      # m / s
K_BOLTZMANN = 1.380649e-23  # J / K

WAVELENGTH_GRID_NM = np.arange(300.0, 5000.0 + 0.5, 1.0)
TEMPERATURE_BRACKET_K = (500.0, 6000.0)
N_ANGLE_NODES = 64
_EXP_CLIP = 700.0


@dataclass(frozen=True)
class EmitterSpec:
    """Operating point of the filament and its enclosure."""

    power_w: float = 100.0
    area_mm2: float = 20.0
    view_factor: float = 1.0
    reference_temperature_k: float = 2578.0
    calibration_power_w: float | None = None

    def __post_init__(self):
        if self.power_w <= 0 or self.area_mm2 <= 0:
            raise ValueError("power and area must be positive")
        if not 0.0 < self.view_factor <= 1.0:
            raise ValueError(f"view factor must be in (0, 1], got {self.view_factor}")
        if self.reference_temperature_k <= 0:
            raise ValueError("reference temperature must be positive")
        if self.calibration_power_w is None:
            object.__setattr__(self, "calibration_power_w", self.power_w)
        elif self.calibration_power_w <= 0:
            raise ValueError("calibration power must be positive")


@dataclass(frozen=True)
class LuminosityCurve:
    """Tabulated photopic sensitivity V(wavelength). Zero outside the table."""

    wavelengths_nm: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths_nm, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if wl.ndim != 1 or wl.size < 2 or v.shape != wl.shape:
            raise ValueError("luminosity table must be two matching 1-D columns")
        if np.any(np.diff(wl) <= 0):
            raise ValueError("luminosity wavelengths must be strictly ascending")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("luminosity values must lie in [0, 1]")
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "values", v)

    def __call__(self, wavelengths_nm) -> np.ndarray:
        wl = np.asarray(wavelengths_nm, dtype=float)
        return np.interp(wl, self.wavelengths_nm, self.values, left=0.0, right=0.0)


def load_photopic_curve(path: str | None = None) -> LuminosityCurve:
    """Load V(lambda) from CSV (header ``wavelength_nm,V``); bundled curve
    by default."""
    if path is None:
        path = str(resources.files("optistack").joinpath(
            "data", "photopic_luminosity.csv"))
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "wavelength_nm,V":
            raise ValueError(f"{path}: expected header 'wavelength_nm,V', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return LuminosityCurve(wavelengths_nm=data[:, 0], values=data[:, 1])


def _reflectance(structure: Structure | None, library: MaterialLibrary,
                 wavelengths_nm: np.ndarray, angles: np.ndarray,
                 ambient: ComplexIndex, substrate: ComplexIndex) -> np.ndarray:
    if structure is None or len(structure) == 0:
        if ambient == substrate:
            return np.zeros((wavelengths_nm.size, angles.size))
        stack_structure = Structure(())
    else:
        stack_structure = structure
    stack = build_stack(stack_structure, library, wavelengths_nm,
                        ambient=ambient, substrate=substrate)
    query = SpectrumQuery(wavelengths=wavelengths_nm, angles=angles,
                          polarization="unpolarized")
    return evaluate_stack(stack, query).R


def effective_emissivity(structure: Structure | None, library: MaterialLibrary,
                         wavelengths_nm: np.ndarray, angles: np.ndarray,
                         view_factor: float,
                         ambient: ComplexIndex = ComplexIndex(1.0),
                         substrate: ComplexIndex = ComplexIndex(1.0)) -> np.ndarray:
    """eps_eff = 1 - f^2 R on the (wavelength x angle) grid.

    One factor of f for radiation reaching the filter, one for the
    reflected fraction landing back on the filament. ``structure=None``
    means no filter (bare emitter), for which eps_eff = 1.
    """
    R = _reflectance(structure, library, np.atleast_1d(wavelengths_nm),
                     np.atleast_1d(angles), ambient, substrate)
    return 1.0 - view_factor ** 2 * R


def angle_averaged_emissivity(structure: Structure | None,
                              library: MaterialLibrary,
                              wavelengths_nm: np.ndarray, view_factor: float,
                              n_nodes: int = N_ANGLE_NODES,
                              ambient: ComplexIndex = ComplexIndex(1.0),
                              substrate: ComplexIndex = ComplexIndex(1.0)
                              ) -> np.ndarray:
    """Projected-solid-angle average over the hemisphere:

        eps_avg(lambda) = 2 * int_0^{pi/2} cos(d) sin(d) eps_eff(lambda, d) dd

    by Gauss-Legendre quadrature in the angle.
    """
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    delta = (x + 1.0) * (np.pi / 4.0)
    eps = effective_emissivity(structure, library, wavelengths_nm, delta,
                               view_factor, ambient=ambient, substrate=substrate)
    kernel = 2.0 * np.cos(delta) * np.sin(delta) * (np.pi / 4.0)
    return eps @ (kernel * w)


def blackbody_intensity(wavelengths_nm, temperature_k: float) -> np.ndarray:
    """Planck spectral intensity 2hc^2/lambda^5 / (exp(hc/(lambda k t)) - 1).

    Wavelength in nm, temperature in K; absolute scale is irrelevant
    downstream (calibrated ratios only).
    """
    if temperature_k <= 0:
        raise ValueError("temperature must be positive")
    lam = np.atleast_1d(np.asarray(wavelengths_nm, dtype=float)) * 1e-9
    if np.any(lam <= 0):
        raise ValueError("wavelengths must be positive")
    x = np.minimum(H_PLANCK * C_LIGHT / (lam * K_BOLTZMANN * temperature_k),
                   _EXP_CLIP)
    return 2.0 * H_PLANCK * C_LIGHT ** 2 / lam ** 5 / np.expm1(x)


def _integrate(values: np.ndarray, wavelengths_nm: np.ndarray) -> float:
    return float(np.trapezoid(values, wavelengths_nm))


def _resolve_eps_avg(structure: Structure | None, library: MaterialLibrary,
                     emitter: EmitterSpec, wavelengths_nm: np.ndarray,
                     eps_avg: np.ndarray | None) -> np.ndarray:
    if eps_avg is not None:
        return np.asarray(eps_avg, dtype=float)
    if structure is None:
        return np.ones(wavelengths_nm.size)
    return angle_averaged_emissivity(structure, library, wavelengths_nm,
                                     emitter.view_factor)


def solve_emitter_temperature(structure: Structure | None,
                              library: MaterialLibrary,
                              emitter: EmitterSpec,
                              wavelengths_nm: np.ndarray = WAVELENGTH_GRID_NM,
                              tolerance: float = 1e-4,
                              eps_avg: np.ndarray | None = None) -> float:
    """Temperature at which the filament radiates the operating power.

    Power balance: P = Area * C * int I(lambda, t) eps_avg(lambda) dlambda,
    with the scale C fixed so the bare emitter at the calibration power
    sits exactly at the reference temperature. The integrand is strictly
    increasing in t, so the bracketed root is unique.
    """
    t0 = emitter.reference_temperature_k
    eps_avg = _resolve_eps_avg(structure, library, emitter, wavelengths_nm,
                               eps_avg)
    reference = _integrate(blackbody_intensity(wavelengths_nm, t0),
                           wavelengths_nm)
    # Area * C * reference = calibration power, hence:
    target = reference * emitter.power_w / emitter.calibration_power_w

    def balance(t: float) -> float:
        radiated = _integrate(
            blackbody_intensity(wavelengths_nm, t) * eps_avg, wavelengths_nm)
        return radiated - target

    lo, hi = TEMPERATURE_BRACKET_K
    f_lo, f_hi = balance(lo), balance(hi)
    if f_lo > 0 or f_hi < 0:
        raise ValueError(
            f"no temperature bracket in [{lo}, {hi}] K: "
            f"balance({lo})={f_lo:.3e}, balance({hi})={f_hi:.3e}")
    # |delta P| < tolerance * P expressed through the calibrated scale
    xtol = 1e-6
    t = brentq(balance, lo, hi, xtol=xtol, rtol=8.9e-16)
    assert abs(balance(t)) < tolerance * target
    return float(t)


def enhancement_factor(structure: Structure | None, library: MaterialLibrary,
                       emitter: EmitterSpec, luminosity: LuminosityCurve,
                       wavelengths_nm: np.ndarray = WAVELENGTH_GRID_NM,
                       eps_avg: np.ndarray | None = None) -> float:
    """Visible output relative to the bare emitter at the same power:

        chi = int eps_avg I(lambda, t) V / int I(lambda, t0) V

    with t the solved filtered-emitter temperature.
    """
    eps_avg = _resolve_eps_avg(structure, library, emitter, wavelengths_nm,
                               eps_avg)
    t = solve_emitter_temperature(structure, library, emitter, wavelengths_nm,
                                  eps_avg=eps_avg)
    t0 = emitter.reference_temperature_k
    v = luminosity(wavelengths_nm)
    num = _integrate(eps_avg * blackbody_intensity(wavelengths_nm, t) * v,
                     wavelengths_nm)
    den = _integrate(blackbody_intensity(wavelengths_nm, t0) * v,
                     wavelengths_nm)
    return num / den


def photometry_report(structure: Structure | None, library: MaterialLibrary,
                      emitter: EmitterSpec, luminosity: LuminosityCurve,
                      wavelengths_nm: np.ndarray = WAVELENGTH_GRID_NM) -> dict:
    eps_avg = _resolve_eps_avg(structure, library, emitter, wavelengths_nm,
                               None)
    t = solve_emitter_temperature(structure, library, emitter, wavelengths_nm,
                                  eps_avg=eps_avg)
    chi = enhancement_factor(structure, library, emitter, luminosity,
                             wavelengths_nm, eps_avg=eps_avg)
    return {"t_solved_K": t, "chi": chi, "f": emitter.view_factor}
