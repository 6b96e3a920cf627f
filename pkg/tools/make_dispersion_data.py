#!/usr/bin/env python3
"""Generate the bundled optical-constant tables (n, k vs wavelength).

Writes one CSV per material into src/optistack/data/materials plus a
manifest, and the photopic luminosity curve into src/optistack/data.

Sources, by material class:
  * transparent dielectrics: published Sellmeier fits (Malitson fused
    silica and sapphire, Dodge MgF2, Klein ZnS, Connolly ZnSe) or
    Sellmeier forms fitted to thin-film ellipsometry values (TiO2
    anatase, HfO2, ZnO);
  * metals (Ag, Al, Ni): Lorentz-Drude oscillator fits of Rakic et al.,
    Appl. Opt. 37, 5271 (1998);
  * deposited films (Si, Ge, Fe2O3, Ti, Cr, TiO2, SiN, SiC): anchor
    tables representative of sputtered or evaporated films,
    monotone-cubic resampled.

Run from the repository root:  python tools/make_dispersion_data.py
"""

import json
import pathlib

import numpy as np
from scipy.interpolate import PchipInterpolator

HERE = pathlib.Path(__file__).resolve().parent
DATA_DIR = HERE.parent / "src" / "optistack" / "data"
MATERIALS_DIR = DATA_DIR / "materials"

# output grid, nm
GRID = np.arange(300.0, 5500.0 + 1e-9, 5.0)

HC_EV_NM = 1239.841984  # photon energy (eV) * wavelength (nm)


# ---------------------------------------------------------------------------
# dielectric models
# ---------------------------------------------------------------------------

def sellmeier(wl_nm, terms, const=1.0):
    """n^2 = const + sum_i B_i lam^2 / (lam^2 - C_i), lam in um, C in um^2."""
    lam2 = (wl_nm / 1000.0) ** 2
    n2 = np.full_like(lam2, const)
    for b, c in terms:
        n2 = n2 + b * lam2 / (lam2 - c)
    return np.sqrt(n2)


def sio2(wl):
    # Malitson 1965, fused silica
    return sellmeier(wl, [(0.6961663, 0.0684043**2),
                          (0.4079426, 0.1162414**2),
                          (0.8974794, 9.896161**2)])


def mgf2(wl):
    # Dodge 1984, ordinary ray
    return sellmeier(wl, [(0.48755108, 0.04338408**2),
                          (0.39875031, 0.09461442**2),
                          (2.3120353, 23.793604**2)])


def al2o3(wl):
    # Malitson 1962, sapphire ordinary ray
    return sellmeier(wl, [(1.4313493, 0.0726631**2),
                          (0.65054713, 0.1193242**2),
                          (5.3414021, 18.028251**2)])


def zns(wl):
    # Klein 1986, Cleartran ZnS
    lam2 = (wl / 1000.0) ** 2
    n2 = 8.393 + 0.14383 / (lam2 - 0.2421**2) + 4430.99 / (lam2 - 36.71**2)
    return np.sqrt(n2)


ZNSE_N_UV_TABLE = [
    # below the direct gap the Connolly fit has a pole; splice ellipsometry
    # anchors for 300-500 nm instead
    (300, 2.70), (350, 2.90), (400, 2.95), (440, 2.85), (470, 2.78),
]


def znse(wl):
    # Connolly 1979 above 500 nm, anchor table below
    terms = [(4.2980149, 0.1920630**2),
             (0.62776557, 0.37878260**2),
             (2.8955633, 46.994595**2)]
    n = sellmeier(np.maximum(wl, 500.0), terms)
    n500 = float(sellmeier(np.array([500.0]), terms)[0])
    pts = np.asarray(ZNSE_N_UV_TABLE + [(500.0, n500)])
    uv = PchipInterpolator(pts[:, 0], pts[:, 1])(wl)
    return np.where(wl < 500.0, uv, n)


SIN_TABLE = [
    # PECVD silicon nitride film, slightly nitrogen-rich
    (300, 2.0615), (400, 2.0386), (500, 2.0158), (600, 1.9929),
    (700, 1.9691), (850, 1.9440), (1000, 1.9183), (1200, 1.8920),
    (1500, 1.8651), (2000, 1.8377), (2700, 1.8098), (3800, 1.7815),
    (5500, 1.7530),
]

SIC_TABLE = [
    # sputtered amorphous SiC film; shallow index minimum near 1 um,
    # rising toward the far-infrared phonon resonance
    (300, 2.6060), (400, 2.5844), (500, 2.5644), (600, 2.5486),
    (700, 2.5381), (850, 2.5322), (1000, 2.5315), (1200, 2.5347),
    (1500, 2.5404), (2000, 2.5474), (2700, 2.5547), (3800, 2.5617),
    (5500, 2.5685),
]


TIO2_TABLE = [
    # sputtered titania film; slightly substoichiometric, weak visible loss
    (300, 2.6084, 0.2519), (400, 2.5159, 0.1870), (500, 2.4373, 0.1239),
    (700, 2.3330, 0.0701), (1000, 2.2102, 0.0242), (1500, 2.1265, 0.0),
    (2500, 2.0872, 0.0), (4000, 2.0581, 0.0), (5500, 2.0330, 0.0),
]


def hfo2(wl):
    # amorphous thin film, fit anchored at n(550) ~ 2.08
    return sellmeier(wl, [(2.7669, 0.22558**2)])


def zno(wl):
    # sputtered thin film, fit anchored at n(550) ~ 2.00
    return sellmeier(wl, [(2.66364, 0.18409**2)])


# ---------------------------------------------------------------------------
# Lorentz-Drude metals (Rakic et al. 1998), parameters in eV
# ---------------------------------------------------------------------------

LD_PARAMS = {
    # name: (omega_p, f0, gamma0, [(f_j, gamma_j, omega_j), ...])
    "Ag": (9.01, 0.845, 0.048, [(0.065, 3.886, 0.816),
                                (0.124, 0.452, 4.481),
                                (0.011, 0.065, 8.185),
                                (0.840, 0.916, 9.083),
                                (5.646, 2.419, 20.29)]),
    "Al": (14.98, 0.523, 0.047, [(0.227, 0.333, 0.162),
                                 (0.050, 0.312, 1.544),
                                 (0.166, 1.351, 1.808),
                                 (0.030, 3.382, 3.473)]),
    "Ni": (15.92, 0.096, 0.048, [(0.100, 4.511, 0.174),
                                 (0.135, 1.334, 0.582),
                                 (0.106, 2.178, 1.597),
                                 (0.729, 6.292, 6.089)]),
}


def lorentz_drude(wl_nm, name):
    omega = HC_EV_NM / wl_nm  # eV
    wp, f0, g0, oscillators = LD_PARAMS[name]
    eps = 1.0 - f0 * wp**2 / (omega**2 + 1j * g0 * omega)
    for fj, gj, wj in oscillators:
        eps = eps + fj * wp**2 / ((wj**2 - omega**2) - 1j * gj * omega)
    nk = np.sqrt(eps)
    # principal root already has Im >= 0 for Im(eps) > 0
    return nk.real, nk.imag


# ---------------------------------------------------------------------------
# anchor tables for absorbing films: (wavelength nm, n, k)
# Sputter/evaporation-grown films of these materials scatter widely across
# published measurements (crystallinity, density, stoichiometry); the values
# below sit inside that spread and describe lossy as-deposited films.
# ---------------------------------------------------------------------------

SI_TABLE = [
    # amorphous silicon film with sub-gap absorption tail
    (300, 4.2670, 2.1263), (400, 4.2338, 1.7888), (450, 4.1830, 1.4617),
    (500, 4.1038, 1.1552), (550, 3.9964, 0.8807), (620, 3.8658, 0.6506),
    (700, 3.7186, 0.4740), (800, 3.5615, 0.3496), (950, 3.4034, 0.2637),
    (1100, 3.2592, 0.1927), (1400, 3.1518, 0.1172), (2000, 3.0937, 0.0495),
    (3000, 3.0573, 0.0168), (5500, 3.0284, 0.0),
]

GE_TABLE = [
    # amorphous germanium film with sub-gap absorption tail
    (300, 3.5183, 2.6749), (400, 3.7262, 2.4862), (450, 3.9234, 2.2930),
    (500, 4.1012, 2.0904), (550, 4.2519, 1.8755), (620, 4.3674, 1.6470),
    (700, 4.4382, 1.4112), (800, 4.4598, 1.1787), (950, 4.4319, 0.9596),
    (1100, 4.3540, 0.7579), (1300, 4.2321, 0.5688), (1600, 4.0857, 0.3901),
    (2000, 3.9373, 0.2345), (3000, 3.7923, 0.1096), (5500, 3.6493, 0.0),
]

FE2O3_TABLE = [
    # hematite film, defect absorption persisting past the band edge
    (300, 2.7904, 0.9766), (400, 2.7638, 0.8200), (450, 2.7341, 0.6660),
    (500, 2.6987, 0.5229), (550, 2.6519, 0.4003), (600, 2.5907, 0.3043),
    (650, 2.5174, 0.2363), (700, 2.4387, 0.1926), (800, 2.3647, 0.1637),
    (1000, 2.3110, 0.1363), (1300, 2.2927, 0.1017), (1800, 2.3097, 0.0659),
    (2600, 2.3381, 0.0382), (4000, 2.3715, 0.0171), (5500, 2.4067, 0.0),
]

TI_TABLE = [
    # evaporated titanium film
    (300, 1.8143, 2.1103), (400, 2.0826, 2.3711), (500, 2.3494, 2.6304),
    (600, 2.6117, 2.8885), (700, 2.8652, 3.1473), (850, 3.1051, 3.4128),
    (1000, 3.3253, 3.6913), (1200, 3.5233, 3.9873), (1500, 3.7025, 4.3051),
    (2000, 3.8712, 4.6495), (2700, 4.0348, 5.0219), (3800, 4.1959, 5.4136),
    (5500, 4.3562, 5.8139),
]

CR_TABLE = [
    # evaporated chromium film
    (300, 2.3568, 2.6063), (400, 2.7085, 2.8446), (500, 3.0524, 3.0850),
    (600, 3.3777, 3.3367), (700, 3.6709, 3.6137), (850, 3.9153, 3.9295),
    (1000, 4.0985, 4.2967), (1200, 4.2146, 4.7287), (1500, 4.2644, 5.2311),
    (2000, 4.2649, 5.7926), (2700, 4.2521, 6.4031), (3800, 4.2351, 7.0513),
    (5500, 4.2179, 7.7177),
]

ZNSE_K_TABLE = [
    # direct gap near 460 nm; interband tail
    (300, 1.10), (320, 0.90), (340, 0.70), (360, 0.55), (380, 0.45),
    (400, 0.30), (420, 0.15), (440, 0.05), (460, 0.01), (470, 0.0),
    (5500, 0.0),
]


def from_anchor_table(wl, table):
    pts = np.asarray(table, dtype=float)
    n = PchipInterpolator(pts[:, 0], pts[:, 1])(wl)
    k = np.maximum(PchipInterpolator(pts[:, 0], pts[:, 2])(wl), 0.0)
    return n, k


def tabulated_k(wl, table):
    pts = np.asarray(table, dtype=float)
    return np.maximum(PchipInterpolator(pts[:, 0], pts[:, 1])(wl), 0.0)


# ---------------------------------------------------------------------------
# photopic luminosity (CIE 1924 V(lambda), 10 nm steps + 555 nm peak)
# ---------------------------------------------------------------------------

PHOTOPIC = [
    (380, 0.00004), (390, 0.00012), (400, 0.0004), (410, 0.0012),
    (420, 0.0040), (430, 0.0116), (440, 0.023), (450, 0.038),
    (460, 0.060), (470, 0.091), (480, 0.139), (490, 0.208),
    (500, 0.323), (510, 0.503), (520, 0.710), (530, 0.862),
    (540, 0.954), (550, 0.995), (555, 1.000), (560, 0.995),
    (570, 0.952), (580, 0.870), (590, 0.757), (600, 0.631),
    (610, 0.503), (620, 0.381), (630, 0.265), (640, 0.175),
    (650, 0.107), (660, 0.061), (670, 0.032), (680, 0.017),
    (690, 0.0082), (700, 0.0041), (710, 0.0021), (720, 0.00105),
    (730, 0.00052), (740, 0.00025), (750, 0.00012), (760, 0.00006),
    (770, 0.00003), (780, 0.000015),
]


def write_csv(path, wl, n, k):
    with open(path, "w") as fh:
        fh.write("wavelength_nm,n,k\n")
        for w, nn, kk in zip(wl, n, k):
            fh.write(f"{w:.1f},{nn:.6f},{max(kk, 0.0):.6f}\n")


def main():
    MATERIALS_DIR.mkdir(parents=True, exist_ok=True)
    zeros = np.zeros_like(GRID)

    tables = {}
    for name, fn in [("SiO2", sio2), ("MgF2", mgf2), ("Al2O3", al2o3),
                     ("ZnS", zns), ("HfO2", hfo2), ("ZnO", zno)]:
        tables[name] = (fn(GRID), zeros)

    for name, table in [("SiN", SIN_TABLE), ("SiC", SIC_TABLE)]:
        pts = np.asarray(table, dtype=float)
        tables[name] = (PchipInterpolator(pts[:, 0], pts[:, 1])(GRID), zeros)

    n_znse = znse(GRID)
    tables["ZnSe"] = (n_znse, tabulated_k(GRID, ZNSE_K_TABLE))

    for name in LD_PARAMS:
        tables[name] = lorentz_drude(GRID, name)

    for name, table in [("Si", SI_TABLE), ("Ge", GE_TABLE),
                        ("Fe2O3", FE2O3_TABLE), ("Ti", TI_TABLE),
                        ("Cr", CR_TABLE), ("TiO2", TIO2_TABLE)]:
        tables[name] = from_anchor_table(GRID, table)

    manifest = {}
    for name in sorted(tables):
        n, k = tables[name]
        fname = f"{name}.csv"
        write_csv(MATERIALS_DIR / fname, GRID, n, k)
        manifest[name] = f"materials/{fname}"

    with open(DATA_DIR / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(DATA_DIR / "photopic_luminosity.csv", "w") as fh:
        fh.write("wavelength_nm,V\n")
        for w, v in PHOTOPIC:
            fh.write(f"{w:.1f},{v:.6f}\n")

    print(f"wrote {len(manifest)} material tables to {MATERIALS_DIR}")


if __name__ == "__main__":
    main()
