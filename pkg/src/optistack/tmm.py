"""Coherent transfer-matrix optics for planar multilayer stacks.

Computes reflectance, transmittance, and absorptance of a layer stack
between two semi-infinite media, for s/p/unpolarized plane waves at
arbitrary incidence, vectorized over wavelength. All functions are pure;
evaluating many stacks concurrently is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "ComplexIndex",
    "Stack",
    "SpectrumQuery",
    "SpectrumResult",
    "evaluate_stack",
    "average_quantity",
]

POLARIZATIONS = ("s", "p", "unpolarized")

# Im(phase) cap: beyond this a layer is opaque to ~1e-30 and the growing
# exponential in the inverse propagation term would overflow.
_MAX_IM_PHASE = 35.0


@dataclass(frozen=True)
class ComplexIndex:
    """Complex refractive index n + ik at a single wavelength."""

    n: float
    k: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.n) and np.isfinite(self.k)):
            raise ValueError("refractive index components must be finite")
        if self.n <= 0:
            raise ValueError(f"real index must be positive, got {self.n}")
        if self.k < 0:
            raise ValueError(f"extinction coefficient must be >= 0, got {self.k}")

    @property
    def value(self) -> complex:
        return complex(self.n, self.k)


# A layer index is either a single ComplexIndex (dispersion-free) or an
# array of complex values aligned with the query wavelengths.
LayerIndex = Union[ComplexIndex, np.ndarray]


@dataclass(frozen=True)
class Stack:
    """Layer stack between a lossless ambient and a semi-infinite substrate.

    ``layers`` is an ordered sequence of (index, thickness_nm) pairs, first
    entry adjacent to the ambient. An empty sequence describes the bare
    ambient/substrate interface.
    """

    ambient: ComplexIndex
    layers: Sequence[tuple[LayerIndex, float]]
    substrate: ComplexIndex

    def __post_init__(self):
        if self.ambient.k != 0.0:
            raise ValueError("ambient medium must be lossless (k = 0)")
        for i, (index, thickness) in enumerate(self.layers):
            if not np.isfinite(thickness) or thickness <= 0:
                raise ValueError(f"layer {i}: thickness must be positive, got {thickness}")
            if isinstance(index, ComplexIndex):
                continue
            arr = np.asarray(index)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"layer {i}: non-finite refractive index")
            if np.any(arr.real <= 0) or np.any(arr.imag < 0):
                raise ValueError(f"layer {i}: index must have Re > 0 and Im >= 0")


@dataclass(frozen=True)
class SpectrumQuery:
    """Evaluation grid: wavelengths (nm), incidence angles (rad), polarization."""

    wavelengths: np.ndarray
    angles: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    polarization: str = "unpolarized"

    def __post_init__(self):
        wl = np.atleast_1d(np.asarray(self.wavelengths, dtype=float))
        ang = np.atleast_1d(np.asarray(self.angles, dtype=float))
        if wl.size == 0:
            raise ValueError("wavelength grid is empty")
        if np.any(~np.isfinite(wl)) or np.any(wl <= 0):
            raise ValueError("wavelengths must be finite and positive")
        if np.any(np.diff(wl) <= 0):
            raise ValueError("wavelengths must be strictly ascending")
        if np.any(ang < 0) or np.any(ang >= np.pi / 2):
            raise ValueError("angles must lie in [0, pi/2)")
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "angles", ang)


@dataclass(frozen=True)
class SpectrumResult:
    """R/T/A on the (wavelength x angle) grid of the generating query."""

    wavelengths: np.ndarray
    angles: np.ndarray
    R: np.ndarray
    T: np.ndarray
    A: np.ndarray


def _layer_index_array(index: LayerIndex, n_wl: int) -> np.ndarray:
    if isinstance(index, ComplexIndex):
        return np.full(n_wl, index.value, dtype=complex)
    arr = np.asarray(index, dtype=complex)
    if arr.shape != (n_wl,):
        raise ValueError(
            f"per-wavelength index has shape {arr.shape}, expected ({n_wl},)")
    return arr


def _forward_cos(n: np.ndarray, n0_sin0: float) -> np.ndarray:
    """cos(theta) in a medium from Snell's law, forward-decaying branch."""
    cos = np.sqrt(1.0 - (n0_sin0 / n) ** 2 + 0j)
    ncos = n * cos
    # a forward wave decays (Im > 0) or propagates forward (Re > 0)
    flip = (ncos.imag < 0) | ((ncos.imag == 0) & (ncos.real < 0))
    return np.where(flip, -cos, cos)


def _interface(pol: str, n1, c1, n2, c2):
    if pol == "s":
        denom = n1 * c1 + n2 * c2
        r = (n1 * c1 - n2 * c2) / denom
        t = 2.0 * n1 * c1 / denom
    else:
        denom = n2 * c1 + n1 * c2
        r = (n2 * c1 - n1 * c2) / denom
        t = 2.0 * n1 * c1 / denom
    return r, t

def _rt_single(n_list, d_list, wavelengths, angle, pol):
    """Amplitude r, t for one angle and polarization, vectorized over wavelength."""
    n0_sin0 = float(n_list[0][0].real) * np.sin(angle)
    cos_list = [_forward_cos(n, n0_sin0) for n in n_list]

    # total matrix accumulated as four complex arrays
    r01, t01 = _interface(pol, n_list[0], cos_list[0], n_list[1], cos_list[1])
    m00 = 1.0 / t01
    m01 = r01 / t01
    m10 = r01 / t01
    m11 = 1.0 / t01

    for j in range(1, len(n_list) - 1):
        delta = 2.0 * np.pi * d_list[j] / wavelengths * n_list[j] * cos_list[j]
        delta = delta.real + 1j * np.minimum(delta.imag, _MAX_IM_PHASE)
        ep = np.exp(-1j * delta)   # forward amplitude factor, inverted in M
        em = np.exp(1j * delta)
        r_j, t_j = _interface(pol, n_list[j], cos_list[j],
                              n_list[j + 1], cos_list[j + 1])
        # propagation within layer j then interface j -> j+1
        a00 = ep / t_j
        a01 = ep * r_j / t_j
        a10 = em * r_j / t_j
        a11 = em / t_j
        m00, m01, m10, m11 = (
            m00 * a00 + m01 * a10,
            m00 * a01 + m01 * a11,
            m10 * a00 + m11 * a10,
            m10 * a01 + m11 * a11,
        )

    r = m10 / m00
    t = 1.0 / m00

    n_in, c_in = n_list[0], cos_list[0]
    n_out, c_out = n_list[-1], cos_list[-1]
    R = np.abs(r) ** 2
    if pol == "s":
        flux = (n_out * c_out).real / (n_in * c_in).real
    else:
        flux = (n_out * np.conj(c_out)).real / (n_in * np.conj(c_in)).real
    T = np.abs(t) ** 2 * flux
    return R, T


def evaluate_stack(stack: Stack, query: SpectrumQuery) -> SpectrumResult:
    """R, T, A of ``stack`` on the (wavelength x angle) grid of ``query``.

    A is defined as 1 - R - T. Unpolarized quantities are the mean of the
    s and p power quantities.
    """
    wl = query.wavelengths
    n_wl = wl.size
    n_list = [np.full(n_wl, stack.ambient.value, dtype=complex)]
    d_list = [np.inf]
    for index, thickness in stack.layers:
        n_list.append(_layer_index_array(index, n_wl))
        d_list.append(float(thickness))
    n_list.append(np.full(n_wl, stack.substrate.value, dtype=complex))
    d_list.append(np.inf)

    pols = ("s", "p") if query.polarization == "unpolarized" else (query.polarization,)
    R = np.zeros((n_wl, query.angles.size))
    T = np.zeros_like(R)
    for a, angle in enumerate(query.angles):
        for pol in pols:
            Rp, Tp = _rt_single(n_list, d_list, wl, angle, pol)
            R[:, a] += Rp
            T[:, a] += Tp
    R /= len(pols)
    T /= len(pols)
    return SpectrumResult(wavelengths=wl, angles=query.angles,
                          R=R, T=T, A=1.0 - R - T)


def average_quantity(result: SpectrumResult, quantity: str) -> float:
    """Unweighted mean of R, T, or A over the full (wavelength x angle) grid."""
    try:
        values = getattr(result, quantity)
    except AttributeError:
        raise ValueError(f"quantity must be one of 'R', 'T', 'A', got {quantity!r}")
    if values.size == 0:
        raise ValueError("empty spectrum result")
    return float(np.mean(values))
