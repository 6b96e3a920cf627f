"""Material dispersion tables and the bundled optical-constant library.

Each material is a sampled n(lambda), k(lambda) table read from CSV with
header ``wavelength_nm,n,k``. Lookups interpolate linearly and clamp to
the endpoints outside the tabulated range (with a warning, since clamped
values are extrapolations in disguise).
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

__all__ = [
    "Material",
    "MaterialLibrary",
    "RangeWarning",
    "load_material_csv",
    "load_library",
    "bundled_library",
    "write_library",
]

_CSV_HEADER = "wavelength_nm,n,k"


class RangeWarning(UserWarning):
    """A dispersion lookup fell outside the tabulated wavelength range."""


@dataclass(frozen=True)
class Material:
    """Sampled complex refractive index of one material."""

    name: str
    wavelengths_nm: np.ndarray
    n: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths_nm, dtype=float)
        n = np.asarray(self.n, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if wl.ndim != 1 or wl.size < 2:
            raise ValueError(f"{self.name}: need at least two samples")
        if n.shape != wl.shape or k.shape != wl.shape:
            raise ValueError(f"{self.name}: column length mismatch")
        if np.any(~np.isfinite(wl)) or np.any(wl <= 0):
            raise ValueError(f"{self.name}: wavelengths must be finite and positive")
        if np.any(np.diff(wl) <= 0):
            raise ValueError(f"{self.name}: wavelengths must be strictly ascending")
        if np.any(~np.isfinite(n)) or np.any(~np.isfinite(k)):
            raise ValueError(f"{self.name}: non-finite optical constants")
        if np.any(n <= 0):
            raise ValueError(f"{self.name}: n must be positive")
        if np.any(k < 0):
            raise ValueError(f"{self.name}: k must be non-negative")
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)

    def index_at(self, wavelengths_nm) -> np.ndarray:
        """Complex index n + ik at the given wavelengths (nm)."""
        wl = np.atleast_1d(np.asarray(wavelengths_nm, dtype=float))
        lo, hi = self.wavelengths_nm[0], self.wavelengths_nm[-1]
        if np.any(wl < lo) or np.any(wl > hi):
            warnings.warn(
                f"{self.name}: wavelengths outside [{lo:g}, {hi:g}] nm are "
                "clamped to the table endpoints", RangeWarning, stacklevel=2)
        n = np.interp(wl, self.wavelengths_nm, self.n)
        k = np.interp(wl, self.wavelengths_nm, self.k)
        return n + 1j * k


@dataclass(frozen=True)
class MaterialLibrary:
    """Named collection of materials with stable iteration order."""

    materials: dict[str, Material] = field(default_factory=dict)

    def __post_init__(self):
        for name, mat in self.materials.items():
            if name != mat.name:
                raise ValueError(f"key {name!r} does not match material {mat.name!r}")

    def __len__(self) -> int:
        return len(self.materials)

    def __contains__(self, name: str) -> bool:
        return name in self.materials

    def __getitem__(self, name: str) -> Material:
        try:
            return self.materials[name]
        except KeyError:
            known = ", ".join(sorted(self.materials))
            raise KeyError(f"unknown material {name!r}; library has: {known}") from None

    def names(self) -> list[str]:
        return list(self.materials)

    def subset(self, names) -> "MaterialLibrary":
        return MaterialLibrary({name: self[name] for name in names})


def load_material_csv(path: str, name: str | None = None) -> Material:
    """Read one n,k table. Header must be ``wavelength_nm,n,k``."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError(f"{path}: expected header {_CSV_HEADER!r}, got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns, got {data.shape[1]}")
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return Material(name=name, wavelengths_nm=data[:, 0], n=data[:, 1], k=data[:, 2])


def load_library(manifest_path: str) -> MaterialLibrary:
    """Load all materials listed in a JSON manifest {name: csv-path}.

    Relative paths resolve against the manifest's directory.
    """
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict):
        raise ValueError(f"{manifest_path}: manifest must be a JSON object")
    base = os.path.dirname(os.path.abspath(manifest_path))
    materials = {}
    for name, rel in manifest.items():
        csv_path = rel if os.path.isabs(rel) else os.path.join(base, rel)
        materials[name] = load_material_csv(csv_path, name=name)
    return MaterialLibrary(materials)


def bundled_library() -> MaterialLibrary:
    """The dispersion library shipped with the package."""
    data_dir = resources.files("optistack").joinpath("data")
    return load_library(str(data_dir.joinpath("manifest.json")))


def write_library(library: MaterialLibrary, out_dir: str) -> str:
    """Write a library as manifest.json + per-material CSVs under ``out_dir``.

    Values are written with repr precision so that load(write(lib))
    reproduces the arrays bit for bit. Returns the manifest path.
    """
    materials_dir = os.path.join(out_dir, "materials")
    os.makedirs(materials_dir, exist_ok=True)
    manifest = {}
    for name, mat in library.materials.items():
        rel = os.path.join("materials", f"{name}.csv")
        with open(os.path.join(out_dir, rel), "w") as fh:
            fh.write(_CSV_HEADER + "\n")
            for wl, n, k in zip(mat.wavelengths_nm, mat.n, mat.k):
                fh.write(f"{float(wl)!r},{float(n)!r},{float(k)!r}\n")
        manifest[name] = rel
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path
