"""Layer-structure records and their JSON serialization.

A structure is the design object everything else consumes: an ordered
list of (material name, thickness in nm) layers, ambient side first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .materials import MaterialLibrary
from .tmm import ComplexIndex, Stack

__all__ = [
    "Layer",
    "Structure",
    "structure_to_json",
    "structure_from_json",
    "save_structure",
    "load_structure",
    "build_stack",
]

AIR = ComplexIndex(1.0, 0.0)
GLASS = ComplexIndex(1.5, 0.0)


@dataclass(frozen=True)
class Layer:
    material: str
    thickness_nm: float

    def __post_init__(self):
        if not self.material:
            raise ValueError("material name must be non-empty")
        t = float(self.thickness_nm)
        if not np.isfinite(t) or t <= 0:
            raise ValueError(f"thickness must be positive, got {self.thickness_nm}")
        object.__setattr__(self, "thickness_nm", t)


@dataclass(frozen=True)
class Structure:
    """Ordered layers, first entry adjacent to the ambient medium."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @classmethod
    def from_pairs(cls, pairs) -> "Structure":
        return cls(tuple(Layer(m, t) for m, t in pairs))

    def __len__(self) -> int:
        return len(self.layers)

    def materials(self) -> list[str]:
        return [layer.material for layer in self.layers]

    def thicknesses(self) -> np.ndarray:
        return np.array([layer.thickness_nm for layer in self.layers], dtype=float)

    def with_thicknesses(self, thicknesses) -> "Structure":
        values = np.asarray(thicknesses, dtype=float)
        if values.shape != (len(self.layers),):
            raise ValueError(
                f"expected {len(self.layers)} thicknesses, got shape {values.shape}")
        return Structure(tuple(
            Layer(layer.material, t) for layer, t in zip(self.layers, values)))

    def total_thickness_nm(self) -> float:
        return float(self.thicknesses().sum())


def structure_to_json(structure: Structure) -> str:
    records = [{"material": l.material, "thickness_nm": l.thickness_nm}
               for l in structure.layers]
    return json.dumps(records, indent=2) + "\n"


def structure_from_json(text: str) -> Structure:
    records = json.loads(text)
    if not isinstance(records, list):
        raise ValueError("structure JSON must be an array of layer objects")
    layers = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or set(rec) != {"material", "thickness_nm"}:
            raise ValueError(
                f"layer {i}: expected keys 'material' and 'thickness_nm', got {rec!r}")
        layers.append(Layer(rec["material"], rec["thickness_nm"]))
    return Structure(tuple(layers))


def save_structure(structure: Structure, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(structure_to_json(structure))


def load_structure(path: str) -> Structure:
    with open(path) as fh:
        return structure_from_json(fh.read())


def build_stack(structure: Structure, library: MaterialLibrary,
                wavelengths_nm: np.ndarray, ambient: ComplexIndex = AIR,
                substrate: ComplexIndex = GLASS) -> Stack:
    """Resolve material names to per-wavelength indices and build a Stack."""
    layers = [(library[l.material].index_at(wavelengths_nm), l.thickness_nm)
              for l in structure.layers]
    return Stack(ambient=ambient, layers=layers, substrate=substrate)
