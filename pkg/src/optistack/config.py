"""Task configuration: YAML with one section per concern.

Sections: task, vocabulary, reward, policy, train, finetune, emitter,
materials. Every key is a plain scalar or list; there is no
code-in-config. ``load_task_config`` validates eagerly so the CLI can
report all problems before any work starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .materials import MaterialLibrary, bundled_library, load_library
from .photometry import EmitterSpec
from .policy import DesignVocabulary
from .tmm import ComplexIndex
from .training import RewardSpec, TrainConfig

__all__ = ["ConfigError", "TaskConfig", "load_task_config"]


class ConfigError(ValueError):
    """Invalid or inconsistent task configuration."""


_KNOWN_SECTIONS = {"task", "vocabulary", "reward", "policy", "train",
                   "finetune", "emitter", "materials"}


def _section(raw: dict, name: str, required: bool = False) -> dict:
    value = raw.get(name)
    if value is None:
        if required:
            raise ConfigError(f"missing required section '{name}'")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return value


def _get(section: dict, sec_name: str, key: str, default=None, required=False):
    if key in section:
        return section[key]
    if required:
        raise ConfigError(f"missing required key '{sec_name}.{key}'")
    return default


@dataclass(frozen=True)
class TaskConfig:
    """Validated, fully-resolved run configuration."""

    name: str
    vocab: DesignVocabulary
    reward: RewardSpec
    train: TrainConfig
    policy_kwargs: dict
    finetune_bounds: tuple[float, float]
    emitter: EmitterSpec | None
    library: MaterialLibrary
    raw: dict = field(repr=False)


def _build_vocab(raw: dict) -> DesignVocabulary:
    sec = _section(raw, "vocabulary", required=True)
    materials = _get(sec, "vocabulary", "materials", required=True)
    if not isinstance(materials, list) or not all(isinstance(m, str) for m in materials):
        raise ConfigError("vocabulary.materials must be a list of names")
    if "thicknesses_nm" in sec:
        thicknesses = np.asarray(sec["thicknesses_nm"], dtype=float)
    else:
        lo = float(_get(sec, "vocabulary", "thickness_min_nm", 15.0))
        hi = float(_get(sec, "vocabulary", "thickness_max_nm", 200.0))
        step = float(_get(sec, "vocabulary", "thickness_step_nm", 5.0))
        if not (0 < lo < hi) or step <= 0:
            raise ConfigError("vocabulary thickness range must satisfy "
                              "0 < min < max with positive step")
        thicknesses = np.arange(lo, hi + step / 2, step)
    try:
        return DesignVocabulary(tuple(materials), thicknesses)
    except ValueError as exc:
        raise ConfigError(f"vocabulary: {exc}") from exc


def _build_reward(raw: dict) -> RewardSpec:
    sec = _section(raw, "reward", required=True)
    lo = float(_get(sec, "reward", "wavelength_min_nm", required=True))
    hi = float(_get(sec, "reward", "wavelength_max_nm", required=True))
    step = float(_get(sec, "reward", "wavelength_step_nm", 5.0))
    if not (0 < lo < hi) or step <= 0:
        raise ConfigError("reward wavelength grid must satisfy 0 < min < max "
                          "with positive step")
    wl = np.arange(lo, hi + step / 2, step)

    base = float(_get(sec, "reward", "target", 1.0))
    target = np.full(wl.size, base)
    for i, band in enumerate(_get(sec, "reward", "bands", [])):
        if not isinstance(band, dict) or not {"min_nm", "max_nm", "value"} <= set(band):
            raise ConfigError(f"reward.bands[{i}] needs min_nm, max_nm, value")
        mask = (wl >= float(band["min_nm"])) & (wl <= float(band["max_nm"]))
        target[mask] = float(band["value"])

    angles_deg = np.asarray(_get(sec, "reward", "angles_deg", [0.0]), dtype=float)
    kwargs = {}
    if "ambient_n" in sec:
        kwargs["ambient"] = ComplexIndex(float(sec["ambient_n"]))
    if "substrate_n" in sec:
        kwargs["substrate"] = ComplexIndex(float(sec["substrate_n"]),
                                           float(sec.get("substrate_k", 0.0)))
    try:
        return RewardSpec(wavelengths=wl, target=target,
                          quantity=str(_get(sec, "reward", "quantity", "A")),
                          angles=np.deg2rad(angles_deg), **kwargs)
    except ValueError as exc:
        raise ConfigError(f"reward: {exc}") from exc


def _build_train(raw: dict, vocab: DesignVocabulary, seed: int,
                 workers: int) -> TrainConfig:
    sec = _section(raw, "train")
    known = {"epochs", "batch_steps", "max_length", "learning_rate",
             "gamma", "gae_lambda", "clip_epsilon", "update_epochs",
             "value_coef", "entropy_coef", "kl_stop", "grad_clip",
             "checkpoint_interval"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown train keys: {sorted(unknown)}")
    kwargs = {k: sec[k] for k in known & set(sec)}
    kwargs.setdefault("epochs", 300)
    kwargs.setdefault("batch_steps", 300)
    kwargs.setdefault("max_length", 6)
    try:
        return TrainConfig(seed=seed, workers=workers, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"train: {exc}") from exc


def _build_policy_kwargs(raw: dict) -> dict:
    sec = _section(raw, "policy")
    known = {"hidden", "embed_dim", "head_hidden", "autoregressive", "gating"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown policy keys: {sorted(unknown)}")
    return dict(sec)


def _build_emitter(raw: dict) -> EmitterSpec | None:
    sec = _section(raw, "emitter")
    if not sec:
        return None
    known = {"power_w", "area_mm2", "view_factor", "reference_temperature_k",
             "calibration_power_w"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown emitter keys: {sorted(unknown)}")
    try:
        return EmitterSpec(**{k: float(v) for k, v in sec.items()})
    except ValueError as exc:
        raise ConfigError(f"emitter: {exc}") from exc


def _build_library(raw: dict) -> MaterialLibrary:
    sec = _section(raw, "materials")
    manifest = _get(sec, "materials", "manifest")
    if manifest is None:
        return bundled_library()
    try:
        return load_library(manifest)
    except FileNotFoundError as exc:
        raise ConfigError(f"materials manifest: {exc}") from exc


def load_task_config(path: str, seed: int = 0, workers: int = 1) -> TaskConfig:
    """Parse and validate; raises ConfigError with the first problem found."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping of sections")
    unknown = set(raw) - _KNOWN_SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    name = str(_get(_section(raw, "task"), "task", "name", "unnamed"))
    vocab = _build_vocab(raw)
    library = _build_library(raw)
    missing = [m for m in vocab.materials if m not in library.names()]
    if missing:
        raise ConfigError(f"materials not present in the library: {missing}")

    reward = _build_reward(raw)
    train = _build_train(raw, vocab, seed=seed, workers=workers)
    if train.max_length < 1:
        raise ConfigError("train.max_length must be >= 1")

    fin = _section(raw, "finetune")
    bounds = (float(_get(fin, "finetune", "min_nm", 15.0)),
              float(_get(fin, "finetune", "max_nm", 200.0)))
    if not (0 < bounds[0] < bounds[1]):
        raise ConfigError(f"finetune bounds must satisfy 0 < min < max, got {bounds}")

    return TaskConfig(name=name, vocab=vocab, reward=reward, train=train,
                      policy_kwargs=_build_policy_kwargs(raw),
                      finetune_bounds=bounds, emitter=_build_emitter(raw),
                      library=library, raw=raw)
