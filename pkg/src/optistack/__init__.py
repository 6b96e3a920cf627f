"""optistack: RL-driven design of optical multilayer thin-film structures."""

from .config import ConfigError, TaskConfig, load_task_config
from .estimator import MultilayerDesigner
from .finetune import FinetuneProblem, FinetuneResult, finetune, reward_gradient
from .materials import (Material, MaterialLibrary, RangeWarning,
                        bundled_library, load_library, load_material_csv,
                        write_library)
from .nn import (MLP, Adam, Embedding, GRUCell, Linear, Parameter,
                 load_checkpoint, log_softmax, sample_categorical,
                 save_checkpoint, softmax)
from .photometry import (EmitterSpec, LuminosityCurve,
                         angle_averaged_emissivity, blackbody_intensity,
                         effective_emissivity, enhancement_factor,
                         load_photopic_curve, photometry_report,
                         solve_emitter_temperature)
from .policy import (DesignVocabulary, Episode, RecurrentGenerator,
                     ReplayGraph, apply_gating, masked_material_logits,
                     structure_from_episode)
from .structures import (Layer, Structure, build_stack, load_structure,
                         save_structure, structure_from_json,
                         structure_to_json)
from .tmm import (ComplexIndex, SpectrumQuery, SpectrumResult, Stack,
                  average_quantity, evaluate_stack)
from .training import (RewardSpec, TrainConfig, TrainResult, collect_batch,
                       compute_reward, gae_advantages, ppo_update,
                       task1_absorber_spec, task2_filter_spec, train)

__version__ = "0.1.0"

__all__ = [
    "ComplexIndex", "Stack", "SpectrumQuery", "SpectrumResult",
    "evaluate_stack", "average_quantity",
    "Material", "MaterialLibrary", "RangeWarning",
    "load_material_csv", "load_library", "bundled_library", "write_library",
    "Layer", "Structure", "structure_to_json", "structure_from_json",
    "save_structure", "load_structure", "build_stack",
    "Parameter", "Linear", "MLP", "Embedding", "GRUCell", "Adam",
    "softmax", "log_softmax", "sample_categorical",
    "save_checkpoint", "load_checkpoint",
    "DesignVocabulary", "Episode", "RecurrentGenerator", "ReplayGraph",
    "apply_gating", "masked_material_logits", "structure_from_episode",
    "RewardSpec", "TrainConfig", "TrainResult", "compute_reward",
    "task1_absorber_spec", "task2_filter_spec", "gae_advantages",
    "collect_batch", "ppo_update", "train",
    "FinetuneProblem", "FinetuneResult", "finetune", "reward_gradient",
    "EmitterSpec", "LuminosityCurve", "load_photopic_curve",
    "effective_emissivity", "angle_averaged_emissivity",
    "blackbody_intensity", "solve_emitter_temperature",
    "enhancement_factor", "photometry_report",
    "ConfigError", "TaskConfig", "load_task_config",
    "MultilayerDesigner",
    "__version__",
]
