"""Estimator-style facade over the training loop.

``MultilayerDesigner`` is an unsupervised synthesizer, so ``fit`` takes
no training data: X and y are accepted for interface compatibility and
ignored. Constructor arguments are stored verbatim and validated in
``fit``, matching the usual estimator contract; learned artifacts carry
the trailing underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .finetune import FinetuneProblem, finetune
from .materials import MaterialLibrary, bundled_library
from .policy import DesignVocabulary, RecurrentGenerator, structure_from_episode
from .structures import Structure
from .training import RewardSpec, TrainConfig, compute_reward, task1_absorber_spec, train

__all__ = ["MultilayerDesigner"]


class MultilayerDesigner(BaseEstimator):
    """Searches for a layer stack whose spectrum matches a target.

    Trains the recurrent generator with clipped policy gradients against
    the reward spec, keeps the best structure ever sampled, and
    optionally polishes its thicknesses with the bounded quasi-Newton
    pass.

    Attributes set by ``fit``: ``best_structure_``, ``best_reward_``,
    ``trace_`` (one dict per epoch), ``policy_``, and when
    ``finetune=True`` also ``finetuned_structure_`` and
    ``finetuned_reward_``.
    """

    def __init__(self, materials=("MgF2", "TiO2", "Si", "Ge", "Cr"),
                 thicknesses_nm=None, max_layers=6, reward_spec=None,
                 epochs=300, batch_steps=300, learning_rate=5e-5,
                 hidden=128, embed_dim=5, head_hidden=64,
                 autoregressive=True, gating=True, finetune=False,
                 finetune_bounds_nm=(15.0, 200.0), seed=0, workers=1,
                 library=None):
        self.materials = materials
        self.thicknesses_nm = thicknesses_nm
        self.max_layers = max_layers
        self.reward_spec = reward_spec
        self.epochs = epochs
        self.batch_steps = batch_steps
        self.learning_rate = learning_rate
        self.hidden = hidden
        self.embed_dim = embed_dim
        self.head_hidden = head_hidden
        self.autoregressive = autoregressive
        self.gating = gating
        self.finetune = finetune
        self.finetune_bounds_nm = finetune_bounds_nm
        self.seed = seed
        self.workers = workers
        self.library = library

    def _resolved(self):
        thicknesses = self.thicknesses_nm
        if thicknesses is None:
            thicknesses = np.arange(15.0, 200.0 + 2.5, 5.0)
        vocab = DesignVocabulary(tuple(self.materials),
                                 np.asarray(thicknesses, dtype=float))
        spec = self.reward_spec if self.reward_spec is not None else task1_absorber_spec()
        library = self.library if self.library is not None else bundled_library()
        missing = [m for m in vocab.materials if m not in library.names()]
        if missing:
            raise ValueError(f"library is missing materials: {missing}")
        return vocab, spec, library

    def fit(self, X=None, y=None, on_epoch=None):
        """Run the training loop; X and y are ignored."""
        vocab, spec, library = self._resolved()
        config = TrainConfig(
            epochs=self.epochs, batch_steps=self.batch_steps,
            max_length=self.max_layers, learning_rate=self.learning_rate,
            seed=self.seed, workers=self.workers)
        rng = np.random.default_rng(self.seed)
        policy = RecurrentGenerator(
            rng, vocab, hidden=self.hidden, embed_dim=self.embed_dim,
            head_hidden=self.head_hidden, autoregressive=self.autoregressive,
            gating=self.gating)
        result = train(policy, config, spec, library, on_epoch=on_epoch)

        self.policy_ = result.policy
        self.trace_ = result.trace
        self.best_structure_ = result.best.structure
        self.best_reward_ = result.best.reward
        self.best_epoch_ = result.best.epoch
        if self.finetune and self.best_structure_ is not None:
            problem = FinetuneProblem(
                structure=self.best_structure_, spec=spec, library=library,
                bounds=tuple(self.finetune_bounds_nm))
            polished = finetune(problem)
            self.finetuned_structure_ = polished.structure
            self.finetuned_reward_ = polished.reward_after
        return self

    def sample(self, n=1, seed=None):
        """Draw n structures from the trained policy."""
        self._check_fitted()
        rng = np.random.default_rng(self.seed if seed is None else seed)
        episodes = self.policy_.generate_episodes(n, self.max_layers, rng)
        return [structure_from_episode(ep, self.policy_.vocab)
                for ep in episodes]

    def score_structure(self, structure: Structure) -> float:
        """Reward of an arbitrary structure under this designer's spec."""
        _, spec, library = self._resolved()
        return compute_reward(structure, spec, library)

    def _check_fitted(self):
        if not hasattr(self, "policy_"):
            raise RuntimeError("designer is not fitted; call fit() first")
