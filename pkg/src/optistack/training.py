"""Policy-gradient training loop for structure synthesis.

An epoch rolls out episodes until a step budget is met, scores each
resulting structure against a target spectrum, computes GAE advantages
from the critic's rollout values, and runs several clipped-surrogate
update passes with joint critic regression and an entropy bonus. The
best structure ever sampled is tracked across the whole run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .materials import MaterialLibrary
from .nn import Adam, clip_global_norm
from .policy import (DesignVocabulary, Episode, RecurrentGenerator,
                     structure_from_episode)
from .structures import Structure, build_stack
from .tmm import ComplexIndex, SpectrumQuery, evaluate_stack

__all__ = [
    "RewardSpec",
    "TrainConfig",
    "BestBuffer",
    "TrainResult",
    "task1_absorber_spec",
    "task2_filter_spec",
    "compute_reward",
    "collect_batch",
    "gae_advantages",
    "ppo_update",
    "train",
]


@dataclass(frozen=True)
class RewardSpec:
    """Target spectrum on a (wavelength x angle) grid.

    The reward of a structure is 1 minus the mean absolute deviation of
    the selected quantity (R, T, or A) from the target over the grid.
    """

    wavelengths: np.ndarray
    target: np.ndarray
    quantity: str = "A"
    angles: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    ambient: ComplexIndex = ComplexIndex(1.0)
    substrate: ComplexIndex = ComplexIndex(1.5)

    def __post_init__(self):
        query = SpectrumQuery(wavelengths=self.wavelengths, angles=self.angles)
        object.__setattr__(self, "wavelengths", query.wavelengths)
        object.__setattr__(self, "angles", query.angles)
        if self.quantity not in ("R", "T", "A"):
            raise ValueError(f"quantity must be R, T, or A, got {self.quantity!r}")
        target = np.asarray(self.target, dtype=float)
        shape = (self.wavelengths.size, self.angles.size)
        if target.ndim == 1 and target.shape == (shape[0],):
            target = np.broadcast_to(target[:, None], shape).copy()
        if target.shape != shape:
            raise ValueError(f"target shape {target.shape}, expected {shape}")
        if np.any(target < 0) or np.any(target > 1):
            raise ValueError("target values must lie in [0, 1]")
        object.__setattr__(self, "target", target)

    def query(self) -> SpectrumQuery:
        return SpectrumQuery(wavelengths=self.wavelengths, angles=self.angles,
                             polarization="unpolarized")


def task1_absorber_spec() -> RewardSpec:
    """Broadband absorber: A as close to 1 as possible on [400, 2000] nm."""
    wl = np.arange(400.0, 2000.0 + 2.5, 5.0)
    return RewardSpec(wavelengths=wl, target=np.ones(wl.size), quantity="A")


def task2_filter_spec() -> RewardSpec:
    """Incandescent filter: reflect everything except the visible band."""
    wl = np.arange(300.0, 3000.0 + 5.0, 10.0)
    target = np.ones(wl.size)
    target[(wl >= 480.0) & (wl <= 700.0)] = 0.0
    return RewardSpec(wavelengths=wl, target=target, quantity="R")


def compute_reward(structure: Structure, spec: RewardSpec,
                   library: MaterialLibrary) -> float:
    """G = 1 - mean |computed - target| over the grid, in [0, 1]."""
    stack = build_stack(structure, library, spec.wavelengths,
                        ambient=spec.ambient, substrate=spec.substrate)
    result = evaluate_stack(stack, spec.query())
    quantity = getattr(result, spec.quantity)
    g = 1.0 - float(np.mean(np.abs(quantity - spec.target)))
    # guard against 1e-16 conservation roundoff leaking out of [0, 1]
    return min(max(g, 0.0), 1.0)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_steps: int
    max_length: int
    learning_rate: float = 5e-5
    gamma: float = 1.0
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    update_epochs: int = 10
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    kl_stop: float = 0.02
    grad_clip: float = 0.5
    seed: int = 0
    workers: int = 1
    checkpoint_interval: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        if self.batch_steps < self.max_length:
            raise ValueError("batch_steps must be >= max_length")
        if self.gamma != 1.0:
            raise ValueError("only gamma = 1 is supported (undiscounted returns)")
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must be in (0, 1)")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.update_epochs < 1:
            raise ValueError("update_epochs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class BestBuffer:
    """Size-1 buffer of the best structure sampled so far."""

    structure: Structure | None = None
    reward: float = -np.inf
    epoch: int = -1

    def offer(self, structure: Structure, reward: float, epoch: int) -> bool:
        if reward > self.reward:
            self.structure = structure
            self.reward = reward
            self.epoch = epoch
            return True
        return False


@dataclass
class TrainResult:
    best: BestBuffer
    trace: list[dict]
    policy: RecurrentGenerator


def gae_advantages(values: np.ndarray, terminal_reward: float,
                   gamma: float = 1.0, lam: float = 0.95):
    """Generalized advantage estimation for a single episode.

    All rewards are zero except the final step's. The value after the
    terminal step is 0. Returns (advantages, returns).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("values must be a non-empty 1-D array")
    n = values.size
    rewards = np.zeros(n)
    rewards[-1] = terminal_reward
    next_values = np.append(values[1:], 0.0)
    deltas = rewards + gamma * next_values - values
    advantages = np.empty(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        acc = deltas[t] + gamma * lam * acc
        advantages[t] = acc
    return advantages, advantages + values


def _take_until(episodes: list[Episode], batch_steps: int) -> list[Episode]:
    out, steps = [], 0
    for ep in episodes:
        out.append(ep)
        steps += ep.n_steps
        if steps >= batch_steps:
            break
    return out


class _RewardCache:
    """Structure -> reward memo; sampled designs repeat heavily as the
    policy converges, and the optics evaluation dominates epoch time."""

    def __init__(self, spec: RewardSpec, library: MaterialLibrary):
        self.spec = spec
        self.library = library
        self._memo: dict[tuple, float] = {}

    def __call__(self, structure: Structure) -> float:
        key = tuple((l.material, l.thickness_nm) for l in structure.layers)
        if key not in self._memo:
            self._memo[key] = compute_reward(structure, self.spec, self.library)
        return self._memo[key]


def _score_episodes(episodes: list[Episode], vocab: DesignVocabulary,
                    cache: _RewardCache) -> None:
    for ep in episodes:
        ep.reward = cache(structure_from_episode(ep, vocab))


def _rollout_chunk(policy: RecurrentGenerator, budget: int, max_length: int,
                   rng: np.random.Generator) -> list[Episode]:
    """Generate whole episodes until their steps reach ``budget``."""
    episodes: list[Episode] = []
    steps = 0
    while steps < budget:
        # most episodes take at least 2 steps (layer + EOS); oversampling
        # slightly is cheaper than extra rounds
        n = max(1, math.ceil((budget - steps) / 2))
        chunk = policy.generate_episodes(min(n, 8192), max_length, rng)
        for ep in chunk:
            episodes.append(ep)
            steps += ep.n_steps
            if steps >= budget:
                break
    return episodes


def _worker_collect(args):
    (config_dict, state, budget, max_length, seed_state,
     spec, library) = args
    rng = np.random.default_rng()
    rng.bit_generator.state = seed_state
    policy = RecurrentGenerator.from_config(config_dict, np.random.default_rng(0))
    policy.set_state(state)
    episodes = _rollout_chunk(policy, budget, max_length, rng)
    cache = _RewardCache(spec, library)
    _score_episodes(episodes, policy.vocab, cache)
    return episodes


def collect_batch(policy: RecurrentGenerator, config: TrainConfig,
                  spec: RewardSpec, library: MaterialLibrary,
                  rng: np.random.Generator,
                  cache: _RewardCache | None = None,
                  executor: ProcessPoolExecutor | None = None,
                  epoch: int = 0) -> list[Episode]:
    """Roll out episodes until total generation steps reach the batch
    budget, then score each episode's structure. With multiple workers
    the batch is assembled from per-worker shares; the composition then
    differs from the single-worker stream but stays seed-deterministic.
    """
    if cache is None:
        cache = _RewardCache(spec, library)
    if config.workers == 1 or executor is None:
        episodes = _rollout_chunk(policy, config.batch_steps,
                                  config.max_length, rng)
        episodes = _take_until(episodes, config.batch_steps)
        _score_episodes(episodes, policy.vocab, cache)
        return episodes

    share = math.ceil(config.batch_steps / config.workers)
    seeds = np.random.SeedSequence(
        entropy=(config.seed, epoch)).spawn(config.workers)
    tasks = []
    state = policy.get_state()
    cfg = policy.config()
    for ss in seeds:
        child = np.random.default_rng(ss)
        tasks.append((cfg, state, share, config.max_length,
                      child.bit_generator.state, spec, library))
    merged: list[Episode] = []
    for episodes in executor.map(_worker_collect, tasks):
        merged.extend(episodes)
    return _take_until(merged, config.batch_steps)


def _pad_batch(episodes: list[Episode], lam: float, gamma: float):
    B = len(episodes)
    T = max(ep.n_steps for ep in episodes)
    old_logp = np.zeros((B, T))
    adv = np.zeros((B, T))
    ret = np.zeros((B, T))
    for i, ep in enumerate(episodes):
        s = ep.n_steps
        old_logp[i, :s] = ep.step_log_probs()
        a, r = gae_advantages(ep.values, ep.reward, gamma=gamma, lam=lam)
        adv[i, :s] = a
        ret[i, :s] = r
    return old_logp, adv, ret


def ppo_update(policy: RecurrentGenerator, optimizer: Adam,
               episodes: list[Episode], config: TrainConfig) -> dict:
    """Multi-epoch clipped-surrogate update on one batch.

    Maximizes min(r*A, clip(r, 1-eps, 1+eps)*A) averaged over batch steps,
    with critic regression to GAE returns (coefficient value_coef) and an
    entropy bonus (coefficient entropy_coef), advantages normalized per
    batch, gradients clipped by global norm. Update epochs stop early when
    the approximate KL to the rollout policy exceeds kl_stop.
    """
    if not episodes:
        raise ValueError("empty batch")
    eps = config.clip_epsilon
    old_logp, adv, ret = _pad_batch(episodes, config.gae_lambda, config.gamma)

    graph = policy.replay(episodes)
    step_mask = graph.step_mask
    layer_mask = graph.layer_mask
    n_real = float(step_mask.sum())

    flat = adv[step_mask]
    mean, std = float(flat.mean()), float(flat.std())
    adv = np.where(step_mask, (adv - mean) / max(std, 1e-8), 0.0)

    stats = {"clip_fraction": 0.0, "approx_kl": 0.0,
             "value_loss": float("nan"), "policy_loss": float("nan"),
             "entropy": float("nan"), "update_epochs_run": 0}
    for pass_idx in range(config.update_epochs):
        if pass_idx > 0:
            graph = policy.replay(episodes)
        new_logp = graph.mat_logp + graph.thick_logp
        kl = float(np.sum((old_logp - new_logp) * step_mask) / n_real)
        stats["approx_kl"] = kl
        if pass_idx > 0 and kl > config.kl_stop:
            break

        ratio = np.where(step_mask, np.exp(new_logp - old_logp), 0.0)
        surr1 = ratio * adv
        surr2 = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
        objective = np.minimum(surr1, surr2)
        policy_loss = -float(np.sum(objective * step_mask) / n_real)

        v_err = np.where(step_mask, graph.values - ret, 0.0)
        value_loss = float(np.sum(v_err * v_err) / n_real)

        entropy = float((np.sum(graph.mat_entropy * step_mask)
                         + np.sum(graph.thick_entropy * layer_mask)) / n_real)

        total = (policy_loss + config.value_coef * value_loss
                 - config.entropy_coef * entropy)
        if not np.isfinite(total):
            raise FloatingPointError(
                f"non-finite loss at update pass {pass_idx}: "
                f"policy={policy_loss} value={value_loss} entropy={entropy}")

        # d(total)/d(step log-prob): only the unclipped branch carries
        # gradient; whenever clipping is strictly active its slope is 0
        unclipped = (surr1 <= surr2) & step_mask
        d_logp = np.where(unclipped, -ratio * adv / n_real, 0.0)
        d_values = config.value_coef * 2.0 * v_err / n_real
        d_mat_ent = np.where(step_mask, -config.entropy_coef / n_real, 0.0)
        d_thick_ent = np.where(layer_mask, -config.entropy_coef / n_real, 0.0)

        optimizer.zero_grad()
        graph.backward(d_logp, d_logp, d_values, d_mat_ent, d_thick_ent)
        clip_global_norm(optimizer.params, config.grad_clip)
        optimizer.step()

        stats["clip_fraction"] = float(
            np.sum((np.abs(ratio - 1.0) > eps) & step_mask) / n_real)
        stats["value_loss"] = value_loss
        stats["policy_loss"] = policy_loss
        stats["entropy"] = entropy
        stats["update_epochs_run"] = pass_idx + 1
    return stats


def train(policy: RecurrentGenerator, config: TrainConfig, spec: RewardSpec,
          library: MaterialLibrary, on_epoch=None) -> TrainResult:
    """Run the full loop: collect, score, track best, update, trace.

    ``on_epoch(epoch, stats, policy, optimizer, rng)`` is called after
    every epoch when given (checkpointing, live trace output).
    """
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(policy.parameters(), lr=config.learning_rate)
    best = BestBuffer()
    trace: list[dict] = []
    cache = _RewardCache(spec, library)

    executor = None
    try:
        if config.workers > 1:
            executor = ProcessPoolExecutor(max_workers=config.workers)
        for epoch in range(config.epochs):
            episodes = collect_batch(policy, config, spec, library, rng,
                                     cache=cache, executor=executor,
                                     epoch=epoch)
            rewards = np.array([ep.reward for ep in episodes])
            i_best = int(np.argmax(rewards))
            best.offer(structure_from_episode(episodes[i_best], policy.vocab),
                       float(rewards[i_best]), epoch)
            stats = ppo_update(policy, optimizer, episodes, config)
            row = {
                "epoch": epoch,
                "mean_reward": float(rewards.mean()),
                "max_reward": float(rewards.max()),
                "best_so_far": best.reward,
                "clip_fraction": stats["clip_fraction"],
                "approx_kl": stats["approx_kl"],
            }
            trace.append(row)
            if on_epoch is not None:
                on_epoch(epoch, row, policy, optimizer, rng)
    finally:
        if executor is not None:
            executor.shutdown()
    return TrainResult(best=best, trace=trace, policy=policy)
