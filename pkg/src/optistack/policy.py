"""Recurrent sequence generator for layer structures.

A GRU emits one (material, thickness) pair per step, or an EOS token that
ends the episode. Materials and thicknesses are drawn from finite
vocabularies; a gating rule can forbid repeating the previous material.
The module provides batched sampling for rollouts and a replay graph that
re-evaluates stored episodes under the current parameters with a full
backward pass, which is what the PPO update differentiates through.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import (MLP, Embedding, GRUCell, Parameter, log_softmax,
                 sample_categorical, softmax)
from .structures import Structure

__all__ = [
    "DesignVocabulary",
    "Episode",
    "RecurrentGenerator",
    "ReplayGraph",
    "apply_gating",
    "masked_material_logits",
    "structure_from_episode",
]

NEG_INF = -np.inf


@dataclass(frozen=True)
class DesignVocabulary:
    """Finite action sets: material names and thickness values (nm).

    The EOS token occupies index ``len(materials)`` in the material head's
    output; it is not a material.
    """

    materials: tuple[str, ...]
    thicknesses_nm: np.ndarray

    def __post_init__(self):
        mats = tuple(self.materials)
        if len(mats) < 2:
            raise ValueError("need at least 2 materials")
        if len(set(mats)) != len(mats):
            raise ValueError("duplicate material names")
        th = np.asarray(self.thicknesses_nm, dtype=float)
        if th.ndim != 1 or th.size < 1:
            raise ValueError("need at least 1 thickness value")
        if np.any(~np.isfinite(th)) or np.any(th <= 0):
            raise ValueError("thicknesses must be finite and positive")
        if np.any(np.diff(th) <= 0):
            raise ValueError("thicknesses must be strictly increasing")
        object.__setattr__(self, "materials", mats)
        object.__setattr__(self, "thicknesses_nm", th)

    @property
    def n_materials(self) -> int:
        return len(self.materials)

    @property
    def n_thicknesses(self) -> int:
        return int(self.thicknesses_nm.size)

    @property
    def eos_index(self) -> int:
        return len(self.materials)


@dataclass
class Episode:
    """One sampled design trajectory.

    Steps 0..n_layers-1 each carry a material and a thickness index; if
    the episode ended by sampling EOS there is one extra final step with
    a material log-prob only. Values cover every step, EOS included.
    """

    materials: np.ndarray
    thickness_idx: np.ndarray
    ended_with_eos: bool
    mat_logps: np.ndarray
    thick_logps: np.ndarray
    values: np.ndarray
    reward: float = 0.0

    @property
    def n_layers(self) -> int:
        return int(self.materials.size)

    @property
    def n_steps(self) -> int:
        return self.n_layers + (1 if self.ended_with_eos else 0)

    def step_log_probs(self) -> np.ndarray:
        """Per-step log-prob: material term plus thickness term."""
        logps = np.zeros(self.n_steps)
        logps[:] = self.mat_logps
        logps[:self.n_layers] += self.thick_logps
        return logps


def structure_from_episode(episode: Episode, vocab: DesignVocabulary) -> Structure:
    return Structure.from_pairs(
        (vocab.materials[m], float(vocab.thicknesses_nm[t]))
        for m, t in zip(episode.materials, episode.thickness_idx))


def apply_gating(logits: np.ndarray, last_material: int):
    """Row-deletion form of the non-repeat rule for a single logit vector.

    Builds the identity on R^{|M|+1} with row ``last_material`` removed
    and applies it, so the returned vector has |M| entries. Also returns
    the index map from gated positions back to original indices.
    """
    logits = np.asarray(logits, dtype=float)
    n_total = logits.shape[-1]
    if not 0 <= last_material < n_total - 1:
        raise ValueError(f"last material {last_material} out of range")
    gate = np.delete(np.eye(n_total), last_material, axis=0)
    index_map = np.delete(np.arange(n_total), last_material)
    return gate @ logits, index_map


def masked_material_logits(logits: np.ndarray, last_materials: np.ndarray,
                           mask_eos: bool, eos_index: int) -> np.ndarray:
    """Batched gating: -inf at each row's previous material (and at EOS
    when masked). Rows with last_materials < 0 get no material mask.
    """
    out = np.array(logits, dtype=float, copy=True)
    rows = np.flatnonzero(last_materials >= 0)
    out[rows, last_materials[rows]] = NEG_INF
    if mask_eos:
        out[:, eos_index] = NEG_INF
    return out


class RecurrentGenerator:
    """GRU policy with material/thickness heads and a critic.

    ``autoregressive=False`` removes the sampled material's embedding from
    the thickness head input; ``gating=False`` disables the non-repeat
    mask. Both reproduce the ablated baselines.
    """

    def __init__(self, rng: np.random.Generator, vocab: DesignVocabulary,
                 hidden: int = 128, embed_dim: int = 5, head_hidden: int = 64,
                 autoregressive: bool = True, gating: bool = True):
        if hidden < 1 or embed_dim < 1 or head_hidden < 1:
            raise ValueError("network sizes must be positive")
        self.vocab = vocab
        self.hidden = hidden
        self.embed_dim = embed_dim
        self.head_hidden = head_hidden
        self.autoregressive = autoregressive
        self.gating = gating

        n_mat, n_thick = vocab.n_materials, vocab.n_thicknesses
        self.mat_emb = Embedding(rng, n_mat, embed_dim, "mat_emb")
        self.thick_emb = Embedding(rng, n_thick, embed_dim, "thick_emb")
        self.start = Parameter(
            "start", rng.uniform(-1, 1, size=2 * embed_dim) / np.sqrt(2 * embed_dim))
        self.gru = GRUCell(rng, 2 * embed_dim, hidden, "gru")
        self.mat_head = MLP(rng, [hidden, head_hidden, n_mat + 1], "mat_head")
        thick_in = hidden + (embed_dim if autoregressive else 0)
        self.thick_head = MLP(rng, [thick_in, head_hidden, n_thick], "thick_head")
        self.critic = MLP(rng, [hidden, 64, 64, 1], "critic")

    def parameters(self) -> list[Parameter]:
        params = [self.start]
        for mod in (self.mat_emb, self.thick_emb, self.gru,
                    self.mat_head, self.thick_head, self.critic):
            params += mod.parameters()
        return params

    def get_state(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def set_state(self, state: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in state:
                raise KeyError(f"state missing parameter {p.name}")
            if state[p.name].shape != p.value.shape:
                raise ValueError(f"{p.name}: shape mismatch")
            p.value[...] = state[p.name]

    @classmethod
    def from_config(cls, cfg: dict, rng: np.random.Generator) -> "RecurrentGenerator":
        vocab = DesignVocabulary(tuple(cfg["materials"]),
                                 np.asarray(cfg["thicknesses_nm"], dtype=float))
        return cls(rng, vocab, hidden=cfg["hidden"], embed_dim=cfg["embed_dim"],
                   head_hidden=cfg["head_hidden"],
                   autoregressive=cfg["autoregressive"], gating=cfg["gating"])

    def config(self) -> dict:
        return {
            "materials": list(self.vocab.materials),
            "thicknesses_nm": [float(t) for t in self.vocab.thicknesses_nm],
            "hidden": self.hidden,
            "embed_dim": self.embed_dim,
            "head_hidden": self.head_hidden,
            "autoregressive": self.autoregressive,
            "gating": self.gating,
        }

    # ------------------------------------------------------------------
    # sampling
    # ------------------------------------------------------------------

    def _step_inputs(self, mats: np.ndarray, thicks: np.ndarray) -> np.ndarray:
        m_vec, _ = self.mat_emb.forward(mats)
        t_vec, _ = self.thick_emb.forward(thicks)
        return np.concatenate([m_vec, t_vec], axis=1)

    def generate_episodes(self, n_episodes: int, max_length: int,
                          rng: np.random.Generator) -> list[Episode]:
        """Sample a batch of episodes under frozen parameters.

        All live episodes advance together; an episode retires when it
        samples EOS or reaches ``max_length`` layers.
        """
        if max_length < 1:
            raise ValueError("max_length must be >= 1")
        if n_episodes < 1:
            raise ValueError("n_episodes must be >= 1")
        eos = self.vocab.eos_index
        n_thick = self.vocab.n_thicknesses

        h = self.gru.initial_state(n_episodes)
        x = np.tile(self.start.value, (n_episodes, 1))
        last = np.full(n_episodes, -1, dtype=np.intp)
        alive = np.arange(n_episodes)
        rec: list[dict] = [
            {"m": [], "t": [], "mlp": [], "tlp": [], "v": [], "eos": False}
            for _ in range(n_episodes)]

        for step in range(max_length + 1):
            if alive.size == 0:
                break
            h, _ = self.gru.forward(x, h)
            values, _ = self.critic.forward(h)
            logits, _ = self.mat_head.forward(h)
            if not self.gating:
                gate_last = np.full(alive.size, -1, dtype=np.intp)
            else:
                gate_last = last[alive]
            masked = masked_material_logits(logits, gate_last,
                                            mask_eos=(step == 0), eos_index=eos)
            if not np.all(np.isfinite(np.max(masked, axis=1))):
                raise FloatingPointError("non-finite material logits")
            probs = softmax(masked)
            logp = log_softmax(masked)
            choice = sample_categorical(rng, probs)

            took_eos = choice == eos
            at_cap = np.zeros(alive.size, dtype=bool)
            layer_rows = np.flatnonzero(~took_eos)

            # thickness for rows that sampled a material
            if layer_rows.size:
                h_l = h[layer_rows]
                if self.autoregressive:
                    emb, _ = self.mat_emb.forward(choice[layer_rows])
                    t_in = np.concatenate([emb, h_l], axis=1)
                else:
                    t_in = h_l
                t_logits, _ = self.thick_head.forward(t_in)
                t_probs = softmax(t_logits)
                t_logp = log_softmax(t_logits)
                t_choice = sample_categorical(rng, t_probs)

            t_cursor = 0
            for row, ep_idx in enumerate(alive):
                r = rec[ep_idx]
                r["mlp"].append(logp[row, choice[row]])
                r["v"].append(values[row, 0])
                if took_eos[row]:
                    r["eos"] = True
                else:
                    r["m"].append(choice[row])
                    r["t"].append(t_choice[t_cursor])
                    r["tlp"].append(t_logp[t_cursor, t_choice[t_cursor]])
                    t_cursor += 1
                    if len(r["m"]) == max_length:
                        at_cap[row] = True

            keep = ~(took_eos | at_cap)
            if not np.any(keep):
                break
            kept_choice = choice[keep]
            kept_t = t_choice[np.cumsum(~took_eos)[keep] - 1]
            x = self._step_inputs(kept_choice, kept_t)
            h = h[keep]
            last_alive = last[alive]
            last_alive[keep] = kept_choice
            last[alive] = last_alive
            alive = alive[keep]

        episodes = []
        for r in rec:
            episodes.append(Episode(
                materials=np.array(r["m"], dtype=np.intp),
                thickness_idx=np.array(r["t"], dtype=np.intp),
                ended_with_eos=r["eos"],
                mat_logps=np.array(r["mlp"], dtype=float),
                thick_logps=np.array(r["tlp"], dtype=float),
                values=np.array(r["v"], dtype=float),
            ))
        return episodes

    def generate_episode(self, max_length: int, rng: np.random.Generator) -> Episode:
        return self.generate_episodes(1, max_length, rng)[0]

    # ------------------------------------------------------------------
    # replay with gradients
    # ------------------------------------------------------------------

    def replay(self, episodes: list[Episode]) -> "ReplayGraph":
        return ReplayGraph(self, episodes)


class ReplayGraph:
    """Padded batched re-evaluation of stored episodes with backward.

    Exposes per-step arrays of shape (B, T): material/thickness log-probs
    under the current parameters, values, and entropies, plus boolean
    masks. ``backward`` accepts upstream gradients for each of these and
    accumulates parameter gradients.
    """

    def __init__(self, policy: RecurrentGenerator, episodes: list[Episode]):
        if not episodes:
            raise ValueError("no episodes to replay")
        self.policy = policy
        self.episodes = episodes
        vocab = policy.vocab
        eos = vocab.eos_index
        B = len(episodes)
        T = max(ep.n_steps for ep in episodes)

        # padded action tensors; material action holds EOS on the final
        # step of episodes that terminated with EOS
        self.step_mask = np.zeros((B, T), dtype=bool)
        self.layer_mask = np.zeros((B, T), dtype=bool)
        mat_act = np.zeros((B, T), dtype=np.intp)
        thick_act = np.zeros((B, T), dtype=np.intp)
        prev_mat = np.zeros((B, T), dtype=np.intp)
        prev_thick = np.zeros((B, T), dtype=np.intp)
        gate_last = np.full((B, T), -1, dtype=np.intp)
        for i, ep in enumerate(episodes):
            n, s = ep.n_layers, ep.n_steps
            self.step_mask[i, :s] = True
            self.layer_mask[i, :n] = True
            mat_act[i, :n] = ep.materials
            if ep.ended_with_eos:
                mat_act[i, n] = eos
            thick_act[i, :n] = ep.thickness_idx
            if s > 1:
                prev_mat[i, 1:s] = ep.materials[:s - 1]
                prev_thick[i, 1:s] = ep.thickness_idx[:s - 1]
                if policy.gating:
                    gate_last[i, 1:s] = ep.materials[:s - 1]
        self.mat_act, self.thick_act = mat_act, thick_act
        self._prev_mat, self._prev_thick = prev_mat, prev_thick

        # forward
        self._gru_caches = []
        self._mat_caches = []
        self._thick_caches = []
        self._critic_caches = []
        self._thick_in_emb = []
        hs = []
        h = policy.gru.initial_state(B)
        for t in range(T):
            if t == 0:
                x = np.tile(policy.start.value, (B, 1))
            else:
                x = policy._step_inputs(prev_mat[:, t], prev_thick[:, t])
            h, gcache = policy.gru.forward(x, h)
            self._gru_caches.append(gcache)
            hs.append(h)
        self._hs = hs

        self.mat_logp = np.zeros((B, T))
        self.thick_logp = np.zeros((B, T))
        self.values = np.zeros((B, T))
        self.mat_entropy = np.zeros((B, T))
        self.thick_entropy = np.zeros((B, T))
        self._mat_probs = []
        self._thick_probs = []
        for t in range(T):
            h = hs[t]
            logits, mcache = policy.mat_head.forward(h)
            self._mat_caches.append(mcache)
            masked = masked_material_logits(
                logits, gate_last[:, t], mask_eos=(t == 0), eos_index=eos)
            p = softmax(masked)
            lp = log_softmax(masked)
            self._mat_probs.append(p)
            self.mat_logp[:, t] = lp[np.arange(B), mat_act[:, t]]
            with np.errstate(invalid="ignore"):
                plp = np.where(p > 0.0, p * lp, 0.0)
            self.mat_entropy[:, t] = -plp.sum(axis=1)

            if policy.autoregressive:
                # EOS/padded rows get a placeholder row; their gradients
                # are masked to zero in backward
                safe_mat = np.where(self.layer_mask[:, t], mat_act[:, t], 0)
                emb, ecache = policy.mat_emb.forward(safe_mat)
                t_in = np.concatenate([emb, h], axis=1)
                self._thick_in_emb.append(ecache)
            else:
                t_in = h
                self._thick_in_emb.append(None)
            t_logits, tcache = policy.thick_head.forward(t_in)
            self._thick_caches.append(tcache)
            tp = softmax(t_logits)
            tlp = log_softmax(t_logits)
            self._thick_probs.append(tp)
            self.thick_logp[:, t] = tlp[np.arange(B), thick_act[:, t]]
            self.thick_entropy[:, t] = -(tp * tlp).sum(axis=1)

            v, ccache = policy.critic.forward(h)
            self._critic_caches.append(ccache)
            self.values[:, t] = v[:, 0]

        # padded positions carry no meaning
        self.mat_logp[~self.step_mask] = 0.0
        self.values[~self.step_mask] = 0.0
        self.mat_entropy[~self.step_mask] = 0.0
        self.thick_logp[~self.layer_mask] = 0.0
        self.thick_entropy[~self.layer_mask] = 0.0

    def backward(self, d_mat_logp: np.ndarray, d_thick_logp: np.ndarray,
                 d_values: np.ndarray, d_mat_entropy: np.ndarray,
                 d_thick_entropy: np.ndarray) -> None:
        """Accumulate parameter gradients for a scalar loss with the given
        upstream derivatives w.r.t. this graph's outputs. Gradients at
        masked positions are ignored.
        """
        policy = self.policy
        B, T = self.step_mask.shape
        eos = policy.vocab.eos_index
        rows = np.arange(B)

        d_mat_logp = np.where(self.step_mask, d_mat_logp, 0.0)
        d_values = np.where(self.step_mask, d_values, 0.0)
        d_mat_entropy = np.where(self.step_mask, d_mat_entropy, 0.0)
        d_thick_logp = np.where(self.layer_mask, d_thick_logp, 0.0)
        d_thick_entropy = np.where(self.layer_mask, d_thick_entropy, 0.0)

        dh_next = np.zeros((B, policy.hidden))
        for t in reversed(range(T)):
            h = self._hs[t]
            # material head
            p = self._mat_probs[t]
            with np.errstate(divide="ignore", invalid="ignore"):
                logp = np.where(p > 0.0, np.log(p), 0.0)
            dlogits = -d_mat_logp[:, t, None] * p
            dlogits[rows, self.mat_act[:, t]] += d_mat_logp[:, t]
            ent_term = np.where(
                p > 0.0, -p * (logp + self.mat_entropy[:, t, None]), 0.0)
            dlogits += d_mat_entropy[:, t, None] * ent_term
            dh = policy.mat_head.backward(self._mat_caches[t], dlogits)

            # thickness head
            tp = self._thick_probs[t]
            tlogp = np.log(np.maximum(tp, 1e-300))
            dtl = -d_thick_logp[:, t, None] * tp
            dtl[rows, self.thick_act[:, t]] += d_thick_logp[:, t]
            dtl += d_thick_entropy[:, t, None] * (
                -tp * (tlogp + self.thick_entropy[:, t, None]))
            dt_in = policy.thick_head.backward(self._thick_caches[t], dtl)
            if policy.autoregressive:
                d_emb = dt_in[:, :policy.embed_dim]
                policy.mat_emb.backward(self._thick_in_emb[t], d_emb)
                dh += dt_in[:, policy.embed_dim:]
            else:
                dh += dt_in

            # critic
            dv = np.zeros((B, 1))
            dv[:, 0] = d_values[:, t]
            dh += policy.critic.backward(self._critic_caches[t], dv)

            dh += dh_next
            dx, dh_next = policy.gru.backward(self._gru_caches[t], dh)

            if t == 0:
                policy.start.grad += dx.sum(axis=0)
            else:
                live = self.step_mask[:, t]
                dx = np.where(live[:, None], dx, 0.0)
                d_m = dx[:, :policy.embed_dim]
                d_t = dx[:, policy.embed_dim:]
                np.add.at(policy.mat_emb.table.grad, self._prev_mat[:, t], d_m)
                np.add.at(policy.thick_emb.table.grad, self._prev_thick[:, t], d_t)
