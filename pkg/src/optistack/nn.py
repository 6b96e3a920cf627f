"""Minimal neural-network core on NumPy: layers with explicit forward and
backward passes, Adam, and bit-exact checkpointing.

Every layer is functional: ``forward`` returns (output, cache) and
``backward`` consumes that cache, accumulates parameter gradients, and
returns the input gradient. Reusing a layer many times inside one graph
(a GRU cell stepped along a sequence, a head applied per step) therefore
needs no weight sharing tricks; each call has its own cache. All math is
float64.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "Parameter",
    "Linear",
    "MLP",
    "Embedding",
    "GRUCell",
    "Adam",
    "sigmoid",
    "softmax",
    "log_softmax",
    "sample_categorical",
    "global_norm",
    "clip_global_norm",
    "save_checkpoint",
    "load_checkpoint",
]


class Parameter:
    """A named float64 tensor with an accumulated gradient."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.value.shape})"


def _uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of (..., K) logits. -inf entries give probability 0."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def sample_categorical(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """Sample one index per row of a (B, K) probability matrix."""
    probs = np.atleast_2d(probs)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    idx = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


class Linear:
    """y = x @ W.T + b with x of shape (B, n_in)."""

    def __init__(self, rng, n_in: int, n_out: int, name: str):
        self.W = Parameter(f"{name}.W", _uniform_init(rng, (n_out, n_in), n_in))
        self.b = Parameter(f"{name}.b", np.zeros(n_out))

    def forward(self, x: np.ndarray):
        return x @ self.W.value.T + self.b.value, x

    def backward(self, cache, dy: np.ndarray) -> np.ndarray:
        x = cache
        self.W.grad += dy.T @ x
        self.b.grad += dy.sum(axis=0)
        return dy @ self.W.value

    def parameters(self) -> list[Parameter]:
        return [self.W, self.b]


class MLP:
    """Stack of Linear layers with tanh between them, linear output."""

    def __init__(self, rng, sizes: list[int], name: str):
        if len(sizes) < 2:
            raise ValueError("MLP needs at least input and output sizes")
        self.layers = [Linear(rng, sizes[i], sizes[i + 1], f"{name}.fc{i}")
                       for i in range(len(sizes) - 1)]

    def forward(self, x: np.ndarray):
        caches = []
        for i, layer in enumerate(self.layers):
            x, lin_cache = layer.forward(x)
            if i < len(self.layers) - 1:
                x = np.tanh(x)
                caches.append((lin_cache, x))
            else:
                caches.append((lin_cache, None))
        return x, caches

    def backward(self, caches, dy: np.ndarray) -> np.ndarray:
        for layer, (lin_cache, act) in zip(reversed(self.layers), reversed(caches)):
            if act is not None:
                dy = dy * (1.0 - act * act)
            dy = layer.backward(lin_cache, dy)
        return dy

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]


class Embedding:
    """Lookup table (num_embeddings, dim)."""

    def __init__(self, rng, num: int, dim: int, name: str):
        self.table = Parameter(f"{name}.table", _uniform_init(rng, (num, dim), dim))

    def forward(self, idx: np.ndarray):
        idx = np.asarray(idx, dtype=np.intp)
        return self.table.value[idx], idx

    def backward(self, cache, dvec: np.ndarray) -> None:
        np.add.at(self.table.grad, cache, dvec)

    def parameters(self) -> list[Parameter]:
        return [self.table]


class GRUCell:
    """Single GRU step. State update, with z the update gate:

        z = sigmoid(x Wz^T + h Uz^T + bz)
        r = sigmoid(x Wr^T + h Ur^T + br)
        c = tanh(x Wh^T + (r * h) Uh^T + bh)
        h' = (1 - z) * h + z * c
    """

    def __init__(self, rng, n_in: int, n_hidden: int, name: str):
        self.n_in = n_in
        self.n_hidden = n_hidden
        def w(tag):
            return Parameter(f"{name}.W{tag}", _uniform_init(rng, (n_hidden, n_in), n_in))
        def u(tag):
            return Parameter(f"{name}.U{tag}", _uniform_init(rng, (n_hidden, n_hidden), n_hidden))
        def b(tag):
            return Parameter(f"{name}.b{tag}", np.zeros(n_hidden))
        self.Wz, self.Uz, self.bz = w("z"), u("z"), b("z")
        self.Wr, self.Ur, self.br = w("r"), u("r"), b("r")
        self.Wh, self.Uh, self.bh = w("h"), u("h"), b("h")

    def initial_state(self, batch: int) -> np.ndarray:
        return np.zeros((batch, self.n_hidden))

    def forward(self, x: np.ndarray, h: np.ndarray):
        z = sigmoid(x @ self.Wz.value.T + h @ self.Uz.value.T + self.bz.value)
        r = sigmoid(x @ self.Wr.value.T + h @ self.Ur.value.T + self.br.value)
        rh = r * h
        c = np.tanh(x @ self.Wh.value.T + rh @ self.Uh.value.T + self.bh.value)
        h2 = (1.0 - z) * h + z * c
        return h2, (x, h, z, r, rh, c)

    def backward(self, cache, dh2: np.ndarray):
        """Returns (dx, dh) for one step given d(h')."""
        x, h, z, r, rh, c = cache
        dz = dh2 * (c - h)
        dc = dh2 * z
        dh = dh2 * (1.0 - z)

        dpre_c = dc * (1.0 - c * c)
        self.Wh.grad += dpre_c.T @ x
        self.Uh.grad += dpre_c.T @ rh
        self.bh.grad += dpre_c.sum(axis=0)
        dx = dpre_c @ self.Wh.value
        drh = dpre_c @ self.Uh.value
        dr = drh * h
        dh += drh * r

        dpre_z = dz * z * (1.0 - z)
        self.Wz.grad += dpre_z.T @ x
        self.Uz.grad += dpre_z.T @ h
        self.bz.grad += dpre_z.sum(axis=0)
        dx += dpre_z @ self.Wz.value
        dh += dpre_z @ self.Uz.value

        dpre_r = dr * r * (1.0 - r)
        self.Wr.grad += dpre_r.T @ x
        self.Ur.grad += dpre_r.T @ h
        self.br.grad += dpre_r.sum(axis=0)
        dx += dpre_r @ self.Wr.value
        dh += dpre_r @ self.Ur.value
        return dx, dh

    def parameters(self) -> list[Parameter]:
        return [self.Wz, self.Uz, self.bz, self.Wr, self.Ur, self.br,
                self.Wh, self.Uh, self.bh]


class Adam:
    """Adam with bias correction. Rejects non-finite gradients loudly."""

    def __init__(self, params: list[Parameter], lr: float,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names")
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in self.params}
        self.v = {p.name: np.zeros_like(p.value) for p in self.params}

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p in self.params:
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient in {p.name}")
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def global_norm(params: list[Parameter]) -> float:
    total = 0.0
    for p in params:
        total += float(np.sum(p.grad * p.grad))
    return float(np.sqrt(total))


def clip_global_norm(params: list[Parameter], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    norm = global_norm(params)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params:
            p.grad *= scale
    return norm


def save_checkpoint(path: str, params: list[Parameter],
                    optimizer: Adam | None = None,
                    rng: np.random.Generator | None = None,
                    extra: dict | None = None) -> None:
    """Write parameters, Adam moments, and RNG state to an npz file.

    Round-trips bit-exactly: arrays are stored raw and the generator state
    is the full bit_generator state dict.
    """
    arrays: dict[str, np.ndarray] = {}
    for p in params:
        arrays[f"param/{p.name}"] = p.value
    if optimizer is not None:
        arrays["adam/t"] = np.array(optimizer.t, dtype=np.int64)
        arrays["adam/lr"] = np.array(optimizer.lr)
        for name, m in optimizer.m.items():
            arrays[f"adam_m/{name}"] = m
        for name, v in optimizer.v.items():
            arrays[f"adam_v/{name}"] = v
    if rng is not None:
        state = json.dumps(rng.bit_generator.state)
        arrays["rng/state"] = np.frombuffer(state.encode(), dtype=np.uint8)
    if extra:
        arrays["extra/json"] = np.frombuffer(
            json.dumps(extra).encode(), dtype=np.uint8)
    tmp = path + ".tmp.npz"
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    import os
    os.replace(tmp, path)


def load_checkpoint(path: str, params: list[Parameter],
                    optimizer: Adam | None = None,
                    rng: np.random.Generator | None = None) -> dict:
    """Restore state in place. Shapes must match. Returns the extra dict."""
    with np.load(path) as data:
        for p in params:
            key = f"param/{p.name}"
            if key not in data:
                raise KeyError(f"checkpoint missing parameter {p.name}")
            stored = data[key]
            if stored.shape != p.value.shape:
                raise ValueError(
                    f"{p.name}: checkpoint shape {stored.shape} != {p.value.shape}")
            p.value[...] = stored
            p.grad[...] = 0.0
        if optimizer is not None:
            optimizer.t = int(data["adam/t"])
            for name in optimizer.m:
                optimizer.m[name][...] = data[f"adam_m/{name}"]
                optimizer.v[name][...] = data[f"adam_v/{name}"]
        if rng is not None:
            if "rng/state" not in data:
                raise KeyError("checkpoint has no RNG state")
            state = json.loads(bytes(data["rng/state"]).decode())
            rng.bit_generator.state = state
        extra = {}
        if "extra/json" in data:
            extra = json.loads(bytes(data["extra/json"]).decode())
    return extra
