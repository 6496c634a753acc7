"""Dense sigmoid network with hand-written backprop and Adam.

Parameters live in one flat float64 vector. Layer ``l`` contributes its
weight matrix (shape ``d_in x d_out``, row-major) followed by its bias.
Inputs are the little-endian bits of ``x``.

Expectations over the group are exhaustive: every ``x`` in Z_p^* and, for
gradient statistics, every base ``a`` in Z_p^*.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .zp_core import GroupSpec, as_group, mod_inverse, parity_table

log = logging.getLogger(__name__)


class LossKind(enum.Enum):
    SQUARED = "squared"
    BINARY_CROSS_ENTROPY = "binary_cross_entropy"


@dataclass(frozen=True)
class MlpArchitecture:
    input_width: int
    hidden: tuple[int, ...] = (100, 100)
    output_width: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not self.hidden:
            raise DomainError("at least one hidden layer is required")
        if min((self.input_width, self.output_width) + self.hidden) < 1:
            raise DomainError("all layer widths must be >= 1")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        widths = [self.input_width, *self.hidden, self.output_width]
        return list(zip(widths[:-1], widths[1:]))

    @property
    def num_params(self) -> int:
        return sum((d_in + 1) * d_out for d_in, d_out in self.layer_dims)

    def unpack(self, w: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Views ``(W, b)`` into the flat vector ``w`` (no copies)."""
        if w.shape != (self.num_params,):
            raise DomainError(f"expected {self.num_params} parameters, got {w.shape}")
        layers, off = [], 0
        for d_in, d_out in self.layer_dims:
            W = w[off : off + d_in * d_out].reshape(d_in, d_out)
            off += d_in * d_out
            b = w[off : off + d_out]
            off += d_out
            layers.append((W, b))
        return layers


def encode_input(x: int, n: int) -> np.ndarray:
    """Bits of ``x`` as 0.0/1.0, least significant first."""
    x = int(x)
    if not 0 <= x < (1 << n):
        raise DomainError(f"x={x} does not fit in {n} bits")
    return np.array([(x >> i) & 1 for i in range(n)], dtype=np.float64)


def encode_inputs(xs, n: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    if xs.size and (xs.min() < 0 or xs.max() >= (1 << n)):
        raise DomainError(f"inputs do not fit in {n} bits")
    return ((xs[:, None] >> np.arange(n)) & 1).astype(np.float64)


def init_params(arch: MlpArchitecture, seed: int) -> np.ndarray:
    """Uniform on ``[-1/sqrt(d_in), 1/sqrt(d_in)]`` per layer (PyTorch's default)."""
    rng = np.random.default_rng(seed)
    chunks = []
    for d_in, d_out in arch.layer_dims:
        bound = 1.0 / math.sqrt(d_in)
        chunks.append(rng.uniform(-bound, bound, size=d_in * d_out))
        chunks.append(rng.uniform(-bound, bound, size=d_out))
    return np.concatenate(chunks)


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(inputs) -> tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=np.float64)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


def _forward_all(layers, x: np.ndarray):
    acts = [x]
    z = x
    for W, b in layers:
        z = acts[-1] @ W + b
        acts.append(_sigmoid(z))
    return acts, z


def forward(params: np.ndarray, arch: MlpArchitecture, inputs) -> np.ndarray:
    x, single = _as_batch(inputs)
    if x.shape[1] != arch.input_width:
        raise DomainError(f"input width {x.shape[1]} != {arch.input_width}")
    acts, _ = _forward_all(arch.unpack(params), x)
    return acts[-1][0] if single else acts[-1]


def _loss_and_delta(out, z, targets, loss: LossKind):
    """Mean per-example loss and dL/dz at the output pre-activation."""
    if loss is LossKind.SQUARED:
        r = out - targets
        return 0.5 * np.sum(r * r, axis=1), r * out * (1.0 - out)
    if loss is LossKind.BINARY_CROSS_ENTROPY:
        # -t log s(z) - (1-t) log(1-s(z)) = softplus(z) - t z
        per = np.logaddexp(0.0, z) - targets * z
        return np.sum(per, axis=1), out - targets
    raise DomainError(f"unknown loss {loss!r}")


def _backprop(layers, acts, delta) -> list[np.ndarray]:
    """Summed-over-batch gradients given dL/dz at the output."""
    grads = []
    for l in range(len(layers) - 1, -1, -1):
        W, _ = layers[l]
        a_in = acts[l]
        grads.append(np.concatenate([(a_in.T @ delta).ravel(), delta.sum(axis=0)]))
        if l:
            delta = (delta @ W.T) * a_in * (1.0 - a_in)
    return grads[::-1]


def backward(params, arch: MlpArchitecture, inputs, targets, loss: LossKind):
    """``(loss, gradient)`` averaged over the rows of ``inputs``.

    For cross-entropy the targets are bits in {0, 1}; for the squared loss
    ``0.5 * (f - y)**2`` they are the signs in {-1, +1}.
    """
    x, _ = _as_batch(inputs)
    t = np.asarray(targets, dtype=np.float64).reshape(x.shape[0], arch.output_width)
    layers = arch.unpack(params)
    acts, z = _forward_all(layers, x)
    per, delta = _loss_and_delta(acts[-1], z, t, loss)
    grad = np.concatenate(_backprop(layers, acts, delta)) / x.shape[0]
    return float(per.mean()), grad


def targets_for(log_values: np.ndarray, loss: LossKind) -> np.ndarray:
    """Parity targets: the bit ``log mod 2`` for cross-entropy, ``(-1)**log`` for squared."""
    bits = np.asarray(log_values) & 1
    if loss is LossKind.SQUARED:
        return (1 - 2 * bits).astype(np.float64)
    return bits.astype(np.float64)


def _group_inputs(g: GroupSpec) -> np.ndarray:
    return encode_inputs(g.nonzero(), g.bitlength)


def exact_loss_gradient(
    params, arch: MlpArchitecture, group, base: int, loss: LossKind, chunk: int = 8192
) -> np.ndarray:
    """``grad L_a(w)``: the loss gradient averaged over every ``x`` in Z_p^*."""
    g = as_group(group)
    if not 0 < base < g.p:
        raise DomainError(f"base {base} is not a nonzero element of Z_{g.p}")
    inv = mod_inverse(base, g)
    xs = g.nonzero()
    total = np.zeros(arch.num_params)
    for start in range(0, xs.size, chunk):
        part = xs[start : start + chunk]
        logs = inv * part % g.p
        _, grad = backward(
            params, arch, encode_inputs(part, g.bitlength), targets_for(logs, loss), loss
        )
        total += grad * part.size
        if xs.size > chunk:
            log.debug("p=%d: %d/%d inputs", g.p, start + part.size, xs.size)
    return total / xs.size


def output_jacobian(params, arch: MlpArchitecture, inputs) -> np.ndarray:
    """Per-example ``d f_w(x) / d w`` as rows (single-output networks)."""
    if arch.output_width != 1:
        raise DomainError("output_jacobian needs a single-output network")
    x, _ = _as_batch(inputs)
    layers = arch.unpack(params)
    acts, _ = _forward_all(layers, x)
    out = acts[-1]
    delta = out * (1.0 - out)
    blocks = []
    for l in range(len(layers) - 1, -1, -1):
        W, _ = layers[l]
        a_in = acts[l]
        gw = (a_in[:, :, None] * delta[:, None, :]).reshape(x.shape[0], -1)
        blocks.append(np.hstack([gw, delta]))
        if l:
            delta = (delta @ W.T) * a_in * (1.0 - a_in)
    return np.hstack(blocks[::-1])


def all_base_gradients(params, arch: MlpArchitecture, group, loss: LossKind) -> np.ndarray:
    """Row ``a-1`` holds ``grad L_a(w)``; one exhaustive pass per base."""
    g = as_group(group)
    return np.stack(
        [exact_loss_gradient(params, arch, g, a, loss) for a in range(1, g.p)]
    )


@dataclass(frozen=True)
class GradientStats:
    v: float
    g: float
    ratio_scaled: float


@lru_cache(maxsize=8)
def _centered_target_gram(p: int, loss: LossKind) -> np.ndarray:
    # C[a, x] = t_a(x) - mean_a t_a(x); returns C^T C (indexed by x, x')
    logs = (1 - parity_table(p)) // 2  # log_a x mod 2
    t = targets_for(logs, loss)
    c = t - t.mean(axis=0, keepdims=True)
    out = c.T @ c
    out.flags.writeable = False
    return out


def gradient_variance(
    params, arch: MlpArchitecture, group, loss: LossKind, method: str = "kernel"
) -> GradientStats:
    """``v = E_A |grad L_A - E grad L_A|^2``, ``g = E_X |df/dw|^2`` and ``(v/g) sqrt(p)``.

    ``method="definitional"`` forms every ``grad L_A`` explicitly.
    ``method="kernel"`` uses that ``grad L_A - mu = E_X[c_A(X) J(X)]`` with
    ``c_A`` the centred targets, so ``v`` only needs the Gram matrix of the
    per-example Jacobians, assembled layer by layer without materialising
    it.
    """
    gs = as_group(group)
    if arch.output_width != 1:
        raise DomainError("gradient statistics are defined for the parity network")
    x = _group_inputs(gs)
    m = gs.order
    if method == "definitional":
        grads = all_base_gradients(params, arch, gs, loss)
        mu = grads.mean(axis=0)
        v = float(np.mean(np.sum((grads - mu) ** 2, axis=1)))
        jac = output_jacobian(params, arch, x)
        g = float(np.mean(np.sum(jac * jac, axis=1)))
    elif method == "kernel":
        layers = arch.unpack(params)
        acts, _ = _forward_all(layers, x)
        out = acts[-1]
        sens = out * (1.0 - out)  # df/dz
        # loss gradients are linear in J = dz/dw (cross-entropy) or df/dw (squared)
        delta = np.ones_like(out) if loss is LossKind.BINARY_CROSS_ENTROPY else sens
        kernel = np.zeros((m, m))
        sq_norm_dz = np.zeros(m)
        for l in range(len(layers) - 1, -1, -1):
            W, _ = layers[l]
            a_in = acts[l]
            a_gram = a_in @ a_in.T + 1.0
            kernel += a_gram * (delta @ delta.T)
            sq_norm_dz += np.diagonal(a_gram) * np.sum(delta * delta, axis=1)
            if l:
                delta = (delta @ W.T) * a_in * (1.0 - a_in)
        ctc = _centered_target_gram(gs.p, loss)
        v = float(np.einsum("ij,ij->", kernel, ctc)) / m**3
        if loss is LossKind.BINARY_CROSS_ENTROPY:
            sq_norm_dz = sq_norm_dz * sens[:, 0] ** 2
        g = float(sq_norm_dz.mean())
    else:
        raise DomainError(f"unknown method {method!r}")
    return GradientStats(v=v, g=g, ratio_scaled=v / g * math.sqrt(gs.p))


def variance_identity(grads: np.ndarray) -> float:
    """``E|G_A|^2 - |E G_A|^2`` over the rows of ``grads``."""
    mu = grads.mean(axis=0)
    return float(np.mean(np.sum(grads * grads, axis=1)) - mu @ mu)


# --- optimiser -------------------------------------------------------------


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grad, state: AdamState, hyper: AdamHyper = AdamHyper()):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    if state.m.shape != params.shape or grad.shape != params.shape:
        raise DomainError("Adam state, gradient and parameters must share a shape")
    t = state.t + 1
    m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad * grad
    m_hat = m / (1.0 - hyper.beta1**t)
    v_hat = v / (1.0 - hyper.beta2**t)
    new = params - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
    return new, AdamState(m, v, t)


# --- training ----------------------------------------------------------------


@dataclass
class TrainingHistory:
    p: int
    base: int
    targets: str
    rows: list[dict] = field(default_factory=list)

    @property
    def final(self) -> dict:
        return self.rows[-1]


def _label_matrix(logs: np.ndarray, n: int, targets: str) -> np.ndarray:
    if targets == "parity":
        return (logs & 1).astype(np.float64)[:, None]
    if targets == "all_bits":
        return encode_inputs(logs, n)
    raise DomainError(f"unknown target kind {targets!r}")


def _evaluate(params, arch, x, y):
    acts, z = _forward_all(arch.unpack(params), x)
    per, _ = _loss_and_delta(acts[-1], z, y, LossKind.BINARY_CROSS_ENTROPY)
    correct = (z > 0.0) == (y > 0.5)
    return float(per.mean()), correct.mean(axis=0)


def train(
    arch: MlpArchitecture,
    group,
    base: int,
    m: int = 5000,
    split: float = 0.7,
    batch: int = 100,
    epochs: int = 2000,
    seed: int = 0,
    targets: str = "parity",
    hyper: AdamHyper = AdamHyper(),
    eval_every: int = 1,
) -> TrainingHistory:
    """Train on ``m`` uniform samples of Z_p^* labelled by bits of ``log_base x``.

    Cross-entropy (summed over output bits) is minimised with Adam. Every
    ``eval_every`` epochs (and after the last) a history row is appended with
    loss and accuracy on both splits; for multi-bit targets the accuracy is
    the mean over bits and per-bit accuracies are included.
    """
    g = as_group(group)
    if m < batch:
        raise DomainError("dataset must hold at least one batch")
    n = g.bitlength
    width = 1 if targets == "parity" else n
    if arch.input_width != n or arch.output_width != width:
        raise DomainError(f"architecture does not match n={n}, targets={targets}")
    data_seed, init_seed = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(data_seed)
    xs = rng.integers(1, g.p, size=m)
    logs = mod_inverse(base, g) * xs % g.p
    x_all = encode_inputs(xs, n)
    y_all = _label_matrix(logs, n, targets)
    n_train = int(round(split * m))
    x_tr, y_tr, x_te, y_te = x_all[:n_train], y_all[:n_train], x_all[n_train:], y_all[n_train:]

    params = init_params(arch, int(init_seed.generate_state(1)[0]))
    state = AdamState.zeros(arch.num_params)
    hist = TrainingHistory(p=g.p, base=base, targets=targets)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n_train)
        for start in range(0, n_train, batch):
            idx = order[start : start + batch]
            _, grad = backward(params, arch, x_tr[idx], y_tr[idx], LossKind.BINARY_CROSS_ENTROPY)
            params, state = adam_step(params, grad, state, hyper)
        if epoch % eval_every == 0 or epoch == epochs:
            tr_loss, tr_acc = _evaluate(params, arch, x_tr, y_tr)
            te_loss, te_acc = _evaluate(params, arch, x_te, y_te)
            row = {
                "epoch": epoch,
                "train_loss": tr_loss,
                "test_loss": te_loss,
                "train_acc": float(tr_acc.mean()),
                "test_acc": float(te_acc.mean()),
            }
            if targets == "all_bits":
                row.update({f"test_acc_bit{i}": float(a) for i, a in enumerate(te_acc)})
            hist.rows.append(row)
    return hist
