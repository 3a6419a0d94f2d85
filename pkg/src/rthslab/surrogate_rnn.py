"""Recurrent surrogate: a single tanh recurrence trained by truncated BPTT.

    h[t] = tanh(W_in u[t] + W_rec h[t-1] + b)
    y[t] = w_out . h[t] + b_out

The two input channels are the ground acceleration and the (delayed) force
feedback, z-score normalized with statistics frozen from the training data;
the output is the story displacement in mm. Training is plain mini-batch
gradient descent with global gradient-norm clipping over contiguous
non-overlapping windows, each started from a zero hidden state, which makes
per-window gradients exact (truncation happens only at window boundaries).
Everything is seeded: initialization, window shuffling, and therefore the
final weights.

The recurrent model is a sequence regressor here, evaluated open loop
against the analytical solution; it does not drive the hybrid loop unless
explicitly asked for.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .history import RunHistory


@dataclass
class SequenceDataset:
    inputs: np.ndarray    # (N, 2): ground accel, delayed force feedback
    targets: np.ndarray   # (N,): displacement, mm
    delay_steps: int
    source: str = "run"

    def __len__(self):
        return len(self.targets)

    @property
    def checksum(self):
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.inputs).tobytes())
        digest.update(np.ascontiguousarray(self.targets).tobytes())
        return digest.hexdigest()


def build_rnn_dataset(run_history, delay_steps):
    """Input/target sequences mirroring the linear surrogate's protocol.

    The force channel is the history's force column delayed by delay_steps
    with a zero-filled head, matching the zero-prefilled plant buffer, so the
    sequence keeps its full length and stays contiguous for BPTT windows.
    """
    if delay_steps < 0:
        raise ValueError("delay_steps must be >= 0")
    n = len(run_history)
    force_delayed = np.zeros(n)
    if delay_steps < n:
        force_delayed[delay_steps:] = run_history.force[: n - delay_steps]
    inputs = np.column_stack([run_history.gm_accel, force_delayed])
    return SequenceDataset(
        inputs=inputs,
        targets=run_history.command.copy(),
        delay_steps=delay_steps,
        source=run_history.name,
    )


@dataclass
class RnnModel:
    w_in: np.ndarray       # (h, 2)
    w_rec: np.ndarray      # (h, h)
    b_h: np.ndarray        # (h,)
    w_out: np.ndarray      # (h,)
    b_out: float
    input_mean: np.ndarray # (2,)
    input_std: np.ndarray  # (2,)
    hidden_size: int
    seed: int = 0
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "kind": "rnn-surrogate",
            "hidden_size": self.hidden_size,
            "seed": self.seed,
            "w_in": self.w_in.tolist(),
            "w_rec": self.w_rec.tolist(),
            "b_h": self.b_h.tolist(),
            "w_out": self.w_out.tolist(),
            "b_out": float(self.b_out),
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json_dict(cls, payload):
        if payload.get("kind") != "rnn-surrogate":
            raise ValueError("not an RNN surrogate model file")
        return cls(
            w_in=np.array(payload["w_in"], dtype=float),
            w_rec=np.array(payload["w_rec"], dtype=float),
            b_h=np.array(payload["b_h"], dtype=float),
            w_out=np.array(payload["w_out"], dtype=float),
            b_out=float(payload["b_out"]),
            input_mean=np.array(payload["input_mean"], dtype=float),
            input_std=np.array(payload["input_std"], dtype=float),
            hidden_size=int(payload["hidden_size"]),
            seed=int(payload["seed"]),
            provenance=dict(payload.get("provenance", {})),
        )

    @classmethod
    def load(cls, path):
        with open(path, "r") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 10
    epochs: int = 200
    learning_rate: float = 0.5
    lr_decay: float = 0.03
    bptt_window: int = 64
    batch_windows: int = 64
    gradient_clip_norm: float = 1.0
    validation_fraction: float = 0.1
    init_scale: float = 0.3
    recurrent_scale: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.lr_decay < 0:
            raise ValueError("lr_decay must be >= 0")
        if self.bptt_window < 2:
            raise ValueError("bptt_window must be >= 2")
        if self.batch_windows < 1:
            raise ValueError("batch_windows must be >= 1")
        if self.gradient_clip_norm <= 0:
            raise ValueError("gradient_clip_norm must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")


def _normalize(model, inputs):
    inputs = np.asarray(inputs, dtype=float)
    if inputs.shape[-1] != 2:
        raise ValueError(f"expected 2 input channels, got {inputs.shape[-1]}")
    return (inputs - model.input_mean) / model.input_std


def rnn_forward(model, inputs, h0=None, return_hidden=False):
    """Open-loop forward pass over a raw (N, 2) input sequence."""
    u = _normalize(model, inputs)
    n = len(u)
    h = np.zeros(model.hidden_size) if h0 is None else np.array(h0, dtype=float)
    out = np.empty(n)
    hidden = np.empty((n, model.hidden_size)) if return_hidden else None
    w_in_t = model.w_in.T
    w_rec_t = model.w_rec.T
    for t in range(n):
        h = np.tanh(u[t] @ w_in_t + h @ w_rec_t + model.b_h)
        out[t] = h @ model.w_out + model.b_out
        if return_hidden:
            hidden[t] = h
    if return_hidden:
        return out, hidden
    return out


def _forward_windows(params, u):
    """Batched forward over (B, L, 2) normalized windows, zero initial state."""
    w_in, w_rec, b_h, w_out, b_out = params
    b, l, _ = u.shape
    hs = np.zeros((l + 1, b, len(b_h)))
    for t in range(l):
        hs[t + 1] = np.tanh(u[:, t] @ w_in.T + hs[t] @ w_rec.T + b_h)
    y = hs[1:].transpose(1, 0, 2) @ w_out + b_out    # (B, L)
    return y, hs


def bptt_gradients(model, inputs, targets):
    """Exact gradients of the window MSE with respect to all parameters.

    inputs: raw (L, 2) or (B, L, 2); targets: (L,) or (B, L). Returns
    (grads, loss) where grads holds w_in, w_rec, b_h, w_out, b_out arrays.
    Backpropagation runs through every step of each window (zero initial
    hidden state), so the only truncation is the window boundary itself.
    """
    u = _normalize(model, inputs)
    y_true = np.asarray(targets, dtype=float)
    if u.ndim == 2:
        u = u[None, :, :]
        y_true = y_true[None, :]
    b, l, _ = u.shape
    params = (model.w_in, model.w_rec, model.b_h, model.w_out, model.b_out)
    y, hs = _forward_windows(params, u)
    err = y - y_true
    loss = float(np.mean(err * err))
    dy = 2.0 * err / err.size                         # (B, L)
    g_w_out = np.einsum("bl,lbh->h", dy, hs[1:])
    g_b_out = float(np.sum(dy))
    g_w_in = np.zeros_like(model.w_in)
    g_w_rec = np.zeros_like(model.w_rec)
    g_b_h = np.zeros_like(model.b_h)
    dh_next = np.zeros((b, len(model.b_h)))
    for t in range(l, 0, -1):
        dh = dy[:, t - 1, None] * model.w_out[None, :] + dh_next
        dz = dh * (1.0 - hs[t] * hs[t])
        g_w_in += dz.T @ u[:, t - 1]
        g_w_rec += dz.T @ hs[t - 1]
        g_b_h += dz.sum(axis=0)
        dh_next = dz @ model.w_rec
    grads = {
        "w_in": g_w_in,
        "w_rec": g_w_rec,
        "b_h": g_b_h,
        "w_out": g_w_out,
        "b_out": g_b_out,
    }
    return grads, loss


def clip_gradients(grads, clip_norm):
    """Scale the full gradient so its global L2 norm is at most clip_norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.square(g)))
    norm = math.sqrt(total)
    if norm > clip_norm > 0.0:
        scale = clip_norm / norm
        return {k: g * scale for k, g in grads.items()}, norm
    return grads, norm


def _window_loss(model, u_windows, y_windows):
    params = (model.w_in, model.w_rec, model.b_h, model.w_out, model.b_out)
    y, _ = _forward_windows(params, u_windows)
    err = y - y_windows
    return float(np.mean(err * err))


def train_rnn(dataset, config):
    """Mini-batch SGD over BPTT windows; returns (model, training report).

    The last validation_fraction of windows (chronologically) is held out
    for the loss trace. Training aborts with the epoch index if the loss
    goes non-finite.
    """
    n = len(dataset)
    l = config.bptt_window
    n_win = n // l
    if n_win < 2:
        raise ValueError(f"dataset of {n} ticks is shorter than two BPTT windows")
    rng = np.random.default_rng(config.seed)
    mean = dataset.inputs.mean(axis=0)
    std = dataset.inputs.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)

    h = config.hidden_size
    model = RnnModel(
        w_in=rng.normal(0.0, config.init_scale, size=(h, 2)),
        w_rec=rng.normal(0.0, config.recurrent_scale / math.sqrt(h), size=(h, h)),
        b_h=np.zeros(h),
        w_out=np.zeros(h),
        b_out=0.0,
        input_mean=mean,
        input_std=std,
        hidden_size=h,
        seed=config.seed,
        provenance={
            "source": dataset.source,
            "rows": n,
            "delay_steps": dataset.delay_steps,
            "training_checksum": dataset.checksum,
            "train_config": asdict(config),
        },
    )

    u_all = _normalize(model, dataset.inputs[: n_win * l]).reshape(n_win, l, 2)
    y_all = dataset.targets[: n_win * l].reshape(n_win, l)
    n_val = int(round(config.validation_fraction * n_win))
    n_val = min(max(n_val, 0), n_win - 1)
    train_idx = np.arange(n_win - n_val)
    u_val = u_all[n_win - n_val :] if n_val else None
    y_val = y_all[n_win - n_val :] if n_val else None

    # gradients see normalized inputs directly; bypass re-normalization
    raw_model = RnnModel(
        w_in=model.w_in, w_rec=model.w_rec, b_h=model.b_h, w_out=model.w_out,
        b_out=model.b_out, input_mean=np.zeros(2), input_std=np.ones(2),
        hidden_size=h, seed=config.seed,
    )

    train_loss = []
    val_loss = []
    for epoch in range(config.epochs):
        # 1/t learning-rate decay: early epochs fix the amplitude, late
        # ones grind the residual phase lead out of the force feedback
        lr = config.learning_rate / (1.0 + config.lr_decay * epoch)
        order = rng.permutation(train_idx)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), config.batch_windows):
            batch = order[start : start + config.batch_windows]
            grads, loss = bptt_gradients(raw_model, u_all[batch], y_all[batch])
            if not math.isfinite(loss):
                raise RuntimeError(f"training diverged (non-finite loss) at epoch {epoch}")
            grads, _ = clip_gradients(grads, config.gradient_clip_norm)
            raw_model.w_in -= lr * grads["w_in"]
            raw_model.w_rec -= lr * grads["w_rec"]
            raw_model.b_h -= lr * grads["b_h"]
            raw_model.w_out -= lr * grads["w_out"]
            raw_model.b_out -= lr * grads["b_out"]
            epoch_loss += loss
            n_batches += 1
        train_loss.append(epoch_loss / max(n_batches, 1))
        if n_val:
            val_loss.append(_window_loss(raw_model, u_val, y_val))

    model.w_in = raw_model.w_in
    model.w_rec = raw_model.w_rec
    model.b_h = raw_model.b_h
    model.w_out = raw_model.w_out
    model.b_out = raw_model.b_out
    report = {
        "hidden_size": h,
        "epochs": config.epochs,
        "train_loss": train_loss,
        "val_loss": val_loss,
        "final_train_loss": train_loss[-1] if train_loss else None,
        "final_val_loss": val_loss[-1] if val_loss else None,
        "windows": int(n_win),
        "window_length": l,
        "seed": config.seed,
        "config": asdict(config),
    }
    return model, report


def evaluate_hidden_size_sweep(dataset, sizes=(5, 10, 20), base_config=None):
    """Train one model per hidden size and score open-loop replay accuracy.

    Per-size seeds derive deterministically from the base seed plus the
    size, so the sweep reproduces bit-for-bit. Returns a report dict keyed
    by size with the best (lowest nRMSE) size flagged.
    """
    from .metrics import nrmse

    if base_config is None:
        base_config = TrainConfig()
    results = {}
    models = {}
    for size in sizes:
        cfg_kwargs = asdict(base_config)
        cfg_kwargs["hidden_size"] = int(size)
        cfg_kwargs["seed"] = base_config.seed + int(size)
        cfg = TrainConfig(**cfg_kwargs)
        model, report = train_rnn(dataset, cfg)
        pred = rnn_forward(model, dataset.inputs)
        err = nrmse(dataset.targets, pred)
        results[int(size)] = {
            "nrmse_percent": err,
            "final_train_loss": report["final_train_loss"],
            "final_val_loss": report["final_val_loss"],
            "seed": cfg.seed,
        }
        models[int(size)] = model
    best = min(results, key=lambda s: results[s]["nrmse_percent"])
    report = {
        "sizes": [int(s) for s in sizes],
        "results": {str(k): v for k, v in results.items()},
        "best_size": int(best),
    }
    return report, models
