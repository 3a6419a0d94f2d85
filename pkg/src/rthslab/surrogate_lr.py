"""Linear-regression surrogate for the analytical substructure.

The driver is a five-feature linear one-step predictor of the story
displacement:

    x_hat(i) = w . ( ag(i), x_fb(i-d), F_fb(i-d), x_hat(i-1), x_hat(i-2) )

trained by ordinary least squares. Training follows a two-phase protocol:

  phase 1 (synthetic feedback): the dataset comes from a fully analytical
      run, with displacement/force feedback columns lagged by the nominal
      plant delay d. The trained model can then replay the response closed
      loop, feeding its own delayed predictions back as feedback.
  phase 2 (recorded feedback): the model drives the loop while only the
      actuator moves, the real measured/force streams are recorded, and the
      model is refit on those recordings so deployment sees the feedback
      distribution it was trained on.

Note the phase-1 feature matrix is exactly rank deficient: the force column
is the brace stiffness times the displacement column. The default solve is
minimum-norm least squares, which is deterministic and behaviorally
equivalent for any weight split across the collinear pair because the
deployed loop preserves the same proportionality. Strict callers can demand
an error instead.
"""

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .history import RunHistory

FEATURE_NAMES = (
    "ground_accel",
    "disp_feedback",
    "force_feedback",
    "prev_prediction",
    "prev_prediction_2",
)


@dataclass
class LrDataset:
    features: np.ndarray   # (rows, 5)
    targets: np.ndarray    # (rows,)
    delay_steps: int
    warmup: int
    source: str = "run"

    def __len__(self):
        return len(self.targets)

    @property
    def checksum(self):
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.features).tobytes())
        digest.update(np.ascontiguousarray(self.targets).tobytes())
        return digest.hexdigest()


def build_lr_dataset(run_history, delay_steps):
    """Feature/target rows from a run history.

    Row i (for i >= warmup = max(delay_steps, 2)) holds
    (gm_accel[i], measured[i-d], force[i-d], command[i-1], command[i-2])
    with target command[i]. For analytical runs the measured and force
    columns are the ideal-plant duplicates, giving the synthetic-delay
    protocol; for recorded hybrid runs they are the real actuator streams.
    """
    if delay_steps < 0:
        raise ValueError("delay_steps must be >= 0")
    n = len(run_history)
    warmup = max(delay_steps, 2)
    rows = n - warmup
    if rows < 5:
        raise ValueError(
            f"history of {n} ticks leaves {rows} rows after warmup {warmup}; need >= 5"
        )
    i = np.arange(warmup, n)
    feats = np.column_stack([
        run_history.gm_accel[i],
        run_history.measured[i - delay_steps],
        run_history.force[i - delay_steps],
        run_history.command[i - 1],
        run_history.command[i - 2],
    ])
    targets = run_history.command[i].copy()
    return LrDataset(
        features=feats,
        targets=targets,
        delay_steps=delay_steps,
        warmup=warmup,
        source=run_history.name,
    )


@dataclass
class LrModel:
    weights: np.ndarray          # (5,), ordered as FEATURE_NAMES
    bias: float = 0.0
    include_bias: bool = False
    feature_names: tuple = FEATURE_NAMES
    condition_number: float = 0.0
    effective_rank: int = 5
    delay_steps: int = 28
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "kind": "lr-surrogate",
            "feature_names": list(self.feature_names),
            "weights": [float(w) for w in self.weights],
            "bias": self.bias,
            "include_bias": self.include_bias,
            "delay_steps": self.delay_steps,
            "condition_number": self.condition_number,
            "effective_rank": self.effective_rank,
            "provenance": self.provenance,
        }

    @classmethod
    def from_json_dict(cls, payload):
        if payload.get("kind") != "lr-surrogate":
            raise ValueError("not an LR surrogate model file")
        return cls(
            weights=np.array(payload["weights"], dtype=float),
            bias=float(payload["bias"]),
            include_bias=bool(payload["include_bias"]),
            feature_names=tuple(payload["feature_names"]),
            condition_number=float(payload["condition_number"]),
            effective_rank=int(payload["effective_rank"]),
            delay_steps=int(payload["delay_steps"]),
            provenance=dict(payload.get("provenance", {})),
        )

    @classmethod
    def load(cls, path):
        with open(path, "r") as fh:
            return cls.from_json_dict(json.load(fh))


def train_lr(dataset, include_bias=False, on_rank_deficient="min_norm"):
    """Fit the five weights (plus optional bias) by least squares.

    The solve uses a numerically stable orthogonal factorization (lstsq).
    When the design matrix is rank deficient, on_rank_deficient selects the
    behavior: "min_norm" (default) keeps the deterministic minimum-norm
    solution and records the diagnosis on the model; "raise" errors, naming
    the dependent columns.
    """
    x = np.asarray(dataset.features, dtype=float)
    y = np.asarray(dataset.targets, dtype=float)
    if x.ndim != 2 or x.shape[1] != len(FEATURE_NAMES):
        raise ValueError(f"feature matrix must be (rows, {len(FEATURE_NAMES)})")
    if len(x) < 5:
        raise ValueError(f"need at least 5 rows, got {len(x)}")
    names = list(FEATURE_NAMES)
    if include_bias:
        x = np.column_stack([x, np.ones(len(x))])
        names.append("bias")
    sol, _, rank, sv = np.linalg.lstsq(x, y, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0.0 else float("inf")
    if rank < x.shape[1]:
        dependent = _dependent_columns(x, rank, names)
        if on_rank_deficient == "raise":
            raise ValueError(
                "design matrix is rank deficient (rank "
                f"{rank} of {x.shape[1]}); near-collinear columns: {dependent}"
            )
        if on_rank_deficient != "min_norm":
            raise ValueError(f"unknown on_rank_deficient mode {on_rank_deficient!r}")
    weights = sol[: len(FEATURE_NAMES)]
    bias = float(sol[-1]) if include_bias else 0.0
    return LrModel(
        weights=weights,
        bias=bias,
        include_bias=include_bias,
        condition_number=cond,
        effective_rank=int(rank),
        delay_steps=dataset.delay_steps,
        provenance={
            "source": dataset.source,
            "rows": len(dataset),
            "delay_steps": dataset.delay_steps,
            "training_checksum": dataset.checksum,
        },
    )


def _dependent_columns(x, rank, names):
    """Names of the columns a pivoted QR would discard, for error reporting."""
    from scipy.linalg import qr

    _, _, piv = qr(x, mode="economic", pivoting=True)
    return [names[j] for j in sorted(piv[rank:])]


def predict_lr(model, features):
    """Evaluate the predictor on one feature vector or a (rows, 5) batch."""
    f = np.asarray(features, dtype=float)
    if f.ndim == 1:
        return float(f @ model.weights + model.bias)
    return f @ model.weights + model.bias


def replay_lr(model, ground_motion, stiffness, delay_steps=None, n=None, name="lr-replay"):
    """Closed-loop autoregressive replay without a plant.

    The model consumes its own predictions, delayed by delay_steps, as
    displacement feedback, with force feedback k_e times that value; all
    buffers start at zero (structure at rest). The returned history stores
    the synthetic feedback force in the force column.
    """
    if delay_steps is None:
        delay_steps = model.delay_steps
    accel = ground_motion.accel
    n_total = len(accel) if n is None else min(n, len(accel))
    hist = RunHistory.allocate(n_total, ground_motion.dt, name=name)
    hist.gm_accel[:] = accel[:n_total]
    w = model.weights
    w0, w1, w2, w3, w4 = (float(v) for v in w)
    b = model.bias
    ug = accel.tolist()
    preds = [0.0] * n_total
    d = delay_steps
    cmd, force = hist.command, hist.force
    for i in range(n_total):
        x_fb = preds[i - d] if i >= d else 0.0
        f_fb = stiffness * x_fb
        p1 = preds[i - 1] if i >= 1 else 0.0
        p2 = preds[i - 2] if i >= 2 else 0.0
        p = w0 * ug[i] + w1 * x_fb + w2 * f_fb + w3 * p1 + w4 * p2 + b
        preds[i] = p
        cmd[i] = p
        force[i] = f_fb
    np.copyto(hist.compensated, hist.command)
    np.copyto(hist.measured, hist.command)
    return hist
