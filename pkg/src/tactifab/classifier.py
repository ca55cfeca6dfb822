"""Compact residual binary classifier trained from scratch with plain SGD.

Architecture (channels configurable, defaults in parentheses):

* stem: 3x3 conv, 1 -> c (8), stride 1, pad 1
* stage1: residual block at c: relu(conv(relu(conv(x))) + x)
* stage2: residual block at 2c (16) with stride-2 downsample and a 1x1
  stride-2 projection skip
* head: global average pool -> dense 2c -> hidden (32), relu -> dense -> 2

Logit index 0 is defect_free and 1 is defective; argmax ties resolve to
defective, so an uncertain verdict fails safe.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .image import resize_bilinear
from .layers import (
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    global_avg_pool_backward,
    global_avg_pool_forward,
    relu_backward,
    relu_forward,
    softmax_cross_entropy,
)
from .manifest import LABELS, label_index


class CheckpointError(ValueError):
    """Checkpoint bytes do not parse as a model."""


@dataclass(frozen=True)
class ModelArch:
    base_channels: int = 8
    hidden_units: int = 32

    def __post_init__(self):
        if self.base_channels < 1 or self.hidden_units < 1:
            raise ValueError("channel and hidden widths must be >= 1")

    def param_specs(self):
        """(name, shape, fan_in) in the declared checkpoint order; fan_in
        None marks a zero-initialized bias."""
        c = self.base_channels
        c2 = 2 * c
        h = self.hidden_units
        return (
            ("stem_w", (c, 1, 3, 3), 9),
            ("stem_b", (c,), None),
            ("s1c1_w", (c, c, 3, 3), 9 * c),
            ("s1c1_b", (c,), None),
            ("s1c2_w", (c, c, 3, 3), 9 * c),
            ("s1c2_b", (c,), None),
            ("s2c1_w", (c2, c, 3, 3), 9 * c),
            ("s2c1_b", (c2,), None),
            ("s2c2_w", (c2, c2, 3, 3), 9 * c2),
            ("s2c2_b", (c2,), None),
            ("proj_w", (c2, c, 1, 1), c),
            ("proj_b", (c2,), None),
            ("fc1_w", (c2, h), c2),
            ("fc1_b", (h,), None),
            ("fc2_w", (h, 2), h),
            ("fc2_b", (2,), None),
        )


@dataclass
class ClassifierModel:
    arch: ModelArch
    params: dict[str, np.ndarray]
    seed: int


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 4
    lr0: float = 0.02
    lr_decay: float = 0.9
    input_side: int = 96
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lr0 <= 0 or not 0 < self.lr_decay <= 1:
            raise ValueError("need lr0 > 0 and 0 < lr_decay <= 1")
        if self.input_side < 8:
            raise ValueError("input_side must be >= 8")


@dataclass(frozen=True)
class Prediction:
    logits: tuple[float, float]
    label: str


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    learning_rate: float
    mean_loss: float
    batches: int = 0


@dataclass
class TrainLog:
    epochs: list[EpochStats] = field(default_factory=list)


def init_model(seed: int, arch: ModelArch | None = None) -> ClassifierModel:
    """He-style initialization: weights ~ N(0, 2/fan_in), biases zero.

    All draws come from numpy's PCG64 stream seeded with `seed`, in the
    declared parameter order, so a seed fully determines the model.
    """
    arch = arch or ModelArch()
    rng = np.random.Generator(np.random.PCG64(seed))
    params = {}
    for name, shape, fan_in in arch.param_specs():
        if fan_in is None:
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)
    return ClassifierModel(arch=arch, params=params, seed=seed)


def _standardize(x: np.ndarray) -> np.ndarray:
    """Per-sample zero-mean/unit-variance rescaling of the [0, 1] input.

    Mean normalization upstream pins every image to the same average, so
    brightness carries no class information; without batch normalization
    (batch size 4 makes it ill-conditioned) this fixed rescaling is what
    keeps gradient magnitudes compatible with the 0.02 learning rate.
    """
    flat = x.reshape(x.shape[0], -1)
    mean = flat.mean(axis=1)[:, None, None, None]
    std = flat.std(axis=1)[:, None, None, None]
    return (x - mean) / (std + 1e-6)


def _forward(params: dict, x: np.ndarray):
    """Forward pass over a batch (B, 1, S, S). Returns (logits, caches)."""
    p = params
    x = _standardize(x)
    a0, c_stem = conv2d_forward(x, p["stem_w"], p["stem_b"], stride=1, pad=1)

    c1, cc1 = conv2d_forward(a0, p["s1c1_w"], p["s1c1_b"], stride=1, pad=1)
    r1, m1 = relu_forward(c1, inplace=True)
    c2, cc2 = conv2d_forward(r1, p["s1c2_w"], p["s1c2_b"], stride=1, pad=1)
    a1, ms1 = relu_forward(np.add(c2, a0, out=c2), inplace=True)

    c3, cc3 = conv2d_forward(a1, p["s2c1_w"], p["s2c1_b"], stride=2, pad=1)
    r3, m3 = relu_forward(c3, inplace=True)
    c4, cc4 = conv2d_forward(r3, p["s2c2_w"], p["s2c2_b"], stride=1, pad=1)
    skip, cproj = conv2d_forward(a1, p["proj_w"], p["proj_b"], stride=2, pad=0)
    a2, ms2 = relu_forward(np.add(c4, skip, out=c4), inplace=True)

    g, gshape = global_avg_pool_forward(a2)
    h1, ch1 = dense_forward(g, p["fc1_w"], p["fc1_b"])
    hr, mh = relu_forward(h1)
    logits, ch2 = dense_forward(hr, p["fc2_w"], p["fc2_b"])

    caches = (c_stem, cc1, m1, cc2, ms1, cc3, m3, cc4, cproj, ms2,
              gshape, ch1, mh, ch2)
    return logits, caches


def _backward(dlogits: np.ndarray, caches) -> dict:
    (c_stem, cc1, m1, cc2, ms1, cc3, m3, cc4, cproj, ms2,
     gshape, ch1, mh, ch2) = caches
    grads = {}

    dhr, grads["fc2_w"], grads["fc2_b"] = dense_backward(dlogits, ch2)
    dh1 = relu_backward(dhr, mh, inplace=True)
    dg, grads["fc1_w"], grads["fc1_b"] = dense_backward(dh1, ch1)
    da2 = global_avg_pool_backward(dg, gshape)

    dsum2 = relu_backward(da2, ms2, inplace=True)
    da1_skip, grads["proj_w"], grads["proj_b"] = conv2d_backward(dsum2, cproj)
    dr3, grads["s2c2_w"], grads["s2c2_b"] = conv2d_backward(dsum2, cc4)
    dc3 = relu_backward(dr3, m3, inplace=True)
    da1_main, grads["s2c1_w"], grads["s2c1_b"] = conv2d_backward(dc3, cc3)

    dsum1 = relu_backward(np.add(da1_main, da1_skip, out=da1_main), ms1,
                          inplace=True)
    dr1, grads["s1c2_w"], grads["s1c2_b"] = conv2d_backward(dsum1, cc2)
    dc1 = relu_backward(dr1, m1, inplace=True)
    da0_main, grads["s1c1_w"], grads["s1c1_b"] = conv2d_backward(dc1, cc1)

    da0 = da0_main + dsum1  # identity skip feeds stage1's input gradient
    _, grads["stem_w"], grads["stem_b"] = conv2d_backward(da0, c_stem,
                                                          need_dx=False)
    return grads


def forward(model: ClassifierModel, x: np.ndarray) -> np.ndarray:
    """Logits (2,) for a single (1, S, S) input scaled to [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != 1 or min(x.shape[1:]) < 8:
        raise ValueError("expected input shaped (1, S, S) with S >= 8")
    logits, _ = _forward(model.params, x[None])
    return logits[0]


def loss_and_gradients(model: ClassifierModel, batch):
    """Mean softmax cross-entropy over a batch of (input, label) pairs.

    Labels may be the strings "defect_free"/"defective" or indices 0/1.
    Returns (loss, grads) with grads shaped like the parameters.
    """
    if not batch:
        raise ValueError("empty batch")
    x = np.stack([np.asarray(item[0], dtype=np.float64) for item in batch])
    labels = np.array([
        label_index(item[1]) if isinstance(item[1], str) else int(item[1])
        for item in batch
    ])
    logits, caches = _forward(model.params, x)
    loss, dlogits = softmax_cross_entropy(logits, labels)
    return loss, _backward(dlogits, caches)


def train(model: ClassifierModel, dataset, cfg: TrainConfig):
    """Plain SGD: epoch e runs at learning rate lr0 * lr_decay**e over a
    fresh shuffle (PCG64 seeded with cfg.seed), in batches of batch_size
    with the final partial batch kept.

    Returns (trained model, TrainLog); the input model is left untouched.
    """
    samples = [(np.asarray(x, dtype=np.float64),
                label_index(lbl) if isinstance(lbl, str) else int(lbl))
               for x, lbl in dataset]
    if not samples:
        raise ValueError("empty dataset")
    present = {lbl for _, lbl in samples}
    if len(present) < 2:
        raise ValueError("dataset must contain both labels")

    params = {k: v.copy() for k, v in model.params.items()}
    work = ClassifierModel(arch=model.arch, params=params, seed=model.seed)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    log = TrainLog()
    for epoch in range(cfg.epochs):
        lr = cfg.lr0 * cfg.lr_decay**epoch
        order = rng.permutation(len(samples))
        losses = []
        for start in range(0, len(samples), cfg.batch_size):
            chunk = [samples[i] for i in order[start : start + cfg.batch_size]]
            loss, grads = loss_and_gradients(work, chunk)
            losses.append(loss)
            for name, grad in grads.items():
                params[name] -= lr * grad
        log.epochs.append(EpochStats(epoch, lr, math.fsum(losses) / len(losses),
                                     batches=len(losses)))
    return work, log


def prepare_input(img: np.ndarray, input_side: int) -> np.ndarray:
    """Gray image -> (1, S, S) float64 scaled to [0, 1]."""
    resized = resize_bilinear(img, input_side, input_side)
    return resized[None].astype(np.float64) / 255.0


def predict(model: ClassifierModel, img: np.ndarray, cfg: TrainConfig) -> Prediction:
    logits = forward(model, prepare_input(img, cfg.input_side))
    label = LABELS[1] if logits[1] >= logits[0] else LABELS[0]
    return Prediction(logits=(float(logits[0]), float(logits[1])), label=label)


# --- checkpoint format ----------------------------------------------------
# magic | u32 version | i64 seed | u32 base_channels | u32 hidden_units |
# parameters as raw little-endian float64 in param_specs order.

CHECKPOINT_MAGIC = b"TFABMDL1"
_HEADER = struct.Struct("<8sIqII")


def save_model(model: ClassifierModel, path) -> None:
    header = _HEADER.pack(CHECKPOINT_MAGIC, 1, model.seed,
                          model.arch.base_channels, model.arch.hidden_units)
    chunks = [header]
    for name, _, _ in model.arch.param_specs():
        chunks.append(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_model(path) -> ClassifierModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise CheckpointError("checkpoint too short for header")
    magic, version, seed, base_channels, hidden = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != 1:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        arch = ModelArch(base_channels=base_channels, hidden_units=hidden)
        specs = arch.param_specs()
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"invalid architecture descriptor: {exc}") from exc
    expected = _HEADER.size + sum(
        8 * int(np.prod(shape)) for _, shape, _ in specs
    )
    if len(data) != expected:
        raise CheckpointError(
            f"checkpoint length {len(data)} != expected {expected}"
        )
    params = {}
    offset = _HEADER.size
    for name, shape, _ in specs:
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        params[name] = arr.astype(np.float64).reshape(shape)
        offset += 8 * count
    model = ClassifierModel(arch=arch, params=params, seed=seed)
    if not all(np.isfinite(v).all() for v in params.values()):
        raise CheckpointError("checkpoint holds non-finite parameters")
    return model
