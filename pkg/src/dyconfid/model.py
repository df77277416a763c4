"""Desk-scale permutation-invariant point-cloud classifier.

Architecture: two pointwise tanh layers (3 -> H -> H), max-pool over the
point dimension, affine head (H -> C), softmax. Gradients are fully analytic
(no autodiff); the heavy encoder passes run through ``dyconfid.kernels``,
which picks the compiled or NumPy backend at import.

Also provides the weak/strong augmentation recipes, momentum SGD with cosine
learning-rate annealing, and bit-exact checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .core import PointCloud

JITTER_SIGMA = 0.02
JITTER_CLIP = 0.05
WEAK_SCALE = (0.8, 1.2)
STRONG_SCALE = (0.6, 1.4)
STRONG_SECOND_SCALE = (0.8, 1.2)
TRANSLATE_RANGE = 0.2

# head input parameterization: pooled tanh features are centered and scaled so
# the classifier trains quickly at small learning rates
FEATURE_CENTER = 0.5
FEATURE_GAIN = 8.0
ENCODER_INIT_SCALE = 2.5


@dataclass
class ModelParams:
    """Encoder + head weights. ``zero_like`` shapes double as gradient and
    momentum buffers, which keeps the parameter/gradient shape invariant
    true by construction."""

    w1: np.ndarray  # (3, H)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H, H)
    b2: np.ndarray  # (H,)
    w3: np.ndarray  # (H, C)
    b3: np.ndarray  # (C,)

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w3.shape[1]

    def arrays(self):
        return (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)

    def zero_like(self) -> "ModelParams":
        return ModelParams(*(np.zeros_like(a) for a in self.arrays()))

    def copy(self) -> "ModelParams":
        return ModelParams(*(a.copy() for a in self.arrays()))

    def check_finite(self) -> None:
        for name, a in zip(("w1", "b1", "w2", "b2", "w3", "b3"), self.arrays()):
            if not np.isfinite(a).all():
                raise FloatingPointError(f"non-finite values in parameter {name}")


Gradients = ModelParams  # same container, same shapes


def init_params(seed, hidden: int = 32, n_classes: int = 8) -> ModelParams:
    """Random encoder init (deliberately wide so pooled features spread); the
    head starts at zero so an untrained model predicts exactly uniform
    probabilities."""
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, ENCODER_INIT_SCALE / math.sqrt(3.0), size=(3, hidden))
    w2 = rng.normal(0.0, ENCODER_INIT_SCALE / math.sqrt(hidden), size=(hidden, hidden))
    return ModelParams(
        w1=w1, b1=np.zeros(hidden),
        w2=w2, b2=np.zeros(hidden),
        w3=np.zeros((hidden, n_classes)), b3=np.zeros(n_classes),
    )


@dataclass
class ForwardCache:
    """Activations the backward pass needs."""

    points: np.ndarray  # (batch, N, 3)
    a1: np.ndarray  # (batch, N, H)
    argmax: np.ndarray  # (batch, H)
    pooled: np.ndarray  # (batch, H)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward_batch(params: ModelParams, points: np.ndarray,
                  want_cache: bool = False) -> Tuple[np.ndarray, np.ndarray, Optional[ForwardCache]]:
    """Batched forward pass: (logits, probs, cache). ``points`` is
    (batch, N, 3); output is invariant to any permutation of each cloud's
    points (max-pool symmetry). Aborts on non-finite activations."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    pooled, a1, argmax = kernels.encoder_forward(pts, params.w1, params.b1, params.w2, params.b2)
    logits = (pooled - FEATURE_CENTER) * FEATURE_GAIN @ params.w3 + params.b3
    if not np.isfinite(logits).all():
        raise FloatingPointError(
            f"non-finite logits (batch of {pts.shape[0]}); parameter scale "
            f"max|w|={max(float(np.abs(a).max()) for a in params.arrays())}")
    probs = softmax(logits)
    cache = ForwardCache(points=pts, a1=a1, argmax=argmax, pooled=pooled) if want_cache else None
    return logits, probs, cache


def forward(params: ModelParams, cloud: PointCloud) -> Tuple[np.ndarray, np.ndarray]:
    """Single-cloud forward: (logits, probs)."""
    logits, probs, _ = forward_batch(params, cloud.points[None, :, :])
    return logits[0], probs[0]


def backward_batch(params: ModelParams, cache: ForwardCache, dlogits: np.ndarray) -> Gradients:
    """Exact gradients of sum(dlogits * logits) w.r.t. every parameter."""
    if dlogits.shape != cache.pooled.shape[:1] + (params.n_classes,):
        raise ValueError(f"dlogits shape {dlogits.shape} does not match batch/head")
    dw3 = ((cache.pooled - FEATURE_CENTER) * FEATURE_GAIN).T @ dlogits
    db3 = dlogits.sum(axis=0)
    dpooled = dlogits @ params.w3.T * FEATURE_GAIN
    dw1, db1, dw2, db2 = kernels.encoder_backward(
        cache.points, cache.a1, cache.argmax, cache.pooled, params.w1, params.w2,
        np.ascontiguousarray(dpooled))
    return Gradients(w1=dw1, b1=db1, w2=dw2, b2=db2, w3=dw3, b3=db3)


@dataclass
class BatchLoss:
    """One optimization step's inputs after augmentation and pseudo-label
    selection. ``unlabeled_points`` is the view the unsupervised term is
    applied to (strong view normally; the plain-pseudo-label baseline passes
    the weak view). Pseudo-labels and the mask are treated as constants."""

    labeled_points: np.ndarray  # (B, N, 3)
    labels: np.ndarray  # (B,)
    unlabeled_points: Optional[np.ndarray] = None  # (M, N, 3)
    pseudo_labels: Optional[np.ndarray] = None  # (M,)
    selected: Optional[np.ndarray] = None  # (M,) bool


def loss_and_gradients(params: ModelParams, batch: BatchLoss,
                       w_s: float = 1.0, w_u: float = 1.0):
    """Composed loss w_s * l_s + w_u * l_u and its exact parameter gradients.

    Returns (loss_s, loss_u, grads). Cross-entropy gradients w.r.t. logits are
    softmax(logits) - onehot, scaled by the batch averaging and loss weights.
    """
    B = batch.labeled_points.shape[0]
    _, probs_l, cache_l = forward_batch(params, batch.labeled_points, want_cache=True)
    rows = np.arange(B)
    loss_s = float(-np.log(np.maximum(probs_l[rows, batch.labels], 1e-12)).sum() / B)
    dlogits_l = probs_l.copy()
    dlogits_l[rows, batch.labels] -= 1.0
    grads = backward_batch(params, cache_l, dlogits_l * (w_s / B))

    loss_u = 0.0
    if batch.unlabeled_points is not None and batch.unlabeled_points.shape[0] > 0:
        M = batch.unlabeled_points.shape[0]
        sel = batch.selected
        if sel is not None and sel.any():
            _, probs_u, cache_u = forward_batch(params, batch.unlabeled_points, want_cache=True)
            urows = np.arange(M)
            ce = -np.log(np.maximum(probs_u[urows, batch.pseudo_labels], 1e-12))
            loss_u = float((ce * sel).sum() / M)
            dlogits_u = probs_u.copy()
            dlogits_u[urows, batch.pseudo_labels] -= 1.0
            dlogits_u *= sel[:, None]
            gu = backward_batch(params, cache_u, dlogits_u * (w_u / M))
            for a, b in zip(grads.arrays(), gu.arrays()):
                a += b
    return loss_s, loss_u, grads


def cosine_lr(e: int, E_max: int, lr_initial: float, lr_min: float) -> float:
    """lr_min + (lr_initial - lr_min) * (1 + cos(pi * e / E_max)) / 2."""
    return lr_min + 0.5 * (lr_initial - lr_min) * (1.0 + math.cos(math.pi * e / E_max))


@dataclass
class OptimizerState:
    """Momentum SGD with cosine annealing from lr_initial down to lr_min."""

    lr_initial: float
    lr_min: float
    E_max: int
    momentum: float = 0.9
    epoch: int = 0
    velocity: Optional[ModelParams] = None

    def lr(self) -> float:
        return cosine_lr(self.epoch, self.E_max, self.lr_initial, self.lr_min)


def sgd_step(params: ModelParams, grads: Gradients, opt: OptimizerState) -> ModelParams:
    """In-place momentum update: v <- m*v + g; p <- p - lr(e)*v."""
    if opt.velocity is None:
        opt.velocity = params.zero_like()
    lr = opt.lr()
    for p, g, v in zip(params.arrays(), grads.arrays(), opt.velocity.arrays()):
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient in sgd_step")
        v *= opt.momentum
        v += g
        p -= lr * v
    params.check_finite()
    return params


# --- augmentation -----------------------------------------------------------

def _rotate_z(points: np.ndarray, angle) -> np.ndarray:
    """Rotate (..., N, 3) points about the vertical axis. ``angle`` is a
    scalar for a single cloud or an (batch,) array for batched clouds."""
    c = np.asarray(np.cos(angle))
    s = np.asarray(np.sin(angle))
    if c.ndim == 1:  # one angle per cloud, broadcast over points
        c = c[:, None]
        s = s[:, None]
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    return np.stack([c * x - s * y, s * x + c * y, z], axis=-1)


def _clipped_jitter(shape, rng: np.random.Generator) -> np.ndarray:
    """Per-point Gaussian displacement with the Euclidean norm clipped so no
    point moves farther than JITTER_CLIP."""
    j = rng.normal(0.0, JITTER_SIGMA, size=shape)
    norms = np.linalg.norm(j, axis=-1, keepdims=True)
    factor = np.minimum(1.0, JITTER_CLIP / np.maximum(norms, 1e-30))
    return j * factor


def weak_augment(cloud: PointCloud, rng: np.random.Generator) -> PointCloud:
    """Random vertical-axis rotation plus isotropic scale in [0.8, 1.2]."""
    angle = rng.uniform(0.0, 2.0 * math.pi)
    scale = rng.uniform(*WEAK_SCALE)
    return PointCloud(_rotate_z(cloud.points, angle) * scale)


def strong_augment(cloud: PointCloud, rng: np.random.Generator) -> PointCloud:
    """Rotation, wide scale, translation, clipped jitter, second scale."""
    angle = rng.uniform(0.0, 2.0 * math.pi)
    scale = rng.uniform(*STRONG_SCALE)
    shift = rng.uniform(-TRANSLATE_RANGE, TRANSLATE_RANGE, size=3)
    pts = _rotate_z(cloud.points, angle) * scale + shift
    pts = pts + _clipped_jitter(pts.shape, rng)
    return PointCloud(pts * rng.uniform(*STRONG_SECOND_SCALE))


def weak_augment_batch(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized weak recipe over (batch, N, 3) points."""
    batch = points.shape[0]
    angles = rng.uniform(0.0, 2.0 * math.pi, size=batch)
    scales = rng.uniform(*WEAK_SCALE, size=batch)
    return _rotate_z(points, angles) * scales[:, None, None]


def strong_augment_batch(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized strong recipe over (batch, N, 3) points."""
    batch = points.shape[0]
    angles = rng.uniform(0.0, 2.0 * math.pi, size=batch)
    scales = rng.uniform(*STRONG_SCALE, size=batch)
    shifts = rng.uniform(-TRANSLATE_RANGE, TRANSLATE_RANGE, size=(batch, 1, 3))
    pts = _rotate_z(points, angles) * scales[:, None, None] + shifts
    pts = pts + _clipped_jitter(pts.shape, rng)
    return pts * rng.uniform(*STRONG_SECOND_SCALE, size=batch)[:, None, None]


# --- checkpoints -------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: ModelParams, opt: OptimizerState, epoch: int) -> None:
    """Bit-exact dump of parameters, optimizer state, and epoch."""
    vel = opt.velocity if opt.velocity is not None else params.zero_like()
    np.savez(
        path,
        version=np.int64(CHECKPOINT_VERSION),
        epoch=np.int64(epoch),
        lr_initial=np.float64(opt.lr_initial),
        lr_min=np.float64(opt.lr_min),
        E_max=np.int64(opt.E_max),
        momentum=np.float64(opt.momentum),
        opt_epoch=np.int64(opt.epoch),
        **{f"p_{n}": a for n, a in zip(("w1", "b1", "w2", "b2", "w3", "b3"), params.arrays())},
        **{f"v_{n}": a for n, a in zip(("w1", "b1", "w2", "b2", "w3", "b3"), vel.arrays())},
    )


def load_checkpoint(path) -> Tuple[ModelParams, OptimizerState, int]:
    with np.load(path) as z:
        version = int(z["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})")
        params = ModelParams(*(z[f"p_{n}"] for n in ("w1", "b1", "w2", "b2", "w3", "b3")))
        vel = ModelParams(*(z[f"v_{n}"] for n in ("w1", "b1", "w2", "b2", "w3", "b3")))
        opt = OptimizerState(
            lr_initial=float(z["lr_initial"]), lr_min=float(z["lr_min"]),
            E_max=int(z["E_max"]), momentum=float(z["momentum"]),
            epoch=int(z["opt_epoch"]), velocity=vel)
        return params, opt, int(z["epoch"])
