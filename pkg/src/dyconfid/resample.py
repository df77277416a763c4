"""Confidence-based dynamic re-sampling with warm-up, plus baselines.

Instances whose class is still poorly learned get a raw weight near 2, well
learned ones drop toward 0; normalizing the weights yields a categorical
distribution the training loop draws batches from (with replacement). The
warm-up factor keeps re-sampling gentle early in training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RunConfig
from .confidence import ClassConfidenceState

WEIGHT_FLOOR = 1e-6  # keeps the fully-learned corner (W = P_c = p_i = 1) reachable
NORM_TOL = 1e-9


def warmup(e: int, E_max: int) -> float:
    """Ramp exp(-5 * (1 - e/E_max)^2): ~0.0067 at epoch 0, 1 at E_max."""
    if not 0 <= e <= E_max:
        raise ValueError(f"epoch {e} outside [0, {E_max}]")
    r = 1.0 - e / E_max
    return math.exp(-5.0 * r * r)


def instance_weight(P_c: float, p_i: float, W: float, tau: float) -> float:
    """Raw sampling weight of one instance.

    1 - W*P_c*p_i when the class is learned past tau, else 2 - W*P_c*p_i, so
    low-status classes always outweigh high-status ones. Floored at 1e-6.
    """
    base = 1.0 if P_c > tau else 2.0
    return max(base - W * P_c * p_i, WEIGHT_FLOOR)


def confidence_weights(P: np.ndarray, classes: np.ndarray, confs: np.ndarray,
                       W: float, tau: float) -> np.ndarray:
    """Vectorized ``instance_weight`` over a pool: ``classes``/``confs`` give
    each instance's class and current model confidence."""
    P = np.asarray(P, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    confs = np.asarray(confs, dtype=np.float64)
    Pc = P[classes]
    base = np.where(Pc > tau, 1.0, 2.0)
    return np.maximum(base - W * Pc * confs, WEIGHT_FLOOR)


def inverse_frequency_weights(classes: np.ndarray, C: int) -> np.ndarray:
    """Quantity-based baseline: each instance weighted 1/count(its class),
    normalized to a distribution."""
    classes = np.asarray(classes, dtype=np.int64)
    counts = np.bincount(classes, minlength=C)
    if classes.size == 0:
        raise ValueError("empty pool")
    w = 1.0 / counts[classes]
    return w / w.sum()


@dataclass
class SamplerState:
    """A frozen categorical distribution over instance ids plus a private
    draw stream. Weights stay fixed until the next refresh; ``draw_batch``
    advances ``rng`` and must be serialized per stream."""

    ids: np.ndarray  # (n,) instance ids
    weights: np.ndarray  # (n,) raw weights in (0, 2]
    normalized: np.ndarray  # (n,) probabilities summing to 1 +/- 1e-9
    warm: float
    built_at_epoch: int
    refresh_every: int
    rng: np.random.Generator

    def __post_init__(self):
        s = float(self.normalized.sum())
        if abs(s - 1.0) > NORM_TOL:
            raise AssertionError(f"normalized weights sum to {s}")

    def due_for_refresh(self, epoch: int) -> bool:
        return epoch - self.built_at_epoch >= self.refresh_every


def _make_state(ids, raw, warm, epoch, refresh_every, rng) -> SamplerState:
    ids = np.asarray(ids, dtype=np.int64)
    raw = np.asarray(raw, dtype=np.float64)
    total = raw.sum()
    assert total > 0, "all-zero sampling weights"
    norm = raw / total
    return SamplerState(ids=ids, weights=raw, normalized=norm, warm=warm,
                        built_at_epoch=int(epoch), refresh_every=int(refresh_every), rng=rng)


def uniform_sampler(ids, epoch: int, refresh_every: int, rng: np.random.Generator) -> SamplerState:
    ids = np.asarray(ids, dtype=np.int64)
    return _make_state(ids, np.ones(ids.size), 0.0, epoch, refresh_every, rng)


def build_sampler(ids, classes, confs, state: ClassConfidenceState, epoch: int,
                  cfg: RunConfig, rng: np.random.Generator, *, enabled: bool = True) -> SamplerState:
    """Build the categorical sampler for one pool at a refresh epoch.

    ``classes``/``confs`` are the pool's per-instance class (true label for
    labeled instances, argmax for unlabeled) and the model's current
    confidence on that instance. With re-sampling disabled the distribution
    is uniform regardless of confidence.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if not enabled:
        return uniform_sampler(ids, epoch, cfg.resample_refresh_epochs, rng)
    W = warmup(epoch, cfg.E_max)
    raw = confidence_weights(state.per_class_confidence, classes, confs, W, state.threshold)
    return _make_state(ids, raw, W, epoch, cfg.resample_refresh_epochs, rng)


def build_inverse_frequency_sampler(ids, classes, C: int, epoch: int,
                                    refresh_every: int, rng: np.random.Generator) -> SamplerState:
    """Quantity-based baseline sampler: instances weighted by the inverse of
    their class's pool count."""
    ids = np.asarray(ids, dtype=np.int64)
    classes = np.asarray(classes, dtype=np.int64)
    counts = np.bincount(classes, minlength=C)
    raw = 1.0 / counts[classes]
    return _make_state(ids, raw, 0.0, epoch, refresh_every, rng)


def draw_batch(state: SamplerState, n: int) -> np.ndarray:
    """n i.i.d. draws (with replacement) from the normalized distribution;
    deterministic given the state's rng stream."""
    if n < 1:
        raise ValueError(f"batch size must be >= 1, got {n}")
    idx = state.rng.choice(state.ids.size, size=n, replace=True, p=state.normalized)
    return state.ids[idx]
