"""Class-level confidence estimation and dynamic thresholds.

Per epoch, unlabeled predictions are grouped by their argmax class; the mean
max-probability of each group (the class-level confidence P_c) proxies how
well that class is currently learned. A concave mapping of P_c, clamped to
[min(tau, 1-tau), max(tau, 1-tau)], gives each class its selection threshold
for the next epoch. The global bound tau is either a fixed constant or derived
from the average class confidence (exp(-a * P_ave^2)), so it relaxes as the
model matures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import RunConfig, UnlabeledPrediction, _readonly


@dataclass(frozen=True)
class ClassConfidenceState:
    """Per-epoch snapshot: class confidences, their average, and the derived
    thresholds. Immutable; arrays are read-only."""

    epoch: int
    per_class_confidence: np.ndarray  # (C,) P_c in [0, 1]; 0 for empty classes
    per_class_count: np.ndarray  # (C,) predictions attributed to each class
    average_confidence: float  # mean P_c over non-empty classes
    threshold: float  # global bound tau
    class_thresholds: np.ndarray  # (C,) tau_e(c)

    @property
    def C(self) -> int:
        return self.per_class_confidence.size


def partition_by_argmax(preds: Sequence[UnlabeledPrediction], C: int) -> List[List[int]]:
    """Group prediction indices by argmax class; every index lands in exactly
    one of the C buckets."""
    buckets: List[List[int]] = [[] for _ in range(C)]
    for i, p in enumerate(preds):
        if not (0 <= p.argmax_class < C):
            raise ValueError(f"prediction {i}: argmax class {p.argmax_class} out of range [0, {C})")
        buckets[p.argmax_class].append(i)
    return buckets


def class_confidence(partition: Sequence[Sequence[int]], preds: Sequence[UnlabeledPrediction]) -> np.ndarray:
    """Mean confidence per class. Empty classes get 0 (lowest learning status,
    hence the most permissive threshold after mapping)."""
    P = np.zeros(len(partition))
    for c, idxs in enumerate(partition):
        if idxs:
            P[c] = sum(preds[i].confidence for i in idxs) / len(idxs)
    return P


def map_confidence(x, mapping: str, constant: float = 2.0):
    """Map confidence in [0, 1] to a threshold-scale value in [0, 1].

    linear:      x
    concave:     min(1, x / (k - x))   (k = ``constant``; k=2 is the default)
    exponential: exp(-5 * (1 - x)^2)

    Accepts scalars or arrays; scalar in, float out.
    """
    arr = np.asarray(x, dtype=np.float64)
    if (arr < 0).any() or (arr > 1).any():
        raise ValueError(f"confidence outside [0, 1]: {x}")
    if mapping == "linear":
        out = arr.copy()
    elif mapping == "concave":
        k = float(constant)
        if k < 1.0:
            raise ValueError(f"concave mapping constant must be >= 1, got {k}")
        denom = k - arr
        # k=1, x=1 hits a zero denominator; the clip below would send it to 1 anyway
        with np.errstate(divide="ignore"):
            out = np.where(denom > 0, arr / np.where(denom > 0, denom, 1.0), np.inf)
        out = np.minimum(out, 1.0)
    elif mapping == "exponential":
        out = np.exp(-5.0 * (1.0 - arr) ** 2)
    else:
        raise ValueError(f"unknown mapping {mapping!r}")
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def comprehensive_threshold(p_ave: float, *, mode: str = "comprehensive",
                            constant: float = 2.0, fixed_tau: float = 0.8) -> float:
    """Global threshold bound. Comprehensive mode: exp(-a * P_ave^2), which
    starts at 1 (nothing learned) and tightens as overall confidence grows.
    Fixed mode ignores P_ave and returns the configured tau."""
    if mode == "fixed":
        return float(fixed_tau)
    if mode != "comprehensive":
        raise ValueError(f"unknown threshold mode {mode!r}")
    if not 0.0 <= p_ave <= 1.0:
        raise ValueError(f"average confidence outside [0, 1]: {p_ave}")
    return math.exp(-float(constant) * p_ave * p_ave)


def class_thresholds(P: np.ndarray, tau: float, mapping: str = "concave",
                     constant: float = 2.0) -> np.ndarray:
    """Per-class thresholds: the mapped confidence clamped to
    [min(tau, 1-tau), max(tau, 1-tau)].

    For tau > 0.5 this is exactly the three-case rule (floor 1-tau, cap tau);
    the clamp form is also well defined when a comprehensive tau drops below
    0.5 late in training.
    """
    P = np.asarray(P, dtype=np.float64)
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    lo, hi = min(tau, 1.0 - tau), max(tau, 1.0 - tau)
    mapped = np.asarray(map_confidence(P, mapping, constant), dtype=np.float64)
    return np.clip(mapped, lo, hi)


def update_state(preds: Sequence[UnlabeledPrediction], cfg: RunConfig, epoch: int) -> ClassConfidenceState:
    """Fold one epoch's unlabeled predictions into a ClassConfidenceState.

    Pure function of (preds, cfg, epoch): identical inputs give bit-identical
    states. P_ave averages only non-empty classes so a class that never showed
    up cannot drag the global threshold around.
    """
    if not preds:
        raise ValueError("cannot update confidence state from an empty prediction list")
    partition = partition_by_argmax(preds, cfg.C)
    P = class_confidence(partition, preds)
    counts = np.array([len(b) for b in partition], dtype=np.int64)
    nonempty = counts > 0
    p_ave = float(P[nonempty].mean()) if nonempty.any() else 0.0
    tau = comprehensive_threshold(p_ave, mode=cfg.threshold_mode,
                                  constant=cfg.comprehensive_constant,
                                  fixed_tau=cfg.fixed_tau)
    thresholds = class_thresholds(P, tau, cfg.mapping, cfg.mapping_constant)
    return ClassConfidenceState(
        epoch=int(epoch),
        per_class_confidence=_readonly(P),
        per_class_count=counts,
        average_confidence=p_ave,
        threshold=tau,
        class_thresholds=_readonly(thresholds),
    )


def initial_state(cfg: RunConfig) -> ClassConfidenceState:
    """State before any statistics exist (epoch 0): P_c = 0 everywhere, so
    every class sits at the floor threshold and early training uses unlabeled
    data liberally."""
    P = np.zeros(cfg.C)
    tau = comprehensive_threshold(0.0, mode=cfg.threshold_mode,
                                  constant=cfg.comprehensive_constant,
                                  fixed_tau=cfg.fixed_tau)
    thresholds = class_thresholds(P, tau, cfg.mapping, cfg.mapping_constant)
    counts = np.zeros(cfg.C, dtype=np.int64)
    return ClassConfidenceState(
        epoch=0,
        per_class_confidence=_readonly(P),
        per_class_count=counts,
        average_confidence=0.0,
        threshold=tau,
        class_thresholds=_readonly(thresholds),
    )


class ConfidenceAccumulator:
    """Running per-class sum/count of weak-augmented prediction confidences.

    The training loop feeds every unlabeled weak prediction of the epoch in
    here; ``finalize`` then produces the same state ``update_state`` would,
    without retaining the prediction list. Single-writer.
    """

    def __init__(self, C: int):
        self.C = C
        self._sum = np.zeros(C)
        self._count = np.zeros(C, dtype=np.int64)

    def add(self, argmax_classes: np.ndarray, confidences: np.ndarray) -> None:
        np.add.at(self._sum, argmax_classes, confidences)
        np.add.at(self._count, argmax_classes, 1)

    @property
    def total(self) -> int:
        return int(self._count.sum())

    def finalize(self, cfg: RunConfig, epoch: int) -> ClassConfidenceState:
        if self.total == 0:
            raise ValueError("no predictions accumulated this epoch")
        nonempty = self._count > 0
        P = np.zeros(self.C)
        P[nonempty] = self._sum[nonempty] / self._count[nonempty]
        p_ave = float(P[nonempty].mean())
        tau = comprehensive_threshold(p_ave, mode=cfg.threshold_mode,
                                      constant=cfg.comprehensive_constant,
                                      fixed_tau=cfg.fixed_tau)
        thresholds = class_thresholds(P, tau, cfg.mapping, cfg.mapping_constant)
        return ClassConfidenceState(
            epoch=int(epoch),
            per_class_confidence=_readonly(P),
            per_class_count=self._count.copy(),
            average_confidence=p_ave,
            threshold=tau,
            class_thresholds=_readonly(thresholds),
        )
