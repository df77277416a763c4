"""Pseudo-label selection masks, loss terms, and baseline threshold rules.

All functions are pure and operate on probability vectors, so they can be
unit-tested against hand-computed values independent of any model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import UnlabeledPrediction, as_prob_array

PROB_FLOOR = 1e-12  # floor inside logarithms; numeric safety only


@dataclass(frozen=True)
class SelectionMask:
    """Boolean selection per unlabeled batch element plus each element's
    pseudo-label (argmax class; meaningful only where selected)."""

    selected: np.ndarray  # (n,) bool
    pseudo_label: np.ndarray  # (n,) int

    @property
    def count(self) -> int:
        return int(self.selected.sum())


@dataclass(frozen=True)
class LossBreakdown:
    supervised: float
    unsupervised: float
    total: float
    selected_count: int

    @classmethod
    def compose(cls, loss_s: float, loss_u: float, w_s: float, w_u: float,
                selected_count: int) -> "LossBreakdown":
        return cls(supervised=loss_s, unsupervised=loss_u,
                   total=total_loss(loss_s, loss_u, w_s, w_u),
                   selected_count=int(selected_count))


def select_pseudo_labels(preds: Sequence[UnlabeledPrediction], thresholds: np.ndarray) -> SelectionMask:
    """Keep prediction i iff its confidence passes its own class's threshold
    (inclusive at the boundary: confidence == threshold selects)."""
    thresholds = np.asarray(thresholds, dtype=np.float64)
    labels = np.fromiter((p.argmax_class for p in preds), dtype=np.int64, count=len(preds))
    confs = np.fromiter((p.confidence for p in preds), dtype=np.float64, count=len(preds))
    if len(preds) and labels.max(initial=0) >= thresholds.size:
        raise ValueError("prediction argmax class out of range for threshold vector")
    selected = confs >= thresholds[labels] if len(preds) else np.zeros(0, dtype=bool)
    return SelectionMask(selected=selected, pseudo_label=labels)


def fixed_threshold_mask(preds: Sequence[UnlabeledPrediction], tau: float, C: int) -> SelectionMask:
    """Static-threshold baseline: one tau for every class."""
    return select_pseudo_labels(preds, np.full(C, float(tau)))


def flexmatch_thresholds(preds: Sequence[UnlabeledPrediction], tau_base: float, C: int) -> np.ndarray:
    """Count-normalized per-class thresholds (simplified curriculum baseline).

    sigma(c) = number of predictions with argmax c and confidence >= tau_base;
    beta(c) = sigma(c) / max_c sigma(c) (0 if nothing clears tau_base);
    threshold(c) = beta(c) / (2 - beta(c)) * tau_base.

    Classes with few confident predictions end up with very low thresholds,
    which on long-tail data produces the uneven threshold profile this
    baseline is known for.
    """
    if not 0.0 < tau_base < 1.0:
        raise ValueError(f"tau_base must lie in (0, 1), got {tau_base}")
    sigma = np.zeros(C)
    for p in preds:
        if p.confidence >= tau_base:
            sigma[p.argmax_class] += 1.0
    top = sigma.max()
    beta = sigma / top if top > 0 else np.zeros(C)
    return beta / (2.0 - beta) * tau_base


def _cross_entropy(target_class: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """-ln q[y] per row, with probabilities floored at PROB_FLOOR."""
    q = probs[np.arange(probs.shape[0]), target_class]
    if (q <= 0).any():
        warnings.warn("zero probability at a cross-entropy target; clamped to 1e-12",
                      RuntimeWarning, stacklevel=3)
    return -np.log(np.maximum(q, PROB_FLOOR))


def _stack_probs(probs: Sequence) -> np.ndarray:
    if isinstance(probs, np.ndarray) and probs.ndim == 2:
        return np.asarray(probs, dtype=np.float64)
    return np.stack([as_prob_array(p) for p in probs]) if len(probs) else np.zeros((0, 0))


def supervised_loss(labels: Sequence[int], probs: Sequence, B: int) -> float:
    """Mean cross-entropy over the labeled batch: (1/B) sum -ln p[y_b]."""
    labels = np.asarray(labels, dtype=np.int64)
    P = _stack_probs(probs)
    if labels.size != P.shape[0] or labels.size != B:
        raise ValueError(f"expected {B} labels/probability rows, got {labels.size}/{P.shape[0]}")
    return float(_cross_entropy(labels, P).sum() / B)


def unsupervised_loss(strong_probs: Sequence, mask: SelectionMask, muB: int) -> float:
    """Masked mean cross-entropy against pseudo-labels, averaged over the full
    unlabeled batch size muB (unselected elements contribute 0)."""
    P = _stack_probs(strong_probs)
    if P.shape[0] != mask.selected.size or P.shape[0] != muB:
        raise ValueError(f"expected {muB} probability rows aligned with the mask, "
                         f"got {P.shape[0]}/{mask.selected.size}")
    if not mask.selected.any():
        return 0.0
    ce = _cross_entropy(mask.pseudo_label[mask.selected], P[mask.selected])
    return float(ce.sum() / muB)


def consistency_penalty(probs_a: Sequence, probs_b: Sequence) -> float:
    """Sum over the batch of squared L2 distance between two prediction sets
    for the same instances under different augmentations."""
    A, Bv = _stack_probs(probs_a), _stack_probs(probs_b)
    if A.shape != Bv.shape:
        raise ValueError(f"prediction lists misaligned: {A.shape} vs {Bv.shape}")
    d = A - Bv
    return float((d * d).sum())


def total_loss(loss_s: float, loss_u: float, w_s: float = 1.0, w_u: float = 1.0) -> float:
    if w_s < 0 or w_u < 0:
        raise ValueError("loss weights must be >= 0")
    return w_s * loss_s + w_u * loss_u
