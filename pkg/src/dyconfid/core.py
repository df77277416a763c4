"""Shared domain types: point clouds, instances, predictions, run configuration.

Everything here is immutable after construction and safe to share across
threads. Arrays are stored as read-only float64 views so accidental in-place
mutation fails loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

LABELED = "labeled"
UNLABELED = "unlabeled"
TEST = "test"
SPLITS = (LABELED, UNLABELED, TEST)

PROB_SUM_TOL = 1e-6


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``problems`` lists every violation by field name, not just the first.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


class PointCloud:
    """A set of N 3D points (N >= 8, all coordinates finite)."""

    __slots__ = ("points",)

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"expected (N, 3) coordinates, got shape {pts.shape}")
        if pts.shape[0] < 8:
            raise ValueError(f"point cloud needs at least 8 points, got {pts.shape[0]}")
        if not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        self.points = _readonly(pts)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)

    def __repr__(self):
        return f"PointCloud(n={self.n_points})"


class Instance:
    """One dataset element: a cloud, a split tag, and (maybe) a label.

    For unlabeled instances the ground-truth label is retained internally so
    runs can be scored, but it is hidden from the ordinary ``label`` accessor;
    training code that only reads ``label`` cannot see it. Use
    ``label_for_eval()`` in evaluation/reporting code only.
    """

    __slots__ = ("id", "cloud", "split", "_label")

    def __init__(self, id: int, cloud: PointCloud, split: str, label: Optional[int] = None):
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        if split in (LABELED, TEST) and label is None:
            raise ValueError(f"{split} instance {id} requires a label")
        self.id = int(id)
        self.cloud = cloud
        self.split = split
        self._label = None if label is None else int(label)

    @property
    def label(self) -> Optional[int]:
        """Label visible to training code; None for unlabeled instances."""
        if self.split == UNLABELED:
            return None
        return self._label

    def label_for_eval(self) -> Optional[int]:
        """Ground-truth label regardless of split. Evaluation/reporting only."""
        return self._label

    def __eq__(self, other):
        return (
            isinstance(other, Instance)
            and self.id == other.id
            and self.split == other.split
            and self._label == other._label
            and self.cloud == other.cloud
        )

    def __repr__(self):
        return f"Instance(id={self.id}, split={self.split}, n={self.cloud.n_points})"


class ProbabilityVector:
    """C nonnegative reals summing to 1 (within 1e-6). Rejects NaN/negatives."""

    __slots__ = ("probs",)

    def __init__(self, probs):
        p = np.asarray(probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 2:
            raise ValueError(f"expected a 1-D vector of >= 2 probabilities, got shape {p.shape}")
        if not np.isfinite(p).all():
            raise ValueError("probability vector contains NaN/inf")
        if (p < 0).any() or (p > 1).any():
            raise ValueError("probability entries must lie in [0, 1]")
        s = float(p.sum())
        if abs(s - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {s}, expected 1 +/- {PROB_SUM_TOL}")
        self.probs = _readonly(p)

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        return isinstance(other, ProbabilityVector) and np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return f"ProbabilityVector({np.array2string(self.probs, precision=4)})"


def as_prob_array(p) -> np.ndarray:
    """Accept a ProbabilityVector or a raw array and return the float64 array."""
    if isinstance(p, ProbabilityVector):
        return p.probs
    return np.asarray(p, dtype=np.float64)


@dataclass(frozen=True)
class UnlabeledPrediction:
    """Full class-probability vector of one unlabeled instance plus the
    derived argmax class and max confidence.

    Ties in the argmax break toward the lowest class index, deterministically.
    """

    instance_id: int
    probs: np.ndarray
    argmax_class: int
    confidence: float

    @classmethod
    def from_probs(cls, instance_id: int, probs) -> "UnlabeledPrediction":
        p = as_prob_array(probs)
        c = int(np.argmax(p))  # np.argmax returns the first (lowest) index on ties
        return cls(instance_id=int(instance_id), probs=_readonly(p),
                   argmax_class=c, confidence=float(p[c]))


@dataclass(frozen=True)
class RunConfig:
    """Training-run knobs shared by every scheduler.

    Defaults are desk scale: 8 classes, labeled batch 48 with a 4x unlabeled
    ratio, fixed threshold 0.8, concave confidence mapping with constant 2.
    """

    C: int = 8
    B: int = 48
    mu: int = 4
    E_max: int = 300
    threshold_mode: str = "fixed"  # "fixed" or "comprehensive"
    fixed_tau: float = 0.8
    mapping: str = "concave"  # "linear", "concave", "exponential"
    mapping_constant: float = 2.0
    comprehensive_constant: float = 2.0
    resample_enabled: bool = True
    resample_mode: str = "confidence"  # "confidence" or "inverse_frequency"
    resample_refresh_epochs: int = 50
    resample_labeled: bool = True
    resample_unlabeled: bool = True
    lr_initial: float = 0.01
    lr_min: float = 0.0001
    momentum: float = 0.9
    hidden: int = 32
    seed: int = 0
    w_s: float = 1.0
    w_u: float = 1.0

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)


_MAPPINGS = ("linear", "concave", "exponential")
_THRESHOLD_MODES = ("fixed", "comprehensive")


def validate_config(cfg: RunConfig) -> RunConfig:
    """Return ``cfg`` unchanged if valid, else raise ConfigError listing every
    violated invariant by field name."""
    problems = []
    if cfg.C < 2:
        problems.append(f"C: need >= 2 classes, got {cfg.C}")
    if cfg.B < 1:
        problems.append(f"B: labeled batch size must be >= 1, got {cfg.B}")
    if cfg.mu < 1:
        problems.append(f"mu: unlabeled ratio must be >= 1, got {cfg.mu}")
    if cfg.E_max < 1:
        problems.append(f"E_max: must be >= 1, got {cfg.E_max}")
    if cfg.threshold_mode not in _THRESHOLD_MODES:
        problems.append(f"threshold_mode: expected one of {_THRESHOLD_MODES}, got {cfg.threshold_mode!r}")
    elif cfg.threshold_mode == "fixed" and not (0.5 < cfg.fixed_tau < 1.0):
        problems.append(f"fixed_tau: out of (0.5, 1), got {cfg.fixed_tau}")
    if cfg.mapping not in _MAPPINGS:
        problems.append(f"mapping: expected one of {_MAPPINGS}, got {cfg.mapping!r}")
    if not cfg.mapping_constant >= 1.0:
        problems.append(f"mapping_constant: must be >= 1, got {cfg.mapping_constant}")
    if not cfg.comprehensive_constant > 0.0:
        problems.append(f"comprehensive_constant: must be > 0, got {cfg.comprehensive_constant}")
    if cfg.resample_mode not in ("confidence", "inverse_frequency"):
        problems.append(f"resample_mode: expected 'confidence' or 'inverse_frequency', got {cfg.resample_mode!r}")
    if cfg.resample_refresh_epochs < 1:
        problems.append(f"resample_refresh_epochs: must be >= 1, got {cfg.resample_refresh_epochs}")
    if not (0.0 < cfg.lr_min <= cfg.lr_initial):
        problems.append(f"lr_initial/lr_min: need 0 < lr_min <= lr_initial, got {cfg.lr_initial}/{cfg.lr_min}")
    if not (0.0 <= cfg.momentum < 1.0):
        problems.append(f"momentum: must lie in [0, 1), got {cfg.momentum}")
    if cfg.hidden < 1:
        problems.append(f"hidden: must be >= 1, got {cfg.hidden}")
    if not (0 <= cfg.seed < 2**64):
        problems.append(f"seed: must fit an unsigned 64-bit integer, got {cfg.seed}")
    if cfg.w_s < 0 or cfg.w_u < 0:
        problems.append(f"w_s/w_u: loss weights must be >= 0, got {cfg.w_s}/{cfg.w_u}")
    if problems:
        raise ConfigError(problems)
    return cfg
