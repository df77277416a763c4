"""Synthetic long-tail point-cloud dataset: generation, splits, and on-disk
container format.

Each class is a noisy geometric primitive; the per-class noise level is the
learning-difficulty knob. Class counts follow a long-tail profile and the
labeled subset is stratified per class. The container format is a small
self-describing binary file (magic, version, header, per-instance records,
trailing CRC32) that round-trips bit-exactly, hidden labels included.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import Instance, LABELED, PointCloud, TEST, UNLABELED

PRIMITIVES = ("sphere", "cube", "plane", "line", "cylinder", "cross", "helix", "torus")
MAX_NOISE = 0.3  # beyond this the primitives collapse into each other


@dataclass(frozen=True)
class ShapeSpec:
    primitive: str
    noise_sigma: float = 0.05
    scale_jitter: float = 0.1

    def __post_init__(self):
        if self.primitive not in PRIMITIVES:
            raise ValueError(f"unknown primitive {self.primitive!r}; choose from {PRIMITIVES}")
        if not 0.0 <= self.noise_sigma < MAX_NOISE:
            raise ValueError(f"noise_sigma must lie in [0, {MAX_NOISE}), got {self.noise_sigma}")
        if self.scale_jitter < 0:
            raise ValueError("scale_jitter must be >= 0")


@dataclass(frozen=True)
class DatasetSpec:
    class_specs: Sequence[ShapeSpec]
    counts: Sequence[int]  # training instances per class (labeled + unlabeled)
    labeled_fraction: float = 0.1
    test_per_class: int = 30
    points_per_cloud: int = 64
    seed: int = 0

    def __post_init__(self):
        if len(self.class_specs) != len(self.counts):
            raise ValueError("class_specs and counts must have the same length")
        if len(self.counts) < 2:
            raise ValueError("need at least 2 classes")
        if any(c < 1 for c in self.counts):
            raise ValueError("every class needs at least 1 training instance")
        if not 0.0 < self.labeled_fraction <= 1.0:
            raise ValueError(f"labeled_fraction must lie in (0, 1], got {self.labeled_fraction}")
        if self.test_per_class < 1:
            raise ValueError("test_per_class must be >= 1")
        if self.points_per_cloud < 8:
            raise ValueError("points_per_cloud must be >= 8")

    @property
    def C(self) -> int:
        return len(self.counts)


def default_spec(seed: int = 0) -> DatasetSpec:
    """Desk-scale long-tail benchmark: 8 primitives, geometric count decay,
    per-class noise mixed so learning difficulty does not simply follow class
    frequency (some rare classes are easy, some common ones are noisy)."""
    sigmas = [0.04, 0.06, 0.03, 0.07, 0.05, 0.02, 0.065, 0.025]
    return DatasetSpec(
        class_specs=tuple(ShapeSpec(p, s) for p, s in zip(PRIMITIVES, sigmas)),
        counts=(400, 200, 100, 50, 25, 12, 12, 12),
        labeled_fraction=0.1,
        test_per_class=30,
        points_per_cloud=64,
        seed=seed,
    )


def labeled_count(count: int, fraction: float) -> int:
    """Stratified labeled quota for one class: round-half-up, at least 1."""
    return max(1, int(math.floor(count * fraction + 0.5)))


# --- primitive samplers -------------------------------------------------------

def _sample_primitive(name: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if name == "sphere":
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return 0.7 * v
    if name == "cube":
        # uniform on the surface: pick a face, then a point on it
        pts = rng.uniform(-0.6, 0.6, size=(n, 3))
        axis = rng.integers(0, 3, size=n)
        side = rng.integers(0, 2, size=n) * 2 - 1
        pts[np.arange(n), axis] = 0.6 * side
        return pts
    if name == "plane":
        pts = np.zeros((n, 3))
        pts[:, :2] = rng.uniform(-0.7, 0.7, size=(n, 2))
        return pts
    if name == "line":
        pts = np.zeros((n, 3))
        pts[:, 0] = rng.uniform(-0.7, 0.7, size=n)
        return pts
    if name == "cylinder":
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        pts = np.stack([0.4 * np.cos(theta), 0.4 * np.sin(theta),
                        rng.uniform(-0.6, 0.6, size=n)], axis=1)
        return pts
    if name == "cross":
        pts = np.zeros((n, 3))
        t = rng.uniform(-0.7, 0.7, size=n)
        arm = rng.integers(0, 2, size=n)
        pts[np.arange(n), arm] = t
        return pts
    if name == "helix":
        t = rng.uniform(0.0, 4.0 * math.pi, size=n)
        return np.stack([0.5 * np.cos(t), 0.5 * np.sin(t),
                         -0.7 + 1.4 * t / (4.0 * math.pi)], axis=1)
    if name == "torus":
        u = rng.uniform(0.0, 2.0 * math.pi, size=n)
        v = rng.uniform(0.0, 2.0 * math.pi, size=n)
        r_ring = 0.5 + 0.2 * np.cos(v)
        return np.stack([r_ring * np.cos(u), r_ring * np.sin(u), 0.2 * np.sin(v)], axis=1)
    raise ValueError(f"unknown primitive {name!r}")


def _make_cloud(shape: ShapeSpec, n_points: int, rng: np.random.Generator) -> PointCloud:
    pts = _sample_primitive(shape.primitive, n_points, rng)
    if shape.scale_jitter > 0:
        pts = pts * (1.0 + rng.uniform(-shape.scale_jitter, shape.scale_jitter))
    if shape.noise_sigma > 0:
        pts = pts + rng.normal(0.0, shape.noise_sigma, size=pts.shape)
    pts = pts - pts.mean(axis=0)
    radius = np.linalg.norm(pts, axis=1).max()
    if radius > 1.0:  # keep coordinates inside the unit ball
        pts = pts / radius
    return PointCloud(pts)


def generate(spec: DatasetSpec) -> List[Instance]:
    """Materialize the dataset: per-class counts exact, labeled subset
    stratified (round-half-up per class, minimum 1), deterministic per seed.

    Instance ids are assigned sequentially: all training instances class by
    class, then all test instances class by class.
    """
    for c, (shape, count) in enumerate(zip(spec.class_specs, spec.counts)):
        if labeled_count(count, spec.labeled_fraction) > count:
            raise ValueError(f"class {c}: labeled quota exceeds count {count}")
    instances: List[Instance] = []
    next_id = 0
    for c, (shape, count) in enumerate(zip(spec.class_specs, spec.counts)):
        n_lab = labeled_count(count, spec.labeled_fraction)
        rng = np.random.default_rng([spec.seed, 1, c])
        for i in range(count):
            cloud = _make_cloud(shape, spec.points_per_cloud, rng)
            split = LABELED if i < n_lab else UNLABELED
            instances.append(Instance(next_id, cloud, split, label=c))
            next_id += 1
    for c, shape in enumerate(spec.class_specs):
        rng = np.random.default_rng([spec.seed, 2, c])
        for _ in range(spec.test_per_class):
            cloud = _make_cloud(shape, spec.points_per_cloud, rng)
            instances.append(Instance(next_id, cloud, TEST, label=c))
            next_id += 1
    return instances


# --- container format ---------------------------------------------------------

MAGIC = b"PCLT"
FORMAT_VERSION = 1
_SPLIT_CODE = {LABELED: 0, UNLABELED: 1, TEST: 2}
_SPLIT_NAME = {v: k for k, v in _SPLIT_CODE.items()}


class DatasetFormatError(ValueError):
    """Raised for malformed, truncated, corrupted, or wrong-version files."""


def save_dataset(path, instances: Sequence[Instance]) -> None:
    """Write the binary container. Hidden labels of unlabeled instances are
    stored (the file is the ground truth corpus, not a training view)."""
    body = bytearray()
    body += MAGIC
    body += struct.pack("<IQ", FORMAT_VERSION, len(instances))
    for inst in instances:
        label = inst.label_for_eval()
        pts = inst.cloud.points
        body += struct.pack("<qBhI", inst.id, _SPLIT_CODE[inst.split],
                            -1 if label is None else label, pts.shape[0])
        body += pts.astype("<f8").tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    with open(path, "wb") as f:
        f.write(bytes(body))


def load_dataset(path) -> List[Instance]:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(MAGIC) + 12 + 4:
        raise DatasetFormatError(f"file too short ({len(blob)} bytes) to be a dataset container")
    if blob[:4] != MAGIC:
        raise DatasetFormatError("bad magic; not a dataset container")
    stored_crc = struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(blob[:-4]) != stored_crc:
        raise DatasetFormatError("checksum mismatch; file is corrupted")
    version, count = struct.unpack_from("<IQ", blob, 4)
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported container version {version} (expected {FORMAT_VERSION})")
    off = 16
    out: List[Instance] = []
    try:
        for _ in range(count):
            iid, split_code, label, n = struct.unpack_from("<qBhI", blob, off)
            off += struct.calcsize("<qBhI")
            pts = np.frombuffer(blob, dtype="<f8", count=n * 3, offset=off).reshape(n, 3)
            off += n * 3 * 8
            out.append(Instance(iid, PointCloud(pts), _SPLIT_NAME[split_code],
                                label=None if label < 0 else label))
    except (struct.error, ValueError, KeyError) as exc:
        raise DatasetFormatError(f"malformed instance records: {exc}") from exc
    if off != len(blob) - 4:
        raise DatasetFormatError("trailing bytes after declared instance records")
    return out


def export_text(path, instances: Sequence[Instance]) -> None:
    """Plain-text view for external inspection: one instance per line with
    id, split, visible label (-1 where hidden), and flattened coordinates."""
    with open(path, "w") as f:
        for inst in instances:
            label = inst.label
            coords = " ".join(repr(v) for v in inst.cloud.points.ravel().tolist())
            f.write(f"{inst.id} {inst.split} {-1 if label is None else label} {coords}\n")


def split_ids(instances: Sequence[Instance]):
    """(labeled, unlabeled, test) index lists into ``instances``."""
    lab = [i for i, x in enumerate(instances) if x.split == LABELED]
    unl = [i for i, x in enumerate(instances) if x.split == UNLABELED]
    tst = [i for i, x in enumerate(instances) if x.split == TEST]
    return lab, unl, tst
