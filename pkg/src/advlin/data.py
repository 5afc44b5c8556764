"""Dataset construction: two-circles synthetic set, two-point instance, Iris."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .losses import Dataset


@dataclass(frozen=True)
class SyntheticSpec:
    n_per_circle: int = 50
    seed: int = 0
    include_anchor_points: bool = True
    # fixed geometry: unit circles around (+-2, 0)
    center: float = 2.0
    radius: float = 1.0


@dataclass(frozen=True)
class IrisSpec:
    path: str
    positive_class: str = "Iris-setosa"
    negative_class: str = "Iris-virginica"


def synth_two_circles(spec: SyntheticSpec = SyntheticSpec()) -> Dataset:
    """Points at uniform angles on unit circles centred at (2, 0) (label +1) and
    (-2, 0) (label -1), plus the anchors (e1, +1) and (-e1, -1)."""
    if spec.n_per_circle < 0:
        raise ValueError("n_per_circle must be nonnegative")
    rng = np.random.default_rng(spec.seed)
    k = spec.n_per_circle
    ang = rng.uniform(0.0, 2.0 * np.pi, size=(2, k))
    pos = np.column_stack((spec.center + spec.radius * np.cos(ang[0]), spec.radius * np.sin(ang[0])))
    neg = np.column_stack((-spec.center + spec.radius * np.cos(ang[1]), spec.radius * np.sin(ang[1])))
    X = [pos, neg]
    y = [np.ones(k), -np.ones(k)]
    if spec.include_anchor_points:
        X.append(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        y.append(np.array([1.0, -1.0]))
    X = np.concatenate(X)
    if X.shape[0] == 0:
        raise ValueError("no points requested")
    return Dataset(X, np.concatenate(y))


def two_point_dataset(gamma: float, d: int, direction=None) -> Dataset:
    """{(gamma v, +1), (-gamma v, -1)} for a unit vector v (default e1)."""
    if not 0 < gamma <= 1:
        raise ValueError("need 0 < gamma <= 1")
    if direction is None:
        v = np.zeros(d)
        v[0] = 1.0
    else:
        v = np.asarray(direction, dtype=np.float64)
        if v.shape != (d,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector of dimension d")
    return Dataset(np.stack([gamma * v, -gamma * v]), np.array([1.0, -1.0]))


def load_iris(spec: IrisSpec) -> Dataset:
    """Read a UCI-format Iris file (4 numeric fields and a class name per line)."""
    if spec.positive_class == spec.negative_class:
        raise ValueError("positive and negative class must differ")
    rows = {spec.positive_class: [], spec.negative_class: []}
    seen = set()
    with open(spec.path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 5:
                raise ValueError(f"{spec.path}:{lineno}: expected 5 fields, got {len(parts)}")
            try:
                feats = [float(p) for p in parts[:4]]
            except ValueError:
                raise ValueError(f"{spec.path}:{lineno}: non-numeric feature in {line!r}") from None
            label = parts[4]
            seen.add(label)
            if label in rows:
                rows[label].append(feats)
    for cls in (spec.positive_class, spec.negative_class):
        if not rows[cls]:
            raise ValueError(f"class {cls!r} not found; available classes: {sorted(seen)}")
    pos, neg = rows[spec.positive_class], rows[spec.negative_class]
    return Dataset(np.array(pos + neg), np.concatenate((np.ones(len(pos)), -np.ones(len(neg)))))


def scale_to_unit_ball(S: Dataset):
    """Divide every x by the largest norm; returns (scaled dataset, 1 / max_norm)."""
    if S.max_norm == 0:
        raise ValueError("all feature vectors are zero")
    scale = 1.0 / S.max_norm
    return Dataset(S.X / S.max_norm, S.y), scale


def dataset_to_csv(S: Dataset, path: Optional[str] = None) -> str:
    """CSV with header x1..xd,y and 17-significant-digit floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(S.d)] + ["y"])
    for x, y in zip(S.X, S.y):
        w.writerow([f"{v:.17g}" for v in x] + [f"{int(y):d}"])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def dataset_from_csv(path: str) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if not header or header[-1] != "y":
            raise ValueError(f"{path}: header must end with 'y'")
        data = [[float(v) for v in row] for row in r if row]
    arr = np.array(data)
    return Dataset(arr[:, :-1], arr[:, -1])
