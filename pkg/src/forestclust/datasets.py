"""Synthetic datasets and dataset CSV I/O.

Generators return points in seeded-shuffled row order.  Downstream
evaluation walks fixed sequential blocks, so emitting class-sorted rows
would bake degenerate blocks (fewer classes than clusters) into every run;
shuffling at generation keeps blocks representative while staying fully
deterministic in the seed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from .core import MembershipMatrix, membership_from_labels

FOUR_GAUSSIAN_MEANS = np.array(
    [
        [0.97627008, 4.30378733],
        [2.05526752, 0.89766366],
        [-1.52690401, 2.91788226],
        [-1.24825577, 7.83546002],
    ]
)


@dataclass
class Dataset:
    """Feature matrix plus optional per-point labels.

    labels is either None (fully unlabeled) or a list with one entry per
    row, where individual entries may be None for unlabeled points.
    """

    X: np.ndarray
    labels: list | None
    name: str
    seed: int

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise ValueError(f"X must be a nonempty 2-d matrix, got {self.X.shape}")
        if self.labels is not None:
            self.labels = list(self.labels)
            if len(self.labels) != self.X.shape[0]:
                raise ValueError(
                    f"{len(self.labels)} labels for {self.X.shape[0]} points"
                )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def _shuffled(X: np.ndarray, labels: list, rng: np.random.Generator):
    order = rng.permutation(X.shape[0])
    return X[order], [labels[i] for i in order]


def gen_four_gaussians(
    seed: int, points_per_class: int = 15, std: float = 0.2
) -> Dataset:
    """Four isotropic 2-d Gaussians, 15 points each by default, centered on
    the fixed means above (pairwise mean distances are all > 2, so at
    std 0.2 the classes are far-separated)."""
    if points_per_class < 1:
        raise ValueError("points_per_class must be >= 1")
    if std < 0:
        raise ValueError("std must be >= 0")
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for c, mean in enumerate(FOUR_GAUSSIAN_MEANS):
        blocks.append(mean + std * rng.standard_normal((points_per_class, 2)))
        labels.extend([c] * points_per_class)
    X, labels = _shuffled(np.vstack(blocks), labels, rng)
    return Dataset(X, labels, "four_gaussians", seed)


def append_noise_dims(dataset: Dataset, num_dims: int, seed: int) -> Dataset:
    """Widen the features with iid uniform [0, 1) noise columns."""
    if num_dims < 1:
        raise ValueError(f"num_dims must be >= 1, got {num_dims}")
    rng = np.random.default_rng(seed)
    noise = rng.random((dataset.n, num_dims))
    return Dataset(
        np.hstack([dataset.X, noise]),
        None if dataset.labels is None else list(dataset.labels),
        f"{dataset.name}+noise{num_dims}",
        dataset.seed,
    )


def gen_two_moons(n: int, noise_std: float, seed: int) -> Dataset:
    """Two interleaved half-circles, n/2 points each, optional jitter.

    Upper moon: (cos t, sin t) for t in [0, pi]; lower moon mirrored and
    shifted to thread through the upper one's gap.
    """
    _check_even(n)
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    outer = np.column_stack([np.cos(t), np.sin(t)])
    inner = np.column_stack([1.0 - np.cos(t), 1.0 - np.sin(t) - 0.5])
    X = np.vstack([outer, inner])
    if noise_std > 0:
        X = X + noise_std * rng.standard_normal(X.shape)
    labels = [0] * half + [1] * half
    X, labels = _shuffled(X, labels, rng)
    return Dataset(X, labels, "two_moons", seed)


def gen_circles(n: int, gap: float, seed: int, noise_std: float = 0.0) -> Dataset:
    """Two concentric circles, outer radius 1, inner radius 1 - gap."""
    _check_even(n)
    if not 0.0 < gap < 1.0:
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    half = n // 2
    t = np.linspace(0.0, 2.0 * np.pi, half, endpoint=False)
    ring = np.column_stack([np.cos(t), np.sin(t)])
    X = np.vstack([ring, (1.0 - gap) * ring])
    if noise_std > 0:
        X = X + noise_std * rng.standard_normal(X.shape)
    labels = [0] * half + [1] * half
    X, labels = _shuffled(X, labels, rng)
    return Dataset(X, labels, "circles", seed)


def _check_even(n: int) -> None:
    if n < 4 or n % 2:
        raise ValueError(f"n must be even and >= 4, got {n}")


def kmeans_baseline(X: np.ndarray, k: int, restarts: int, seed: int) -> MembershipMatrix:
    """Best-of-restarts Lloyd baseline (reference comparison only)."""
    X = np.asarray(X, dtype=np.float64)
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds {X.shape[0]} points")
    model = KMeans(n_clusters=k, n_init=restarts, random_state=seed)
    return membership_from_labels(model.fit_predict(X))


def dataset_to_csv(dataset: Dataset, path) -> None:
    """Header x0..x{d-1},label; unlabeled rows leave the label field empty."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(dataset.d)] + ["label"])
        for row in range(dataset.n):
            label = "" if dataset.labels is None else dataset.labels[row]
            label = "" if label is None else label
            writer.writerow([repr(float(v)) for v in dataset.X[row]] + [label])


def dataset_from_csv(path) -> Dataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if not header or header[-1] != "label" or len(header) < 2:
        raise ValueError(f"{path}: header must be x0,...,x{{d-1}},label")
    d = len(header) - 1
    if header[:-1] != [f"x{i}" for i in range(d)]:
        raise ValueError(f"{path}: feature columns must be named x0..x{d - 1}")
    X = np.empty((len(rows) - 1, d))
    labels: list = []
    for num, row in enumerate(rows[1:], start=2):
        if len(row) != d + 1:
            raise ValueError(f"{path}: line {num} has {len(row)} fields, want {d + 1}")
        try:
            X[num - 2] = [float(v) for v in row[:-1]]
        except ValueError as exc:
            raise ValueError(f"{path}: line {num}: {exc}") from None
        labels.append(None if row[-1] == "" else int(row[-1]))
    if X.shape[0] < 1:
        raise ValueError(f"{path}: no data rows")
    if all(lbl is None for lbl in labels):
        labels = None
    # Loaded data has no generation seed; -1 marks it as externally sourced.
    return Dataset(X, labels, os.path.basename(str(path)), -1)
