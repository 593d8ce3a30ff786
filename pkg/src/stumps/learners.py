"""Statistical learning primitives: k-means vocabulary building, one-vs-rest
linear SVM with softmax calibration, and cross-validation utilities.

All randomness flows from caller-supplied seeds; fitted models are immutable.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .core import ModelFormatError, SparseVector, fmt_float


@dataclass(frozen=True)
class Codebook:
    centers: np.ndarray  # (k, dim)

    def __post_init__(self):
        if self.centers.ndim != 2 or self.centers.shape[0] < 1 or self.centers.shape[1] < 1:
            raise ValueError("codebook needs at least one center with dimension > 0")
        if not np.all(np.isfinite(self.centers)):
            raise ValueError("codebook centers must be finite")

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def kmeans_fit(points, k: int, seed: int, max_iters: int = 100) -> Codebook:
    """Lloyd's algorithm from a seeded k-means++ initialization."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-D array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    n_distinct = np.unique(pts, axis=0).shape[0]
    if k < 1 or k > n_distinct:
        raise ValueError(f"k={k} must be in 1..{n_distinct} (distinct points)")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(pts, k, rng)
    prev_inertia = np.inf
    for _ in range(max_iters):
        dists = cdist(pts, centers)
        assign = np.argmin(dists, axis=1)
        inertia = float(np.sum(dists[np.arange(len(pts)), assign] ** 2))
        if inertia > prev_inertia + 1e-9:
            raise RuntimeError("k-means inertia increased")
        new_centers = centers.copy()
        for c in range(k):
            members = pts[assign == c]
            if len(members):
                new_centers[c] = members.mean(axis=0)
            else:
                # Re-seed an empty cluster at the point farthest from its center.
                worst = int(np.argmax(dists[np.arange(len(pts)), assign]))
                new_centers[c] = pts[worst]
        if np.allclose(new_centers, centers):
            break
        centers = new_centers
        prev_inertia = inertia
    return Codebook(centers=centers)


def _kmeans_pp_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [pts[rng.integers(len(pts))]]
    for _ in range(1, k):
        d2 = np.min(cdist(pts, np.asarray(centers)) ** 2, axis=1)
        total = d2.sum()
        if total <= 0:
            probs = np.full(len(pts), 1.0 / len(pts))
        else:
            probs = d2 / total
        centers.append(pts[rng.choice(len(pts), p=probs)])
    return np.asarray(centers, dtype=float)


def quantize(point, codebook: Codebook) -> int:
    """Nearest-center index under Euclidean distance; ties go to the lowest index."""
    p = np.asarray(point, dtype=float)
    if p.shape != (codebook.dim,):
        raise ValueError(f"point dimension {p.shape} != codebook dimension {codebook.dim}")
    return int(np.argmin(np.linalg.norm(codebook.centers - p, axis=1)))


@dataclass(frozen=True)
class LinearClassifier:
    categories: tuple[str, ...]
    weights: np.ndarray  # (n_categories, dim)
    biases: np.ndarray  # (n_categories,)
    temperature: float = 1.0

    def __post_init__(self):
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("category names must be unique")
        if self.weights.shape != (len(self.categories), self.dim):
            raise ValueError("weight matrix shape mismatch")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class SvmConfig:
    epochs: int = 50
    lam: float = 1e-4
    seed: int = 0


def _as_dense(x, dim: int) -> np.ndarray:
    if isinstance(x, SparseVector):
        out = np.zeros(dim)
        for i, v in x.data.items():
            if i < dim:
                out[i] = v
        return out
    arr = np.zeros(dim)
    a = np.asarray(x, dtype=float)
    arr[: len(a)] = a[:dim]
    return arr


def svm_train(
    samples,
    config: SvmConfig = SvmConfig(),
    class_weights: dict[str, float] | None = None,
) -> LinearClassifier:
    """One-vs-rest hinge-loss training by seeded stochastic subgradient descent
    with the Pegasos step-size schedule eta_t = 1 / (lambda * t)."""
    if not samples:
        raise ValueError("no training samples")
    categories = tuple(sorted({label for _, label in samples}))
    if len(categories) < 2:
        raise ValueError("need at least 2 categories")
    dim = max(x.dim if isinstance(x, SparseVector) else len(x) for x, _ in samples)
    X = np.stack([_as_dense(x, dim) for x, _ in samples])
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite training sample")
    labels = [label for _, label in samples]
    cw = np.array([(class_weights or {}).get(lab, 1.0) for lab in labels])

    rng = np.random.default_rng(config.seed)
    n = len(samples)
    weights = np.zeros((len(categories), dim))
    biases = np.zeros(len(categories))
    for ci, cat in enumerate(categories):
        y = np.where([lab == cat for lab in labels], 1.0, -1.0)
        w = np.zeros(dim + 1)  # bias carried as an extra always-on feature
        t = 0
        for _ in range(config.epochs):
            for idx in rng.permutation(n):
                t += 1
                eta = 1.0 / (config.lam * t)
                margin = y[idx] * (X[idx] @ w[:dim] + w[dim])
                w *= 1.0 - eta * config.lam
                if margin < 1.0:
                    w[:dim] += eta * y[idx] * cw[idx] * X[idx]
                    w[dim] += eta * y[idx] * cw[idx]
        weights[ci] = w[:dim]
        biases[ci] = w[dim]
    return LinearClassifier(categories=categories, weights=weights, biases=biases)


def svm_margins(model: LinearClassifier, x) -> np.ndarray:
    dense = _as_dense(x, model.dim)
    if not np.all(np.isfinite(dense)):
        raise ValueError("non-finite input")
    return model.weights @ dense + model.biases


def svm_predict_proba(model: LinearClassifier, x) -> np.ndarray:
    """Softmax over margin / temperature; a valid distribution with the same
    argmax as the raw margins."""
    m = svm_margins(model, x) / model.temperature
    m -= m.max()
    e = np.exp(m)
    return e / e.sum()


def svm_predict(model: LinearClassifier, x) -> str:
    return model.categories[int(np.argmax(svm_margins(model, x)))]


def fit_temperature(model: LinearClassifier, samples) -> LinearClassifier:
    """Fit the calibration temperature by golden-section search on held-out
    negative log-likelihood."""
    if not samples:
        raise ValueError("no calibration samples")
    margins = np.stack([svm_margins(model, x) for x, _ in samples])
    targets = np.array([model.categories.index(lab) for _, lab in samples])

    def nll(log_t: float) -> float:
        z = margins / np.exp(log_t)
        logp = z - logsumexp(z, axis=1, keepdims=True)
        return -float(logp[np.arange(len(targets)), targets].sum())

    lo, hi = np.log(0.05), np.log(20.0)
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = nll(c), nll(d)
    for _ in range(60):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = nll(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = nll(d)
    return replace(model, temperature=float(np.exp((a + b) / 2.0)))


@dataclass(frozen=True)
class ConfusionMatrix:
    categories: tuple[str, ...]
    matrix: np.ndarray  # (C, C) ints, rows = truth, cols = prediction

    @property
    def accuracy(self) -> float:
        total = int(self.matrix.sum())
        if total == 0:
            return 0.0
        return float(np.trace(self.matrix)) / total

    def format(self) -> str:
        width = max(len(c) for c in self.categories) + 1
        lines = [" " * width + " ".join(f"{c:>{width}}" for c in self.categories)]
        for i, c in enumerate(self.categories):
            row = " ".join(f"{int(v):>{width}}" for v in self.matrix[i])
            lines.append(f"{c:<{width}}{row}")
        lines.append(f"accuracy {self.accuracy:.4f}")
        return "\n".join(lines)


def cross_validate(samples, folds: int, trainer, seed: int) -> ConfusionMatrix:
    """Seeded stratified k-fold cross-validation aggregating a confusion matrix
    over held-out folds. ``trainer`` maps a sample list to a LinearClassifier."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    categories = tuple(sorted({lab for _, lab in samples}))
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(samples), dtype=int)
    for cat in categories:
        idx = [i for i, (_, lab) in enumerate(samples) if lab == cat]
        if len(idx) < folds:
            raise ValueError(f"category {cat!r} has {len(idx)} samples, need >= {folds}")
        idx = rng.permutation(idx)
        for j, i in enumerate(idx):
            fold_of[i] = j % folds

    matrix = np.zeros((len(categories), len(categories)), dtype=int)
    for f in range(folds):
        train = [s for i, s in enumerate(samples) if fold_of[i] != f]
        held = [(i, s) for i, s in enumerate(samples) if fold_of[i] == f]
        model = trainer(train)
        for _, (x, lab) in held:
            pred = svm_predict(model, x)
            matrix[categories.index(lab), categories.index(pred)] += 1
    return ConfusionMatrix(categories=categories, matrix=matrix)


LINSVM_HEADER = "STUMPS-LINSVM v1"


def save_linear_classifier(model: LinearClassifier, path) -> None:
    lines = [LINSVM_HEADER]
    lines.append("categories " + " ".join(model.categories))
    lines.append(f"dimension {model.dim}")
    lines.append("temperature " + fmt_float(model.temperature))
    for ci, cat in enumerate(model.categories):
        row = [fmt_float(model.biases[ci])] + [fmt_float(v) for v in model.weights[ci]]
        lines.append(f"weights {cat} " + " ".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_linear_classifier(path) -> LinearClassifier:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != LINSVM_HEADER:
        raise ModelFormatError(f"expected header '{LINSVM_HEADER}'")
    try:
        categories = tuple(lines[1].split()[1:])
        dim = int(lines[2].split()[1])
        temperature = float(lines[3].split()[1])
        weights = np.zeros((len(categories), dim))
        biases = np.zeros(len(categories))
        for line in lines[4:]:
            if not line.strip():
                continue
            parts = line.split()
            if parts[0] != "weights":
                raise ModelFormatError(f"unexpected line: {line!r}")
            ci = categories.index(parts[1])
            values = [float(v) for v in parts[2:]]
            if len(values) != dim + 1:
                raise ModelFormatError(f"weight row for {parts[1]} has wrong length")
            biases[ci] = values[0]
            weights[ci] = values[1:]
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"malformed classifier file: {exc}") from exc
    return LinearClassifier(
        categories=categories, weights=weights, biases=biases, temperature=temperature
    )
