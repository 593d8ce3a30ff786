"""Probabilistic sequence machinery: shot-category transition learning,
linear-chain CRF smoothing, and per-outcome scene HMMs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (
    N_CONCEPTS,
    ModelFormatError,
    SceneCategory,
    ShotCategory,
    fmt_float,
)

SHOT_LABELS = tuple(c.value for c in ShotCategory)

CRF_HEADER = "STUMPS-CRF v1"
SCENE_HEADER = "STUMPS-SCENE v1"

VARIANCE_FLOOR = 1e-4
NEG_INF = -math.inf


@dataclass(frozen=True)
class CrfModel:
    labels: tuple[str, ...]
    transitions: np.ndarray  # rows sum to 1, all entries > 0 after smoothing
    pseudo_count: float

    def __post_init__(self):
        n = len(self.labels)
        if self.transitions.shape != (n, n):
            raise ValueError("transition matrix shape mismatch")
        if np.any(np.abs(self.transitions.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("transition rows must sum to 1")


def learn_transitions(
    sequences, pseudo_count: float = 1.0, labels: tuple[str, ...] = SHOT_LABELS
) -> CrfModel:
    """Smoothed transition counts over consecutive labels in the sequences."""
    n = len(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((n, n))
    for seq in sequences:
        names = [s.value if isinstance(s, ShotCategory) else s for s in seq]
        for a, b in zip(names, names[1:]):
            counts[index[a], index[b]] += 1
    if counts.sum() == 0:
        raise ValueError("no transitions observed in any sequence")
    smoothed = counts + pseudo_count
    row_sums = smoothed.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        trans = np.where(row_sums > 0, smoothed / row_sums, 0.0)
    for i in range(n):
        if row_sums[i, 0] == 0:
            # pseudo_count 0 and no observations: fall back to uniform
            trans[i] = 1.0 / n
    return CrfModel(labels=labels, transitions=trans, pseudo_count=pseudo_count)


def _validate_unaries(unaries: np.ndarray, model: CrfModel) -> np.ndarray:
    u = np.asarray(unaries, dtype=float)
    if u.ndim != 2 or u.shape[0] < 1 or u.shape[1] != len(model.labels):
        raise ValueError("unaries must be (T, n_labels) with T >= 1")
    if np.any(u <= 0):
        raise ValueError("zero-probability unary entry")
    if np.any(np.abs(u.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("each unary row must be a distribution")
    return u


def crf_marginals(unaries, model: CrfModel) -> tuple[np.ndarray, float]:
    """Log-space forward-backward; returns per-step marginals and the log
    partition function."""
    u = _validate_unaries(unaries, model)
    log_u = np.log(u)
    log_t = np.log(model.transitions)
    T = len(u)
    alpha = np.zeros_like(log_u)
    alpha[0] = log_u[0]
    for t in range(1, T):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + log_t, axis=0) + log_u[t]
    beta = np.zeros_like(log_u)
    for t in range(T - 2, -1, -1):
        beta[t] = logsumexp(log_t + log_u[t + 1] + beta[t + 1], axis=1)
    log_z = float(logsumexp(alpha[-1]))
    marginals = np.exp(alpha + beta - log_z)
    marginals /= marginals.sum(axis=1, keepdims=True)
    return marginals, log_z


def crf_decode(unaries, model: CrfModel, mode: str = "viterbi") -> list[str]:
    """Best label sequence: ``viterbi`` (argmax joint path) or ``max_marginal``
    (per-step argmax of the forward-backward marginals)."""
    u = _validate_unaries(unaries, model)
    if mode == "max_marginal":
        marginals, _ = crf_marginals(u, model)
        return [model.labels[int(i)] for i in np.argmax(marginals, axis=1)]
    if mode != "viterbi":
        raise ValueError(f"unknown decode mode {mode!r}")
    log_u = np.log(u)
    log_t = np.log(model.transitions)
    T = len(u)
    score = np.zeros_like(log_u)
    back = np.zeros((T, len(model.labels)), dtype=int)
    score[0] = log_u[0]
    for t in range(1, T):
        cand = score[t - 1][:, None] + log_t
        back[t] = np.argmax(cand, axis=0)
        score[t] = cand[back[t], np.arange(len(model.labels))] + log_u[t]
    path = [int(np.argmax(score[-1]))]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return [model.labels[i] for i in path]


def crf_decode_literal(unaries, model: CrfModel) -> list[str]:
    """Fidelity mode: minimize the literal sum of (1 - P) unary and pairwise
    costs via the same DP."""
    u = _validate_unaries(unaries, model)
    cost_u = 1.0 - u
    cost_t = 1.0 - model.transitions
    T = len(u)
    score = np.zeros_like(cost_u)
    back = np.zeros((T, len(model.labels)), dtype=int)
    score[0] = cost_u[0]
    for t in range(1, T):
        cand = score[t - 1][:, None] + cost_t
        back[t] = np.argmin(cand, axis=0)
        score[t] = cand[back[t], np.arange(len(model.labels))] + cost_u[t]
    path = [int(np.argmin(score[-1]))]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return [model.labels[i] for i in path]


@dataclass(frozen=True)
class SceneModel:
    """Per-outcome HMM over shot-category states with diagonal Gaussian
    emissions on the concept scores and a hard frame-length prior."""

    category: SceneCategory
    initial: np.ndarray  # (S,)
    transitions: np.ndarray  # (S, S)
    means: np.ndarray  # (S, N_CONCEPTS)
    variances: np.ndarray  # (S, N_CONCEPTS), floored
    lmin: int
    lmax: int
    states: tuple[str, ...] = SHOT_LABELS

    def __post_init__(self):
        s = len(self.states)
        if abs(self.initial.sum() - 1.0) > 1e-9:
            raise ValueError("initial distribution must sum to 1")
        if np.any(np.abs(self.transitions.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("transition rows must sum to 1")
        if self.means.shape != (s, N_CONCEPTS) or self.variances.shape != (s, N_CONCEPTS):
            raise ValueError("emission parameter shape mismatch")
        if np.any(self.variances < VARIANCE_FLOOR - 1e-12):
            raise ValueError(f"variances must be >= {VARIANCE_FLOOR}")


def pooled_emissions(
    scenes: list[tuple[np.ndarray, list]]
) -> tuple[np.ndarray, np.ndarray]:
    """Per-state emission means/variances pooled over scenes of any category,
    for use as the fallback when one category never exhibits a state."""
    n = len(SHOT_LABELS)
    index = {lab: i for i, lab in enumerate(SHOT_LABELS)}
    per_state: list[list[np.ndarray]] = [[] for _ in range(n)]
    all_frames = []
    for frames, states in scenes:
        frames = np.asarray(frames, dtype=float)
        all_frames.append(frames)
        for f, s in zip(frames, states):
            name = s.value if isinstance(s, ShotCategory) else s
            per_state[index[name]].append(f)
    stacked = np.concatenate(all_frames)
    means = np.tile(stacked.mean(axis=0), (n, 1))
    variances = np.tile(np.maximum(stacked.var(axis=0), VARIANCE_FLOOR), (n, 1))
    for si in range(n):
        if per_state[si]:
            obs = np.asarray(per_state[si])
            means[si] = obs.mean(axis=0)
            variances[si] = np.maximum(obs.var(axis=0), VARIANCE_FLOOR)
    return means, variances


def learn_scene_model(
    category: SceneCategory,
    scenes: list[tuple[np.ndarray, list]],
    pseudo_count: float = 1.0,
    emission_fallback: tuple[np.ndarray, np.ndarray] | None = None,
) -> SceneModel:
    """Estimate a SceneModel from (per-frame concept scores, per-frame shot
    category) pairs. States never seen in this category's scenes get the
    ``emission_fallback`` (means, variances) when given, else the category's
    global-mean emissions."""
    if not scenes:
        raise ValueError(f"no scenes for category {category.value}")
    n = len(SHOT_LABELS)
    index = {lab: i for i, lab in enumerate(SHOT_LABELS)}
    init_counts = np.zeros(n)
    trans_counts = np.zeros((n, n))
    per_state: list[list[np.ndarray]] = [[] for _ in range(n)]
    lengths = []
    all_frames = []
    for frames, states in scenes:
        frames = np.asarray(frames, dtype=float)
        names = [s.value if isinstance(s, ShotCategory) else s for s in states]
        if len(frames) != len(names):
            raise ValueError("frame and state sequences must have equal length")
        lengths.append(len(frames))
        all_frames.append(frames)
        init_counts[index[names[0]]] += 1
        for a, b in zip(names, names[1:]):
            trans_counts[index[a], index[b]] += 1
        for f, s in zip(frames, names):
            per_state[index[s]].append(f)

    initial = (init_counts + pseudo_count) / (init_counts.sum() + n * pseudo_count)
    smoothed = trans_counts + pseudo_count
    row_sums = smoothed.sum(axis=1, keepdims=True)
    transitions = np.where(row_sums > 0, smoothed / np.where(row_sums > 0, row_sums, 1.0), 1.0 / n)

    if emission_fallback is not None:
        means = np.array(emission_fallback[0], dtype=float)
        variances = np.maximum(np.array(emission_fallback[1], dtype=float), VARIANCE_FLOOR)
    else:
        stacked = np.concatenate(all_frames)
        means = np.tile(stacked.mean(axis=0), (n, 1))
        variances = np.tile(np.maximum(stacked.var(axis=0), VARIANCE_FLOOR), (n, 1))
    for si in range(n):
        if per_state[si]:
            obs = np.asarray(per_state[si])
            means[si] = obs.mean(axis=0)
            variances[si] = np.maximum(obs.var(axis=0), VARIANCE_FLOOR)

    lmin = max(1, int(math.floor(min(lengths) * 0.8)))
    lmax = int(math.ceil(max(lengths) * 1.2))
    return SceneModel(
        category=category,
        initial=initial,
        transitions=transitions,
        means=means,
        variances=variances,
        lmin=lmin,
        lmax=lmax,
    )


def emission_log_likelihoods(model: SceneModel, frames: np.ndarray) -> np.ndarray:
    """(T, S) diagonal-Gaussian log densities."""
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 2 or frames.shape[1] != N_CONCEPTS:
        raise ValueError(f"frames must be (T, {N_CONCEPTS})")
    diff = frames[:, None, :] - model.means[None, :, :]
    var = model.variances[None, :, :]
    return -0.5 * np.sum(diff * diff / var + np.log(2.0 * math.pi * var), axis=2)


def scene_log_likelihood(model: SceneModel, frames) -> float:
    """Length-normalized log-space forward pass; -inf outside the length prior."""
    frames = np.asarray(frames, dtype=float)
    T = len(frames)
    if T < 1:
        raise ValueError("need at least one frame")
    if not model.lmin <= T <= model.lmax:
        return NEG_INF
    log_e = emission_log_likelihoods(model, frames)
    alpha = np.log(model.initial) + log_e[0]
    log_t = np.log(model.transitions)
    for t in range(1, T):
        alpha = logsumexp(alpha[:, None] + log_t, axis=0) + log_e[t]
    return float(logsumexp(alpha)) / T


def scene_posterior(models: list[SceneModel], frames) -> tuple[np.ndarray, bool]:
    """Softmax over the models' length-normalized log-likelihoods. Returns
    (probabilities, degenerate); degenerate is True when every model rejects
    the segment length, in which case the distribution is uniform."""
    if not models:
        raise ValueError("need at least one model")
    lls = np.array([scene_log_likelihood(m, frames) for m in models])
    if np.all(np.isneginf(lls)):
        return np.full(len(models), 1.0 / len(models)), True
    lls = lls - lls[np.isfinite(lls)].max()
    e = np.exp(lls)
    return e / e.sum(), False


def save_crf_model(model: CrfModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CRF_HEADER + "\n")
        fh.write("labels " + " ".join(model.labels) + "\n")
        fh.write("pseudo_count " + fmt_float(model.pseudo_count) + "\n")
        for i, lab in enumerate(model.labels):
            fh.write(f"row {lab} " + " ".join(fmt_float(v) for v in model.transitions[i]) + "\n")


def load_crf_model(path) -> CrfModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CRF_HEADER:
        raise ModelFormatError(f"expected header '{CRF_HEADER}'")
    labels = tuple(lines[1].split()[1:])
    pseudo = float(lines[2].split()[1])
    trans = np.zeros((len(labels), len(labels)))
    for line in lines[3:]:
        if not line.strip():
            continue
        parts = line.split()
        trans[labels.index(parts[1])] = [float(v) for v in parts[2:]]
    return CrfModel(labels=labels, transitions=trans, pseudo_count=pseudo)


def save_scene_models(models: list[SceneModel], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{SCENE_HEADER} {len(models)}\n")
        for m in models:
            fh.write(f"category {m.category.value}\n")
            fh.write("states " + " ".join(m.states) + "\n")
            fh.write(f"length_prior {m.lmin} {m.lmax}\n")
            fh.write("initial " + " ".join(fmt_float(v) for v in m.initial) + "\n")
            for i, lab in enumerate(m.states):
                fh.write(f"trans {lab} " + " ".join(fmt_float(v) for v in m.transitions[i]) + "\n")
            for i, lab in enumerate(m.states):
                row = [fmt_float(v) for v in m.means[i]] + [fmt_float(v) for v in m.variances[i]]
                fh.write(f"emit {lab} " + " ".join(row) + "\n")


def load_scene_models(path) -> list[SceneModel]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(SCENE_HEADER):
        raise ModelFormatError(f"expected header '{SCENE_HEADER}'")
    n_models = int(lines[0].split()[2])
    models: list[SceneModel] = []
    pos = 1
    for _ in range(n_models):
        category = SceneCategory(lines[pos].split()[1])
        states = tuple(lines[pos + 1].split()[1:])
        lmin, lmax = (int(v) for v in lines[pos + 2].split()[1:])
        initial = np.array([float(v) for v in lines[pos + 3].split()[1:]])
        s = len(states)
        transitions = np.zeros((s, s))
        means = np.zeros((s, N_CONCEPTS))
        variances = np.zeros((s, N_CONCEPTS))
        for i in range(s):
            parts = lines[pos + 4 + i].split()
            transitions[states.index(parts[1])] = [float(v) for v in parts[2:]]
        for i in range(s):
            parts = lines[pos + 4 + s + i].split()
            si = states.index(parts[1])
            values = [float(v) for v in parts[2:]]
            means[si] = values[:N_CONCEPTS]
            variances[si] = values[N_CONCEPTS:]
        models.append(
            SceneModel(
                category=category,
                initial=initial,
                transitions=transitions,
                means=means,
                variances=variances,
                lmin=lmin,
                lmax=lmax,
                states=states,
            )
        )
        pos += 4 + 2 * s
    return models
