"""Joint segmentation of the frame stream against the commentary's scene
sequence, boundary-neighborhood action-shot search, phrase mapping, and the
evaluation metrics."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .commentary import CommentaryEvent, Phrase
from .core import PhraseCategory, SceneCategory, ShotCategory, StumpsError
from .frame_features import FrameDescriptor
from .sequence_models import NEG_INF, SceneModel, emission_log_likelihoods


class InfeasibleSegmentationError(StumpsError):
    pass


@dataclass(frozen=True)
class SceneSegment:
    index: int
    category: SceneCategory
    start_frame: int
    end_frame: int  # exclusive
    anchor_shot: int | None = None
    event: CommentaryEvent | None = None


@dataclass(frozen=True)
class ActionShots:
    bowler: int | None = None
    batsman: int | None = None


@dataclass(frozen=True)
class ShotAnnotation:
    scene_index: int
    shot_id: int | None  # None for segment-level annotations
    start_frame: int
    end_frame: int
    shot_category: ShotCategory | None
    phrases: tuple[tuple[str, PhraseCategory], ...]
    players: tuple[str, ...] = field(default_factory=tuple)


def dp_segment(n_candidates: int, n_scenes: int, score_fn):
    """Maximize sum_k score(a_k, a_{k+1}, k) over monotone candidate boundary
    placements a_0=0 < ... < a_K = n_candidates-1. Ties prefer the earliest
    boundary. Returns (boundary candidate indices, total score).
    """
    A, K = n_candidates, n_scenes
    if K < 1 or A < 2:
        raise InfeasibleSegmentationError("need at least one scene and two candidates")
    D = np.full((A, K + 1), NEG_INF)
    choice = np.full((A, K), -1, dtype=int)
    D[A - 1, K] = 0.0
    for k in range(K - 1, -1, -1):
        for a in range(A - 1):
            best = NEG_INF
            best_b = -1
            for b in range(a + 1, A):
                if D[b, k + 1] == NEG_INF:
                    continue
                v = score_fn(a, b, k) + D[b, k + 1]
                if v > best:
                    best, best_b = v, b
            D[a, k] = best
            choice[a, k] = best_b
    if D[0, 0] == NEG_INF:
        reach = {0}
        for k in range(K):
            nxt = {
                b
                for a in reach
                for b in range(a + 1, A)
                if score_fn(a, b, k) > NEG_INF
            }
            if not nxt:
                raise InfeasibleSegmentationError(f"scene {k} cannot be placed")
            reach = nxt
        raise InfeasibleSegmentationError(
            f"scene {K - 1} cannot be placed ending at the final boundary"
        )
    boundaries = [0]
    for k in range(K):
        boundaries.append(int(choice[boundaries[-1], k]))
    return boundaries, float(D[0, 0])


def interval_log_likelihoods(
    frames, models: list[SceneModel], candidates: list[int], threads: int = 1
) -> np.ndarray:
    """Total HMM log-likelihood for every candidate interval and model:
    out[a, b, m] covers frames [candidates[a], candidates[b]).

    One batched forward pass per interval start serves all end candidates;
    intervals outside a model's length prior get -inf.
    """
    X = np.asarray(
        [f.concept_scores if isinstance(f, FrameDescriptor) else f for f in frames],
        dtype=float,
    )
    n = len(X)
    A = len(candidates)
    M = len(models)
    log_e = np.stack([emission_log_likelihoods(m, X) for m in models], axis=1)  # (n, M, S)
    log_t = np.stack([np.log(m.transitions) for m in models])  # (M, S, S)
    log_pi = np.stack([np.log(m.initial) for m in models])  # (M, S)
    lmins = np.array([m.lmin for m in models])
    lmaxs = np.array([m.lmax for m in models])
    global_lmax = int(lmaxs.max())
    cand_pos = {c: i for i, c in enumerate(candidates)}

    out = np.full((A, A, M), NEG_INF)

    def scan(a: int) -> None:
        s = candidates[a]
        if s >= n:
            return
        alpha = log_pi + log_e[s]  # (M, S)
        stop = min(n, s + global_lmax)
        for t in range(s, stop):
            if t > s:
                alpha = logsumexp(alpha[:, :, None] + log_t, axis=1) + log_e[t]
            end = t + 1
            b = cand_pos.get(end)
            if b is not None and b > a:
                length = end - s
                ll = logsumexp(alpha, axis=1)
                mask = (lmins <= length) & (length <= lmaxs)
                out[a, b, :] = np.where(mask, ll, NEG_INF)

    starts = range(A - 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(scan, starts))
    else:
        for a in starts:
            scan(a)
    return out


def segment_scenes(
    frames,
    scene_sequence: list[SceneCategory],
    models: list[SceneModel],
    candidates: list[int],
    literal: bool = False,
    threads: int = 1,
    objective: str = "joint",
) -> list[SceneSegment]:
    """DP scene segmentation over the candidate boundaries.

    ``objective`` selects the per-segment score:

    * ``joint`` (default): segment log-likelihood under its scene's model plus
      the log posterior over scene categories. The likelihood term localizes
      boundaries (it sums over every frame, so boundaries between consecutive
      same-category scenes are still identifiable through the models' initial
      state and transition structure); the posterior term penalizes segments
      whose best-fitting category disagrees with the commentary.
    * ``posterior``: sum of log scene posteriors only.

    ``literal`` switches either objective's posterior term to the raw
    probability instead of its log.
    """
    if not scene_sequence:
        raise ValueError("scene sequence must be non-empty")
    n = len(frames)
    candidates = sorted(set(candidates))
    if candidates[0] != 0 or candidates[-1] != n:
        raise ValueError("candidates must include 0 and the frame count")
    model_index = {m.category: i for i, m in enumerate(models)}
    for cat in scene_sequence:
        if cat not in model_index:
            raise ValueError(f"no scene model for category {cat.value}")

    if objective not in ("joint", "posterior"):
        raise ValueError(f"unknown objective {objective!r}")
    lls = interval_log_likelihoods(frames, models, candidates, threads=threads)
    cand = np.asarray(candidates)
    lengths = np.maximum(cand[None, :] - cand[:, None], 1)
    # Posteriors use length-normalized log-likelihoods; the softmax denominator
    # is shared by every scene k, so it is computed once per interval.
    norm_lls = lls / lengths[:, :, None]
    denom = logsumexp(norm_lls, axis=2)
    with np.errstate(invalid="ignore"):
        log_post = norm_lls - denom[:, :, None]
    log_post[~np.isfinite(log_post)] = NEG_INF
    scene_model = [model_index[cat] for cat in scene_sequence]

    post_term = np.exp(log_post) if literal else log_post
    if objective == "joint":
        with np.errstate(invalid="ignore"):
            scores = lls + post_term
        scores[lls == NEG_INF] = NEG_INF
    else:
        scores = np.where(lls == NEG_INF, NEG_INF, post_term)

    def score_fn(a, b, k):
        return scores[a, b, scene_model[k]]

    try:
        boundaries, _ = dp_segment(len(candidates), len(scene_sequence), score_fn)
    except InfeasibleSegmentationError as exc:
        raise InfeasibleSegmentationError(
            f"{exc} (categories: {[c.value for c in scene_sequence]})"
        ) from exc
    return [
        SceneSegment(
            index=k,
            category=scene_sequence[k],
            start_frame=candidates[boundaries[k]],
            end_frame=candidates[boundaries[k + 1]],
        )
        for k in range(len(scene_sequence))
    ]


def scene_accuracy(
    predicted: list[SceneSegment], truth: list[SceneSegment], shots: list[tuple[int, int]]
) -> float:
    """Fraction of shots whose midpoint falls in a predicted segment with the
    same scene index as the truth segment containing it."""

    def segment_at(segments, frame):
        for seg in segments:
            if seg.start_frame <= frame < seg.end_frame:
                return seg.index
        return None

    if not shots:
        return 0.0
    correct = 0
    for start, end in shots:
        mid = (start + end - 1) // 2
        if segment_at(predicted, mid) == segment_at(truth, mid):
            correct += 1
    return correct / len(shots)


def _shot_containing(shots: list[tuple[int, int]], frame: int) -> int:
    for i, (start, end) in enumerate(shots):
        if start <= frame < end:
            return i
    return max(0, len(shots) - 1)


def find_action_shots(
    segment: SceneSegment,
    shot_labels: list,
    radius: int,
    pick: str = "first",
) -> ActionShots:
    """Search the +-radius shot window around the segment's start boundary for
    the bowler run-up and the batsman stroke.

    Shots at or after the boundary are scanned first (nearest first), then the
    backward side, so widening the radius never displaces a forward match.

    ``shot_labels`` entries are ((start, end), ShotCategory) or
    ((start, end), ShotCategory, confidence); ``pick`` is ``first`` or
    ``confident``.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    intervals = [entry[0] for entry in shot_labels]
    cats = [entry[1] for entry in shot_labels]
    confs = [entry[2] if len(entry) > 2 else 1.0 for entry in shot_labels]
    b = segment.anchor_shot
    if b is None:
        b = _shot_containing(intervals, segment.start_frame)
    lo, hi = max(0, b - radius), min(len(shot_labels) - 1, b + radius)
    window = list(range(b, hi + 1)) + list(range(b - 1, lo - 1, -1))

    def select(indices):
        indices = list(indices)
        if not indices:
            return None
        if pick == "confident":
            return max(indices, key=lambda i: (confs[i], -i))
        return indices[0]

    bowler = select(i for i in window if cats[i] is ShotCategory.BOWLER_RUNUP)
    if bowler is not None:
        batsman = select(
            i for i in window if i > bowler and cats[i] is ShotCategory.BATSMAN_STROKE
        )
        if batsman is None:
            batsman = select(i for i in window if cats[i] is ShotCategory.BATSMAN_STROKE)
    else:
        batsman = select(i for i in window if cats[i] is ShotCategory.BATSMAN_STROKE)
    return ActionShots(bowler=bowler, batsman=batsman)


def map_phrases(
    segment: SceneSegment,
    action_shots: ActionShots,
    classified_phrases: list[tuple[Phrase, PhraseCategory]],
    shot_labels: list,
    players: tuple[str, ...] = (),
) -> list[ShotAnnotation]:
    """Attach bowler/batsman phrases to their action shots; everything else
    (and phrases whose target shot is absent) stays at segment level."""
    intervals = [entry[0] for entry in shot_labels]
    by_shot: dict[int | None, list[tuple[str, PhraseCategory]]] = {}
    for phrase, category in classified_phrases:
        target = None
        if category is PhraseCategory.BOWLER_ACTION:
            target = action_shots.bowler
        elif category is PhraseCategory.BATSMAN_ACTION:
            target = action_shots.batsman
        by_shot.setdefault(target, []).append((phrase.text, category))

    annotations: list[ShotAnnotation] = []
    for shot_id, phrases in sorted(
        by_shot.items(), key=lambda kv: (kv[0] is None, kv[0] if kv[0] is not None else 0)
    ):
        if shot_id is None:
            annotations.append(
                ShotAnnotation(
                    scene_index=segment.index,
                    shot_id=None,
                    start_frame=segment.start_frame,
                    end_frame=segment.end_frame,
                    shot_category=None,
                    phrases=tuple(phrases),
                    players=players,
                )
            )
        else:
            start, end = intervals[shot_id]
            annotations.append(
                ShotAnnotation(
                    scene_index=segment.index,
                    shot_id=shot_id,
                    start_frame=start,
                    end_frame=end,
                    shot_category=shot_labels[shot_id][1],
                    phrases=tuple(phrases),
                    players=players,
                )
            )
    return annotations


def recall_vs_radius(
    predictions: dict[int, list[ActionShots]],
    truth: list[tuple[int | None, int | None]],
) -> list[tuple[int, float, float]]:
    """Per-radius bowler/batsman recall against true action shot ids."""
    rows = []
    for radius in sorted(predictions):
        found = predictions[radius]
        if len(found) != len(truth):
            raise ValueError("prediction/truth length mismatch")
        b_total = sum(1 for t in truth if t[0] is not None)
        s_total = sum(1 for t in truth if t[1] is not None)
        b_hits = sum(
            1 for f, t in zip(found, truth) if t[0] is not None and f.bowler == t[0]
        )
        s_hits = sum(
            1 for f, t in zip(found, truth) if t[1] is not None and f.batsman == t[1]
        )
        rows.append(
            (
                radius,
                b_hits / b_total if b_total else 0.0,
                s_hits / s_total if s_total else 0.0,
            )
        )
    return rows


def format_recall_table(rows: list[tuple[int, float, float]]) -> str:
    lines = ["R bowler_recall batsman_recall"]
    for radius, b, s in rows:
        lines.append(f"{radius} {b:.4f} {s:.4f}")
    return "\n".join(lines)


def write_segments(segments: list[SceneSegment], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segments:
            over_ball = f"{seg.event.over}.{seg.event.ball}" if seg.event else "-"
            fh.write(
                f"{seg.index} {seg.category.value} {seg.start_frame} "
                f"{seg.end_frame} {over_ball}\n"
            )


def read_segments(path) -> list[SceneSegment]:
    segments: list[SceneSegment] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            idx, cat, start, end, _ = line.split()
            segments.append(
                SceneSegment(
                    index=int(idx),
                    category=SceneCategory(cat),
                    start_frame=int(start),
                    end_frame=int(end),
                )
            )
    return segments
