"""Window-based over-segmentation of the frame stream into shots."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame_features import FrameDescriptor


@dataclass(frozen=True)
class ShotDetectorConfig:
    window: int = 10  # even frame count, >= 2
    threshold: float = 0.4
    min_shot_len: int = 10

    def __post_init__(self):
        if self.window < 2 or self.window % 2 != 0:
            raise ValueError("window must be an even count >= 2")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.min_shot_len < 1:
            raise ValueError("min_shot_len must be >= 1")


def _stack(frames: list[FrameDescriptor]) -> np.ndarray:
    if frames[0].bow is not None:
        return np.stack([np.concatenate([f.concept_scores, f.bow]) for f in frames])
    return np.stack([f.concept_scores for f in frames])


def frame_distance(a: FrameDescriptor, b: FrameDescriptor) -> float:
    """L1 distance over concatenated concept scores and (optional) BoW."""
    if (a.bow is None) != (b.bow is None):
        raise ValueError("bow must be present on both frames or neither")
    d = float(np.abs(a.concept_scores - b.concept_scores).sum())
    if a.bow is not None:
        if len(a.bow) != len(b.bow):
            raise ValueError("bow dimension mismatch")
        d += float(np.abs(a.bow - b.bow).sum())
    return d


def window_responses(frames: list[FrameDescriptor], window: int) -> np.ndarray:
    """Max L1 distance from each frame to any frame in its centered window."""
    X = _stack(frames)
    half = window // 2
    n = len(frames)
    out = np.zeros(n)
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        out[i] = np.abs(X[lo:hi] - X[i]).sum(axis=1).max()
    return out


def flagged_frames(frames: list[FrameDescriptor], config: ShotDetectorConfig) -> list[int]:
    """Raw boundary candidates: frames whose window response exceeds the
    threshold (monotone non-increasing in the threshold)."""
    responses = window_responses(frames, config.window)
    return [i for i in range(len(frames)) if responses[i] > config.threshold]


def detect_shots(
    frames: list[FrameDescriptor], config: ShotDetectorConfig = ShotDetectorConfig()
) -> list[tuple[int, int]]:
    """Detect shot intervals partitioning [0, n).

    Runs of consecutive flagged frames are collapsed to a single boundary at
    the frame with the largest adjacent-frame difference (earliest on ties),
    then boundaries closer than min_shot_len to the previous kept boundary
    are merged away.
    """
    n = len(frames)
    if n < 2:
        raise ValueError("need at least 2 frames")
    flags = flagged_frames(frames, config)

    boundaries: list[int] = []
    run: list[int] = []
    for i in flags + [-1]:
        if run and i != run[-1] + 1:
            diffs = [
                frame_distance(frames[j], frames[j - 1]) if j > 0 else 0.0 for j in run
            ]
            boundaries.append(run[int(np.argmax(diffs))])
            run = []
        if i >= 0:
            run.append(i)

    kept: list[int] = []
    last = 0
    for b in boundaries:
        if b <= 0 or b >= n:
            continue
        if b - last >= config.min_shot_len:
            kept.append(b)
            last = b

    cuts = [0] + kept + [n]
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]


def write_shot_list(shots: list[tuple[int, int]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for shot_id, (start, end) in enumerate(shots):
            fh.write(f"{shot_id} {start} {end}\n")


def read_shot_list(path) -> list[tuple[int, int]]:
    shots: list[tuple[int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            _, start, end = line.split()
            shots.append((int(start), int(end)))
    return shots
