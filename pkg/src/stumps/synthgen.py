"""Seeded synthetic match generator with full ground truth.

Produces descriptor and commentary files in the pipeline's own formats plus a
GroundTruth record of every scene, shot and phrase, so each pipeline stage can
be checked against exact expectations without real footage.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .commentary import Phrase, segment_phrases
from .core import (
    CANONICAL_OUTCOME_TOKEN,
    N_CONCEPTS,
    OutcomeLabel,
    SceneCategory,
    ShotCategory,
)
from .frame_features import FrameDescriptor, write_descriptors
from .sequence_models import SHOT_LABELS, SceneModel

_STATE_INDEX = {c: i for i, c in enumerate(ShotCategory)}

# Emission prototypes over (Pitch, Ground, Sky, PlayerCloseup, Scorecard).
_EMISSION_MEANS = {
    ShotCategory.BOWLER_RUNUP: (0.60, 0.25, 0.05, 0.05, 0.02),
    ShotCategory.BATSMAN_STROKE: (0.35, 0.45, 0.05, 0.08, 0.02),
    ShotCategory.PLAYER_CLOSEUP: (0.05, 0.08, 0.05, 0.70, 0.02),
    ShotCategory.UMPIRE: (0.15, 0.20, 0.05, 0.40, 0.02),
    ShotCategory.GROUND: (0.08, 0.75, 0.10, 0.03, 0.01),
    ShotCategory.CROWD: (0.02, 0.08, 0.30, 0.35, 0.02),
    ShotCategory.ANIMATIONS: (0.03, 0.03, 0.03, 0.05, 0.80),
    ShotCategory.MISCELLANEOUS: (0.10, 0.10, 0.55, 0.10, 0.05),
}

# Shot-level continuations after the opening run-up/stroke pair.
_CONTINUATIONS = {
    SceneCategory.DOT: {
        ShotCategory.BATSMAN_STROKE: {ShotCategory.GROUND: 0.7, ShotCategory.PLAYER_CLOSEUP: 0.3},
        ShotCategory.GROUND: {ShotCategory.PLAYER_CLOSEUP: 0.6, ShotCategory.GROUND: 0.4},
        ShotCategory.PLAYER_CLOSEUP: {ShotCategory.GROUND: 0.5, ShotCategory.PLAYER_CLOSEUP: 0.5},
    },
    SceneCategory.ONE: {
        ShotCategory.BATSMAN_STROKE: {ShotCategory.GROUND: 0.8, ShotCategory.PLAYER_CLOSEUP: 0.2},
        ShotCategory.GROUND: {ShotCategory.GROUND: 0.5, ShotCategory.PLAYER_CLOSEUP: 0.5},
        ShotCategory.PLAYER_CLOSEUP: {ShotCategory.GROUND: 0.6, ShotCategory.PLAYER_CLOSEUP: 0.4},
    },
    SceneCategory.TWO: {
        ShotCategory.BATSMAN_STROKE: {ShotCategory.GROUND: 0.9, ShotCategory.PLAYER_CLOSEUP: 0.1},
        ShotCategory.GROUND: {ShotCategory.GROUND: 0.6, ShotCategory.PLAYER_CLOSEUP: 0.4},
        ShotCategory.PLAYER_CLOSEUP: {ShotCategory.GROUND: 0.6, ShotCategory.PLAYER_CLOSEUP: 0.4},
    },
    SceneCategory.THREE: {
        ShotCategory.BATSMAN_STROKE: {ShotCategory.GROUND: 0.9, ShotCategory.CROWD: 0.1},
        ShotCategory.GROUND: {ShotCategory.GROUND: 0.7, ShotCategory.PLAYER_CLOSEUP: 0.3},
        ShotCategory.PLAYER_CLOSEUP: {ShotCategory.GROUND: 0.7, ShotCategory.PLAYER_CLOSEUP: 0.3},
        ShotCategory.CROWD: {ShotCategory.GROUND: 1.0},
    },
    SceneCategory.FOUR: {
        ShotCategory.BATSMAN_STROKE: {ShotCategory.GROUND: 0.6, ShotCategory.CROWD: 0.4},
        ShotCategory.GROUND: {ShotCategory.CROWD: 0.5, ShotCategory.ANIMATIONS: 0.5},
        ShotCategory.CROWD: {ShotCategory.ANIMATIONS: 0.6, ShotCategory.PLAYER_CLOSEUP: 0.4},
        ShotCategory.ANIMATIONS: {ShotCategory.PLAYER_CLOSEUP: 0.7, ShotCategory.CROWD: 0.3},
        ShotCategory.PLAYER_CLOSEUP: {ShotCategory.ANIMATIONS: 0.5, ShotCategory.CROWD: 0.5},
    },
    SceneCategory.SIX: {
        ShotCategory.BATSMAN_STROKE: {ShotCategory.CROWD: 0.7, ShotCategory.ANIMATIONS: 0.3},
        ShotCategory.CROWD: {ShotCategory.ANIMATIONS: 0.6, ShotCategory.PLAYER_CLOSEUP: 0.4},
        ShotCategory.ANIMATIONS: {ShotCategory.CROWD: 0.6, ShotCategory.PLAYER_CLOSEUP: 0.4},
        ShotCategory.PLAYER_CLOSEUP: {ShotCategory.CROWD: 0.5, ShotCategory.ANIMATIONS: 0.5},
    },
    SceneCategory.OUT: {
        ShotCategory.BATSMAN_STROKE: {ShotCategory.PLAYER_CLOSEUP: 0.6, ShotCategory.UMPIRE: 0.4},
        ShotCategory.PLAYER_CLOSEUP: {ShotCategory.UMPIRE: 0.4, ShotCategory.CROWD: 0.6},
        ShotCategory.UMPIRE: {ShotCategory.PLAYER_CLOSEUP: 0.5, ShotCategory.ANIMATIONS: 0.5},
        ShotCategory.CROWD: {ShotCategory.ANIMATIONS: 0.6, ShotCategory.PLAYER_CLOSEUP: 0.4},
        ShotCategory.ANIMATIONS: {ShotCategory.PLAYER_CLOSEUP: 0.6, ShotCategory.UMPIRE: 0.4},
    },
}

_SHOT_COUNT_RANGE = {
    SceneCategory.DOT: (3, 5),
    SceneCategory.ONE: (4, 6),
    SceneCategory.TWO: (4, 6),
    SceneCategory.THREE: (5, 7),
    SceneCategory.FOUR: (6, 9),
    SceneCategory.SIX: (6, 9),
    SceneCategory.OUT: (6, 9),
}

# Long-tailed boundary displacement (filler shots before the run-up), for
# studying action-shot recall as the search radius grows.
WIDE_DISPLACEMENT_WEIGHTS = (
    0.30, 0.20, 0.15, 0.10, 0.08, 0.06, 0.04, 0.03, 0.02, 0.01, 0.01,
)

_CATEGORY_WEIGHTS = {
    SceneCategory.DOT: 0.28,
    SceneCategory.ONE: 0.24,
    SceneCategory.TWO: 0.12,
    SceneCategory.THREE: 0.04,
    SceneCategory.FOUR: 0.14,
    SceneCategory.SIX: 0.10,
    SceneCategory.OUT: 0.08,
}


def _load_templates(name: str) -> tuple[str, ...]:
    text = resources.files("stumps.data").joinpath(name).read_text(encoding="utf-8")
    return tuple(line for line in text.splitlines() if line.strip())


def _scene_model_from_continuations(
    category: SceneCategory, sigma: float
) -> SceneModel:
    n = len(SHOT_LABELS)
    initial = np.full(n, 1e-6)
    initial[_STATE_INDEX[ShotCategory.BOWLER_RUNUP]] = 1.0
    initial /= initial.sum()
    trans = np.full((n, n), 1e-6)
    trans[_STATE_INDEX[ShotCategory.BOWLER_RUNUP], _STATE_INDEX[ShotCategory.BATSMAN_STROKE]] = 1.0
    for src, dests in _CONTINUATIONS[category].items():
        for dst, p in dests.items():
            trans[_STATE_INDEX[src], _STATE_INDEX[dst]] = p
    trans /= trans.sum(axis=1, keepdims=True)
    means = np.array([_EMISSION_MEANS[c] for c in ShotCategory])
    variances = np.full((n, N_CONCEPTS), sigma * sigma)
    lo, hi = _SHOT_COUNT_RANGE[category]
    return SceneModel(
        category=category,
        initial=initial,
        transitions=trans,
        means=means,
        variances=np.maximum(variances, 1e-4),
        lmin=lo,
        lmax=hi * 4,  # generous; learned models carry the real prior
    )


@dataclass(frozen=True)
class GeneratorSpec:
    scene_models: dict
    category_weights: dict
    shot_count_range: dict
    bowler_templates: tuple[str, ...]
    batsman_templates: tuple[str, ...]
    others_templates: tuple[str, ...]
    bowlers: tuple[str, ...] = ("Khan", "Steyn", "Malinga", "Ashwin")
    batsmen: tuple[str, ...] = ("Gambhir", "Sachin", "Dhoni", "Kohli")
    scenes_per_match: int = 20
    seed: int = 0
    match_id: str = "synth"
    displacement_weights: tuple[float, ...] = (0.70, 0.20, 0.10)
    # Miscellaneous never appears inside scene bodies, so leading filler is
    # structurally attributable to the scene it precedes.
    filler_states: tuple[ShotCategory, ...] = (ShotCategory.MISCELLANEOUS,)
    shot_duration: tuple[int, int] = (20, 30)
    cover_all_categories: bool = False


def default_generator_spec(
    seed: int = 0, scenes: int = 20, sigma: float = 0.015, match_id: str = "synth"
) -> GeneratorSpec:
    """Well-separated emissions (inter-state mean distance >> sigma)."""
    return GeneratorSpec(
        scene_models={c: _scene_model_from_continuations(c, sigma) for c in SceneCategory},
        category_weights=dict(_CATEGORY_WEIGHTS),
        shot_count_range=dict(_SHOT_COUNT_RANGE),
        bowler_templates=_load_templates("bowler_templates.txt"),
        batsman_templates=_load_templates("batsman_templates.txt"),
        others_templates=_load_templates("others_templates.txt"),
        scenes_per_match=scenes,
        seed=seed,
        match_id=match_id,
    )


def hard_generator_spec(seed: int = 0, scenes: int = 20) -> GeneratorSpec:
    """Overlapping emissions (~1 sigma separation) for robustness dashboards."""
    return replace(default_generator_spec(seed=seed, scenes=scenes, sigma=0.08))


@dataclass(frozen=True)
class GroundTruth:
    match_id: str
    n_frames: int
    max_displacement: int
    scenes: list = field(default_factory=list)
    shots: list = field(default_factory=list)
    phrases: list = field(default_factory=list)


@dataclass(frozen=True)
class MatchData:
    frames: list
    commentary_text: str
    truth: GroundTruth


def _sample_states(spec: GeneratorSpec, category: SceneCategory, rng) -> list[ShotCategory]:
    model = spec.scene_models[category]
    lo, hi = spec.shot_count_range[category]
    count = int(rng.integers(lo, hi + 1))
    cats = list(ShotCategory)
    states = [cats[int(rng.choice(len(cats), p=model.initial))]]
    while len(states) < count:
        row = model.transitions[_STATE_INDEX[states[-1]]]
        states.append(cats[int(rng.choice(len(cats), p=row))])
    return states


def _sample_frames(spec: GeneratorSpec, state: ShotCategory, n: int, rng) -> np.ndarray:
    model = next(iter(spec.scene_models.values()))
    si = _STATE_INDEX[state]
    raw = rng.normal(model.means[si], np.sqrt(model.variances[si]), size=(n, N_CONCEPTS))
    raw = np.clip(raw, 0.0, 1.0)
    sums = raw.sum(axis=1, keepdims=True)
    over = sums > 1.0
    raw = np.where(over, raw / sums, raw)
    return raw


def generate_match(spec: GeneratorSpec) -> MatchData:
    """Deterministically generate one match: frames, commentary and truth."""
    rng = np.random.default_rng(spec.seed)
    categories = list(spec.category_weights)
    weights = np.array([spec.category_weights[c] for c in categories], dtype=float)
    weights /= weights.sum()
    disp = np.array(spec.displacement_weights, dtype=float)
    disp /= disp.sum()

    frames: list[FrameDescriptor] = []
    commentary_lines: list[str] = []
    truth_scenes, truth_shots, truth_phrases = [], [], []
    frame_cursor = 0
    shot_id = 0
    max_disp = 0
    over, ball = 0, 1
    for k in range(spec.scenes_per_match):
        if spec.cover_all_categories and k < len(categories):
            category = categories[k]
        else:
            category = categories[int(rng.choice(len(categories), p=weights))]
        d = int(rng.choice(len(disp), p=disp))
        filler = [
            spec.filler_states[int(rng.integers(len(spec.filler_states)))] for _ in range(d)
        ]
        body = _sample_states(spec, category, rng)
        states = filler + body
        scene_start = frame_cursor
        scene_shot_start = shot_id
        bowler_shot = None
        batsman_shot = None
        for local_i, state in enumerate(states):
            dur = int(rng.integers(spec.shot_duration[0], spec.shot_duration[1] + 1))
            samples = _sample_frames(spec, state, dur, rng)
            for row in samples:
                frames.append(
                    FrameDescriptor(frame_index=frame_cursor, concept_scores=row)
                )
                frame_cursor += 1
            truth_shots.append(
                {
                    "shot_id": shot_id,
                    "start_frame": frame_cursor - dur,
                    "end_frame": frame_cursor,
                    "category": state.value,
                    "scene_index": k,
                }
            )
            if state is ShotCategory.BOWLER_RUNUP and bowler_shot is None:
                bowler_shot = shot_id
            if (
                state is ShotCategory.BATSMAN_STROKE
                and batsman_shot is None
                and bowler_shot is not None
            ):
                batsman_shot = shot_id
            shot_id += 1

        bowler = spec.bowlers[int(rng.integers(len(spec.bowlers)))]
        batsman = spec.batsmen[int(rng.integers(len(spec.batsmen)))]
        bowler_phrase = spec.bowler_templates[
            int(rng.integers(len(spec.bowler_templates)))
        ].format(name=bowler)
        batsman_phrase = spec.batsman_templates[
            int(rng.integers(len(spec.batsman_templates)))
        ].format(name=batsman)
        n_others = int(rng.integers(0, 3))
        others = [
            spec.others_templates[int(rng.integers(len(spec.others_templates)))]
            for _ in range(n_others)
        ]
        description = ", ".join([bowler_phrase, batsman_phrase] + others)
        outcome = CANONICAL_OUTCOME_TOKEN[OutcomeLabel(category.value)]
        commentary_lines.append(
            f"{over}.{ball} {bowler} to {batsman}, {outcome}, {description}"
        )

        for text, pcat, target in (
            [(bowler_phrase, "BowlerAction", bowler_shot), (batsman_phrase, "BatsmanAction", batsman_shot)]
            + [(t, "Others", None) for t in others]
        ):
            truth_phrases.append(
                {
                    "scene_index": k,
                    "text": " ".join(text.lower().split()),
                    "category": pcat,
                    "shot_id": target,
                }
            )
        truth_scenes.append(
            {
                "index": k,
                "category": category.value,
                "start_frame": scene_start,
                "end_frame": frame_cursor,
                "over": over,
                "ball": ball,
                "bowler": bowler,
                "batsman": batsman,
                "bowler_shot": bowler_shot,
                "batsman_shot": batsman_shot,
                "boundary_shot": scene_shot_start,
                # Distance of the farthest action shot from the scene's first
                # shot; a search radius of max_displacement finds every one.
                "displacement": (
                    batsman_shot - scene_shot_start
                    if batsman_shot is not None
                    else (bowler_shot - scene_shot_start if bowler_shot is not None else d)
                ),
            }
        )
        max_disp = max(max_disp, truth_scenes[-1]["displacement"])
        ball += 1
        if ball > 6:
            over, ball = over + 1, 1

    truth = GroundTruth(
        match_id=spec.match_id,
        n_frames=frame_cursor,
        max_displacement=max_disp,
        scenes=truth_scenes,
        shots=truth_shots,
        phrases=truth_phrases,
    )
    return MatchData(
        frames=frames,
        commentary_text="".join(line + "\n" for line in commentary_lines),
        truth=truth,
    )


def write_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps(
                {
                    "kind": "meta",
                    "match_id": truth.match_id,
                    "n_frames": truth.n_frames,
                    "max_displacement": truth.max_displacement,
                }
            )
            + "\n"
        )
        for kind, rows in (("scene", truth.scenes), ("shot", truth.shots), ("phrase", truth.phrases)):
            for row in rows:
                fh.write(json.dumps({"kind": kind, **row}) + "\n")


def read_truth(path) -> GroundTruth:
    meta = None
    scenes, shots, phrases = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            kind = row.pop("kind")
            if kind == "meta":
                meta = row
            elif kind == "scene":
                scenes.append(row)
            elif kind == "shot":
                shots.append(row)
            elif kind == "phrase":
                phrases.append(row)
    if meta is None:
        raise ValueError("truth file has no meta record")
    return GroundTruth(
        match_id=meta["match_id"],
        n_frames=meta["n_frames"],
        max_displacement=meta["max_displacement"],
        scenes=scenes,
        shots=shots,
        phrases=phrases,
    )


def write_match(match: MatchData, out_dir) -> dict:
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "descriptors": os.path.join(out_dir, "descriptors.fdesc"),
        "commentary": os.path.join(out_dir, "commentary.txt"),
        "truth": os.path.join(out_dir, "truth.jsonl"),
    }
    write_descriptors(match.frames, paths["descriptors"])
    with open(paths["commentary"], "w", encoding="utf-8") as fh:
        fh.write(match.commentary_text)
    write_truth(match.truth, paths["truth"])
    return paths


@dataclass(frozen=True)
class ConsistencyReport:
    ok: bool
    first_violation: str | None = None


def verify_consistency(descriptor_path, commentary_path, truth: GroundTruth) -> ConsistencyReport:
    """Audit generated files against their ground truth, reporting the first
    violated rule."""
    from .commentary import parse_commentary
    from .core import CommentaryParseError, DescriptorFormatError
    from .frame_features import read_descriptors

    try:
        frames = read_descriptors(descriptor_path)
    except DescriptorFormatError as exc:
        return ConsistencyReport(False, f"descriptor file: {exc}")
    if len(frames) != truth.n_frames:
        return ConsistencyReport(
            False,
            f"frame-count mismatch: descriptors have {len(frames)}, truth says {truth.n_frames}",
        )
    try:
        with open(commentary_path, encoding="utf-8") as fh:
            events = parse_commentary(fh.read())
    except CommentaryParseError as exc:
        return ConsistencyReport(False, f"commentary order violation or parse failure: {exc}")
    if len(events) != len(truth.scenes):
        return ConsistencyReport(
            False,
            f"event-count mismatch: {len(events)} events vs {len(truth.scenes)} scenes",
        )
    cursor = 0
    for scene, event in zip(truth.scenes, events):
        if scene["start_frame"] != cursor:
            return ConsistencyReport(
                False, f"scene {scene['index']} does not abut the previous scene"
            )
        cursor = scene["end_frame"]
        from .commentary import outcome_to_scene_category

        if outcome_to_scene_category(event.outcome).value != scene["category"]:
            return ConsistencyReport(
                False, f"scene {scene['index']} outcome/category mismatch"
            )
    if cursor != truth.n_frames:
        return ConsistencyReport(False, "scenes do not cover all frames")
    cursor = 0
    for shot in truth.shots:
        if shot["start_frame"] != cursor:
            return ConsistencyReport(False, f"shot {shot['shot_id']} does not abut")
        cursor = shot["end_frame"]
    if cursor != truth.n_frames:
        return ConsistencyReport(False, "shots do not cover all frames")
    n_shots = len(truth.shots)
    for phrase in truth.phrases:
        if phrase["shot_id"] is not None and not 0 <= phrase["shot_id"] < n_shots:
            return ConsistencyReport(False, "phrase references a missing shot")
    return ConsistencyReport(True, None)


def generate_phrase_corpus(n: int, seed: int) -> list[tuple[Phrase, str]]:
    """Labelled phrase corpus from the bowler/batsman templates with names
    removed, imbalanced ~1:3 like real commentary."""
    spec = default_generator_spec(seed=seed)
    rng = np.random.default_rng(seed)
    corpus: list[tuple[Phrase, str]] = []
    for _ in range(n):
        if rng.random() < 0.25:
            template, label = (
                spec.bowler_templates[int(rng.integers(len(spec.bowler_templates)))],
                "BowlerAction",
            )
        else:
            template, label = (
                spec.batsman_templates[int(rng.integers(len(spec.batsman_templates)))],
                "BatsmanAction",
            )
        text = template.replace("{name}", "").strip()
        phrase = segment_phrases(text)[0]
        corpus.append((phrase, label))
    return corpus
