"""End-to-end pipeline steps behind the service endpoints and the CLI."""
from __future__ import annotations

import json
import os
from dataclasses import replace

import numpy as np

from . import annotation_store as store_mod
from .commentary import parse_commentary, outcome_to_scene_category
from .core import PhraseCategory, SceneCategory, ShotCategory, SparseVector, StumpsError
from .frame_features import read_descriptors, shot_descriptor
from .learners import (
    SvmConfig,
    fit_temperature,
    load_linear_classifier,
    save_linear_classifier,
    svm_predict_proba,
    svm_train,
)
from .scene_alignment import (
    ActionShots,
    SceneSegment,
    find_action_shots,
    format_recall_table,
    map_phrases,
    read_segments,
    scene_accuracy,
    segment_scenes,
    write_segments,
)
from .sequence_models import (
    SHOT_LABELS,
    crf_decode,
    crf_decode_literal,
    learn_scene_model,
    learn_transitions,
    pooled_emissions,
    load_crf_model,
    load_scene_models,
    save_crf_model,
    save_scene_models,
)
from .shot_detect import ShotDetectorConfig, detect_shots, read_shot_list, write_shot_list
from .synthgen import (
    default_generator_spec,
    generate_match,
    read_truth,
    verify_consistency,
    write_match,
)
from .text_model import (
    auto_label,
    build_vocabulary,
    classify_phrase,
    dump_labelled_phrases,
    load_vocabulary,
    save_vocabulary,
    train_phrase_classifier,
)

DEFAULT_RADII = (2, 4, 6, 8, 10)


class InputError(StumpsError):
    """A validation problem with user-supplied inputs (exit code 2)."""


def _require_file(path, what: str) -> None:
    if not os.path.isfile(path):
        raise InputError(f"missing {what} file: {path}")


def run_synth(out_dir, seed: int = 0, scenes: int = 20, hard: bool = False,
              cover_all_categories: bool = False, match_id: str = "synth") -> dict:
    sigma = 0.08 if hard else 0.015
    spec = default_generator_spec(seed=seed, scenes=scenes, sigma=sigma, match_id=match_id)
    if cover_all_categories:
        spec = replace(spec, cover_all_categories=True)
    match = generate_match(spec)
    paths = write_match(match, out_dir)
    report = verify_consistency(paths["descriptors"], paths["commentary"], match.truth)
    if not report.ok:
        raise RuntimeError(f"generated match failed consistency audit: {report.first_violation}")
    return {
        "paths": paths,
        "n_frames": match.truth.n_frames,
        "n_scenes": len(match.truth.scenes),
        "n_shots": len(match.truth.shots),
        "max_displacement": match.truth.max_displacement,
    }


def run_train_text(commentary_path, model_out, vocab_out, min_df: int = 2,
                   lam: float = 1e-4, epochs: int = 50, seed: int = 0,
                   dump_path=None, match_id: str = "match") -> dict:
    _require_file(commentary_path, "commentary")
    with open(commentary_path, encoding="utf-8") as fh:
        events = parse_commentary(fh.read())
    labelled = auto_label(events)
    if not labelled:
        raise InputError("no auto-labellable phrases in commentary")
    vocab = build_vocabulary([lp.phrase for lp in labelled], min_df=min_df)
    model = train_phrase_classifier(
        labelled, vocab, SvmConfig(epochs=epochs, lam=lam, seed=seed)
    )
    save_linear_classifier(model, model_out)
    save_vocabulary(vocab, vocab_out)
    if dump_path:
        dump_labelled_phrases(labelled, events, match_id, dump_path)
    return {
        "n_events": len(events),
        "n_labelled": len(labelled),
        "vocab_size": vocab.size,
        "temperature": model.temperature,
    }


def _shot_samples(frames, truth):
    samples = []
    for shot in truth.shots:
        desc = shot_descriptor(frames, (shot["start_frame"], shot["end_frame"]))
        vec = SparseVector(
            dim=len(desc.concept_scores),
            data={i: float(v) for i, v in enumerate(desc.concept_scores)},
        )
        samples.append((vec, shot["category"]))
    return samples


def run_train_shots(descriptors_path, truth_path, svm_out, crf_out,
                    lam: float = 1e-4, epochs: int = 50, seed: int = 0,
                    pseudo_count: float = 1.0) -> dict:
    _require_file(descriptors_path, "descriptor")
    _require_file(truth_path, "ground-truth")
    frames = read_descriptors(descriptors_path)
    truth = read_truth(truth_path)
    samples = _shot_samples(frames, truth)
    model = svm_train(samples, SvmConfig(epochs=epochs, lam=lam, seed=seed))
    model = fit_temperature(model, samples)
    save_linear_classifier(model, svm_out)

    sequences: dict[int, list[str]] = {}
    for shot in truth.shots:
        sequences.setdefault(shot["scene_index"], []).append(shot["category"])
    crf = learn_transitions(list(sequences.values()), pseudo_count=pseudo_count)
    save_crf_model(crf, crf_out)
    return {"n_shots": len(samples), "temperature": model.temperature}


def run_train_scenes(descriptors_path, truth_path, out, pseudo_count: float = 1.0,
                     shared_emissions: bool = True) -> dict:
    _require_file(descriptors_path, "descriptor")
    _require_file(truth_path, "ground-truth")
    frames = read_descriptors(descriptors_path)
    truth = read_truth(truth_path)
    X = np.stack([f.concept_scores for f in frames])

    per_category: dict[str, list] = {}
    shots_by_scene: dict[int, list] = {}
    for shot in truth.shots:
        shots_by_scene.setdefault(shot["scene_index"], []).append(shot)
    for scene in truth.scenes:
        start, end = scene["start_frame"], scene["end_frame"]
        states: list[str] = []
        for shot in shots_by_scene.get(scene["index"], []):
            states.extend([shot["category"]] * (shot["end_frame"] - shot["start_frame"]))
        per_category.setdefault(scene["category"], []).append((X[start:end], states))

    pooled = pooled_emissions([sc for group in per_category.values() for sc in group])
    models = [
        learn_scene_model(
            SceneCategory(cat), scenes, pseudo_count=pseudo_count,
            emission_fallback=pooled,
        )
        for cat, scenes in sorted(per_category.items())
    ]
    if shared_emissions:
        # Shot appearance depends on the shot state, not the scene outcome.
        # Sharing one per-state emission estimate removes per-category sampling
        # noise that would otherwise swamp the boundary signal carried by the
        # initial-state and transition structure.
        models = [replace(m, means=pooled[0], variances=pooled[1]) for m in models]
    save_scene_models(models, out)
    return {"categories": sorted(per_category), "n_models": len(models)}


def run_detect_shots(descriptors_path, out, window: int = 10, threshold: float = 0.4,
                     min_shot_len: int = 10) -> dict:
    _require_file(descriptors_path, "descriptor")
    frames = read_descriptors(descriptors_path)
    config = ShotDetectorConfig(window=window, threshold=threshold, min_shot_len=min_shot_len)
    shots = detect_shots(frames, config)
    write_shot_list(shots, out)
    return {"n_shots": len(shots)}


def run_segment(descriptors_path, commentary_path, scene_models_path, out,
                shots_path=None, every_m_frames: int = 0, literal: bool = False,
                threads: int = 1, objective: str = "joint") -> dict:
    _require_file(descriptors_path, "descriptor")
    _require_file(commentary_path, "commentary")
    _require_file(scene_models_path, "scene-model")
    frames = read_descriptors(descriptors_path)
    with open(commentary_path, encoding="utf-8") as fh:
        events = parse_commentary(fh.read())
    if not events:
        raise InputError("commentary contains no events")
    models = load_scene_models(scene_models_path)
    n = len(frames)
    if every_m_frames > 0:
        candidates = list(range(0, n, every_m_frames)) + [n]
    else:
        if not shots_path:
            raise InputError("shot-boundary candidates need a shot list (or every_m_frames)")
        _require_file(shots_path, "shot list")
        shots = read_shot_list(shots_path)
        candidates = [s for s, _ in shots] + [n]
    scene_sequence = [outcome_to_scene_category(e.outcome) for e in events]
    segments = segment_scenes(
        frames, scene_sequence, models, candidates, literal=literal, threads=threads,
        objective=objective,
    )
    segments = [replace(seg, event=events[seg.index]) for seg in segments]
    write_segments(segments, out)
    return {"n_segments": len(segments)}


def predict_shot_labels(frames, shots, svm_model, crf_model, mode: str = "viterbi"):
    """Per-shot category predictions; ``mode`` raw skips CRF smoothing."""
    unaries = np.stack(
        [
            svm_predict_proba(svm_model, shot_descriptor(frames, shot).concept_scores)
            for shot in shots
        ]
    )
    # Reorder SVM category columns into the CRF's label order.
    order = [svm_model.categories.index(lab) for lab in crf_model.labels]
    unaries = unaries[:, order]
    unaries /= unaries.sum(axis=1, keepdims=True)
    if mode == "raw":
        labels = [crf_model.labels[int(i)] for i in np.argmax(unaries, axis=1)]
    elif mode == "literal":
        labels = crf_decode_literal(unaries, crf_model)
    else:
        labels = crf_decode(unaries, crf_model, mode=mode)
    confidences = unaries.max(axis=1)
    return labels, confidences


def write_shot_labels(shots, labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for shot_id, ((start, end), label) in enumerate(zip(shots, labels)):
            fh.write(f"{shot_id} {start} {end} {label}\n")


def read_shot_labels(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            _, start, end, label = line.split()
            out.append(((int(start), int(end)), ShotCategory(label)))
    return out


def run_smooth(descriptors_path, shots_path, svm_path, crf_path, out,
               mode: str = "viterbi") -> dict:
    _require_file(descriptors_path, "descriptor")
    _require_file(shots_path, "shot list")
    _require_file(svm_path, "shot classifier")
    _require_file(crf_path, "transition model")
    frames = read_descriptors(descriptors_path)
    shots = read_shot_list(shots_path)
    svm_model = load_linear_classifier(svm_path)
    crf_model = load_crf_model(crf_path)
    labels, _ = predict_shot_labels(frames, shots, svm_model, crf_model, mode=mode)
    write_shot_labels(shots, labels, out)
    return {"n_shots": len(shots), "mode": mode}


def run_annotate(descriptors_path, commentary_path, segments_path, labels_path,
                 text_model_path, vocab_path, store_path, match_id: str = "match",
                 radius: int = 10, others_threshold: float = 0.6) -> dict:
    for path, what in (
        (descriptors_path, "descriptor"),
        (commentary_path, "commentary"),
        (segments_path, "segmentation"),
        (labels_path, "shot-label"),
        (text_model_path, "phrase classifier"),
        (vocab_path, "vocabulary"),
    ):
        _require_file(path, what)
    with open(commentary_path, encoding="utf-8") as fh:
        events = parse_commentary(fh.read())
    segments = read_segments(segments_path)
    shot_labels = read_shot_labels(labels_path)
    text_model = load_linear_classifier(text_model_path)
    vocab = load_vocabulary(vocab_path)

    records = []
    n_annotations = 0
    for seg in segments:
        event = events[seg.index]
        classified = [
            (phrase, classify_phrase(text_model, phrase, vocab, others_threshold)[0])
            for phrase in event.phrases
        ]
        action = find_action_shots(seg, shot_labels, radius)
        annotations = map_phrases(
            seg, action, classified, shot_labels, players=(event.bowler, event.batsman)
        )
        n_annotations += len(annotations)
        for ann in annotations:
            for text, pcat in ann.phrases:
                records.append(
                    store_mod.AnnotationRecord(
                        match_id=match_id,
                        scene_index=seg.index,
                        over=event.over,
                        ball=event.ball,
                        shot_id=ann.shot_id,
                        start_frame=ann.start_frame,
                        end_frame=ann.end_frame,
                        shot_category=ann.shot_category.value if ann.shot_category else None,
                        phrase=text,
                        phrase_category=pcat.value,
                        players=ann.players,
                    )
                )
    written = store_mod.append_records(store_path, records)
    return {"n_records": len(records), "n_written": written}


def _truth_segments(truth) -> list[SceneSegment]:
    return [
        SceneSegment(
            index=s["index"],
            category=SceneCategory(s["category"]),
            start_frame=s["start_frame"],
            end_frame=s["end_frame"],
        )
        for s in truth.scenes
    ]


def _midpoint_in(interval, frame_interval) -> bool:
    start, end = interval
    mid = (start + end - 1) // 2
    return frame_interval[0] <= mid < frame_interval[1]


def evaluate_recall(segments, shot_labels, truth, radii=DEFAULT_RADII):
    """Recall of the R-window action-shot search against truth intervals.

    A found shot counts when its midpoint lies inside the truth action shot.
    """
    truth_shot_interval = {
        s["shot_id"]: (s["start_frame"], s["end_frame"]) for s in truth.shots
    }
    rows = []
    for radius in sorted(radii):
        b_hits = b_total = s_hits = s_total = 0
        for seg in segments:
            scene = truth.scenes[seg.index]
            action = find_action_shots(seg, shot_labels, radius)
            if scene["bowler_shot"] is not None:
                b_total += 1
                if action.bowler is not None and _midpoint_in(
                    shot_labels[action.bowler][0], truth_shot_interval[scene["bowler_shot"]]
                ):
                    b_hits += 1
            if scene["batsman_shot"] is not None:
                s_total += 1
                if action.batsman is not None and _midpoint_in(
                    shot_labels[action.batsman][0], truth_shot_interval[scene["batsman_shot"]]
                ):
                    s_hits += 1
        rows.append(
            (radius, b_hits / b_total if b_total else 0.0, s_hits / s_total if s_total else 0.0)
        )
    return rows


def run_eval(truth_path, segments_path, labels_path, radii=DEFAULT_RADII) -> dict:
    _require_file(truth_path, "ground-truth")
    _require_file(segments_path, "segmentation")
    _require_file(labels_path, "shot-label")
    truth = read_truth(truth_path)
    segments = read_segments(segments_path)
    shot_labels = read_shot_labels(labels_path)
    truth_segments = _truth_segments(truth)
    truth_intervals = [(s["start_frame"], s["end_frame"]) for s in truth.shots]

    accuracy = scene_accuracy(segments, truth_segments, truth_intervals)

    # Confusion over predicted shots; truth category comes from the truth shot
    # containing each predicted shot's midpoint.
    labels = list(SHOT_LABELS)
    matrix = np.zeros((len(labels), len(labels)), dtype=int)
    for (start, end), pred in shot_labels:
        mid = (start + end - 1) // 2
        true_cat = next(
            (
                s["category"]
                for s in truth.shots
                if s["start_frame"] <= mid < s["end_frame"]
            ),
            None,
        )
        if true_cat is not None:
            matrix[labels.index(true_cat), labels.index(pred.value)] += 1

    recall_rows = evaluate_recall(segments, shot_labels, truth, radii)
    shot_acc = float(np.trace(matrix)) / matrix.sum() if matrix.sum() else 0.0

    lines = [f"scene_accuracy {accuracy:.4f}", f"shot_accuracy {shot_acc:.4f}", ""]
    header = "truth\\pred " + " ".join(labels)
    lines.append(header)
    for i, lab in enumerate(labels):
        lines.append(lab + " " + " ".join(str(int(v)) for v in matrix[i]))
    lines.append("")
    lines.append(format_recall_table(recall_rows))
    return {
        "scene_accuracy": accuracy,
        "shot_accuracy": shot_acc,
        "confusion": matrix.tolist(),
        "recall": [list(r) for r in recall_rows],
        "report": "\n".join(lines),
    }


def run_query(store_path, text: str, top_k: int = 10) -> dict:
    _require_file(store_path, "annotation store")
    index = store_mod.build_index(store_path)
    hits = store_mod.query(index, text, top_k)
    return {
        "hits": [
            {"score": round(score, 6), **json.loads(record.to_json())}
            for record, score in hits
        ]
    }
