"""Acceptance gate: one ACCEPTANCE PASS/FAIL line per criterion.

Each criterion compares the pipeline against an independent oracle
(exhaustive enumeration, ground-truth bookkeeping, or byte comparison) under
a wall-clock budget.
"""
from __future__ import annotations

import itertools
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from conftest import run_full_pipeline

from stumps.annotation_store import append_records, read_store
from stumps.commentary import format_commentary, parse_commentary
from stumps.core import SceneCategory, ShotCategory
from stumps.frame_features import (
    default_concept_model,
    read_descriptors,
    save_concept_model,
    write_descriptors,
)
from stumps.learners import (
    SvmConfig,
    cross_validate,
    load_linear_classifier,
    save_linear_classifier,
    svm_train,
)
from stumps.pipeline import run_eval
from stumps.scene_alignment import (
    SceneSegment,
    dp_segment,
    find_action_shots,
    recall_vs_radius,
    segment_scenes,
)
from stumps.sequence_models import (
    SHOT_LABELS,
    CrfModel,
    SceneModel,
    crf_decode,
    crf_marginals,
    load_crf_model,
    load_scene_models,
    save_crf_model,
    save_scene_models,
)
from stumps.synthgen import (
    WIDE_DISPLACEMENT_WEIGHTS,
    default_generator_spec,
    generate_match,
    generate_phrase_corpus,
)
from stumps.text_model import (
    build_vocabulary,
    featurize_phrase,
    load_vocabulary,
    save_vocabulary,
)


@contextmanager
def criterion(name: str, time_limit: float | None):
    start = time.monotonic()
    try:
        yield
        elapsed = time.monotonic() - start
        if time_limit is not None:
            assert elapsed < time_limit, (
                f"{name} took {elapsed:.1f}s, budget {time_limit:.0f}s"
            )
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.2f}s)")


# --- criterion 1: DP segmentation equals exhaustive enumeration -------------


def _random_scene_models(rng, n_models):
    n = len(SHOT_LABELS)
    models = []
    for cat in list(SceneCategory)[:n_models]:
        models.append(
            SceneModel(
                category=cat,
                initial=rng.dirichlet(np.ones(n)),
                transitions=rng.dirichlet(np.ones(n), size=n),
                means=rng.uniform(0.0, 1.0, size=(n, 5)),
                variances=np.full((n, 5), 0.05),
                lmin=1,
                lmax=1000,
            )
        )
    return models


def _forward_ll(model, X):
    """Independent log-space HMM forward pass over a frame block."""
    log_e = norm.logpdf(
        X[:, None, :], model.means[None], np.sqrt(model.variances)[None]
    ).sum(axis=2)
    alpha = np.log(model.initial) + log_e[0]
    for t in range(1, len(X)):
        alpha = logsumexp(alpha[:, None] + np.log(model.transitions), axis=0) + log_e[t]
    return float(logsumexp(alpha))


def _oracle_joint_scores(frames, models, candidates):
    A, M = len(candidates), len(models)
    scores = np.full((A, A, M), -np.inf)
    for a in range(A - 1):
        for b in range(a + 1, A):
            block = frames[candidates[a] : candidates[b]]
            lls = np.array([_forward_ll(m, block) for m in models])
            norm_lls = lls / max(len(block), 1)
            log_post = norm_lls - logsumexp(norm_lls)
            scores[a, b] = lls + log_post
    return scores


def _enumerate_placements(A, K, score_fn):
    """Best placement by brute force; right-to-left sums match the DP's
    accumulation order exactly, ties prefer the earliest boundaries."""
    best = None
    for interior in itertools.combinations(range(1, A - 1), K - 1):
        bounds = (0,) + interior + (A - 1,)
        total = 0.0
        for k in range(K - 1, -1, -1):
            total = score_fn(bounds[k], bounds[k + 1], k) + total
        if best is None or total > best[1] or (total == best[1] and bounds < best[0]):
            best = (bounds, total)
    return list(best[0]), best[1]


def test_acceptance_dp_oracle():
    with criterion("dp-oracle", 10.0):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            A = int(rng.integers(4, 11))
            K = int(rng.integers(1, 4))
            n_frames = (A - 1) * 2
            frames = rng.uniform(0.0, 1.0, size=(n_frames, 5))
            interior = sorted(rng.choice(range(1, n_frames), size=A - 2, replace=False))
            candidates = [0] + [int(c) for c in interior] + [n_frames]
            models = _random_scene_models(rng, 3)
            sequence = [
                models[int(rng.integers(3))].category for _ in range(K)
            ]
            table = _oracle_joint_scores(frames, models, candidates)
            order = {m.category: i for i, m in enumerate(models)}

            def score_fn(a, b, k):
                return table[a, b, order[sequence[k]]]

            exp_bounds, exp_score = _enumerate_placements(A, K, score_fn)

            # The DP reproduces the enumerated optimum exactly.
            got_bounds, got_score = dp_segment(A, K, score_fn)
            assert got_bounds == exp_bounds
            assert got_score == exp_score

            # The full segmenter lands on the same frame boundaries.
            segments = segment_scenes(frames, sequence, models, candidates)
            got_frames = [segments[0].start_frame] + [s.end_frame for s in segments]
            assert got_frames == [candidates[i] for i in exp_bounds]


# --- criterion 2: CRF inference equals path enumeration ---------------------


def test_acceptance_crf_oracle():
    labels = ("a", "b", "c", "d")
    with criterion("crf-oracle", 10.0):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            model = CrfModel(
                labels=labels,
                transitions=rng.dirichlet(np.full(4, 2.0), size=4),
                pseudo_count=1.0,
            )
            T = int(rng.integers(1, 7))
            unaries = rng.dirichlet(np.full(4, 2.0), size=T)

            joints = {}
            for path in itertools.product(range(4), repeat=T):
                p = unaries[0, path[0]]
                for t in range(1, T):
                    p *= model.transitions[path[t - 1], path[t]] * unaries[t, path[t]]
                joints[path] = p
            Z = sum(joints.values())
            expected = np.zeros((T, 4))
            for path, p in joints.items():
                for t, s in enumerate(path):
                    expected[t, s] += p
            expected /= Z

            marginals, log_z = crf_marginals(unaries, model)
            assert np.max(np.abs(marginals - expected)) < 1e-9
            assert abs(log_z - np.log(Z)) < 1e-9

            best_path = max(joints, key=lambda p: (joints[p], [-s for s in p]))
            assert crf_decode(unaries, model) == [labels[s] for s in best_path]


# --- criterion 3: end-to-end scene accuracy on held-out synthetic data ------


def test_acceptance_end_to_end(tmp_path):
    with criterion("end-to-end-scene-accuracy", 60.0):
        run = run_full_pipeline(str(tmp_path / "run"))
        p = run["paths"]
        metrics = run_eval(p["test_truth"], p["segments"], p["labels"])
        assert metrics["scene_accuracy"] >= 0.95, metrics["scene_accuracy"]


# --- criterion 4: transition smoothing never hurts on average ---------------


def test_acceptance_crf_improvement():
    labels = ("a", "b", "c", "d")
    transitions = np.full((4, 4), 0.05)
    np.fill_diagonal(transitions, 0.85)
    model = CrfModel(labels=labels, transitions=transitions, pseudo_count=0.0)
    with criterion("crf-improvement", 60.0):
        raw_accs, vit_accs = [], []
        for seed in range(50):
            rng = np.random.default_rng(seed)
            T = 40
            truth = [int(rng.integers(4))]
            for _ in range(T - 1):
                truth.append(int(rng.choice(4, p=transitions[truth[-1]])))
            onehot = np.eye(4)[truth]
            logits = 1.2 * onehot + rng.normal(0.0, 1.0, size=(T, 4))
            unaries = np.exp(logits)
            unaries /= unaries.sum(axis=1, keepdims=True)

            raw = np.argmax(unaries, axis=1)
            vit = [labels.index(l) for l in crf_decode(unaries, model)]
            raw_accs.append(np.mean(raw == truth))
            vit_accs.append(np.mean(np.asarray(vit) == truth))
        assert np.mean(vit_accs) >= np.mean(raw_accs), (
            np.mean(vit_accs),
            np.mean(raw_accs),
        )


# --- criterion 5: phrase classification cross-validation --------------------


def test_acceptance_text_cv():
    with criterion("text-cv", 10.0):
        corpus = generate_phrase_corpus(1000, seed=0)
        vocab = build_vocabulary([p for p, _ in corpus], min_df=2)
        samples = [(featurize_phrase(p, vocab), label) for p, label in corpus]
        trainer = lambda subset: svm_train(subset, SvmConfig(epochs=30, seed=0))
        matrix = cross_validate(samples, folds=2, trainer=trainer, seed=0)
        accuracy = np.trace(matrix.matrix) / matrix.matrix.sum()
        assert accuracy >= 0.98, accuracy


# --- criterion 6: action-shot recall versus search radius -------------------


def test_acceptance_recall_vs_radius():
    with criterion("recall-vs-radius", 30.0):
        spec = replace(
            default_generator_spec(seed=21, scenes=200),
            displacement_weights=WIDE_DISPLACEMENT_WEIGHTS,
        )
        match = generate_match(spec)
        truth = match.truth
        shot_labels = [
            ((s["start_frame"], s["end_frame"]), ShotCategory(s["category"]))
            for s in truth.shots
        ]
        segments = [
            SceneSegment(
                index=s["index"],
                category=SceneCategory(s["category"]),
                start_frame=s["start_frame"],
                end_frame=s["end_frame"],
            )
            for s in truth.scenes
        ]
        truth_pairs = [(s["bowler_shot"], s["batsman_shot"]) for s in truth.scenes]
        radii = sorted(set(range(truth.max_displacement + 1)) | {10})
        predictions = {
            r: [find_action_shots(seg, shot_labels, r) for seg in segments]
            for r in radii
        }
        rows = recall_vs_radius(predictions, truth_pairs)

        for col in (1, 2):
            values = [row[col] for row in rows]
            assert values == sorted(values), "recall must be non-decreasing in R"
        at_max = next(row for row in rows if row[0] == truth.max_displacement)
        assert at_max[1] == 1.0 and at_max[2] == 1.0
        at_10 = next(row for row in rows if row[0] == 10)
        assert at_10[1] >= 0.90 and at_10[2] >= 0.90, at_10


# --- criterion 7: byte-identical reruns of every subcommand -----------------


def test_acceptance_determinism(pipeline_run, tmp_path):
    with criterion("determinism", None):
        second = run_full_pipeline(str(tmp_path / "rerun"))
        for key, path in pipeline_run["paths"].items():
            with open(path, "rb") as fh_a, open(second["paths"][key], "rb") as fh_b:
                assert fh_a.read() == fh_b.read(), f"artifact {key} differs"
        for name, text in pipeline_run["stdouts"].items():
            a = text.replace(pipeline_run["root"], "<root>")
            b = second["stdouts"][name].replace(second["root"], "<root>")
            assert a == b, f"stdout of {name} differs"


# --- criterion 8: every file format survives write -> read -> write ---------


def test_acceptance_format_round_trips(pipeline_run, tmp_path):
    p = pipeline_run["paths"]
    with criterion("format-round-trips", None):
        out = str(tmp_path / "copy.fdesc")
        write_descriptors(read_descriptors(p["test_desc"]), out)
        assert open(out, "rb").read() == open(p["test_desc"], "rb").read()

        with open(p["test_comm"], encoding="utf-8") as fh:
            original = fh.read()
        assert format_commentary(parse_commentary(original)) == original

        for loader, saver, key in (
            (load_linear_classifier, save_linear_classifier, "text_model"),
            (load_linear_classifier, save_linear_classifier, "svm_model"),
            (load_vocabulary, save_vocabulary, "vocab"),
            (load_crf_model, save_crf_model, "crf_model"),
            (load_scene_models, save_scene_models, "scene_models"),
        ):
            out = str(tmp_path / f"copy_{key}")
            saver(loader(p[key]), out)
            assert open(out, "rb").read() == open(p[key], "rb").read(), key

        first = str(tmp_path / "concepts1")
        second = str(tmp_path / "concepts2")
        save_concept_model(default_concept_model(), first)
        from stumps.frame_features import load_concept_model

        save_concept_model(load_concept_model(first), second)
        assert open(first, "rb").read() == open(second, "rb").read()

        store_copy = str(tmp_path / "store_copy.jsonl")
        append_records(store_copy, read_store(p["store"]))
        assert open(store_copy, "rb").read() == open(p["store"], "rb").read()
