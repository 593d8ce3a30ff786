import filecmp
from dataclasses import replace

import numpy as np
from scipy.stats import chisquare

from stumps.commentary import parse_commentary
from stumps.core import SceneCategory
from stumps.synthgen import (
    WIDE_DISPLACEMENT_WEIGHTS,
    default_generator_spec,
    generate_match,
    generate_phrase_corpus,
    hard_generator_spec,
    read_truth,
    verify_consistency,
    write_match,
    write_truth,
)


def test_zero_scenes_gives_empty_outputs():
    match = generate_match(default_generator_spec(seed=0, scenes=0))
    assert match.frames == []
    assert match.commentary_text == ""
    assert match.truth.scenes == [] and match.truth.shots == []
    assert match.truth.n_frames == 0


def test_same_seed_byte_identical(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        write_match(generate_match(default_generator_spec(seed=4, scenes=8)), d)
    for name in ("descriptors.fdesc", "commentary.txt", "truth.jsonl"):
        assert filecmp.cmp(dirs[0] / name, dirs[1] / name, shallow=False)


def test_different_seeds_differ(tmp_path):
    a = generate_match(default_generator_spec(seed=1, scenes=8))
    b = generate_match(default_generator_spec(seed=2, scenes=8))
    assert a.commentary_text != b.commentary_text


def test_ground_truth_counts_consistent(tmp_path):
    match = generate_match(default_generator_spec(seed=6, scenes=20))
    paths = write_match(match, tmp_path)
    truth = match.truth
    assert len(truth.scenes) == 20
    assert truth.scenes[-1]["end_frame"] == truth.n_frames
    events = parse_commentary(match.commentary_text)
    assert len(events) == 20
    report = verify_consistency(paths["descriptors"], paths["commentary"], truth)
    assert report.ok, report.first_violation
    # Each scene carries exactly one bowler and one batsman phrase.
    action = [p for p in truth.phrases if p["category"] != "Others"]
    assert len(action) == 40


def test_tampering_detected(tmp_path):
    match = generate_match(default_generator_spec(seed=6, scenes=6))
    paths = write_match(match, tmp_path)

    with open(paths["descriptors"]) as fh:
        lines = fh.read().splitlines()
    header = lines[0].split()
    header[2] = str(int(header[2]) - 1)
    broken = tmp_path / "broken.fdesc"
    broken.write_text("\n".join([" ".join(header)] + lines[1:-1]) + "\n")
    report = verify_consistency(broken, paths["commentary"], match.truth)
    assert not report.ok
    assert "frame-count mismatch" in report.first_violation

    with open(paths["commentary"]) as fh:
        commentary_lines = fh.read().splitlines()
    shuffled = tmp_path / "shuffled.txt"
    shuffled.write_text("\n".join(reversed(commentary_lines)) + "\n")
    report = verify_consistency(paths["descriptors"], shuffled, match.truth)
    assert not report.ok
    assert "order" in report.first_violation or "mismatch" in report.first_violation


def test_category_frequencies_chi_square(tmp_path):
    spec = default_generator_spec(seed=8, scenes=1000)
    match = generate_match(spec)
    weights = np.array([spec.category_weights[c] for c in SceneCategory])
    weights /= weights.sum()
    counts = np.zeros(len(SceneCategory))
    order = [c.value for c in SceneCategory]
    for scene in match.truth.scenes:
        counts[order.index(scene["category"])] += 1
    result = chisquare(counts, f_exp=weights * counts.sum())
    assert result.pvalue > 0.001


def test_displacement_bookkeeping():
    spec = replace(
        default_generator_spec(seed=12, scenes=40),
        displacement_weights=WIDE_DISPLACEMENT_WEIGHTS,
    )
    match = generate_match(spec)
    shots_by_id = {s["shot_id"]: s for s in match.truth.shots}
    max_seen = 0
    for scene in match.truth.scenes:
        d = scene["displacement"]
        max_seen = max(max_seen, d)
        # The farthest action shot sits exactly d shots past the scene start.
        action = [s for s in (scene["bowler_shot"], scene["batsman_shot"]) if s is not None]
        assert action, "every scene has at least the run-up"
        assert max(action) - scene["boundary_shot"] == d
        for sid in action:
            assert shots_by_id[sid]["scene_index"] == scene["index"]
    assert match.truth.max_displacement == max_seen


def test_truth_file_round_trip(tmp_path):
    match = generate_match(default_generator_spec(seed=3, scenes=5))
    first, second = tmp_path / "t1.jsonl", tmp_path / "t2.jsonl"
    write_truth(match.truth, first)
    loaded = read_truth(first)
    write_truth(loaded, second)
    assert first.read_bytes() == second.read_bytes()
    assert loaded.n_frames == match.truth.n_frames
    assert loaded.scenes == match.truth.scenes


def test_cover_all_categories_flag():
    spec = replace(default_generator_spec(seed=2, scenes=10), cover_all_categories=True)
    match = generate_match(spec)
    seen = {s["category"] for s in match.truth.scenes}
    assert seen == {c.value for c in SceneCategory}


def test_hard_spec_overlapping_emissions():
    easy = default_generator_spec(seed=0)
    hard = hard_generator_spec(seed=0)
    easy_var = next(iter(easy.scene_models.values())).variances[0, 0]
    hard_var = next(iter(hard.scene_models.values())).variances[0, 0]
    assert hard_var > easy_var


def test_phrase_corpus_deterministic_and_imbalanced():
    a = generate_phrase_corpus(500, seed=5)
    b = generate_phrase_corpus(500, seed=5)
    assert [(p.text, lab) for p, lab in a] == [(p.text, lab) for p, lab in b]
    bowler = sum(1 for _, lab in a if lab == "BowlerAction")
    assert 0.15 < bowler / len(a) < 0.35
    # Bowler and batsman template vocabularies are disjoint after name removal.
    bowler_tokens = {t for p, lab in a if lab == "BowlerAction" for t in p.tokens}
    batsman_tokens = {t for p, lab in a if lab == "BatsmanAction" for t in p.tokens}
    assert not (bowler_tokens & batsman_tokens)


def test_commentary_outcomes_match_scene_categories():
    match = generate_match(default_generator_spec(seed=14, scenes=30))
    events = parse_commentary(match.commentary_text)
    from stumps.commentary import outcome_to_scene_category

    for event, scene in zip(events, match.truth.scenes):
        assert outcome_to_scene_category(event.outcome).value == scene["category"]
        assert (event.over, event.ball) == (scene["over"], scene["ball"])
