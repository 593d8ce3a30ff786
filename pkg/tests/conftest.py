"""Shared fixtures: a full CLI pipeline run over seeded synthetic matches.

The pipeline is executed once per session; tests that only read its artifacts
share the same directory.
"""
from __future__ import annotations

import json
import os

import pytest
from click.testing import CliRunner

from stumps.cli import main as cli_main

TRAIN_SEED = 11
TRAIN_SCENES = 120
TEST_SEED = 7
TEST_SCENES = 20


def run_cli(args, expect_exit=0):
    runner = CliRunner()
    result = runner.invoke(cli_main, args, catch_exceptions=False)
    if expect_exit is not None:
        assert result.exit_code == expect_exit, result.output
    return result


def run_full_pipeline(root: str) -> dict:
    """Train on one synthetic match, run every stage on a held-out match.

    Returns the artifact paths plus the stdout of each subcommand.
    """
    train_dir = os.path.join(root, "train")
    test_dir = os.path.join(root, "test")
    paths = {
        "train_desc": os.path.join(train_dir, "descriptors.fdesc"),
        "train_comm": os.path.join(train_dir, "commentary.txt"),
        "train_truth": os.path.join(train_dir, "truth.jsonl"),
        "test_desc": os.path.join(test_dir, "descriptors.fdesc"),
        "test_comm": os.path.join(test_dir, "commentary.txt"),
        "test_truth": os.path.join(test_dir, "truth.jsonl"),
        "text_model": os.path.join(root, "text.model"),
        "vocab": os.path.join(root, "vocab.txt"),
        "svm_model": os.path.join(root, "shots.model"),
        "crf_model": os.path.join(root, "crf.model"),
        "scene_models": os.path.join(root, "scenes.model"),
        "shots": os.path.join(root, "shots.txt"),
        "segments": os.path.join(root, "segments.txt"),
        "labels": os.path.join(root, "labels.txt"),
        "store": os.path.join(root, "store.jsonl"),
    }
    stdouts = {}
    stdouts["synth_train"] = run_cli(
        ["synth", "--out", train_dir, "--seed", str(TRAIN_SEED),
         "--scenes", str(TRAIN_SCENES), "--cover-all-categories",
         "--match-id", "train"]
    ).output
    stdouts["synth_test"] = run_cli(
        ["synth", "--out", test_dir, "--seed", str(TEST_SEED),
         "--scenes", str(TEST_SCENES), "--match-id", "test"]
    ).output
    stdouts["train_text"] = run_cli(
        ["train-text", "--commentary", paths["train_comm"],
         "--model-out", paths["text_model"], "--vocab-out", paths["vocab"]]
    ).output
    stdouts["train_shots"] = run_cli(
        ["train-shots", "--descriptors", paths["train_desc"],
         "--truth", paths["train_truth"], "--svm-out", paths["svm_model"],
         "--crf-out", paths["crf_model"]]
    ).output
    stdouts["train_scenes"] = run_cli(
        ["train-scenes", "--descriptors", paths["train_desc"],
         "--truth", paths["train_truth"], "--out", paths["scene_models"]]
    ).output
    stdouts["detect_shots"] = run_cli(
        ["detect-shots", "--descriptors", paths["test_desc"],
         "--out", paths["shots"]]
    ).output
    stdouts["segment"] = run_cli(
        ["segment", "--descriptors", paths["test_desc"],
         "--commentary", paths["test_comm"],
         "--scene-models", paths["scene_models"],
         "--shots", paths["shots"], "--out", paths["segments"]]
    ).output
    stdouts["smooth"] = run_cli(
        ["smooth", "--descriptors", paths["test_desc"],
         "--shots", paths["shots"], "--svm-model", paths["svm_model"],
         "--crf-model", paths["crf_model"], "--out", paths["labels"]]
    ).output
    stdouts["annotate"] = run_cli(
        ["annotate", "--descriptors", paths["test_desc"],
         "--commentary", paths["test_comm"], "--segments", paths["segments"],
         "--labels", paths["labels"], "--text-model", paths["text_model"],
         "--vocab", paths["vocab"], "--store", paths["store"],
         "--match-id", "test"]
    ).output
    stdouts["eval"] = run_cli(
        ["eval", "--truth", paths["test_truth"],
         "--segments", paths["segments"], "--labels", paths["labels"]]
    ).output
    stdouts["query"] = run_cli(
        ["query", "--store", paths["store"], "--text", "pulls it"]
    ).output
    return {"root": root, "paths": paths, "stdouts": stdouts}


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("pipeline"))
    return run_full_pipeline(root)


@pytest.fixture(scope="session")
def eval_metrics(pipeline_run):
    """Scene accuracy and recall rows recomputed from the run's artifacts."""
    from stumps.pipeline import run_eval

    p = pipeline_run["paths"]
    return run_eval(p["test_truth"], p["segments"], p["labels"])


def parse_json_lines(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
