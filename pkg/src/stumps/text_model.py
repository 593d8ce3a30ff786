"""Phrase classification built from automatic player-name labelling.

Phrases that mention exactly one of the event's players are auto-labelled as
that player's action category and the name token is removed. A linear SVM is
trained on bag-of-words features of the surviving phrases; the "Others"
category is produced at inference time by a confidence threshold.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .commentary import CommentaryEvent, Phrase
from .core import ModelFormatError, PhraseCategory, SparseVector
from .learners import (
    LinearClassifier,
    SvmConfig,
    fit_temperature,
    svm_predict_proba,
    svm_train,
)


class Provenance(Enum):
    AUTO_BOWLER_NAME = "AutoBowlerName"
    AUTO_BATSMAN_NAME = "AutoBatsmanName"
    MANUAL = "Manual"


@dataclass(frozen=True)
class LabelledPhrase:
    phrase: Phrase
    category: PhraseCategory
    provenance: Provenance


@dataclass(frozen=True)
class Vocabulary:
    token_to_index: dict[str, int]
    min_df: int

    @property
    def size(self) -> int:
        return len(self.token_to_index)


def auto_label(events: list[CommentaryEvent]) -> list[LabelledPhrase]:
    """Label phrases by which player they name; drop ambiguous ones and strip
    the triggering name token."""
    out: list[LabelledPhrase] = []
    for event in events:
        bowler = event.bowler.lower()
        batsman = event.batsman.lower()
        for phrase in event.phrases:
            has_bowler = bowler in phrase.tokens
            has_batsman = batsman in phrase.tokens
            if has_bowler == has_batsman:
                continue
            name = bowler if has_bowler else batsman
            remaining = tuple(t for t in phrase.tokens if t != name)
            if not remaining:
                continue
            category = (
                PhraseCategory.BOWLER_ACTION if has_bowler else PhraseCategory.BATSMAN_ACTION
            )
            provenance = (
                Provenance.AUTO_BOWLER_NAME if has_bowler else Provenance.AUTO_BATSMAN_NAME
            )
            out.append(
                LabelledPhrase(
                    phrase=Phrase(tokens=remaining, source_event=phrase.source_event),
                    category=category,
                    provenance=provenance,
                )
            )
    return out


def build_vocabulary(phrases: list[Phrase], min_df: int = 2) -> Vocabulary:
    """Tokens with document frequency >= min_df, indexed in lexicographic order."""
    if not phrases:
        raise ValueError("no phrases to build vocabulary from")
    df: dict[str, int] = {}
    for phrase in phrases:
        for token in set(phrase.tokens):
            df[token] = df.get(token, 0) + 1
    kept = sorted(t for t, c in df.items() if c >= min_df)
    if not kept:
        raise ValueError(f"min_df={min_df} leaves an empty vocabulary")
    return Vocabulary(token_to_index={t: i for i, t in enumerate(kept)}, min_df=min_df)


def featurize_phrase(phrase: Phrase, vocab: Vocabulary) -> SparseVector:
    """L1-normalized token counts over the vocabulary; OOV tokens ignored."""
    counts: dict[int, float] = {}
    for token in phrase.tokens:
        idx = vocab.token_to_index.get(token)
        if idx is not None:
            counts[idx] = counts.get(idx, 0.0) + 1.0
    total = sum(counts.values())
    if total > 0:
        counts = {i: v / total for i, v in counts.items()}
    return SparseVector(dim=vocab.size, data=counts)


def train_phrase_classifier(
    labelled: list[LabelledPhrase],
    vocab: Vocabulary,
    config: SvmConfig = SvmConfig(),
    calibration_fraction: float = 0.2,
) -> LinearClassifier:
    """Train bowler-vs-batsman with inverse-frequency class weighting, then
    calibrate the temperature on a held-out slice."""
    samples = [
        (featurize_phrase(lp.phrase, vocab), lp.category.value) for lp in labelled
    ]
    counts: dict[str, int] = {}
    for _, lab in samples:
        counts[lab] = counts.get(lab, 0) + 1
    total = sum(counts.values())
    class_weights = {lab: total / (len(counts) * c) for lab, c in counts.items()}

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(samples))
    n_cal = max(2, int(len(samples) * calibration_fraction))
    cal_idx = set(order[:n_cal].tolist())
    train = [s for i, s in enumerate(samples) if i not in cal_idx]
    cal = [s for i, s in enumerate(samples) if i in cal_idx]
    if len({lab for _, lab in train}) < 2:
        train = samples
        cal = samples
    model = svm_train(train, config, class_weights=class_weights)
    return fit_temperature(model, cal)


def classify_phrase(
    model: LinearClassifier, phrase: Phrase, vocab: Vocabulary, others_threshold: float = 0.6
) -> tuple[PhraseCategory, float]:
    """Return the calibrated argmax category, or Others when the winner's
    probability falls below the threshold."""
    probs = svm_predict_proba(model, featurize_phrase(phrase, vocab))
    best = int(np.argmax(probs))
    confidence = float(probs[best])
    if confidence < others_threshold:
        return PhraseCategory.OTHERS, confidence
    return PhraseCategory(model.categories[best]), confidence


def dump_labelled_phrases(
    labelled: list[LabelledPhrase], events: list[CommentaryEvent], match_id: str, path
) -> None:
    """JSON Lines dump, one record per labelled phrase."""
    with open(path, "w", encoding="utf-8") as fh:
        for lp in labelled:
            event = events[lp.phrase.source_event] if lp.phrase.source_event is not None else None
            record = {
                "text": lp.phrase.text,
                "category": lp.category.value,
                "provenance": lp.provenance.value,
                "match_id": match_id,
                "over_ball": f"{event.over}.{event.ball}" if event else None,
            }
            fh.write(json.dumps(record) + "\n")


VOCAB_HEADER = "STUMPS-VOCAB v1"


def save_vocabulary(vocab: Vocabulary, path) -> None:
    tokens = sorted(vocab.token_to_index, key=vocab.token_to_index.get)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(VOCAB_HEADER + "\n")
        fh.write(f"min_df {vocab.min_df}\n")
        for token in tokens:
            fh.write(token + "\n")


def load_vocabulary(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != VOCAB_HEADER:
        raise ModelFormatError(f"expected header '{VOCAB_HEADER}'")
    min_df = int(lines[1].split()[1])
    tokens = [t for t in lines[2:] if t]
    return Vocabulary(token_to_index={t: i for i, t in enumerate(tokens)}, min_df=min_df)
