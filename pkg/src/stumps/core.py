"""Shared domain enums, vector helpers and error types."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

CONCEPTS = ("Pitch", "Ground", "Sky", "PlayerCloseup", "Scorecard")
N_CONCEPTS = len(CONCEPTS)


class StumpsError(Exception):
    """Base class for all package errors."""


class CommentaryParseError(StumpsError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class DescriptorFormatError(StumpsError):
    """Raised on malformed FDESC / LDESC content."""


class ModelFormatError(StumpsError):
    """Raised on malformed model-file content."""


class StoreFormatError(StumpsError):
    """Raised on corrupt annotation-store content."""


class OutcomeLabel(Enum):
    DOT = "Dot"
    ONE = "One"
    TWO = "Two"
    THREE = "Three"
    FOUR = "Four"
    SIX = "Six"
    OUT = "Out"
    EXTRA = "Extra"


# Accepted commentary tokens (case-insensitive) and the canonical token
# emitted when formatting events back to text.
OUTCOME_TOKENS = {
    "no run": OutcomeLabel.DOT,
    "1 run": OutcomeLabel.ONE,
    "2 runs": OutcomeLabel.TWO,
    "3 runs": OutcomeLabel.THREE,
    "four": OutcomeLabel.FOUR,
    "4 runs": OutcomeLabel.FOUR,
    "six": OutcomeLabel.SIX,
    "6 runs": OutcomeLabel.SIX,
    "out": OutcomeLabel.OUT,
    "wicket": OutcomeLabel.OUT,
    "wide": OutcomeLabel.EXTRA,
    "no ball": OutcomeLabel.EXTRA,
    "leg byes": OutcomeLabel.EXTRA,
    "byes": OutcomeLabel.EXTRA,
}

CANONICAL_OUTCOME_TOKEN = {
    OutcomeLabel.DOT: "no run",
    OutcomeLabel.ONE: "1 run",
    OutcomeLabel.TWO: "2 runs",
    OutcomeLabel.THREE: "3 runs",
    OutcomeLabel.FOUR: "FOUR",
    OutcomeLabel.SIX: "SIX",
    OutcomeLabel.OUT: "OUT",
    OutcomeLabel.EXTRA: "wide",
}


class PhraseCategory(Enum):
    BOWLER_ACTION = "BowlerAction"
    BATSMAN_ACTION = "BatsmanAction"
    OTHERS = "Others"


class SceneCategory(Enum):
    DOT = "Dot"
    ONE = "One"
    TWO = "Two"
    THREE = "Three"
    FOUR = "Four"
    SIX = "Six"
    OUT = "Out"


SCENE_CATEGORIES = tuple(SceneCategory)


class ShotCategory(Enum):
    BOWLER_RUNUP = "BowlerRunup"
    BATSMAN_STROKE = "BatsmanStroke"
    PLAYER_CLOSEUP = "PlayerCloseUp"
    UMPIRE = "Umpire"
    GROUND = "Ground"
    CROWD = "Crowd"
    ANIMATIONS = "Animations"
    MISCELLANEOUS = "Miscellaneous"


SHOT_CATEGORIES = tuple(ShotCategory)


def fmt_float(x: float) -> str:
    """Format a float with 17 significant digits so that parse(format(x)) == x."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class SparseVector:
    """Index -> value map with an explicit dimension."""

    dim: int
    data: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dimension must be non-negative")
        for i, v in self.data.items():
            if not (0 <= i < self.dim):
                raise ValueError(f"index {i} out of range for dimension {self.dim}")
            if not np.isfinite(v):
                raise ValueError("non-finite value in sparse vector")

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        for i, v in self.data.items():
            out[i] = v
        return out
