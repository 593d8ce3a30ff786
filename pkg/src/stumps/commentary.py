"""Ball-by-ball commentary parsing and phrase segmentation.

Commentary files are UTF-8 text with one event per non-empty line:

    <over>.<ball> <bowler> to <batsman>, <outcome>, <description>

Lines starting with ``#`` are ignored. The outcome token is matched
case-insensitively against the accepted token table.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import (
    CANONICAL_OUTCOME_TOKEN,
    OUTCOME_TOKENS,
    CommentaryParseError,
    OutcomeLabel,
    PhraseCategory,
    SceneCategory,
)

PUNCTUATION = ".,;:!?"
_PUNCT_SPLIT = re.compile(r"[.,;:!?]")

_LINE_RE = re.compile(
    r"^(?P<over>\d+)\.(?P<ball>\d)\s+(?P<bowler>\S+) to (?P<batsman>\S+), "
    r"(?P<outcome>[^,]+), (?P<description>.*)$"
)


@dataclass(frozen=True)
class Phrase:
    tokens: tuple[str, ...]
    source_event: int | None = None
    label: PhraseCategory | None = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("phrase token list must be non-empty")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class CommentaryEvent:
    over: int
    ball: int
    bowler: str
    batsman: str
    outcome: OutcomeLabel
    description: str
    phrases: tuple[Phrase, ...] = field(default_factory=tuple)


def segment_phrases(description: str, source_event: int | None = None) -> list[Phrase]:
    """Split a description at every punctuation mark, dropping empty fragments."""
    phrases = []
    for fragment in _PUNCT_SPLIT.split(description):
        tokens = tuple(fragment.lower().split())
        if tokens:
            phrases.append(Phrase(tokens=tokens, source_event=source_event))
    return phrases


def parse_commentary_line(line: str, line_no: int, event_index: int) -> CommentaryEvent:
    m = _LINE_RE.match(line)
    if m is None:
        # Point the column at the first spot where the grammar breaks down.
        prefix = re.match(r"^\d+\.\d\s+\S+ to \S+, [^,]+, ", line)
        column = len(prefix.group(0)) + 1 if prefix else 1
        raise CommentaryParseError(
            "expected '<over>.<ball> <bowler> to <batsman>, <outcome>, <description>'",
            line_no,
            column,
        )
    ball = int(m.group("ball"))
    if not 1 <= ball <= 6:
        raise CommentaryParseError(
            f"ball must be 1..6, got {ball}", line_no, m.start("ball") + 1
        )
    outcome_token = m.group("outcome").strip().lower()
    if outcome_token not in OUTCOME_TOKENS:
        accepted = ", ".join(sorted(OUTCOME_TOKENS))
        raise CommentaryParseError(
            f"unknown outcome '{m.group('outcome')}'; accepted tokens: {accepted}",
            line_no,
            m.start("outcome") + 1,
        )
    description = m.group("description")
    return CommentaryEvent(
        over=int(m.group("over")),
        ball=ball,
        bowler=m.group("bowler"),
        batsman=m.group("batsman"),
        outcome=OUTCOME_TOKENS[outcome_token],
        description=description,
        phrases=tuple(segment_phrases(description, source_event=event_index)),
    )


def parse_commentary(text: str) -> list[CommentaryEvent]:
    """Parse a whole commentary document into events, in file order."""
    events: list[CommentaryEvent] = []
    last_key = None
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        event = parse_commentary_line(line, line_no, len(events))
        key = (event.over, event.ball)
        if last_key is not None and key < last_key:
            raise CommentaryParseError(
                f"event {event.over}.{event.ball} out of order (previous "
                f"{last_key[0]}.{last_key[1]})",
                line_no,
            )
        last_key = key
        events.append(event)
    return events


def format_event(event: CommentaryEvent) -> str:
    token = CANONICAL_OUTCOME_TOKEN[event.outcome]
    return (
        f"{event.over}.{event.ball} {event.bowler} to {event.batsman}, "
        f"{token}, {event.description}"
    )


def format_commentary(events: list[CommentaryEvent]) -> str:
    return "".join(format_event(e) + "\n" for e in events)


def outcome_to_scene_category(outcome: OutcomeLabel) -> SceneCategory:
    """Map an outcome to its scene category; extras fold into Dot."""
    if outcome is OutcomeLabel.EXTRA:
        return SceneCategory.DOT
    return SceneCategory(outcome.value)
