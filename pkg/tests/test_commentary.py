import string

import pytest
from hypothesis import given, strategies as st

from stumps.commentary import (
    CommentaryEvent,
    format_commentary,
    format_event,
    outcome_to_scene_category,
    parse_commentary,
    parse_commentary_line,
    segment_phrases,
)
from stumps.core import CommentaryParseError, OutcomeLabel, SceneCategory

PULL_LINE = (
    "11.6 Khan to Gambhir, 2 runs, he pulls it from outside off stump and "
    "just manages to clear the deep square leg rope"
)


def test_parse_single_event_fields():
    events = parse_commentary(PULL_LINE + "\n")
    assert len(events) == 1
    e = events[0]
    assert (e.over, e.ball) == (11, 6)
    assert (e.bowler, e.batsman) == ("Khan", "Gambhir")
    assert e.outcome is OutcomeLabel.TWO
    assert e.description.startswith("he pulls it from outside off stump")


def test_parse_empty_document():
    assert parse_commentary("") == []
    assert parse_commentary("\n\n  \n") == []


def test_parse_phrase_split_on_semicolon():
    events = parse_commentary("1.1 A to B, 1 run, tucked away; easy single\n")
    assert [p.text for p in events[0].phrases] == ["tucked away", "easy single"]


def test_comment_lines_ignored():
    doc = "# header comment\n" + PULL_LINE + "\n  # indented comment\n"
    assert len(parse_commentary(doc)) == 1


def test_segment_phrases_examples():
    assert [p.text for p in segment_phrases("shortish and swinging away, lots of bounce")] == [
        "shortish and swinging away",
        "lots of bounce",
    ]
    assert segment_phrases("") == []
    assert [p.text for p in segment_phrases("no! run.")] == ["no", "run"]


def test_segment_phrases_lowercases_and_keeps_apostrophes():
    phrases = segment_phrases("Sachin's Pull, GREAT shot")
    assert [p.text for p in phrases] == ["sachin's pull", "great shot"]


def test_outcome_to_scene_category():
    assert outcome_to_scene_category(OutcomeLabel.FOUR) is SceneCategory.FOUR
    assert outcome_to_scene_category(OutcomeLabel.ONE) is SceneCategory.ONE
    assert outcome_to_scene_category(OutcomeLabel.EXTRA) is SceneCategory.DOT
    for outcome in OutcomeLabel:
        assert isinstance(outcome_to_scene_category(outcome), SceneCategory)


def test_outcome_tokens_case_insensitive():
    events = parse_commentary("0.1 A to B, FOUR, cracking drive\n")
    assert events[0].outcome is OutcomeLabel.FOUR
    events = parse_commentary("0.1 A to B, WiCkEt, bowled him\n")
    assert events[0].outcome is OutcomeLabel.OUT


def test_malformed_line_carries_position():
    with pytest.raises(CommentaryParseError) as exc:
        parse_commentary("first line garbage\n")
    assert exc.value.line == 1
    with pytest.raises(CommentaryParseError) as exc:
        parse_commentary(PULL_LINE + "\nbroken\n")
    assert exc.value.line == 2


def test_unknown_outcome_lists_accepted_tokens():
    with pytest.raises(CommentaryParseError) as exc:
        parse_commentary_line("1.1 A to B, banana, text", 1, 0)
    message = str(exc.value)
    assert "banana" in message
    assert "no run" in message and "wicket" in message


def test_ball_out_of_range_rejected():
    with pytest.raises(CommentaryParseError):
        parse_commentary_line("1.0 A to B, 1 run, text", 1, 0)
    with pytest.raises(CommentaryParseError):
        parse_commentary_line("1.7 A to B, 1 run, text", 1, 0)


def test_out_of_order_events_rejected():
    doc = "2.3 A to B, 1 run, x\n2.2 A to B, 1 run, y\n"
    with pytest.raises(CommentaryParseError) as exc:
        parse_commentary(doc)
    assert "out of order" in str(exc.value)


def test_extras_may_repeat_ball_number():
    doc = "2.3 A to B, wide, strays down leg\n2.3 A to B, 1 run, tucked away\n"
    events = parse_commentary(doc)
    assert [e.outcome for e in events] == [OutcomeLabel.EXTRA, OutcomeLabel.ONE]


def test_phrases_reconstruct_description_minus_punctuation():
    events = parse_commentary("1.1 A to B, 1 run, Tucked away, easy single!\n")
    joined = " ".join(p.text for p in events[0].phrases)
    assert joined == "tucked away easy single"


_names = st.text(alphabet=string.ascii_letters, min_size=1, max_size=10)
_descriptions = st.text(
    alphabet=string.ascii_lowercase + " .,;:!?'", min_size=0, max_size=60
)


@st.composite
def _documents(draw):
    n = draw(st.integers(min_value=0, max_value=6))
    events = []
    over, ball = 0, 1
    for i in range(n):
        events.append(
            CommentaryEvent(
                over=over,
                ball=ball,
                bowler=draw(_names),
                batsman=draw(_names),
                outcome=draw(st.sampled_from(list(OutcomeLabel))),
                description=draw(_descriptions),
            )
        )
        ball += 1
        if ball > 6:
            over, ball = over + 1, 1
    return events


@given(_documents())
def test_format_parse_round_trip(events):
    doc = format_commentary(events)
    parsed = parse_commentary(doc)
    assert len(parsed) == len(events)
    for a, b in zip(events, parsed):
        assert (a.over, a.ball, a.bowler, a.batsman, a.outcome, a.description) == (
            b.over, b.ball, b.bowler, b.batsman, b.outcome, b.description
        )
    # Formatting is a fixed point once canonicalized.
    assert format_commentary(parsed) == doc


@given(_descriptions)
def test_phrase_count_bound(description):
    phrases = segment_phrases(description)
    for p in phrases:
        assert p.tokens
        assert p.text == p.text.lower()
        assert not any(ch in p.text for ch in ".,;:!?")


def test_format_event_canonical_tokens():
    e = parse_commentary("3.2 A to B, 4 runs, races away\n")[0]
    assert format_event(e) == "3.2 A to B, FOUR, races away"
