import json

import pytest

from fqkit.corpus import (
    Conversation,
    Turn,
    conversation_record,
    generate_sample_skeletons,
    parse_conversations,
    read_conversations,
    write_conversations,
)


def _line(conversation_id="c1", topic="t", turns=None):
    if turns is None:
        turns = [
            {"question": "q1?", "rewritten_question": "q1 full?", "answer": "a1"},
            {"question": "q2?", "rewritten_question": "q2 full?", "answer": "a2"},
        ]
    return json.dumps(
        {"conversation_id": conversation_id, "topic": topic, "turns": turns}
    )


def test_parse_reference_dialog(godel_conversation):
    lines = [json.dumps(conversation_record(godel_conversation))]
    conversations, errors = parse_conversations(lines)
    assert not errors
    assert len(conversations) == 1
    conv = conversations[0]
    assert conv.turns[0].question_rewritten == "Where was Kurt Gödel born?"
    assert len(conv.turns) == 5


def test_empty_input_is_empty_corpus():
    conversations, errors = parse_conversations([])
    assert conversations == []
    assert errors == []


def test_missing_rewritten_question_names_field():
    bad = _line(turns=[{"question": "q?", "answer": "a"}])
    conversations, errors = parse_conversations([bad])
    assert conversations == []
    assert len(errors) == 1
    assert errors[0].line_no == 1
    assert "rewritten_question" in errors[0].message


def test_empty_answer_requires_unanswered_flag():
    bad = _line(turns=[{"question": "q?", "rewritten_question": "q?", "answer": ""}])
    ok = _line(
        conversation_id="c2",
        turns=[
            {"question": "q?", "rewritten_question": "q?", "answer": "", "unanswered": True},
            {"question": "p?", "rewritten_question": "p?", "answer": "b"},
        ],
    )
    conversations, errors = parse_conversations([bad, ok])
    assert [c.conversation_id for c in conversations] == ["c2"]
    assert len(errors) == 1
    assert "answer" in errors[0].message


def test_invalid_json_collected_with_line_number():
    conversations, errors = parse_conversations([_line(), "{not json", _line("c3")])
    assert [c.conversation_id for c in conversations] == ["c1", "c3"]
    assert [e.line_no for e in errors] == [2]


def test_input_order_preserved():
    lines = [_line(f"c{i}") for i in range(5)]
    conversations, _ = parse_conversations(lines)
    assert [c.conversation_id for c in conversations] == [f"c{i}" for i in range(5)]


@pytest.mark.parametrize("total_turns,expected", [(2, 1), (3, 2), (5, 4), (8, 7)])
def test_skeleton_count_is_turns_minus_one(total_turns, expected):
    conv = Conversation(
        "c",
        "t",
        [Turn(f"q{i}?", f"rewritten q{i}?", f"a{i}") for i in range(total_turns)],
    )
    assert len(generate_sample_skeletons(conv)) == expected


def test_single_turn_conversation_skipped_with_warning(caplog):
    conv = Conversation("solo", "t", [Turn("q?", "q?", "a")])
    with caplog.at_level("WARNING"):
        assert generate_sample_skeletons(conv) == []
    assert "solo" in caplog.text


def test_t2_skeleton_has_empty_history():
    conv = Conversation("c", "t", [Turn("q1?", "r1?", "a1"), Turn("q2?", "r2?", "a2")])
    (skeleton,) = generate_sample_skeletons(conv)
    assert skeleton.context.history == []
    assert skeleton.context.current_question == "r1?"
    assert skeleton.valid_text == "r2?"


def test_reference_dialog_fourth_turn_valid_text(godel_conversation):
    skeletons = generate_sample_skeletons(godel_conversation)
    assert skeletons[3].turn_index == 4
    assert skeletons[3].valid_text == "What were Kurt Gödel's interests?"


def test_skeleton_questions_reproduce_turn_order(godel_conversation):
    rewritten = [t.question_rewritten for t in godel_conversation.turns]
    for skeleton in generate_sample_skeletons(godel_conversation):
        chain = (
            [q for q, _ in skeleton.context.history]
            + [skeleton.context.current_question, skeleton.valid_text]
        )
        assert chain == rewritten[: skeleton.turn_index + 1]


def test_round_trip(tmp_path, godel_conversation, ronaldo_conversation):
    path = tmp_path / "corpus.jsonl"
    original = [godel_conversation, ronaldo_conversation]
    write_conversations(str(path), original)
    once, errors = read_conversations(str(path))
    assert not errors
    write_conversations(str(path), once)
    twice, errors = read_conversations(str(path))
    assert not errors
    assert twice == original


def test_joined_text_caps_answers():
    context_turns = [("q one?", "word " * 100)]
    from fqkit.corpus import DialogContext

    ctx = DialogContext(history=context_turns, current_question="q two?", current_answer="a")
    joined = ctx.joined_text(max_answer_tokens=4)
    assert "q one?" in joined and "q two?" in joined
    assert joined.count("word") == 4


def test_joined_text_skips_empty_answers():
    from fqkit.corpus import DialogContext

    ctx = DialogContext(history=[("q1?", "")], current_question="q2?", current_answer="")
    assert ctx.joined_text() == "q1? q2?"
