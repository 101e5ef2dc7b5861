from fqkit.tokenizer import match_case, normalize_ws, token_spans, tokenize, truncate_tokens


def test_casefold_and_punctuation_split():
    assert tokenize("Where was Kurt Gödel born?") == ["where", "was", "kurt", "gödel", "born"]


def test_internal_apostrophe_and_hyphen_kept():
    assert tokenize("Kurt Gödel's jack-of-all-trades") == ["kurt", "gödel's", "jack-of-all-trades"]


def test_spans_index_original_text():
    text = "Where was Kurt Gödel born?"
    spans = token_spans(text)
    assert spans[2] == ("kurt", 10, 14)
    assert text[spans[3][1] : spans[3][2]] == "Gödel"


def test_no_letters():
    assert tokenize("??!") == []
    assert tokenize("") == []


def test_truncate_tokens():
    assert truncate_tokens("one two three four", 2) == "one two"
    assert truncate_tokens("one two", 10) == "one two"
    assert truncate_tokens("one two", None) == "one two"
    assert truncate_tokens("one two", 0) == ""


def test_truncate_keeps_original_spelling():
    assert truncate_tokens("Alpha, Beta; gamma", 2) == "Alpha, Beta"


def test_normalize_ws():
    assert normalize_ws("  a \t b\n") == "a b"


def test_match_case():
    assert match_case("Kurt", "curt") == "Curt"
    assert match_case("USA", "nato") == "NATO"
    assert match_case("lower", "other") == "other"
