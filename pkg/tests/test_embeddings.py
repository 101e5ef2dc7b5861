import random

import numpy as np
import pytest

from fqkit.embeddings import (
    SentenceVectorTable,
    VectorStore,
    cosine,
    embed_mean,
    load_sentence_vectors,
    load_vectors,
    vocabulary_coverage,
)
from fqkit.jsonl import write_jsonl


def _store(table: dict[str, list[float]], dim=2) -> VectorStore:
    return VectorStore(dim, {k: np.asarray(v, dtype=np.float64) for k, v in table.items()})


def test_load_vectors(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("alpha 1.0 0.0 0.5\nbeta 0.0 1.0 0.25\n", encoding="utf-8")
    store = load_vectors(str(path))
    assert len(store) == 2
    assert store.dimension == 3
    assert store.get("alpha").tolist() == [1.0, 0.0, 0.5]


def test_load_vectors_rejects_wrong_arity(tmp_path, caplog):
    path = tmp_path / "vectors.txt"
    path.write_text("alpha 1.0 0.0\nshort 1.0\nbeta 0.0 1.0\n", encoding="utf-8")
    with caplog.at_level("WARNING"):
        store = load_vectors(str(path))
    assert len(store) == 2
    assert "short" not in store
    assert "rejected" in caplog.text


def test_load_vectors_duplicate_first_wins(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("tok 1.0\ntok 2.0\n", encoding="utf-8")
    store = load_vectors(str(path))
    assert store.get("tok").tolist() == [1.0]


def test_load_vectors_expected_dim_mismatch_errors(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("alpha 1.0 0.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_vectors(str(path), expected_dim=300)


def test_embed_mean_arithmetic():
    store = _store({"a": [1.0, 0.0], "b": [0.0, 1.0]})
    pooled = embed_mean("a b", store)
    assert pooled.vector.tolist() == [0.5, 0.5]
    assert pooled.token_count == 2
    assert pooled.oov_count == 0


def test_oov_counts_in_denominator():
    store = _store({"a": [2.0, 4.0]})
    pooled = embed_mean("a unknown", store)
    assert pooled.vector.tolist() == [1.0, 2.0]
    assert pooled.oov_count == 1


def test_all_oov_is_zero_vector():
    store = _store({"a": [1.0, 1.0]})
    pooled = embed_mean("x y z", store)
    assert pooled.vector.tolist() == [0.0, 0.0]
    assert pooled.oov_count == 3


def test_empty_text():
    store = _store({"a": [1.0, 1.0]})
    pooled = embed_mean("", store)
    assert pooled.token_count == 0
    assert pooled.vector.tolist() == [0.0, 0.0]


def test_mean_is_order_insensitive():
    rng = random.Random(3)
    store = _store({t: [rng.random(), rng.random()] for t in "abcdef"})
    tokens = list("a b c d e f oov".split())
    rng.shuffle(tokens)
    baseline = embed_mean("a b c d e f oov", store).vector
    shuffled = embed_mean(" ".join(tokens), store).vector
    assert np.allclose(baseline, shuffled)


def test_cosine_identity_orthogonal_zero():
    v = np.asarray([3.0, 4.0])
    assert cosine(v, v) == pytest.approx(1.0)
    assert cosine(np.asarray([1.0, 0.0]), np.asarray([0.0, 1.0])) == 0.0
    assert cosine(np.zeros(2), v) == 0.0


def test_cosine_dimension_mismatch():
    with pytest.raises(ValueError):
        cosine(np.zeros(2), np.zeros(3))


def test_cosine_bounded():
    rng = np.random.default_rng(11)
    for _ in range(200):
        u = rng.standard_normal(8)
        v = rng.standard_normal(8)
        assert abs(cosine(u, v)) <= 1 + 1e-12


def test_sentence_vectors_round_trip(tmp_path):
    path = tmp_path / "sentences.jsonl"
    write_jsonl(
        str(path),
        [
            {"text": "Where was Kurt Gödel born?", "values": [1.0, 2.0]},
            {"text": "another  text", "values": [0.0, 1.0]},
        ],
    )
    table = load_sentence_vectors(str(path))
    assert table.lookup("Where was Kurt Gödel born?").tolist() == [1.0, 2.0]
    # canonical whitespace normalization
    assert table.lookup(" another text ").tolist() == [0.0, 1.0]


def test_sentence_vectors_unseen_text_is_none():
    table = SentenceVectorTable(2, {})
    assert table.lookup("unseen") is None


def test_sentence_vectors_dimension_inconsistency_errors(tmp_path):
    path = tmp_path / "sentences.jsonl"
    write_jsonl(
        str(path),
        [{"text": "a", "values": [1.0, 2.0]}, {"text": "b", "values": [1.0]}],
    )
    with pytest.raises(ValueError, match="dimension"):
        load_sentence_vectors(str(path))


def test_vocabulary_coverage():
    store = _store({"a": [1.0, 0.0], "b": [0.0, 1.0]})
    assert vocabulary_coverage(["a b", "a c"], store) == pytest.approx(3 / 4)
    assert vocabulary_coverage([], store) == 0.0
