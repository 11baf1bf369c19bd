import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdsent.embeddings import (
    UNKNOWN_TOKEN,
    EmbeddingTable,
    Vocabulary,
    assemble_table,
    load_pretrained,
    lookup,
    random_table,
    read_vector_file,
    target_vector,
)
from tdsent.errors import FormatError, ValidationError


def test_build_first_seen_order_with_unknown_first():
    vocab = Vocabulary.build([["b", "a"], ["a", "c"]])
    assert vocab.tokens == (UNKNOWN_TOKEN, "b", "a", "c")
    assert vocab.index_of("a") == 2


def test_build_lowercases_by_default():
    vocab = Vocabulary.build([["Great", "GREAT", "great"]])
    assert vocab.tokens == (UNKNOWN_TOKEN, "great")
    assert vocab.index_of("GrEaT") == 1


def test_build_case_sensitive_mode():
    vocab = Vocabulary.build([["Great", "great"]], lowercase=False)
    assert vocab.tokens == (UNKNOWN_TOKEN, "Great", "great")
    assert vocab.index_of("GREAT") == 0  # unseen casing -> unknown


def test_unknown_token_maps_to_index_zero():
    vocab = Vocabulary.build([["a"]])
    assert vocab.index_of("never-seen") == 0
    assert "never-seen" not in vocab
    assert "a" in vocab


def test_vocabulary_must_start_with_unknown():
    with pytest.raises(ValidationError):
        Vocabulary(("a", "b"))


def test_vocabulary_rejects_duplicates():
    with pytest.raises(ValidationError):
        Vocabulary((UNKNOWN_TOKEN, "a", "a"))


def test_vocabulary_save_load_round_trip(tmp_path):
    vocab = Vocabulary.build([["alpha", "beta", "gamma"]])
    path = tmp_path / "vocab.txt"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.tokens == vocab.tokens


def test_table_requires_2d_matrix():
    with pytest.raises(ValidationError):
        EmbeddingTable(np.zeros(4))


def test_table_copy_is_independent():
    table = EmbeddingTable(np.ones((2, 3)))
    dup = table.copy()
    dup.matrix[0, 0] = 9.0
    assert table.matrix[0, 0] == 1.0


# -- vector files ----------------------------------------------------------


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_read_vector_file_basic(tmp_path):
    path = write(tmp_path / "v.txt", "cat 1.0 2.0\ndog 3.0 4.0\n")
    dim, vectors = read_vector_file(path)
    assert dim == 2
    np.testing.assert_array_equal(vectors["cat"], [1.0, 2.0])
    np.testing.assert_array_equal(vectors["dog"], [3.0, 4.0])


def test_read_vector_file_skips_count_dim_header(tmp_path):
    path = write(tmp_path / "v.txt", "2 3\ncat 1.0 2.0 3.0\ndog 4 5 6\n")
    dim, vectors = read_vector_file(path)
    assert dim == 3 and set(vectors) == {"cat", "dog"}


def test_header_detection_requires_exactly_two_integers(tmp_path):
    # a 1-dim vector file whose first token could look numeric must not
    # lose its first line to header skipping
    path = write(tmp_path / "v.txt", "7 1.5\n8 2.5\n")
    dim, vectors = read_vector_file(path)
    assert dim == 1 and set(vectors) == {"7", "8"}


def test_read_vector_file_first_duplicate_wins(tmp_path):
    path = write(tmp_path / "v.txt", "cat 1.0\ncat 2.0\n")
    _, vectors = read_vector_file(path)
    assert vectors["cat"][0] == 1.0


def test_read_vector_file_dimension_mismatch_names_line(tmp_path):
    path = write(tmp_path / "v.txt", "cat 1.0 2.0\ndog 3.0\n")
    with pytest.raises(FormatError, match="line 2"):
        read_vector_file(path)


def test_read_vector_file_non_numeric_component(tmp_path):
    path = write(tmp_path / "v.txt", "cat 1.0 oops\n")
    with pytest.raises(FormatError, match="line 1"):
        read_vector_file(path)


def test_read_vector_file_token_without_components(tmp_path):
    path = write(tmp_path / "v.txt", "cat\n")
    with pytest.raises(FormatError):
        read_vector_file(path)


def test_read_vector_file_empty(tmp_path):
    path = write(tmp_path / "v.txt", "\n\n")
    with pytest.raises(FormatError):
        read_vector_file(path)


def test_read_vector_file_blank_lines_tolerated(tmp_path):
    path = write(tmp_path / "v.txt", "cat 1.0\n\ndog 2.0\n")
    _, vectors = read_vector_file(path)
    assert set(vectors) == {"cat", "dog"}


# -- table assembly ----------------------------------------------------------


def test_assemble_covered_tokens_get_file_vectors(tmp_path):
    vocab = Vocabulary.build([["cat", "dog", "newt"]])
    path = write(tmp_path / "v.txt", "cat 1.0 2.0\ndog 3.0 4.0\n")
    table = load_pretrained(path, vocab, seed=0)
    np.testing.assert_array_equal(table.matrix[vocab.index_of("cat")], [1.0, 2.0])
    np.testing.assert_array_equal(table.matrix[vocab.index_of("dog")], [3.0, 4.0])


def test_assemble_missing_and_unknown_rows_sampled_small(tmp_path):
    vocab = Vocabulary.build([["cat", "newt"]])
    path = write(tmp_path / "v.txt", "cat 1.0 2.0\n")
    table = load_pretrained(path, vocab, seed=0)
    for row in (0, vocab.index_of("newt")):
        assert np.all(np.abs(table.matrix[row]) <= 0.003)
        assert np.any(table.matrix[row] != 0.0)


def test_assemble_is_deterministic_in_seed(tmp_path):
    vocab = Vocabulary.build([["cat", "newt", "axolotl"]])
    path = write(tmp_path / "v.txt", "cat 1.0 2.0\n")
    a = load_pretrained(path, vocab, seed=3)
    b = load_pretrained(path, vocab, seed=3)
    c = load_pretrained(path, vocab, seed=4)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, c.matrix)


def test_assemble_lookup_respects_lowercasing():
    vocab = Vocabulary.build([["Cat"]])
    table = assemble_table(2, {"cat": np.array([5.0, 6.0])}, vocab, seed=0)
    np.testing.assert_array_equal(table.matrix[1], [5.0, 6.0])


def test_random_table_shape_range_and_dtype():
    vocab = Vocabulary.build([["a", "b"]])
    table = random_table(vocab, dim=4, seed=1, dtype=np.float32)
    assert table.matrix.shape == (3, 4)
    assert table.dtype == np.float32
    assert np.all(np.abs(table.matrix) <= 0.003)
    with pytest.raises(ValidationError):
        random_table(vocab, dim=0, seed=1)


def test_lookup_returns_column_of_dim_entries():
    vocab = Vocabulary.build([["a", "b"]])
    table = random_table(vocab, dim=5, seed=0)
    vec = lookup(table, vocab, "b")
    assert vec.shape == (5, 1)
    np.testing.assert_array_equal(vec.data[:, 0], table.matrix[2])


def test_lookup_unknown_token_gives_row_zero():
    vocab = Vocabulary.build([["a"]])
    table = random_table(vocab, dim=3, seed=0)
    np.testing.assert_array_equal(lookup(table, vocab, "zzz").data[:, 0],
                                  table.matrix[0])


def test_lookup_rejects_mismatched_table():
    vocab = Vocabulary.build([["a", "b"]])
    table = EmbeddingTable(np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        lookup(table, vocab, "a")


def test_target_vector_is_the_mean():
    vocab = Vocabulary.build([["a", "b"]])
    table = EmbeddingTable(np.array([[0.0, 0.0], [2.0, 4.0], [4.0, 8.0]]))
    vec = target_vector(table, vocab, ["a", "b"])
    np.testing.assert_array_equal(vec.data[:, 0], [3.0, 6.0])


def test_target_vector_empty_target_rejected():
    vocab = Vocabulary.build([["a"]])
    table = random_table(vocab, dim=2, seed=0)
    with pytest.raises(ValidationError):
        target_vector(table, vocab, [])


@given(st.permutations(["alpha", "beta", "gamma", "delta", "beta"]))
def test_target_vector_permutation_invariance(shuffled):
    vocab = Vocabulary.build([["alpha", "beta", "gamma", "delta"]])
    table = random_table(vocab, dim=6, seed=11)
    base = target_vector(table, vocab, ["alpha", "beta", "gamma", "delta", "beta"])
    # exact equality, not approximate: summation order is pinned internally
    assert np.array_equal(target_vector(table, vocab, shuffled).data, base.data)
