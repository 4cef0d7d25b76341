import math

import numpy as np
import pytest

from autocc.metrics import (
    BertScoreTriple,
    DimensionMismatch,
    EmbeddedSentence,
    EmptyInput,
    EmptySentence,
    EmptySequence,
    MalformedTable,
    MissingUnkVector,
    ZeroVector,
    avg_cosine,
    bertscore,
    corpus_perplexity,
    embed_static,
    load_contextual_jsonl,
    load_static_embeddings,
    perplexity,
    save_static_embeddings,
)
from autocc.ngram import ScoredSequence


def scored(logprobs):
    return ScoredSequence(tokens=tuple(range(len(logprobs) + 1)), logprobs=tuple(logprobs))


def embedded(vectors, tokens=None):
    vectors = np.asarray(vectors, dtype=float)
    tokens = tuple(tokens) if tokens else tuple(f"t{i}" for i in range(len(vectors)))
    return EmbeddedSentence(tokens=tokens, vectors=vectors)


def brute_force_bertscore(ref_vecs, cand_vecs):
    """All-pairs double loop with plain Python floats: the independent oracle."""

    def unit(v):
        norm = math.sqrt(sum(x * x for x in v))
        return [x / norm for x in v]

    ref = [unit(v) for v in ref_vecs]
    cand = [unit(v) for v in cand_vecs]

    def dot(a, b):
        return sum(x * y for x, y in zip(a, b))

    recall = sum(max(dot(r, c) for c in cand) for r in ref) / len(ref)
    precision = sum(max(dot(r, c) for r in ref) for c in cand) / len(cand)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return recall, precision, f1


# -- perplexity -----------------------------------------------------------------


def test_constant_half_probability_gives_ppl_2():
    for length in (1, 3, 10):
        assert perplexity(scored([math.log(0.5)] * length)) == pytest.approx(2.0, abs=1e-12)


def test_hand_computed_geometric_mean():
    assert perplexity(scored([math.log(0.1), math.log(0.2), math.log(0.4)])) == pytest.approx(
        5.0, abs=1e-9
    )


@pytest.mark.parametrize("v", [10, 100, 1000])
def test_uniform_model_ppl_equals_vocab_size(v):
    assert perplexity(scored([math.log(1 / v)] * 6)) == pytest.approx(v, abs=1e-9)


def test_perplexity_permutation_invariant():
    logprobs = [math.log(p) for p in (0.9, 0.11, 0.42, 0.3)]
    assert perplexity(scored(logprobs)) == pytest.approx(
        perplexity(scored(list(reversed(logprobs)))), abs=1e-12
    )


def test_perplexity_at_least_one_and_empty_rejected():
    assert perplexity(scored([math.log(0.99)])) >= 1.0
    with pytest.raises(EmptySequence):
        perplexity(ScoredSequence(tokens=(0,), logprobs=()))


def test_corpus_perplexity_single_sequence_degenerate():
    seq = scored([math.log(0.25), math.log(0.5)])
    assert corpus_perplexity([seq]) == pytest.approx(perplexity(seq), abs=1e-12)


def test_corpus_perplexity_identical_multisets():
    a = scored([math.log(0.2), math.log(0.6)])
    b = scored([math.log(0.6), math.log(0.2)])
    assert corpus_perplexity([a, b]) == pytest.approx(perplexity(a), abs=1e-12)


def test_corpus_perplexity_pools_tokens():
    a = scored([math.log(0.5)])
    b = scored([math.log(0.125)])
    assert corpus_perplexity([a, b]) == pytest.approx(4.0, abs=1e-9)


def test_corpus_perplexity_empty_rejected():
    with pytest.raises(EmptyInput):
        corpus_perplexity([])


# -- bertscore --------------------------------------------------------------------


def test_identical_sentences_score_one():
    sent = embedded([[0.3, 0.4], [1.0, -2.0], [0.0, 5.0]])
    triple = bertscore(sent, sent)
    assert triple.recall == pytest.approx(1.0, abs=1e-12)
    assert triple.precision == pytest.approx(1.0, abs=1e-12)
    assert triple.f1 == pytest.approx(1.0, abs=1e-12)


def test_hand_computed_asymmetric_case():
    reference = embedded([[1.0, 0.0], [0.0, 1.0]])
    candidate = embedded([[1.0, 0.0]])
    triple = bertscore(reference, candidate)
    assert triple.recall == pytest.approx(0.5, abs=1e-12)
    assert triple.precision == pytest.approx(1.0, abs=1e-12)
    assert triple.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_swapped_arguments_swap_r_and_p():
    reference = embedded([[1.0, 0.0], [0.0, 1.0]])
    candidate = embedded([[1.0, 0.0]])
    triple = bertscore(candidate, reference)
    assert triple.recall == pytest.approx(1.0, abs=1e-12)
    assert triple.precision == pytest.approx(0.5, abs=1e-12)
    assert triple.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_greedy_matching_equals_brute_force_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        k, l, d = rng.integers(1, 7), rng.integers(1, 7), rng.integers(1, 9)
        ref_vecs = rng.normal(size=(k, d))
        cand_vecs = rng.normal(size=(l, d))
        triple = bertscore(embedded(ref_vecs), embedded(cand_vecs))
        recall, precision, f1 = brute_force_bertscore(ref_vecs.tolist(), cand_vecs.tolist())
        assert triple.recall == pytest.approx(recall, abs=1e-9)
        assert triple.precision == pytest.approx(precision, abs=1e-9)
        assert triple.f1 == pytest.approx(f1, abs=1e-9)


def test_duality_recall_of_xy_is_precision_of_yx():
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = embedded(rng.normal(size=(int(rng.integers(1, 6)), 4)))
        y = embedded(rng.normal(size=(int(rng.integers(1, 6)), 4)))
        assert bertscore(x, y).recall == bertscore(y, x).precision
        assert bertscore(x, y).precision == bertscore(y, x).recall


def test_unit_normalization_keeps_scores_bounded():
    reference = embedded([[100.0, 0.0], [0.0, 0.001]])
    candidate = embedded([[-3.0, 4.0]])
    triple = bertscore(reference, candidate)
    for value in (triple.recall, triple.precision, triple.f1):
        assert -1.0 <= value <= 1.0


def test_f1_zero_when_precision_plus_recall_zero():
    reference = embedded([[1.0, 0.0]])
    candidate = embedded([[0.0, 1.0]])
    triple = bertscore(reference, candidate)
    assert triple.recall == pytest.approx(0.0, abs=1e-12)
    assert triple.f1 == 0.0


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        bertscore(embedded([[1.0, 0.0]]), embedded([[1.0, 0.0, 0.0]]))


def test_empty_sentence_rejected():
    with pytest.raises(EmptySentence):
        EmbeddedSentence(tokens=(), vectors=np.zeros((0, 3)))


# -- avg_cosine ----------------------------------------------------------------------


def test_cosine_identity():
    sent = embedded([[0.2, 0.8], [1.0, 1.0]])
    assert avg_cosine(sent, sent) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal_means():
    assert avg_cosine(embedded([[1.0, 0.0]]), embedded([[0.0, 1.0]])) == pytest.approx(
        0.0, abs=1e-12
    )


def test_cosine_scale_invariance_and_symmetry():
    rng = np.random.default_rng(11)
    a_vecs = rng.normal(size=(4, 6))
    b_vecs = rng.normal(size=(3, 6))
    a, b = embedded(a_vecs), embedded(b_vecs)
    assert avg_cosine(a, b) == pytest.approx(avg_cosine(b, a), abs=1e-12)
    scaled = embedded(b_vecs * 7.3)
    assert avg_cosine(a, scaled) == pytest.approx(avg_cosine(a, b), abs=1e-9)


def test_cosine_zero_mean_vector_rejected():
    degenerate = embedded([[1.0, 0.0], [-1.0, 0.0]])  # mean is the zero vector
    with pytest.raises(ZeroVector):
        avg_cosine(degenerate, embedded([[1.0, 0.0]]))


def test_mean_vector_matches_componentwise_mean():
    vecs = np.random.default_rng(5).normal(size=(5, 3))
    sent = embedded(vecs)
    assert np.max(np.abs(sent.mean_vector - vecs.mean(axis=0))) <= 1e-12


# -- static table ------------------------------------------------------------------------


@pytest.fixture
def table_path(tmp_path):
    path = tmp_path / "table.tsv"
    save_static_embeddings(
        {"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0]), "<unk>": np.array([0.5, 0.5])},
        dim=2,
        path=path,
    )
    return path


def test_static_lookup_and_mean(table_path):
    table = load_static_embeddings(table_path)
    sent = embed_static(["a", "b"], table)
    assert np.array_equal(sent.vectors, [[1.0, 0.0], [0.0, 1.0]])
    assert sent.mean_vector == pytest.approx([0.5, 0.5])


def test_static_oov_falls_back_to_unk(table_path):
    table = load_static_embeddings(table_path)
    sent = embed_static(["zzz"], table)
    assert np.array_equal(sent.vectors, [[0.5, 0.5]])


def test_empty_table_file_rejected(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(MalformedTable):
        load_static_embeddings(path)


def test_table_without_unk_rejected(tmp_path):
    path = tmp_path / "nounk.tsv"
    path.write_text("#dim 2\na\t1.0 0.0\n", encoding="utf-8")
    with pytest.raises(MissingUnkVector):
        load_static_embeddings(path)


def test_table_dimension_mismatch_rejected(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("#dim 2\n<unk>\t1.0 0.0 0.0\n", encoding="utf-8")
    with pytest.raises(MalformedTable):
        load_static_embeddings(path)


def test_table_non_numeric_rejected(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("#dim 2\n<unk>\tone two\n", encoding="utf-8")
    with pytest.raises(MalformedTable):
        load_static_embeddings(path)


# -- contextual jsonl ------------------------------------------------------------------------


def test_contextual_jsonl_round_trip(tmp_path):
    import json

    path = tmp_path / "ctx.jsonl"
    rows = [
        {"id": "chest pain now", "tokens": ["chest", "pain", "now"], "vectors": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]},
        {"id": "abd pain", "tokens": ["abd", "pain"], "vectors": [[0.5, 0.5], [0.25, 0.75]]},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    mapping = load_contextual_jsonl(path)
    assert set(mapping) == {"chest pain now", "abd pain"}
    assert mapping["abd pain"].tokens == ("abd", "pain")
    triple = bertscore(mapping["chest pain now"], mapping["chest pain now"])
    assert triple.f1 == pytest.approx(1.0, abs=1e-12)
