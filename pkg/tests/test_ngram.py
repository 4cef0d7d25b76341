import math
from collections import Counter, defaultdict

import numpy as np
import pytest

from autocc.metrics import perplexity
from autocc.ngram import EmptyCorpus, NGramModel, ScoredSequence, VocabMismatch

from helpers import synthetic_sentences


def brute_mle_events(sentences, vocab, order):
    """Independent count table: (order-1)-gram context -> next-token counts."""
    events = defaultdict(Counter)
    for words in sentences:
        seq = [vocab.sos_id] * (order - 1) + [vocab.id(w) for w in words] + [vocab.eos_id]
        for i in range(order - 1, len(seq)):
            events[tuple(seq[i - (order - 1) : i])][seq[i]] += 1
    return events


def test_mle_limit_bigram_probabilities(toy_mle_model):
    m = toy_mle_model
    assert m.next_dist([])[m.vocab.id("a")] == pytest.approx(1.0, abs=1e-8)
    assert m.next_dist([m.vocab.id("a")])[m.vocab.id("b")] == pytest.approx(0.5, abs=1e-8)


def test_unigram_mle_limit():
    m = NGramModel.train([["a", "b"], ["a", "c"]], order=1, discount=1e-9)
    dist = m.next_dist([])
    # tokens: a,a,b,c plus two <eos> -> 6 events
    assert dist[m.vocab.id("a")] == pytest.approx(2 / 6, abs=1e-8)
    assert dist[m.vocab.id("b")] == pytest.approx(1 / 6, abs=1e-8)
    assert dist[m.vocab.eos_id] == pytest.approx(2 / 6, abs=1e-8)


def test_unseen_bigram_gets_interpolation_mass():
    d = 0.75
    m = NGramModel.train([["a", "b"], ["a", "c"]], order=2, discount=d)
    vocab = m.vocab
    dist = m.next_dist([vocab.id("b")])
    # hand-computed: context (b,) saw only <eos>, once
    unigram_total = 6
    unigram_distinct = 4
    v = len(vocab)

    def unigram(token_id, count):
        return max(count - d, 0) / unigram_total + d * unigram_distinct / unigram_total / v

    p_c = d * 1 / 1 * unigram(vocab.id("c"), 1)
    assert dist[vocab.id("c")] == pytest.approx(p_c, rel=1e-12)
    assert dist[vocab.id("c")] > 0
    assert dist.sum() == pytest.approx(1.0, abs=1e-9)


def test_fully_unseen_context_backs_off_to_unigram():
    m = NGramModel.train([["a", "b"], ["a", "c"]], order=2, discount=0.75)
    unseen = m.next_dist([m.vocab.id("c")])  # (c,) has <eos> only... pick truly unseen
    unk_context = m.next_dist([m.vocab.unk_id])
    # <unk> never appeared as context: distribution equals the unigram level
    base = m._dist_from_level(1, ())
    assert np.allclose(unk_context, base, atol=1e-15)
    assert unseen.sum() == pytest.approx(1.0, abs=1e-9)


def test_next_dist_deterministic(small_model):
    ctx = [small_model.vocab.id("chest"), small_model.vocab.id("pain")]
    assert np.array_equal(small_model.next_dist(ctx), small_model.next_dist(ctx))


def test_score_matches_hand_computation(toy_mle_model):
    scored = toy_mle_model.score(["a", "b"])
    assert len(scored.logprobs) == 3  # a|<sos>, b|a, <eos>|b
    assert perplexity(scored) == pytest.approx(2 ** (1 / 3), abs=1e-9)


def test_score_empty_sentence_single_logprob(small_model):
    scored = small_model.score([])
    assert len(scored.logprobs) == 1
    assert scored.tokens == (small_model.vocab.sos_id, small_model.vocab.eos_id)


def test_scored_sequence_invariants(small_model):
    scored = small_model.score(["chest", "pain", "x", "2"])
    assert len(scored.logprobs) == len(scored.tokens) - 1
    assert all(lp <= 0 for lp in scored.logprobs)


def test_score_consistent_with_next_dist(small_model):
    scored = small_model.score(["pt", "reports", "back", "pain"])
    for i in range(1, len(scored.tokens)):
        dist = small_model.next_dist(list(scored.tokens[:i]))
        assert math.exp(scored.logprobs[i - 1]) == pytest.approx(dist[scored.tokens[i]], rel=1e-12)


def test_normalization_over_random_contexts(small_model):
    rng = np.random.default_rng(0)
    v = len(small_model.vocab)
    for _ in range(1000):
        ctx = rng.integers(0, v, size=rng.integers(0, 4)).tolist()
        total = small_model.next_dist(ctx).sum()
        assert abs(total - 1.0) <= 1e-9


def test_smoothing_positivity(small_model):
    rng = np.random.default_rng(1)
    v = len(small_model.vocab)
    smallest = 1.0
    for _ in range(200):
        ctx = rng.integers(0, v, size=rng.integers(0, 4)).tolist()
        smallest = min(smallest, small_model.next_dist(ctx).min())
    assert smallest > 0


def test_mle_limit_matches_brute_force_ratios():
    sentences = synthetic_sentences(20, seed=5)
    m = NGramModel.train(sentences, order=3, discount=1e-9)
    events = brute_mle_events(sentences, m.vocab, order=3)
    checked = 0
    for ctx, table in events.items():
        dist = m.next_dist(list(ctx))
        total = sum(table.values())
        for token, count in table.items():
            assert dist[token] == pytest.approx(count / total, abs=1e-6)
            checked += 1
    assert checked > 20


def test_empty_corpus_rejected():
    with pytest.raises(EmptyCorpus):
        NGramModel.train([], order=2)
    with pytest.raises(EmptyCorpus):
        NGramModel.train([[]], order=2)


def test_bad_hyperparameters_rejected():
    with pytest.raises(ValueError):
        NGramModel(order=0, discount=0.5, vocab=None)
    sentences = [["a", "b", "c", "d"]]
    for discount in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            NGramModel.train(sentences, order=2, discount=discount)


def test_save_load_round_trip(tmp_path, small_model):
    path = tmp_path / "model.json"
    small_model.save(path)
    again = NGramModel.load(path)
    assert again.order == small_model.order
    assert again.vocab.tokens == small_model.vocab.tokens
    ctx = [small_model.vocab.id("left"), small_model.vocab.id("knee")]
    assert np.array_equal(again.next_dist(ctx), small_model.next_dist(ctx))
    assert again.model_hash() == small_model.model_hash()


def test_load_rejects_vocab_hash_mismatch(tmp_path, small_model):
    path = tmp_path / "model.json"
    small_model.save(path)
    tampered = path.read_text().replace('"pain"', '"PAIN"', 1)
    path.write_text(tampered)
    with pytest.raises(VocabMismatch):
        NGramModel.load(path)


def test_scored_sequence_arity_checked():
    with pytest.raises(ValueError):
        ScoredSequence(tokens=(0, 1, 2), logprobs=(-0.5,))
