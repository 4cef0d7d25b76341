import pytest

from autocc.ngram import NGramModel

from helpers import SAMPLE_TSV, synthetic_sentences


@pytest.fixture(scope="session")
def toy_mle_model() -> NGramModel:
    """Two-sentence bigram corpus at the MLE limit (discount -> 0)."""
    return NGramModel.train([["a", "b"], ["a", "c"]], order=2, discount=1e-9)


@pytest.fixture(scope="session")
def small_model() -> NGramModel:
    return NGramModel.train(synthetic_sentences(200, seed=1), order=3, discount=0.75)


@pytest.fixture
def sample_tsv(tmp_path):
    path = tmp_path / "corpus.tsv"
    path.write_text(SAMPLE_TSV, encoding="utf-8")
    return path
