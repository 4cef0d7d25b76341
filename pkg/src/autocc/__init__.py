"""Chief-complaint autocompletion: preprocessing pipeline, n-gram backend,
decoding engine, evaluation metrics, and the HTTP suggestion service."""

__version__ = "0.1.0"

from .corpus import CCRecord, load_corpus, scan_placeholders
from .generate import GenerationConfig, build_fewshot_prompt, complete
from .metrics import avg_cosine, bertscore, corpus_perplexity, perplexity
from .ngram import NGramModel
from .preprocess import Vocabulary, run_pipeline, write_artifacts

__all__ = [
    "CCRecord",
    "GenerationConfig",
    "NGramModel",
    "Vocabulary",
    "avg_cosine",
    "bertscore",
    "build_fewshot_prompt",
    "complete",
    "corpus_perplexity",
    "load_corpus",
    "perplexity",
    "run_pipeline",
    "scan_placeholders",
    "write_artifacts",
]
