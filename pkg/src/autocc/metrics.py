"""Evaluation metrics over supplied embeddings and log-likelihoods.

Perplexity is the exponential of the average negative log-likelihood.
BERTScore pairs every token of one sentence with its best cosine match in
the other (token vectors are unit-normalized here, so scores stay within
[-1, 1]). Sentence cosine similarity compares the arithmetic means of the
two word-vector sequences. Embeddings are always consumed, never computed:
they come from a static lookup table, a recorded JSONL file, or the wire
protocol.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AutoccError
from .ngram import ScoredSequence


class EmptySequence(AutoccError):
    code = "empty_sequence"


class EmptyInput(AutoccError):
    code = "empty_input"


class EmptySentence(AutoccError):
    code = "empty_sentence"


class DimensionMismatch(AutoccError):
    code = "dimension_mismatch"


class ZeroVector(AutoccError):
    code = "zero_vector"


class MalformedTable(AutoccError):
    code = "malformed_table"


class MissingUnkVector(AutoccError):
    code = "missing_unk_vector"


@dataclass(frozen=True)
class EmbeddedSentence:
    tokens: tuple[str, ...]
    vectors: np.ndarray  # shape (len(tokens), D)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        object.__setattr__(self, "vectors", vectors)
        if len(self.tokens) == 0:
            raise EmptySentence("embedded sentence needs at least one token")
        if vectors.ndim != 2 or vectors.shape[0] != len(self.tokens):
            raise DimensionMismatch(
                f"{len(self.tokens)} tokens but vector array of shape {vectors.shape}"
            )

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def mean_vector(self) -> np.ndarray:
        return self.vectors.mean(axis=0)


@dataclass(frozen=True)
class BertScoreTriple:
    recall: float
    precision: float
    f1: float


def perplexity(scored: ScoredSequence) -> float:
    """exp of the average negative log-likelihood over the scored tokens."""
    if not scored.logprobs:
        raise EmptySequence("no scored tokens")
    return math.exp(-sum(scored.logprobs) / len(scored.logprobs))


def corpus_perplexity(scored_list: list[ScoredSequence]) -> float:
    """Pooled-token perplexity: one exponent over all tokens of all sequences,
    not a mean of per-sentence perplexities."""
    if not scored_list:
        raise EmptyInput("no scored sequences")
    total = 0.0
    count = 0
    for scored in scored_list:
        if not scored.logprobs:
            raise EmptySequence("sequence with no scored tokens")
        total += sum(scored.logprobs)
        count += len(scored.logprobs)
    return math.exp(-total / count)


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ZeroVector("token vector with near-zero norm cannot be normalized")
    return vectors / norms


def bertscore(reference: EmbeddedSentence, candidate: EmbeddedSentence) -> BertScoreTriple:
    """Greedy-matching recall/precision/F1 over unit-normalized token vectors.

    Recall walks the reference tokens, precision the candidate tokens; each
    takes the best cosine match on the other side.
    """
    if reference.dim != candidate.dim:
        raise DimensionMismatch(f"reference dim {reference.dim} != candidate dim {candidate.dim}")
    ref = _unit_rows(reference.vectors)
    cand = _unit_rows(candidate.vectors)
    sim = ref @ cand.T  # (k, l)
    recall = float(sim.max(axis=1).mean())
    precision = float(sim.max(axis=0).mean())
    denom = precision + recall
    f1 = 0.0 if denom == 0 else 2.0 * precision * recall / denom
    return BertScoreTriple(recall=recall, precision=precision, f1=float(f1))


def avg_cosine(reference: EmbeddedSentence, candidate: EmbeddedSentence) -> float:
    """Cosine similarity of the two sentences' mean word vectors."""
    if reference.dim != candidate.dim:
        raise DimensionMismatch(f"reference dim {reference.dim} != candidate dim {candidate.dim}")
    a = reference.mean_vector
    b = candidate.mean_vector
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a < 1e-12 or norm_b < 1e-12:
        raise ZeroVector("mean vector with near-zero norm")
    return float(np.dot(a, b) / (norm_a * norm_b))


# -- embedding sources -------------------------------------------------------


class StaticEmbeddingTable:
    """Token -> vector lookup with a mandatory <unk> fallback row.

    File format: first line ``#dim D``, then one line per token:
    token TAB D space-separated decimal floats.
    """

    UNK = "<unk>"

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        if self.UNK not in vectors:
            raise MissingUnkVector("static table must define an <unk> vector")
        self.vectors = vectors
        self.dim = dim

    def lookup(self, token: str) -> np.ndarray:
        return self.vectors.get(token, self.vectors[self.UNK])


def load_static_embeddings(path: str | Path) -> StaticEmbeddingTable:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#dim"):
        raise MalformedTable(f"{path}: first line must be '#dim D'")
    try:
        dim = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise MalformedTable(f"{path}: unreadable dimension header {lines[0]!r}") from exc
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedTable(f"{path}:{lineno}: expected 'token<TAB>floats'")
        token, floats = parts
        try:
            vec = np.array([float(x) for x in floats.split()], dtype=float)
        except ValueError as exc:
            raise MalformedTable(f"{path}:{lineno}: non-numeric vector entry") from exc
        if vec.shape != (dim,):
            raise MalformedTable(f"{path}:{lineno}: expected {dim} floats, got {len(vec)}")
        vectors[token] = vec
    if not vectors:
        raise MalformedTable(f"{path}: no vectors")
    return StaticEmbeddingTable(vectors, dim)


def embed_static(words: list[str] | tuple[str, ...], table: StaticEmbeddingTable) -> EmbeddedSentence:
    if not words:
        raise EmptySentence("cannot embed an empty word list")
    return EmbeddedSentence(
        tokens=tuple(words), vectors=np.stack([table.lookup(w) for w in words])
    )


def save_static_embeddings(table: dict[str, np.ndarray], dim: int, path: str | Path) -> None:
    lines = [f"#dim {dim}"]
    for token, vec in table.items():
        lines.append(token + "\t" + " ".join(repr(float(x)) for x in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_contextual_jsonl(path: str | Path) -> dict[str, EmbeddedSentence]:
    """Recorded contextual embeddings: one JSON object per line with
    {id, tokens, vectors}; the id keys the lookup (the harness uses the
    exact sentence text as id)."""
    sentences: dict[str, EmbeddedSentence] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedTable(f"{path}:{lineno}: invalid JSON") from exc
        sentences[str(obj["id"])] = EmbeddedSentence(
            tokens=tuple(obj["tokens"]), vectors=np.asarray(obj["vectors"], dtype=float)
        )
    return sentences
