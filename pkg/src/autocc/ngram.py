"""Count-based n-gram language model with interpolated absolute discounting.

Every order from n down to unigrams shares one discount value; the recursion
bottoms out at a uniform distribution over the vocabulary, so every token has
strictly positive probability in every context. The model is immutable once
trained and safe for concurrent readers.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AutoccError
from .preprocess import Vocabulary, tokenize_words

MODEL_FORMAT_VERSION = 1


class EmptyCorpus(AutoccError):
    code = "empty_corpus"


class VocabMismatch(AutoccError):
    code = "vocab_mismatch"


@dataclass(frozen=True)
class ScoredSequence:
    """Token ids x0..xt plus the conditional log-likelihood of each x_i, i>=1."""

    tokens: tuple[int, ...]
    logprobs: tuple[float, ...]

    def __post_init__(self):
        if len(self.logprobs) != len(self.tokens) - 1:
            raise ValueError("need exactly len(tokens)-1 logprobs")


class NGramModel:
    def __init__(self, order: int, discount: float, vocab: Vocabulary):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not 0.0 < discount < 1.0:
            raise ValueError("discount must be in (0, 1)")
        self.order = order
        self.discount = discount
        self.vocab = vocab
        # counts[k][context tuple of length k-1][word id] for k = 1..order
        self.counts: list[dict[tuple[int, ...], dict[int, int]]] = [
            {} for _ in range(order + 1)
        ]
        self._uniform = np.full(len(vocab), 1.0 / len(vocab))
        self._unigram_cache: np.ndarray | None = None

    # -- training ----------------------------------------------------------

    def _observe(self, ids: list[int]) -> None:
        seq = [self.vocab.sos_id] * (self.order - 1) + ids + [self.vocab.eos_id]
        for i in range(self.order - 1, len(seq)):
            target = seq[i]
            for k in range(1, self.order + 1):
                ctx = tuple(seq[i - (k - 1) : i])
                table = self.counts[k].setdefault(ctx, {})
                table[target] = table.get(target, 0) + 1

    @classmethod
    def train(
        cls,
        sentences: list[list[str]] | list[tuple[str, ...]],
        order: int = 3,
        discount: float = 0.75,
        vocab: Vocabulary | None = None,
    ) -> "NGramModel":
        """Collect counts over word sequences; builds the vocabulary from the
        sentences when none is supplied."""
        sentences = [list(s) for s in sentences if s]
        if not sentences:
            raise EmptyCorpus("no non-empty training sentences")
        if vocab is None:
            from .preprocess import RESERVED_TOKENS

            seen: dict[str, int] = {}
            for s in sentences:
                for w in s:
                    seen[w] = seen.get(w, 0) + 1
            ordered = sorted(seen, key=lambda t: (-seen[t], t))
            vocab = Vocabulary(list(RESERVED_TOKENS) + [t for t in ordered])
        model = cls(order=order, discount=discount, vocab=vocab)
        for words in sentences:
            model._observe([vocab.id(w) for w in words])
        model._unigram_cache = None
        return model

    # -- inference ---------------------------------------------------------

    def _dist_from_level(self, k: int, ctx: tuple[int, ...]) -> np.ndarray:
        if k == 0:
            return self._uniform
        table = self.counts[k].get(ctx)
        if not table:
            return self._dist_from_level(k - 1, ctx[1:])
        total = sum(table.values())
        lower = self._dist_from_level(k - 1, ctx[1:])
        dist = (self.discount * len(table) / total) * lower
        for word, count in table.items():
            dist[word] += (count - self.discount) / total
        return dist

    def next_dist(self, context: list[int] | tuple[int, ...]) -> np.ndarray:
        """Distribution over the vocabulary given the longest usable context
        suffix; short contexts are padded with <sos> on the left."""
        ctx = list(context)[-(self.order - 1) :] if self.order > 1 else []
        if len(ctx) < self.order - 1:
            ctx = [self.vocab.sos_id] * (self.order - 1 - len(ctx)) + ctx
        if self.order == 1:
            if self._unigram_cache is None:
                self._unigram_cache = self._dist_from_level(1, ())
            return self._unigram_cache.copy()
        return self._dist_from_level(self.order, tuple(ctx))

    def score_ids(self, ids: list[int]) -> ScoredSequence:
        """Log-likelihood of [<sos>] + ids + [<eos>] position by position."""
        tokens = [self.vocab.sos_id] + list(ids) + [self.vocab.eos_id]
        logprobs = []
        for i in range(1, len(tokens)):
            dist = self.next_dist(tokens[:i])
            logprobs.append(float(np.log(dist[tokens[i]])))
        return ScoredSequence(tokens=tuple(tokens), logprobs=tuple(logprobs))

    def score(self, sentence: str | list[str]) -> ScoredSequence:
        words = tokenize_words(sentence) if isinstance(sentence, str) else list(sentence)
        return self.score_ids([self.vocab.id(w) for w in words])

    # -- persistence -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "order": self.order,
            "discount": self.discount,
            "vocab": self.vocab.tokens,
            "vocab_hash": self.vocab.content_hash(),
            "counts": {
                str(k): {
                    " ".join(map(str, ctx)): {str(w): c for w, c in table.items()}
                    for ctx, table in self.counts[k].items()
                }
                for k in range(1, self.order + 1)
            },
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise AutoccError(f"unsupported model format: {payload.get('format_version')}")
        vocab = Vocabulary(payload["vocab"])
        if vocab.content_hash() != payload["vocab_hash"]:
            raise VocabMismatch("stored vocab hash does not match vocabulary contents")
        model = cls(order=payload["order"], discount=payload["discount"], vocab=vocab)
        for k_str, contexts in payload["counts"].items():
            k = int(k_str)
            for ctx_key, table in contexts.items():
                ctx = tuple(int(t) for t in ctx_key.split()) if ctx_key else ()
                model.counts[k][ctx] = {int(w): c for w, c in table.items()}
        return model

    def model_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.order}|{self.discount}|{self.vocab.content_hash()}".encode())
        for k in range(1, self.order + 1):
            for ctx in sorted(self.counts[k]):
                table = self.counts[k][ctx]
                h.update(repr((ctx, sorted(table.items()))).encode())
        return h.hexdigest()
