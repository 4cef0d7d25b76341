"""Decoding engine: temperature / top-k / top-p filtering over a backend's
next-word distributions, multi-candidate rollouts, and few-shot prompt
documents.

Filter order is fixed: temperature, then top-k, then top-p. All tie-breaks
are by ascending token id so runs reproduce bit-for-bit across platforms.
"""

import enum
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AutoccError
from .preprocess import EOS, tokenize_words


class EmptyPrefix(AutoccError):
    code = "empty_prefix"


class TooFewExamples(AutoccError):
    code = "too_few_examples"


class StopReason(str, enum.Enum):
    EOS = "eos"
    WORD_BUDGET = "word_budget"
    MAX_LEN = "max_len"


@dataclass(frozen=True)
class GenerationConfig:
    n_return: int = 5
    do_sample: bool = True
    temperature: float = 1.0
    top_k: int | None = None
    top_p: float | None = None
    max_new_words: int = 5
    max_len: int = 74
    rng_seed: int | None = None

    def __post_init__(self):
        if self.n_return < 1:
            raise ValueError("n_return must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.top_p is not None and not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_new_words < 1:
            raise ValueError("max_new_words must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_return": self.n_return,
            "do_sample": self.do_sample,
            "temperature": self.temperature,
            "top_k": self.top_k,
            "top_p": self.top_p,
            "max_new_words": self.max_new_words,
            "max_len": self.max_len,
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class Candidate:
    full_text: str
    completion_words: tuple[str, ...]
    token_logprobs: tuple[float, ...]
    total_logprob: float
    stop: StopReason


def apply_temperature(dist: np.ndarray, temperature: float) -> np.ndarray:
    """Sharpen or flatten: p_i' proportional to p_i^(1/T). T=1 is the identity."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    d = np.asarray(dist, dtype=float)
    if temperature == 1.0:
        return d.copy()
    out = np.zeros_like(d)
    nz = d > 0
    # log-space keeps T -> 0 stable: the argmax entry maps to exp(0) = 1
    logs = np.log(d[nz]) / temperature
    out[nz] = np.exp(logs - logs.max())
    return out / out.sum()


def _descending_order(d: np.ndarray) -> np.ndarray:
    # primary: probability descending; secondary: token id ascending
    return np.lexsort((np.arange(len(d)), -d))


def filter_top_k(dist: np.ndarray, k: int) -> np.ndarray:
    """Keep the k most probable entries (ties to the lower id), renormalize."""
    if k < 1:
        raise ValueError("k must be >= 1")
    d = np.asarray(dist, dtype=float)
    if k >= len(d):
        return d.copy()
    keep = _descending_order(d)[:k]
    out = np.zeros_like(d)
    out[keep] = d[keep]
    return out / out.sum()


def filter_top_p(dist: np.ndarray, p: float) -> np.ndarray:
    """Nucleus filter: smallest descending prefix with cumulative mass >= p."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    d = np.asarray(dist, dtype=float)
    if p == 1.0:
        return d.copy()
    order = _descending_order(d)
    cum = np.cumsum(d[order])
    reached = np.nonzero(cum >= p)[0]
    cut = int(reached[0]) if len(reached) else len(d) - 1
    keep = order[: cut + 1]
    out = np.zeros_like(d)
    out[keep] = d[keep]
    return out / out.sum()


def filtered_dist(dist: np.ndarray, config: GenerationConfig) -> np.ndarray:
    out = apply_temperature(dist, config.temperature)
    if config.top_k is not None:
        out = filter_top_k(out, config.top_k)
    if config.top_p is not None:
        out = filter_top_p(out, config.top_p)
    return out


def _rollout(backend, prefix: str, prefix_words: list[str], config: GenerationConfig, rng) -> Candidate:
    words = list(prefix_words)
    completion: list[str] = []
    logprobs: list[float] = []
    stop = None
    while True:
        # keep the sequence encodable: <sos> + words + one more word + <eos>
        if len(words) + 3 > config.max_len:
            stop = StopReason.MAX_LEN
            break
        raw = backend.next_dist(words)
        dist = filtered_dist(raw, config)
        if config.do_sample:
            idx = int(rng.choice(len(dist), p=dist))
        else:
            idx = int(np.argmax(dist))  # first max = lowest id on ties
        logprobs.append(float(np.log(raw[idx])))
        token = backend.tokens[idx]
        if token == EOS:
            stop = StopReason.EOS
            break
        words.append(token)
        completion.append(token)
        if len(completion) >= config.max_new_words:
            stop = StopReason.WORD_BUDGET
            break
    # the verbatim prefix, not its normalized words: the suggestion drops
    # into the user's editor right after what they typed
    if completion:
        sep = "" if prefix.endswith((" ", "\t")) else " "
        full_text = prefix + sep + " ".join(completion)
    else:
        full_text = prefix
    return Candidate(
        full_text=full_text,
        completion_words=tuple(completion),
        token_logprobs=tuple(logprobs),
        total_logprob=float(sum(logprobs)),
        stop=stop,
    )


def complete(backend, prefix: str, config: GenerationConfig) -> list[Candidate]:
    """Generate config.n_return candidates for a prefix.

    Each candidate is an independent rollout with its own RNG stream derived
    from (rng_seed, candidate index); results come back ordered by total
    log-probability, descending (stable on ties by candidate index).
    """
    prefix_words = tokenize_words(prefix)
    if not prefix_words:
        raise EmptyPrefix("prefix has no words after tokenization")
    candidates = []
    for i in range(config.n_return):
        if config.rng_seed is not None:
            rng = np.random.default_rng([config.rng_seed, i])
        else:
            rng = np.random.default_rng()
        candidates.append(_rollout(backend, prefix, prefix_words, config, rng))
    order = sorted(range(len(candidates)), key=lambda i: (-candidates[i].total_logprob, i))
    return [candidates[i] for i in order]


# -- few-shot prompt documents ----------------------------------------------

FEWSHOT_TEMPERATURE = 0.7
FEWSHOT_N = 5
MIN_FEWSHOT_EXAMPLES = 10

DEFAULT_INSTRUCTION = (
    "You autocomplete emergency-department chief complaint notes. "
    "Given the start of a chief complaint, continue it in the same clinical "
    "shorthand style as the examples."
)


@dataclass(frozen=True)
class PromptDocument:
    instruction: str
    examples: tuple[str, ...]
    settings: dict = field(default_factory=lambda: {"temperature": FEWSHOT_TEMPERATURE, "n": FEWSHOT_N})

    def to_dict(self) -> dict:
        return {
            "instruction": self.instruction,
            "examples": list(self.examples),
            "settings": dict(self.settings),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def build_fewshot_prompt(
    examples: list[str],
    instruction: str = DEFAULT_INSTRUCTION,
    k: int = 100,
    seed: int = 0,
) -> PromptDocument:
    """Assemble the prompt document: instruction, k exemplars sampled
    deterministically by seed, and the fixed generation settings. Never
    performs a network call."""
    if k < MIN_FEWSHOT_EXAMPLES:
        raise TooFewExamples(f"k={k} is below the minimum of {MIN_FEWSHOT_EXAMPLES}")
    if k > len(examples):
        raise TooFewExamples(f"k={k} exceeds the {len(examples)} available examples")
    sampled = random.Random(seed).sample(list(examples), k)
    return PromptDocument(instruction=instruction, examples=tuple(sampled))
