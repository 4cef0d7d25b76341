"""Corpus-to-dataset pipeline: history split, sentence segmentation, word
tokenization, short-sentence filtering, 80/10/10 split, seed prefixes, and
the vocabulary with its fixed reserved tokens.
"""

import json
import random
import re
import statistics
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .corpus import CorpusLoad, PLACEHOLDER_RE
from .errors import AutoccError

# Acronyms that introduce past medical / personal / family history. Longest
# first so PMHX wins over PMH at the same offset.
HISTORY_MARKERS = ("PMHX", "PSHX", "SHX", "FHX", "PMH", "HX")

_MARKER_RE = re.compile(
    r"\b(" + "|".join(HISTORY_MARKERS) + r")\b", re.IGNORECASE
)

SOS, EOS, UNK, PAD = "<sos>", "<eos>", "<unk>", "<pad>"
RESERVED_TOKENS = (SOS, EOS, UNK, PAD)

DEFAULT_MAX_LEN = 74

# Tokens that never trigger a sentence split at a following period.
DEFAULT_ABBREVIATIONS = ("pt", "dr", "mr", "mrs", "approx", "abd", "fx", "hx", "s/p")

_SPLIT_CHARS = {".", ";", "!", "?", "\n"}

# Punctuation detached from word edges; '<' and '>' are excluded so
# placeholder tokens stay atomic, '/' so forms like s/p survive.
_EDGE_PUNCT = "\"'`‘’“”„()[]{},.;:!?*-"


class TooFewSentences(AutoccError):
    code = "too_few_sentences"


class SentenceTooLong(AutoccError):
    code = "sentence_too_long"


@dataclass(frozen=True)
class SplitCC:
    complaint: str  # text before the marker, verbatim slice
    history: str | None  # marker plus everything after, verbatim slice
    marker: str | None  # matched marker surface, e.g. "PMHx"


@dataclass(frozen=True)
class Sentence:
    id: int
    words: tuple[str, ...]
    source_id: int

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class SeedPair:
    sentence_ref: int
    len30: int
    seed30: str
    len50: int
    seed50: str


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    shuffle_seed: int


def split_history(text: str) -> SplitCC:
    """Split a complaint at the first history marker (case-insensitive,
    word-boundary; trailing '-' or ':' after the marker is fine).

    complaint + history reconstructs the input byte-identically.
    """
    m = _MARKER_RE.search(text)
    if m is None:
        return SplitCC(complaint=text, history=None, marker=None)
    return SplitCC(complaint=text[: m.start()], history=text[m.start() :], marker=m.group(1))


def _placeholder_spans(text: str) -> list[tuple[int, int]]:
    return [(m.start(), m.end()) for m in PLACEHOLDER_RE.finditer(text)]


def _token_before(text: str, pos: int) -> str:
    """Whitespace-delimited token ending just before text[pos]."""
    start = pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:pos]


def segment_sentences(text: str, abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split text into sentence strings on . ; ! ? and newline.

    A period does not split inside a placeholder, inside a decimal number,
    or right after a single-letter token or a configured abbreviation.
    Empty segments are dropped; segments are stripped.
    """
    spans = _placeholder_spans(text)
    abbrev = {a.lower() for a in abbreviations}

    def inside_placeholder(i: int) -> bool:
        return any(s <= i < e for s, e in spans)

    segments = []
    start = 0
    for i, ch in enumerate(text):
        if ch not in _SPLIT_CHARS or inside_placeholder(i):
            continue
        if ch == ".":
            prev = text[i - 1] if i > 0 else ""
            nxt = text[i + 1] if i + 1 < len(text) else ""
            if prev.isdigit() and nxt.isdigit():
                continue  # decimal like 101.4
            token = _token_before(text, i).lstrip(_EDGE_PUNCT).lower()
            if token and (token in abbrev or (len(token) == 1 and token.isalpha())):
                continue
        segments.append(text[start:i])
        start = i + 1
    segments.append(text[start:])
    return [s for s in (seg.strip() for seg in segments) if s]


def tokenize_words(sentence: str) -> list[str]:
    """Whitespace-split, then detach edge punctuation from each token.

    Placeholders keep their delimiters (angle brackets are never stripped);
    internal characters such as the slash in s/p or the period in 101.4 are
    untouched. Tokens that are nothing but edge punctuation disappear.
    """
    words = []
    for raw in sentence.split():
        word = raw.strip(_EDGE_PUNCT)
        if word:
            words.append(word)
    return words


def filter_short(
    tokenized: list[tuple[int, list[str]]], min_words: int = 4
) -> tuple[list[Sentence], int]:
    """Keep sentences with at least ``min_words`` words; returns (kept, discarded count).

    ``tokenized`` pairs each word list with its source record id. Kept
    sentences get sequential ids in input order.
    """
    kept: list[Sentence] = []
    discarded = 0
    for source_id, words in tokenized:
        if len(words) >= min_words:
            kept.append(Sentence(id=len(kept), words=tuple(words), source_id=source_id))
        else:
            discarded += 1
    return kept, discarded


def split_dataset(sentences: list[Sentence], shuffle_seed: int) -> DatasetSplit:
    """Shuffle deterministically, then carve 80% / 10% / remainder-to-test."""
    n = len(sentences)
    if n < 10:
        raise TooFewSentences(f"need at least 10 sentences, got {n}")
    ids = [s.id for s in sentences]
    random.Random(shuffle_seed).shuffle(ids)
    n_train = 8 * n // 10  # floor(0.8 N), exact
    n_val = n // 10
    return DatasetSplit(
        train=tuple(ids[:n_train]),
        val=tuple(ids[n_train : n_train + n_val]),
        test=tuple(ids[n_train + n_val :]),
        shuffle_seed=shuffle_seed,
    )


def _round_half_even(value: Fraction) -> int:
    q, r = divmod(value.numerator, value.denominator)
    double_r = 2 * r
    if double_r > value.denominator:
        return q + 1
    if double_r < value.denominator:
        return q
    return q if q % 2 == 0 else q + 1


def _seed_len(fraction: Fraction, word_count: int) -> int:
    return min(max(_round_half_even(fraction * word_count), 1), word_count - 1)


def make_seeds(sentence: Sentence) -> SeedPair:
    """30% and 50% word prefixes, rounded half-to-even and clamped to [1, w-1].

    Exact rational arithmetic so the rounding never depends on float noise.
    """
    w = len(sentence.words)
    len30 = _seed_len(Fraction(3, 10), w)
    len50 = _seed_len(Fraction(1, 2), w)
    return SeedPair(
        sentence_ref=sentence.id,
        len30=len30,
        seed30=" ".join(sentence.words[:len30]),
        len50=len50,
        seed50=" ".join(sentence.words[:len50]),
    )


class Vocabulary:
    """Word list with the four reserved tokens pinned to ids 0..3."""

    def __init__(self, tokens: list[str]):
        if tuple(tokens[:4]) != RESERVED_TOKENS:
            tokens = list(RESERVED_TOKENS) + [t for t in tokens if t not in RESERVED_TOKENS]
        self.tokens: list[str] = list(tokens)
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        return self.index.get(token, self.index[UNK])

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    @property
    def sos_id(self) -> int:
        return self.index[SOS]

    @property
    def eos_id(self) -> int:
        return self.index[EOS]

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    def content_hash(self) -> str:
        import hashlib

        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        tokens = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([t for t in tokens if t])


def build_vocab(train_sentences: list[Sentence], min_count: int = 1) -> Vocabulary:
    """Case-sensitive word types with frequency >= min_count, most frequent
    first (ties alphabetical), behind the reserved tokens.
    """
    if not train_sentences:
        raise AutoccError("empty training set")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: dict[str, int] = {}
    for s in train_sentences:
        for w in s.words:
            counts[w] = counts.get(w, 0) + 1
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count and t not in RESERVED_TOKENS),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary(list(RESERVED_TOKENS) + kept)


def encode(words: list[str] | tuple[str, ...], vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN) -> list[int]:
    """[<sos>, word ids, <eos>] padded with <pad> to max_len."""
    if len(words) + 2 > max_len:
        raise SentenceTooLong(f"{len(words)} words + markers exceed max_len={max_len}")
    ids = [vocab.sos_id] + [vocab.id(w) for w in words] + [vocab.eos_id]
    ids.extend([vocab.pad_id] * (max_len - len(ids)))
    return ids


def decode(ids: list[int], vocab: Vocabulary) -> list[str]:
    """Inverse of encode: strips padding and the sentence markers."""
    words = []
    for i in ids:
        token = vocab.token(i)
        if token == PAD or token == SOS:
            continue
        if token == EOS:
            break
        words.append(token)
    return words


@dataclass
class PipelineResult:
    sentences: list[Sentence]
    split: DatasetSplit
    seeds: list[SeedPair]  # for test sentences, in test order
    vocab: Vocabulary
    discarded_short: int
    manifest: dict


def run_pipeline(load: CorpusLoad, shuffle_seed: int, min_count: int = 1) -> PipelineResult:
    """Full §-by-§ pipeline over loaded records.

    History is split off each complaint and discarded; the complaint part is
    segmented, tokenized, and filtered; the kept sentences are split 80/10/10;
    seeds come from the test sentences; the vocabulary from the train ones.
    """
    tokenized: list[tuple[int, list[str]]] = []
    for record in load.records:
        complaint = split_history(record.text).complaint
        for segment in segment_sentences(complaint):
            words = tokenize_words(segment)
            if words:
                tokenized.append((record.id, words))

    sentences, discarded = filter_short(tokenized)
    split = split_dataset(sentences, shuffle_seed)
    by_id = {s.id: s for s in sentences}
    seeds = [make_seeds(by_id[i]) for i in split.test]
    train_sentences = [by_id[i] for i in split.train]
    vocab = build_vocab(train_sentences, min_count=min_count)

    manifest = {
        "schema_version": 1,
        "shuffle_seed": shuffle_seed,
        "min_count": min_count,
        "corpus": load.manifest(),
        "sentences_total": len(sentences),
        "sentences_discarded_short": discarded,
        "median_words": float(statistics.median(len(s.words) for s in sentences)),
        "median_words_train": float(statistics.median(len(s.words) for s in train_sentences)),
        "vocab_size": len(vocab),
        "split_sizes": {"train": len(split.train), "val": len(split.val), "test": len(split.test)},
    }
    return PipelineResult(
        sentences=sentences,
        split=split,
        seeds=seeds,
        vocab=vocab,
        discarded_short=discarded,
        manifest=manifest,
    )


def write_artifacts(result: PipelineResult, out_dir: str | Path) -> dict[str, Path]:
    """Write train/val/test text files, seeds.tsv, vocab.txt, manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_id = {s.id: s for s in result.sentences}
    paths = {}
    for name, ids in (("train", result.split.train), ("val", result.split.val), ("test", result.split.test)):
        p = out / f"{name}.txt"
        p.write_text("".join(by_id[i].text + "\n" for i in ids), encoding="utf-8")
        paths[name] = p

    seeds_path = out / "seeds.tsv"
    lines = ["sentence_id\tlen30\tseed30\tlen50\tseed50"]
    for seed in result.seeds:
        lines.append(f"{seed.sentence_ref}\t{seed.len30}\t{seed.seed30}\t{seed.len50}\t{seed.seed50}")
    seeds_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths["seeds"] = seeds_path

    vocab_path = out / "vocab.txt"
    result.vocab.save(vocab_path)
    paths["vocab"] = vocab_path

    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(result.manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    paths["manifest"] = manifest_path
    return paths


def load_seeds(path: str | Path) -> list[SeedPair]:
    rows = Path(path).read_text(encoding="utf-8").splitlines()
    seeds = []
    for line in rows[1:]:
        if not line.strip():
            continue
        sid, len30, seed30, len50, seed50 = line.split("\t")
        seeds.append(
            SeedPair(
                sentence_ref=int(sid), len30=int(len30), seed30=seed30, len50=int(len50), seed50=seed50
            )
        )
    return seeds
