"""Four-scenario evaluation harness and timing benchmarks.

Each test reference is completed from its 30% and its 50% seed prefix; the
five candidates per prefix are scored against the full reference sentence,
aggregated over either all five or the best two, and the per-reference
aggregates are bucketed into the fixed score bins. Reports serialize to
canonical JSON (byte-stable given fixed inputs) plus a plain-text table.
"""

import json
import math
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AutoccError
from .generate import GenerationConfig, complete
from .metrics import (
    EmbeddedSentence,
    avg_cosine,
    bertscore,
    corpus_perplexity,
    embed_static,
    load_contextual_jsonl,
    load_static_embeddings,
)
from .ngram import ScoredSequence
from .preprocess import load_seeds, tokenize_words

REPORT_SCHEMA_VERSION = 1

DEFAULT_THRESHOLDS = (0.95, 0.90, 0.80, 0.70)

FRACTIONS = ("p30", "p50")
CANDIDATE_SETS = ("all5", "top2")
# column order of the rendered table
SCENARIOS = ("all5_p30", "all5_p50", "top2_p30", "top2_p50")

_SCENARIO_LABELS = {
    "all5_p30": "All-5 30%",
    "all5_p50": "All-5 50%",
    "top2_p30": "Top-2 30%",
    "top2_p50": "Top-2 50%",
}


class WrongArity(AutoccError):
    code = "wrong_arity"


class EmbeddingUnavailable(AutoccError):
    code = "embedding_unavailable"


class RecordedCandidatesMissing(AutoccError):
    code = "recorded_candidates_missing"


@dataclass(frozen=True)
class Reference:
    id: int
    text: str
    seed30: str
    seed50: str

    def prefix(self, fraction: str) -> str:
        return self.seed30 if fraction == "p30" else self.seed50


def load_references(seeds_path: str | Path, references_path: str | Path | None = None) -> list[Reference]:
    """Pair seeds.tsv rows with the full reference sentences.

    The references default to the sibling test.txt written by the same
    preprocess run; rows align one-to-one and each seed must be a prefix of
    its sentence.
    """
    seeds_path = Path(seeds_path)
    seeds = load_seeds(seeds_path)
    ref_path = Path(references_path) if references_path else seeds_path.parent / "test.txt"
    lines = [l for l in ref_path.read_text(encoding="utf-8").splitlines()]
    if len(lines) != len(seeds):
        raise AutoccError(
            f"{ref_path} has {len(lines)} sentences but {seeds_path} has {len(seeds)} seed rows"
        )
    references = []
    for seed, text in zip(seeds, lines):
        for prefix in (seed.seed30, seed.seed50):
            if not text.startswith(prefix):
                raise AutoccError(
                    f"seed {prefix!r} is not a prefix of reference {seed.sentence_ref}: {text!r}"
                )
        references.append(
            Reference(id=seed.sentence_ref, text=text, seed30=seed.seed30, seed50=seed.seed50)
        )
    return references


# -- bucketing ---------------------------------------------------------------


def bucketize(scores: list[float], thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS) -> list[int]:
    """Count scores per bin: [t0, inf), [t1, t0), ..., (-inf, t_last)."""
    if any(a <= b for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly descending")
    counts = [0] * (len(thresholds) + 1)
    for score in scores:
        for i, threshold in enumerate(thresholds):
            if score >= threshold:
                counts[i] += 1
                break
        else:
            counts[-1] += 1
    return counts


def aggregate_reference(
    scores: list[float], candidate_set: str, mode: str = "mean", n_return: int = 5
) -> float:
    """Collapse one reference's per-candidate scores to a single value."""
    if len(scores) != n_return:
        raise WrongArity(f"expected {n_return} candidate scores, got {len(scores)}")
    if candidate_set == "top2":
        pool = sorted(scores, reverse=True)[:2]
    elif candidate_set == "all5":
        pool = list(scores)
    else:
        raise ValueError(f"unknown candidate set {candidate_set!r}")
    if mode == "mean":
        return sum(pool) / len(pool)
    if mode == "min":
        return min(pool)
    if mode == "max":
        return max(pool)
    raise ValueError(f"unknown aggregate mode {mode!r}")


# -- candidate sources ---------------------------------------------------------


class GeneratedCandidates:
    """Live generation through a backend; records per-call wall time."""

    def __init__(self, backend, config: GenerationConfig):
        self.backend = backend
        self.config = config

    def describe(self) -> dict:
        return {
            "source": "generated",
            "backend": self.backend.name,
            "model_hash": self.backend.model_hash(),
        }

    def candidates(self, ref: Reference, fraction: str) -> tuple[list[str], float | None]:
        start = time.perf_counter()
        cands = complete(self.backend, ref.prefix(fraction), self.config)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return [c.full_text for c in cands], elapsed_ms


class RecordedCandidates:
    """Replays candidates from a JSONL file of
    {sentence_id, fraction, candidates: [text, ...]} rows."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._rows: dict[tuple[int, str], list[str]] = {}
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            self._rows[(int(obj["sentence_id"]), obj["fraction"])] = list(obj["candidates"])

    def describe(self) -> dict:
        # basename only: reports must serialize identically across machines
        return {"source": "recorded", "path": self.path.name}

    def candidates(self, ref: Reference, fraction: str) -> tuple[list[str], float | None]:
        key = (ref.id, fraction)
        if key not in self._rows:
            raise RecordedCandidatesMissing(f"no recorded candidates for {key}")
        return self._rows[key], None


# -- embedding providers -------------------------------------------------------


class StaticProvider:
    def __init__(self, table, source: str = ""):
        self.table = table
        self.source = Path(source).name if source else ""

    def describe(self) -> dict:
        return {"kind": "static_table", "source": self.source, "dim": self.table.dim}

    def embed_text(self, text: str) -> EmbeddedSentence:
        return embed_static(tokenize_words(text), self.table)


class RecordedProvider:
    """Embeddings keyed by exact sentence text from a contextual JSONL file."""

    def __init__(self, mapping: dict[str, EmbeddedSentence], source: str = ""):
        self.mapping = mapping
        self.source = Path(source).name if source else ""

    def describe(self) -> dict:
        return {"kind": "recorded_jsonl", "source": self.source}

    def embed_text(self, text: str) -> EmbeddedSentence:
        if text not in self.mapping:
            raise EmbeddingUnavailable(f"no recorded embedding for {text!r}")
        return self.mapping[text]


class HttpEmbeddingProvider:
    def __init__(self, backend, mode: str = "contextual"):
        self.backend = backend
        self.mode = mode

    def describe(self) -> dict:
        return {"kind": "http", "mode": self.mode, "backend": self.backend.name}

    def embed_text(self, text: str) -> EmbeddedSentence:
        item = self.backend.embed([text], mode=self.mode)[0]
        return EmbeddedSentence(tokens=tuple(item["tokens"]), vectors=np.asarray(item["vectors"]))


# -- scenario report -----------------------------------------------------------


@dataclass
class ScenarioReport:
    metric: str
    aggregate: str
    n_references: int
    thresholds: tuple[float, ...]
    scenarios: dict[str, list[int]]
    config: dict
    backend: dict
    embedding: dict
    timing: dict | None
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "metric": self.metric,
            "aggregate": self.aggregate,
            "n_references": self.n_references,
            "thresholds": list(self.thresholds),
            "scenarios": {k: list(v) for k, v in self.scenarios.items()},
            "config": self.config,
            "backend": self.backend,
            "embedding": self.embedding,
            "timing": self.timing,
        }


def serialize_report(report: ScenarioReport) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_report_table(report: ScenarioReport) -> str:
    """Plain-text bucket table: one row per score bin, one column per scenario."""
    labels = [f"{t:.2f}" for t in report.thresholds] + [f"<{report.thresholds[-1]:.2f}"]
    header = ["Score"] + [_SCENARIO_LABELS[s] for s in SCENARIOS]
    widths = [max(len(header[0]), *(len(l) for l in labels))] + [
        max(len(h), 6) for h in header[1:]
    ]
    lines = [
        f"{report.metric} buckets (n={report.n_references} references, aggregate={report.aggregate})",
        "",
        "  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths))),
    ]
    for row, label in enumerate(labels):
        cells = [label.ljust(widths[0])]
        for col, scenario in enumerate(SCENARIOS, start=1):
            cells.append(str(report.scenarios[scenario][row]).rjust(widths[col]))
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


def _metric_fn(metric: str):
    if metric == "bertscore":
        return lambda ref, cand: bertscore(ref, cand).f1
    if metric == "cosine":
        return avg_cosine
    raise ValueError(f"unknown metric {metric!r}")


class _Checkpoint:
    """Append-only JSONL of scored (reference, fraction) pairs so an aborted
    run resumes instead of regenerating."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self.done: dict[tuple[int, str], list[float]] = {}
        if self.path and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    obj = json.loads(line)
                    self.done[(int(obj["ref"]), obj["fraction"])] = list(obj["scores"])

    def record(self, ref_id: int, fraction: str, scores: list[float]) -> None:
        self.done[(ref_id, fraction)] = scores
        if self.path:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"ref": ref_id, "fraction": fraction, "scores": scores}) + "\n")


def run_evaluation(
    references: list[Reference],
    source,
    provider,
    metric: str = "bertscore",
    aggregate: str = "mean",
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
    n_return: int = 5,
    config: GenerationConfig | None = None,
    checkpoint_path: str | Path | None = None,
    progress: "callable | None" = None,
) -> ScenarioReport:
    """Score every reference in all four scenarios and bucket the aggregates.

    ``source`` supplies candidates (live backend or recorded file),
    ``provider`` supplies embeddings. On backend or embedding failure the
    checkpoint keeps per-reference progress and the error propagates.
    """
    score_fn = _metric_fn(metric)
    checkpoint = _Checkpoint(checkpoint_path)
    per_scenario: dict[str, list[float]] = {s: [] for s in SCENARIOS}
    gen_times: list[float] = []

    total = len(references) * len(FRACTIONS)
    done = 0
    for ref in references:
        ref_embedded = provider.embed_text(ref.text)
        for fraction in FRACTIONS:
            key = (ref.id, fraction)
            if key in checkpoint.done:
                scores = checkpoint.done[key]
            else:
                texts, elapsed_ms = source.candidates(ref, fraction)
                if elapsed_ms is not None:
                    gen_times.append(elapsed_ms)
                scores = [float(score_fn(ref_embedded, provider.embed_text(t))) for t in texts]
                checkpoint.record(ref.id, fraction, scores)
            for candidate_set in CANDIDATE_SETS:
                per_scenario[f"{candidate_set}_{fraction}"].append(
                    aggregate_reference(scores, candidate_set, mode=aggregate, n_return=n_return)
                )
            done += 1
            if progress:
                progress(done, total)

    timing = None
    if gen_times:
        timing = {
            "mean_ms": sum(gen_times) / len(gen_times),
            "p95_ms": percentile(gen_times, 95.0),
            "calls": len(gen_times),
        }
    return ScenarioReport(
        metric=metric,
        aggregate=aggregate,
        n_references=len(references),
        thresholds=thresholds,
        scenarios={s: bucketize(values, thresholds) for s, values in per_scenario.items()},
        config=(config.to_dict() if config else {}),
        backend=source.describe(),
        embedding=provider.describe(),
        timing=timing,
    )


def build_embedding_provider(spec: str):
    """URL -> wire protocol, *.jsonl -> recorded contextual file, anything
    else -> static lookup table."""
    from .backends import HttpBackend

    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpEmbeddingProvider(HttpBackend(base_url=spec))
    if spec.endswith(".jsonl"):
        return RecordedProvider(load_contextual_jsonl(spec), source=spec)
    return StaticProvider(load_static_embeddings(spec), source=spec)


def build_candidate_source(
    backend_spec: str | None, candidates_path: str | None, config: GenerationConfig
):
    from .backends import resolve_backend

    if candidates_path:
        return RecordedCandidates(candidates_path)
    if backend_spec is None:
        raise AutoccError("either a backend or a recorded-candidates file is required")
    return GeneratedCandidates(resolve_backend(backend_spec), config)


# -- perplexity report ---------------------------------------------------------


@dataclass
class PerplexityEntry:
    name: str
    perplexity: float
    n_sequences: int
    n_tokens: int
    execution_time_ms: float | None


@dataclass
class PerplexityReport:
    entries: list[PerplexityEntry]
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "models": [
                {
                    "name": e.name,
                    "perplexity": e.perplexity,
                    "n_sequences": e.n_sequences,
                    "n_tokens": e.n_tokens,
                    "execution_time_ms": e.execution_time_ms,
                }
                for e in self.entries
            ],
        }


def serialize_perplexity_report(report: PerplexityReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_timing_table(report: PerplexityReport) -> str:
    """Model / perplexity / execution-time summary table."""
    rows = [
        (
            e.name,
            f"{e.perplexity:.2f}",
            "-" if e.execution_time_ms is None else f"{e.execution_time_ms:.2f}",
        )
        for e in report.entries
    ]
    header = ("Model", "Perplexity", "Execution Time (ms)")
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i]) for i in range(3)]
    lines = [
        "  ".join(header[i].ljust(widths[i]) for i in range(3)),
        "  ".join("-" * widths[i] for i in range(3)),
    ]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(3)))
    return "\n".join(lines) + "\n"


def perplexity_report_from_backend(
    name: str, backend, sentences: list[str]
) -> PerplexityReport:
    start = time.perf_counter()
    items = backend.logprob_items(sentences)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return PerplexityReport(entries=[_perplexity_entry(name, items, elapsed_ms)])


def perplexity_report_from_recorded(path: str | Path) -> PerplexityReport:
    """Recorded-logprob fixture: {models: [{name, execution_time_ms,
    items: [{id, tokens, logprobs}]}]} -> rendered exactly like a live run."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = []
    for model in payload["models"]:
        items = [
            ScoredSequence(tokens=tuple(range(len(it["tokens"]))), logprobs=tuple(it["logprobs"]))
            for it in model["items"]
        ]
        entries.append(_perplexity_entry(model["name"], items, model.get("execution_time_ms")))
    return PerplexityReport(entries=entries)


def _perplexity_entry(name: str, items: list[ScoredSequence], elapsed_ms) -> PerplexityEntry:
    return PerplexityEntry(
        name=name,
        perplexity=corpus_perplexity(items),
        n_sequences=len(items),
        n_tokens=sum(len(i.logprobs) for i in items),
        execution_time_ms=elapsed_ms,
    )


# -- timing ---------------------------------------------------------------------


def percentile(values: list[float], pct: float) -> float:
    """Nearest-rank percentile over a non-empty sample."""
    ordered = sorted(values)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


def bench_generation(backend, prefix: str, config: GenerationConfig, repeats: int) -> dict:
    """Wall-clock milliseconds to produce n_return candidates, per repeat."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        complete(backend, prefix, config)
        times.append((time.perf_counter() - start) * 1000.0)
    return {
        "backend": backend.name,
        "n_return": config.n_return,
        "repeats": repeats,
        "mean_ms": sum(times) / len(times),
        "min_ms": min(times),
        "p95_ms": percentile(times, 95.0),
        "hardware": f"{platform.platform()} / {platform.processor() or 'unknown cpu'}",
    }
