#!/usr/bin/env python3
"""Regenerate the recorded-run fixture under fixtures/.

Expected bucket counts are computed here with a plain-Python all-pairs
BERTScore and hand aggregation/bucketing, then cross-checked against the
package's evaluation path; the script refuses to write if the two disagree.
Everything is seeded, so reruns are byte-identical.
"""

import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from autocc.harness import (  # noqa: E402
    DEFAULT_THRESHOLDS,
    PerplexityEntry,
    PerplexityReport,
    RecordedCandidates,
    RecordedProvider,
    ScenarioReport,
    render_timing_table,
    run_evaluation,
    load_references,
    serialize_report,
)
from autocc.metrics import load_contextual_jsonl  # noqa: E402
from autocc.preprocess import Sentence, make_seeds  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "fixtures" / "recorded_run"
DIM = 24

REFERENCES = [
    "pt reports chest pain radiating to left arm since this morning",
    "fell at home last night with right hip pain and swelling",
    "fever and chills with body aches x 3 days",
    "shortness of breath when walking up stairs x 1 week",
    "left knee pain after twisting injury playing soccer yesterday",
    "abd pain with vomiting unable to keep food down",
    "sore throat and ear pain since last weekend",
    "generalized weakness and dizziness worse when standing up",
    "laceration to right hand from broken glass bleeding controlled",
    "back pain after lifting heavy boxes at work today",
    "worst headache of life with photophobia no trauma reported",
    "swelling and redness of left foot concerning for gout flare",
]

FILLER = [
    "denies any other symptoms at this time",
    "worse with movement and deep breathing",
    "took otc meds without relief today",
    "no known allergies reported by pt",
    "symptoms improving slightly since arrival here",
    "pain described as sharp and constant",
]

JUNK_WORDS = [
    "follow", "clinic", "review", "forms", "insurance", "parking", "voucher",
    "cafeteria", "visitor", "badge", "elevator", "lobby", "paperwork", "billing",
]


def seeded_rng(key: str) -> np.random.Generator:
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def embed_text(text: str) -> list[list[float]]:
    """Token-identity base vector plus a small per-sentence perturbation, a
    stand-in for contextual embeddings: shared words between two sentences
    stay similar without being identical."""
    noise = seeded_rng("ctx|" + text)
    vectors = []
    for token in text.split():
        base = seeded_rng("tok|" + token).normal(size=DIM)
        vectors.append((base + 0.18 * noise.normal(size=DIM)).tolist())
    return vectors


def make_candidates(prefix: str, reference: str, rng: np.random.Generator, tier: str) -> list[str]:
    """Five candidates per prefix; the tier controls how many are close to
    the reference, so the bucket columns cover their full range."""
    ref_words = reference.split()
    prefix_len = len(prefix.split())
    continuation = ref_words[prefix_len:]
    echo = reference
    trunc = max(1, len(continuation) - 2)
    early_stop = prefix + " " + " ".join(continuation[:trunc])
    swapped = list(continuation)
    if len(swapped) >= 2:
        swapped[0], swapped[-1] = swapped[-1], swapped[0]
    reordered = prefix + " " + " ".join(swapped)

    def generic():
        return prefix + " " + FILLER[rng.integers(0, len(FILLER))]

    def junk():
        words = rng.permutation(JUNK_WORDS).tolist()[: 5 + int(rng.integers(0, 3))]
        return prefix + " " + " ".join(words)

    if tier == "good":
        cands = [echo, early_stop, reordered, generic(), junk()]
    elif tier == "mixed":
        cands = [early_stop, reordered, generic(), junk(), junk()]
    else:  # poor
        cands = [generic(), junk(), junk(), junk(), junk()]
    return cands[:5]


def unit(v):
    norm = math.sqrt(sum(x * x for x in v))
    return [x / norm for x in v]


def brute_bertscore_f1(ref_vecs, cand_vecs) -> float:
    ref = [unit(v) for v in ref_vecs]
    cand = [unit(v) for v in cand_vecs]
    dot = lambda a, b: sum(x * y for x, y in zip(a, b))
    recall = sum(max(dot(r, c) for c in cand) for r in ref) / len(ref)
    precision = sum(max(dot(r, c) for r in ref) for c in cand) / len(cand)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    sentences = [Sentence(id=i, words=tuple(t.split()), source_id=i) for i, t in enumerate(REFERENCES)]
    seeds = [make_seeds(s) for s in sentences]

    (OUT / "test.txt").write_text("".join(t + "\n" for t in REFERENCES), encoding="utf-8")
    seed_lines = ["sentence_id\tlen30\tseed30\tlen50\tseed50"]
    for sp in seeds:
        seed_lines.append(f"{sp.sentence_ref}\t{sp.len30}\t{sp.seed30}\t{sp.len50}\t{sp.seed50}")
    (OUT / "seeds.tsv").write_text("\n".join(seed_lines) + "\n", encoding="utf-8")

    # candidates per (reference, fraction)
    rng = np.random.default_rng(20240817)
    candidate_rows = []
    all_texts = list(REFERENCES)
    tiers = ["good", "good", "mixed", "mixed", "mixed", "poor"]
    for i, (sp, ref_text) in enumerate(zip(seeds, REFERENCES)):
        for fraction, prefix in (("p30", sp.seed30), ("p50", sp.seed50)):
            cands = make_candidates(prefix, ref_text, rng, tiers[i % len(tiers)])
            candidate_rows.append(
                {"sentence_id": sp.sentence_ref, "fraction": fraction, "candidates": cands}
            )
            all_texts.extend(cands)
    with (OUT / "candidates.jsonl").open("w", encoding="utf-8") as fh:
        for row in candidate_rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    # one embedding record per distinct text, keyed by the text itself
    with (OUT / "embeddings.jsonl").open("w", encoding="utf-8") as fh:
        for text in dict.fromkeys(all_texts):
            record = {"id": text, "tokens": text.split(), "vectors": embed_text(text)}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    # oracle pass: brute-force scores over the *reloaded* file values
    embeddings = load_contextual_jsonl(OUT / "embeddings.jsonl")
    by_key = {(r["sentence_id"], r["fraction"]): r["candidates"] for r in candidate_rows}
    scenario_values = {s: [] for s in ("all5_p30", "all5_p50", "top2_p30", "top2_p50")}
    for sp, ref_text in zip(seeds, REFERENCES):
        ref_vecs = embeddings[ref_text].vectors.tolist()
        for fraction in ("p30", "p50"):
            scores = [
                brute_bertscore_f1(ref_vecs, embeddings[c].vectors.tolist())
                for c in by_key[(sp.sentence_ref, fraction)]
            ]
            scenario_values[f"all5_{fraction}"].append(sum(scores) / len(scores))
            top2 = sorted(scores, reverse=True)[:2]
            scenario_values[f"top2_{fraction}"].append(sum(top2) / len(top2))

    def hand_bucketize(values):
        counts = [0] * 5
        for v in values:
            if v >= 0.95:
                counts[0] += 1
            elif v >= 0.90:
                counts[1] += 1
            elif v >= 0.80:
                counts[2] += 1
            elif v >= 0.70:
                counts[3] += 1
            else:
                counts[4] += 1
        return counts

    expected = ScenarioReport(
        metric="bertscore",
        aggregate="mean",
        n_references=len(REFERENCES),
        thresholds=DEFAULT_THRESHOLDS,
        scenarios={k: hand_bucketize(v) for k, v in scenario_values.items()},
        config={},
        backend={"source": "recorded", "path": "candidates.jsonl"},
        embedding={"kind": "recorded_jsonl", "source": "embeddings.jsonl"},
        timing=None,
    )

    # cross-check: the package's evaluation path must agree bin for bin
    references = load_references(OUT / "seeds.tsv", OUT / "test.txt")
    report = run_evaluation(
        references,
        RecordedCandidates(OUT / "candidates.jsonl"),
        RecordedProvider(embeddings, source=str(OUT / "embeddings.jsonl")),
        metric="bertscore",
        aggregate="mean",
    )
    if serialize_report(report) != serialize_report(expected):
        print(serialize_report(report))
        print(serialize_report(expected))
        raise SystemExit("oracle and evaluation path disagree; fixture not written")

    (OUT / "expected_report.json").write_text(serialize_report(expected), encoding="utf-8")
    for scenario, counts in expected.scenarios.items():
        print(scenario, counts)

    # recorded log-likelihood fixture for the timing-table format
    logprob_models = []
    rng = np.random.default_rng(99)
    for name, quality, time_ms in (
        ("recorded-small", 0.35, 812.5),
        ("recorded-large", 0.62, 4301.25),
    ):
        items = []
        for i, text in enumerate(REFERENCES[:6]):
            n = len(text.split()) + 1
            logprobs = np.log(np.clip(rng.beta(8 * quality, 8 * (1 - quality), size=n), 1e-6, 1.0))
            items.append(
                {"id": i, "tokens": ["<sos>"] + text.split() + ["<eos>"], "logprobs": logprobs.tolist()}
            )
        logprob_models.append({"name": name, "execution_time_ms": time_ms, "items": items})
    (ROOT / "fixtures" / "recorded_logprobs.json").write_text(
        json.dumps({"models": logprob_models}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    # hand-check the pooled perplexity before freezing the rendered table
    entries = []
    for model in logprob_models:
        total = sum(sum(it["logprobs"]) for it in model["items"])
        count = sum(len(it["logprobs"]) for it in model["items"])
        entries.append(
            PerplexityEntry(
                name=model["name"],
                perplexity=math.exp(-total / count),
                n_sequences=len(model["items"]),
                n_tokens=count,
                execution_time_ms=model["execution_time_ms"],
            )
        )
    table_text = render_timing_table(PerplexityReport(entries=entries))
    (ROOT / "fixtures" / "expected_timing_table.txt").write_text(table_text, encoding="utf-8")
    print(table_text)


if __name__ == "__main__":
    main()
