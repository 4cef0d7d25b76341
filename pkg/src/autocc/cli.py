"""Command-line driver for the whole pipeline.

Every subcommand is a thin wrapper: file-shaped work calls straight into the
core package, suggestion/benchmark targets may be a local model file or the
URL of a running service. Failures print one machine-readable JSON object on
stderr and exit nonzero.
"""

import json
import sys
from pathlib import Path

import click

from . import harness as hn
from .backends import NgramBackend, resolve_backend
from .corpus import load_corpus
from .errors import AutoccError
from .generate import DEFAULT_INSTRUCTION, GenerationConfig, build_fewshot_prompt, complete
from .metrics import load_static_embeddings
from .ngram import NGramModel
from .preprocess import Vocabulary, run_pipeline, tokenize_words, write_artifacts


def _fail(exc: Exception) -> None:
    if isinstance(exc, AutoccError):
        payload = exc.to_json()
    else:
        payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (AutoccError, OSError, ValueError) as exc:
            _fail(exc)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
def main():
    """Chief-complaint autocompletion: preprocessing, models, evaluation, service."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", required=True, type=int, help="shuffle seed for the 80/10/10 split")
@click.option("--min-count", default=1, show_default=True, type=int)
@click.option("--format", "format_", type=click.Choice(["tsv", "csv"]), default=None)
@guarded
def preprocess(input_path, out_dir, seed, min_count, format_):
    """Corpus file -> train/val/test splits, seeds, vocabulary, manifest."""
    load = load_corpus(input_path, format=format_)
    result = run_pipeline(load, shuffle_seed=seed, min_count=min_count)
    write_artifacts(result, out_dir)
    click.echo(json.dumps(result.manifest, indent=2, sort_keys=True))


@main.command("train-ngram")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--order", default=3, show_default=True, type=int)
@click.option("--discount", default=0.75, show_default=True, type=float)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), default=None,
              help="vocab.txt to use; defaults to a sibling of the train file, else built from it")
@guarded
def train_ngram(train_path, order, discount, out_path, vocab_path):
    """Train the smoothed n-gram model on one-sentence-per-line text."""
    sentences = [
        tokenize_words(line)
        for line in Path(train_path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    vocab = None
    if vocab_path is None:
        sibling = Path(train_path).parent / "vocab.txt"
        vocab_path = sibling if sibling.exists() else None
    if vocab_path is not None:
        vocab = Vocabulary.load(vocab_path)
    model = NGramModel.train(sentences, order=order, discount=discount, vocab=vocab)
    model.save(out_path)
    click.echo(
        json.dumps(
            {
                "model": str(out_path),
                "order": order,
                "discount": discount,
                "vocab_size": len(model.vocab),
                "sentences": len(sentences),
                "vocab_source": str(vocab_path) if vocab_path else "built from training text",
            }
        )
    )


def _generation_config(n, greedy, seed, temperature, top_k, top_p, max_new_words=5) -> GenerationConfig:
    return GenerationConfig(
        n_return=n,
        do_sample=not greedy,
        temperature=temperature,
        top_k=top_k,
        top_p=top_p,
        max_new_words=max_new_words,
        rng_seed=seed,
    )


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--backend", "backend_url", default=None, help="URL of a running service")
@click.option("--prefix", required=True)
@click.option("-n", "n", default=5, show_default=True, type=int)
@click.option("--greedy", is_flag=True, default=False)
@click.option("--seed", type=int, default=None)
@click.option("--temperature", default=1.0, show_default=True, type=float)
@click.option("--top-k", type=int, default=None)
@click.option("--top-p", type=float, default=None)
@click.option("--max-new-words", default=5, show_default=True, type=int)
@guarded
def suggest(model_path, backend_url, prefix, n, greedy, seed, temperature, top_k, top_p, max_new_words):
    """Print n completion candidates as JSON lines."""
    if model_path is None and backend_url is None:
        raise AutoccError("pass --model FILE or --backend URL")
    backend = resolve_backend(backend_url or model_path)
    config = _generation_config(n, greedy, seed, temperature, top_k, top_p, max_new_words)
    for cand in complete(backend, prefix, config):
        click.echo(
            json.dumps(
                {
                    "text": cand.full_text,
                    "completion": " ".join(cand.completion_words),
                    "logprob": cand.total_logprob,
                    "stop": cand.stop.value,
                }
            )
        )


@main.command()
@click.option("--seeds", "seeds_path", required=True, type=click.Path(exists=True))
@click.option("--references", "references_path", type=click.Path(exists=True), default=None,
              help="reference sentences; defaults to test.txt beside the seeds file")
@click.option("--backend", "backend_spec", default=None, help="service URL or n-gram model file")
@click.option("--candidates", "candidates_path", type=click.Path(exists=True), default=None,
              help="recorded candidates JSONL instead of live generation")
@click.option("--recorded-logprobs", "recorded_logprobs", type=click.Path(exists=True), default=None,
              help="recorded log-likelihood file for the perplexity report")
@click.option("--metric", type=click.Choice(["bertscore", "cosine", "perplexity"]), required=True)
@click.option("--embeddings", "embeddings_spec", default=None, help="static table, JSONL file, or URL")
@click.option("--aggregate", type=click.Choice(["mean", "min", "max"]), default="mean", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--greedy", is_flag=True, default=False)
@click.option("--temperature", default=1.0, show_default=True, type=float)
@click.option("--top-k", type=int, default=50, show_default=True)
@click.option("--top-p", type=float, default=0.95, show_default=True)
@guarded
def evaluate(
    seeds_path,
    references_path,
    backend_spec,
    candidates_path,
    recorded_logprobs,
    metric,
    embeddings_spec,
    aggregate,
    out_path,
    checkpoint_path,
    seed,
    greedy,
    temperature,
    top_k,
    top_p,
):
    """Run the four-scenario evaluation (or the perplexity report) and write it."""
    out = Path(out_path)
    if metric == "perplexity":
        if recorded_logprobs:
            report = hn.perplexity_report_from_recorded(recorded_logprobs)
        else:
            if backend_spec is None:
                raise AutoccError("perplexity needs --backend or --recorded-logprobs")
            references = hn.load_references(seeds_path, references_path)
            backend = resolve_backend(backend_spec)
            report = hn.perplexity_report_from_backend(
                backend.name, backend, [r.text for r in references]
            )
        out.write_text(hn.serialize_perplexity_report(report), encoding="utf-8")
        click.echo(hn.render_timing_table(report), nl=False)
        return

    if embeddings_spec is None:
        raise AutoccError(f"--embeddings is required for metric {metric}")
    config = _generation_config(5, greedy, seed, temperature, top_k, top_p)
    references = hn.load_references(seeds_path, references_path)
    source = hn.build_candidate_source(backend_spec, candidates_path, config)
    provider = hn.build_embedding_provider(embeddings_spec)
    report = hn.run_evaluation(
        references,
        source,
        provider,
        metric=metric,
        aggregate=aggregate,
        config=config,
        checkpoint_path=checkpoint_path,
    )
    out.write_text(hn.serialize_report(report), encoding="utf-8")
    click.echo(hn.render_report_table(report), nl=False)


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--port", default=8000, show_default=True, type=int, envvar="AUTOCC_PORT")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--backend-url", default=None, envvar="AUTOCC_BACKEND_URL",
              help="remote backend registered under the name 'remote'")
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True), default=None,
              help="static embedding table served by /v1/embed")
@click.option("--ui-dir", type=click.Path(), default=None, help="static web UI directory")
@click.option("--default-backend", default=None, help="registry name to serve by default")
@guarded
def serve(model_path, port, host, backend_url, embeddings_path, ui_dir, default_backend):
    """Run the suggestion service."""
    import uvicorn

    from .backends import HttpBackend
    from .service import create_app

    registry = {}
    if model_path:
        registry["ngram"] = NgramBackend(NGramModel.load(model_path))
    if backend_url:
        registry["remote"] = HttpBackend(base_url=backend_url)
    if not registry:
        raise AutoccError("pass --model and/or --backend-url")
    default = default_backend or ("ngram" if "ngram" in registry else "remote")
    table = load_static_embeddings(embeddings_path) if embeddings_path else None
    app = create_app(registry, default, embed_table=table, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--backend", "backend_spec", required=True, help="service URL or model file")
@click.option("--prefix", required=True)
@click.option("--repeats", required=True, type=int)
@click.option("-n", "n", default=5, show_default=True, type=int)
@click.option("--seed", type=int, default=0, show_default=True)
@guarded
def bench(backend_spec, prefix, repeats, n, seed):
    """Time candidate generation; prints mean/min/p95 milliseconds."""
    backend = resolve_backend(backend_spec)
    config = GenerationConfig(n_return=n, rng_seed=seed)
    summary = hn.bench_generation(backend, prefix, config, repeats)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@main.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("-k", "k", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--instruction", default=DEFAULT_INSTRUCTION)
@guarded
def prompt(train_path, k, seed, out_path, instruction):
    """Assemble the few-shot prompt document (no API call is made)."""
    sentences = [
        line for line in Path(train_path).read_text(encoding="utf-8").splitlines() if line.strip()
    ]
    document = build_fewshot_prompt(sentences, instruction=instruction, k=k, seed=seed)
    document.save(out_path)
    click.echo(json.dumps({"out": str(out_path), "k": k, "seed": seed}))


if __name__ == "__main__":
    main()
