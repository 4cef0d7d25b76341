"""HTTP suggestion service and backend wire protocol.

The service owns a registry of named backends (the in-process n-gram model,
optionally a remote one) and serves suggestions, token log-likelihoods,
next-word distributions, static embeddings, health, and background
evaluation jobs. All model state is read-only after startup, so concurrent
requests need no locking.
"""

import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..backends import BackendUnavailable, HttpBackend, NgramBackend
from ..errors import AutoccError
from ..generate import EmptyPrefix, GenerationConfig, complete
from ..harness import build_candidate_source, build_embedding_provider, load_references, run_evaluation
from ..metrics import StaticEmbeddingTable, embed_static
from ..preprocess import tokenize_words
from . import schemas
from .jobs import JobRegistry

DEFAULT_BATCH_LIMIT = 64


def _error_json(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})


def create_app(
    backends: dict[str, object],
    default_backend: str,
    embed_table: StaticEmbeddingTable | None = None,
    batch_limit: int = DEFAULT_BATCH_LIMIT,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    if default_backend not in backends:
        raise ValueError(f"default backend {default_backend!r} not in registry")

    app = FastAPI(title="autocc suggestion service", version="0.1.0")
    app.state.backends = backends
    app.state.default_backend = default_backend
    app.state.embed_table = embed_table
    app.state.batch_limit = batch_limit
    app.state.jobs = JobRegistry()

    def pick_backend(name: str | None):
        key = name or app.state.default_backend
        backend = app.state.backends.get(key)
        if backend is None:
            raise BackendUnavailable(f"no backend named {key!r}")
        return key, backend

    @app.exception_handler(RequestValidationError)
    def validation_handler(request: Request, exc: RequestValidationError):
        # suggest: a body that does not parse or lacks its prefix is a 400;
        # out-of-bounds parameter values stay 422 everywhere
        if request.url.path == "/v1/suggest":
            types = {e.get("type") for e in exc.errors()}
            if types & {"json_invalid", "missing", "string_type", "model_attributes_type"}:
                return _error_json(400, "malformed_body", str(exc.errors()[0].get("msg", "bad request")))
        return JSONResponse(status_code=422, content={"error": "validation_error", "detail": exc.errors()})

    @app.exception_handler(BackendUnavailable)
    def backend_unavailable_handler(request: Request, exc: BackendUnavailable):
        return _error_json(503, exc.code, str(exc))

    @app.exception_handler(AutoccError)
    def autocc_error_handler(request: Request, exc: AutoccError):
        return _error_json(500, exc.code, str(exc))

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        name, backend = pick_backend(None)
        return schemas.HealthResponse(status="ok", backend=name, model_hash=backend.model_hash())

    @app.get("/v1/vocab", response_model=schemas.VocabResponse)
    def vocab():
        _, backend = pick_backend(None)
        return schemas.VocabResponse(tokens=list(backend.tokens))

    @app.post("/v1/suggest", response_model=schemas.SuggestResponse)
    def suggest(request: schemas.SuggestRequest):
        if not request.prefix.strip() or not tokenize_words(request.prefix):
            return _error_json(400, "empty_prefix", "prefix must contain at least one word")
        name, backend = pick_backend(request.backend)
        config = GenerationConfig(
            n_return=request.n,
            do_sample=request.do_sample,
            temperature=request.temperature,
            top_k=request.top_k,
            top_p=request.top_p,
            max_new_words=request.max_new_words,
            rng_seed=request.seed,
        )
        start = time.perf_counter()
        try:
            candidates = complete(backend, request.prefix, config)
        except EmptyPrefix as exc:
            return _error_json(400, exc.code, str(exc))
        latency_ms = (time.perf_counter() - start) * 1000.0
        return schemas.SuggestResponse(
            candidates=[
                schemas.CandidateOut(
                    text=c.full_text,
                    completion=" ".join(c.completion_words),
                    logprob=c.total_logprob,
                    stop=c.stop.value,
                )
                for c in candidates
            ],
            backend=name,
            latency_ms=latency_ms,
        )

    def check_batch(n: int):
        if n > app.state.batch_limit:
            return _error_json(413, "batch_too_large", f"batch of {n} exceeds limit {app.state.batch_limit}")
        return None

    @app.post("/v1/logprobs", response_model=schemas.LogprobsResponse)
    def logprobs(request: schemas.LogprobsRequest):
        if (err := check_batch(len(request.sentences))) is not None:
            return err
        _, backend = pick_backend(None)
        if isinstance(backend, HttpBackend):
            return backend._request("POST", "/v1/logprobs", json=request.model_dump())
        items = []
        for sentence in request.sentences:
            scored = backend.model.score(sentence)
            items.append(
                schemas.LogprobsItem(
                    tokens=[backend.model.vocab.token(i) for i in scored.tokens],
                    logprobs=list(scored.logprobs),
                )
            )
        return schemas.LogprobsResponse(items=items)

    @app.post("/v1/next", response_model=schemas.NextResponse)
    def next_words(request: schemas.NextRequest):
        _, backend = pick_backend(None)
        dist = backend.next_dist(request.context_words)
        return schemas.NextResponse(vocab_ids=list(range(len(dist))), probs=[float(p) for p in dist])

    @app.post("/v1/embed", response_model=schemas.EmbedResponse)
    def embed(request: schemas.EmbedRequest):
        if (err := check_batch(len(request.sentences))) is not None:
            return err
        if request.mode == "contextual":
            _, backend = pick_backend(None)
            if isinstance(backend, HttpBackend):
                return backend._request("POST", "/v1/embed", json=request.model_dump())
            return _error_json(
                500,
                "no_contextual_embedder",
                "this service has no contextual embedding model; attach a neural backend",
            )
        table = app.state.embed_table
        if table is None:
            return _error_json(500, "no_embedding_table", "service started without a static embedding table")
        items = []
        for sentence in request.sentences:
            words = tokenize_words(sentence)
            if not words:
                return JSONResponse(
                    status_code=422,
                    content={"error": "validation_error", "detail": "sentence with no words"},
                )
            embedded = embed_static(words, table)
            items.append(
                schemas.EmbedItem(tokens=list(embedded.tokens), vectors=embedded.vectors.tolist())
            )
        return schemas.EmbedResponse(items=items)

    @app.post("/v1/evaluate", response_model=schemas.JobCreated)
    def start_evaluation(request: schemas.EvaluateRequest):
        config = GenerationConfig(
            do_sample=request.do_sample,
            temperature=request.temperature,
            top_k=request.top_k,
            top_p=request.top_p,
            rng_seed=request.seed,
        )
        references = load_references(request.seeds_path, request.references_path)
        _, backend = pick_backend(None)
        if request.candidates_path:
            source = build_candidate_source(None, request.candidates_path, config)
        else:
            from ..harness import GeneratedCandidates

            source = GeneratedCandidates(backend, config)
        if request.embeddings is None:
            raise AutoccError("embeddings file or URL is required")
        provider = build_embedding_provider(request.embeddings)

        def work(job):
            job.total = 2 * len(references)

            def on_progress(done, total):
                with job._lock:
                    job.done = done

            report = run_evaluation(
                references,
                source,
                provider,
                metric=request.metric,
                aggregate=request.aggregate,
                config=config,
                checkpoint_path=request.checkpoint_path,
                progress=on_progress,
            )
            return report.to_dict()

        job = app.state.jobs.start(work)
        return schemas.JobCreated(id=job.id)

    @app.get("/v1/jobs/{job_id}", response_model=schemas.JobResponse)
    def job_status(job_id: str):
        job = app.state.jobs.get(job_id)
        if job is None:
            return _error_json(404, "unknown_job", f"no job {job_id!r}")
        return schemas.JobResponse(**job.snapshot())

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
