"""Pydantic request/response models for the suggestion service and the
backend wire protocol. Bounds here mirror GenerationConfig so invalid
parameters fail validation (422) before reaching the decoder.
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field


class SuggestRequest(BaseModel):
    prefix: str
    n: int = Field(default=5, ge=1)
    do_sample: bool = True
    temperature: float = Field(default=1.0, gt=0)
    top_k: Optional[int] = Field(default=None, ge=1)
    top_p: Optional[float] = Field(default=None, gt=0, le=1)
    max_new_words: int = Field(default=5, ge=1)
    backend: Optional[str] = None
    seed: Optional[int] = None


class CandidateOut(BaseModel):
    text: str
    completion: str
    logprob: float
    stop: Literal["eos", "word_budget", "max_len"]


class SuggestResponse(BaseModel):
    candidates: list[CandidateOut]
    backend: str
    latency_ms: float


class LogprobsRequest(BaseModel):
    sentences: list[str]


class LogprobsItem(BaseModel):
    tokens: list[str]
    logprobs: list[float]


class LogprobsResponse(BaseModel):
    items: list[LogprobsItem]


class EmbedRequest(BaseModel):
    sentences: list[str]
    mode: Literal["contextual", "static"] = "static"


class EmbedItem(BaseModel):
    tokens: list[str]
    vectors: list[list[float]]


class EmbedResponse(BaseModel):
    items: list[EmbedItem]


class NextRequest(BaseModel):
    context_words: list[str]


class NextResponse(BaseModel):
    vocab_ids: list[int]
    probs: list[float]


class HealthResponse(BaseModel):
    status: str
    backend: str
    model_hash: str


class VocabResponse(BaseModel):
    tokens: list[str]


class EvaluateRequest(BaseModel):
    seeds_path: str
    references_path: Optional[str] = None
    candidates_path: Optional[str] = None
    embeddings: Optional[str] = None
    metric: Literal["bertscore", "cosine"] = "bertscore"
    aggregate: Literal["mean", "min", "max"] = "mean"
    seed: Optional[int] = 0
    do_sample: bool = True
    temperature: float = Field(default=1.0, gt=0)
    top_k: Optional[int] = Field(default=50, ge=1)
    top_p: Optional[float] = Field(default=0.95, gt=0, le=1)
    checkpoint_path: Optional[str] = None


class JobProgress(BaseModel):
    done: int
    total: int


class JobResponse(BaseModel):
    id: str
    status: Literal["running", "done", "error"]
    progress: JobProgress
    error: Optional[str] = None
    report: Optional[dict] = None


class JobCreated(BaseModel):
    id: str
