"""Suggestion backends: anything exposing a vocabulary, next-word
distributions, and sentence log-likelihoods. The in-process n-gram backend
and the HTTP client speak the same word-level contract, so the decoding
engine cannot tell them apart.
"""

import numpy as np

from .errors import AutoccError
from .ngram import NGramModel, ScoredSequence


class BackendUnavailable(AutoccError):
    code = "backend_unavailable"


class NgramBackend:
    """Serves a trained NGramModel directly."""

    def __init__(self, model: NGramModel, name: str | None = None):
        self.model = model
        self.name = name or f"ngram-{model.order}"
        self.eos_reliable = True

    @property
    def tokens(self) -> list[str]:
        return self.model.vocab.tokens

    def next_dist(self, context_words: list[str]) -> np.ndarray:
        ids = [self.model.vocab.id(w) for w in context_words]
        return self.model.next_dist(ids)

    def logprob_items(self, sentences: list[str]) -> list[ScoredSequence]:
        return [self.model.score(s) for s in sentences]

    def model_hash(self) -> str:
        return self.model.model_hash()


class HttpBackend:
    """Client for a remote backend speaking the /v1 wire protocol.

    ``client`` may be any httpx-compatible client (a FastAPI TestClient
    works); by default a real httpx.Client is created for ``base_url``.
    """

    def __init__(self, base_url: str = "", client=None, timeout: float = 30.0):
        if client is None:
            import httpx

            client = httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout)
        self._client = client
        self._tokens: list[str] | None = None
        self._health: dict | None = None

    def _request(self, method: str, path: str, **kwargs) -> dict:
        import httpx

        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"{path}: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(f"{path}: HTTP {response.status_code} {response.text[:200]}")
        if response.status_code >= 400:
            raise AutoccError(f"{path}: HTTP {response.status_code} {response.text[:200]}")
        return response.json()

    def _healthz(self) -> dict:
        if self._health is None:
            self._health = self._request("GET", "/healthz")
        return self._health

    @property
    def name(self) -> str:
        return str(self._healthz().get("backend", "remote"))

    @property
    def eos_reliable(self) -> bool:
        return bool(self._healthz().get("eos_reliable", True))

    @property
    def tokens(self) -> list[str]:
        if self._tokens is None:
            self._tokens = list(self._request("GET", "/v1/vocab")["tokens"])
        return self._tokens

    def next_dist(self, context_words: list[str]) -> np.ndarray:
        payload = self._request("POST", "/v1/next", json={"context_words": list(context_words)})
        dist = np.zeros(len(self.tokens))
        dist[np.asarray(payload["vocab_ids"], dtype=int)] = payload["probs"]
        return dist

    def logprob_items(self, sentences: list[str]) -> list[ScoredSequence]:
        payload = self._request("POST", "/v1/logprobs", json={"sentences": list(sentences)})
        items = []
        for item in payload["items"]:
            n = len(item["tokens"])
            # wire tokens are words; ids are irrelevant for scoring, so a
            # dummy id sequence of matching length carries the logprobs
            items.append(ScoredSequence(tokens=tuple(range(n)), logprobs=tuple(item["logprobs"])))
        return items

    def embed(self, sentences: list[str], mode: str = "static") -> list[dict]:
        payload = self._request("POST", "/v1/embed", json={"sentences": list(sentences), "mode": mode})
        return payload["items"]

    def model_hash(self) -> str:
        return str(self._healthz().get("model_hash", ""))


def resolve_backend(spec: str):
    """Turn a CLI backend argument into a backend: a URL becomes an HTTP
    client, anything else is loaded as an n-gram model file."""
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpBackend(base_url=spec)
    return NgramBackend(NGramModel.load(spec))
