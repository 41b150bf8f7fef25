"""Wire-protocol client for the multimodal language-model backbone.

Protocol: POST {endpoint}/v1/generate with JSON
{"prompt": str, "image_ref": str|null, "max_tokens": int} -> {"text": str}.
Images cross the boundary by reference or base64 string; the engine never
inspects them. Deterministic mock backends stand in for real weights in
tests and demos.
"""

from __future__ import annotations

import hashlib
import re
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol

import requests

from .errors import LlmTimeout, ProtocolError, TransportError

GENERATE_PATH = "/v1/generate"
DEFAULT_MAX_TOKENS = 128
DEFAULT_TIMEOUT = 60.0
DEFAULT_RETRIES = 2

# Matches the first retrieved context block as rendered by the pipeline
# template ("[1] Species: <name>. <description>").
FIRST_CONTEXT_SPECIES_RE = re.compile(r"^\[1\] Species: (.+?)\.", re.MULTILINE)


@dataclass(frozen=True)
class LlmRequest:
    prompt: str
    image_ref: Optional[str] = None
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class LlmResponse:
    text: str


class LlmClient(Protocol):
    def generate(self, request: LlmRequest) -> LlmResponse: ...


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


# -- mock behaviors ---------------------------------------------------------


@dataclass(frozen=True)
class EchoFirstContextSpecies:
    """Answer with the species named in the first retrieved context block;
    'I cannot tell.' when the prompt carries no context."""

    def respond(self, prompt: str) -> str:
        m = FIRST_CONTEXT_SPECIES_RE.search(prompt)
        if m:
            return f"The fish in the image is a {m.group(1)}."
        return "I cannot tell."


@dataclass(frozen=True)
class FixedText:
    text: str

    def respond(self, prompt: str) -> str:
        return self.text


@dataclass(frozen=True)
class Scripted:
    """Answers keyed by sha256(prompt); unknown prompts are a protocol
    error so tests fail loudly instead of silently drifting."""

    responses: Mapping[str, str] = field(default_factory=dict)

    def respond(self, prompt: str) -> str:
        key = prompt_hash(prompt)
        if key not in self.responses:
            raise ProtocolError(f"no scripted response for prompt hash {key}")
        return self.responses[key]


class MockLlmClient:
    """In-process deterministic backend: identical request, identical
    response."""

    def __init__(self, behavior):
        self.behavior = behavior
        self.calls = 0

    def generate(self, request: LlmRequest) -> LlmResponse:
        self.calls += 1
        return LlmResponse(text=self.behavior.respond(request.prompt))


# -- HTTP client ------------------------------------------------------------


class HttpLlmClient:
    """Client for the generate endpoint with bounded retries.

    Transient transport failures (connection errors, timeouts, 5xx) are
    retried with exponential backoff; malformed payloads are not.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = DEFAULT_RETRIES,
        backoff: float = 0.25,
        bearer_token: Optional[str] = None,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.bearer_token = bearer_token
        self._session = session or requests.Session()
        self.retry_count = 0  # total retries performed over the client's life

    def generate(self, request: LlmRequest) -> LlmResponse:
        payload = {
            "prompt": request.prompt,
            "image_ref": request.image_ref,
            "max_tokens": request.max_tokens,
        }
        headers = {}
        if self.bearer_token:
            headers["Authorization"] = f"Bearer {self.bearer_token}"
        url = self.endpoint + GENERATE_PATH
        delay = self.backoff
        last_error = None
        for attempt in range(self.retries + 1):
            if attempt:
                self.retry_count += 1
                time.sleep(delay)
                delay *= 2
            try:
                resp = self._session.post(
                    url, json=payload, timeout=self.timeout, headers=headers
                )
            except requests.Timeout as exc:
                last_error = LlmTimeout(f"no answer within {self.timeout}s: {exc}")
                continue
            except requests.RequestException as exc:
                last_error = TransportError(f"transport failure: {exc}")
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProtocolError(f"unexpected status {resp.status_code}")
            try:
                data = resp.json()
            except ValueError as exc:
                raise ProtocolError(f"response body is not JSON: {exc}") from exc
            if not isinstance(data, dict) or not isinstance(data.get("text"), str):
                raise ProtocolError(f"malformed response payload: {data!r}")
            return LlmResponse(text=data["text"])
        raise last_error


def make_client(
    endpoint: str,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    bearer_token: Optional[str] = None,
):
    """Build a client from an endpoint string.

    http(s)://... gives the wire client; "mock:echo", "mock:fixed:<text>"
    give in-process deterministic backends (used by tests and golden runs).
    """
    if endpoint.startswith("mock:"):
        spec = endpoint[len("mock:"):]
        if spec == "echo":
            return MockLlmClient(EchoFirstContextSpecies())
        if spec.startswith("fixed:"):
            return MockLlmClient(FixedText(spec[len("fixed:"):]))
        raise ValueError(f"unknown mock endpoint {endpoint!r}")
    if endpoint.startswith("http://") or endpoint.startswith("https://"):
        return HttpLlmClient(
            endpoint, timeout=timeout, retries=retries, bearer_token=bearer_token
        )
    raise ValueError(f"unsupported endpoint {endpoint!r}")
