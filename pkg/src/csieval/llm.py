"""Chat-completion client with recordable, replayable transports.

Every request is reduced to a canonical JSON digest.  A recording
transport appends (digest, request, response) lines to a JSONL cassette;
a replay transport serves responses back by digest, consuming duplicate
recordings in FIFO order and repeating the last one once exhausted.
Replay is the backbone of deterministic evaluation runs: the same corpus
plus the same cassette must reproduce a report byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .prompting import PromptPlan, exemplar_prompt

__all__ = [
    "LlmError",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "request_digest",
    "Transport",
    "LiveTransport",
    "RecordingTransport",
    "ReplayTransport",
    "TokenBucket",
    "TurnExchange",
    "PlanResult",
    "run_plan",
    "complete_text",
    "parse_candidates",
]


class LlmError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def to_record(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0

    def to_record(self) -> dict:
        return {
            "model": self.model,
            "messages": [m.to_record() for m in self.messages],
            "temperature": self.temperature,
        }


@dataclass(frozen=True)
class ChatResponse:
    content: str
    model: str = ""

    def to_record(self) -> dict:
        return {"content": self.content, "model": self.model}


def request_digest(request: ChatRequest) -> str:
    """Stable sha256 over the canonical JSON form of the request."""
    canonical = json.dumps(
        request.to_record(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Transport(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class TokenBucket:
    """Blocking rate limiter: at most `rate` acquisitions per second."""

    def __init__(
        self,
        rate: float,
        capacity: float | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._clock = clock
        self._sleep = sleep
        self._tokens = self.capacity
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


_RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


class LiveTransport:
    """OpenAI-compatible chat endpoint with bounded retry on 429/5xx."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
        rate_limit: TokenBucket | None = None,
        max_concurrency: int | None = None,
        http_client: httpx.Client | None = None,
    ) -> None:
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = http_client or httpx.Client(
            base_url=base_url, headers=headers, timeout=timeout
        )
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._rate = rate_limit
        self._gate = threading.Semaphore(max_concurrency) if max_concurrency else None

    def complete(self, request: ChatRequest) -> ChatResponse:
        if self._gate is not None:
            with self._gate:
                return self._complete_limited(request)
        return self._complete_limited(request)

    def _complete_limited(self, request: ChatRequest) -> ChatResponse:
        last_error = "exhausted retries"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            if self._rate is not None:
                self._rate.acquire()
            try:
                resp = self._client.post("/chat/completions", json=request.to_record())
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                continue
            if resp.status_code == 200:
                return self._parse(resp)
            last_error = f"status {resp.status_code}"
            if resp.status_code not in _RETRY_STATUSES:
                raise LlmError(f"chat request failed: {last_error}")
        raise LlmError(f"chat request failed after {self.max_retries + 1} attempts: {last_error}")

    @staticmethod
    def _parse(resp: httpx.Response) -> ChatResponse:
        try:
            data = resp.json()
            choice = data["choices"][0]["message"]
            return ChatResponse(content=choice["content"], model=data.get("model", ""))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise LlmError(f"malformed chat response: {exc}") from exc


class RecordingTransport:
    """Pass-through transport that appends every exchange to a cassette."""

    def __init__(self, inner: Transport, cassette_path: str | Path) -> None:
        self._inner = inner
        self._path = Path(cassette_path)
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self._inner.complete(request)
        record = {
            "digest": request_digest(request),
            "request": request.to_record(),
            "response": response.to_record(),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return response


class ReplayTransport:
    """Serves recorded responses by request digest.

    Multiple recordings of the same digest are consumed in file order;
    once only one remains it is repeated for every further request.  An
    unrecorded digest is an error, not a fallback to the network.
    """

    def __init__(self, cassette_path: str | Path) -> None:
        path = Path(cassette_path)
        if not path.exists():
            raise LlmError(f"cassette not found: {path}")
        self._queues: dict[str, deque[ChatResponse]] = defaultdict(deque)
        with path.open(encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    record = json.loads(raw)
                    digest = record["digest"]
                    content = record["response"]["content"]
                except (ValueError, KeyError, TypeError) as exc:
                    raise LlmError(f"bad cassette line {lineno}: {exc}") from exc
                self._queues[digest].append(
                    ChatResponse(content=content, model=record["response"].get("model", ""))
                )
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = request_digest(request)
        with self._lock:
            queue = self._queues.get(digest)
            if not queue:
                raise LlmError(f"cassette miss: {digest}")
            if len(queue) > 1:
                return queue.popleft()
            return queue[0]


@dataclass(frozen=True)
class TurnExchange:
    prompt: str
    response: str


@dataclass(frozen=True)
class PlanResult:
    exchanges: tuple[TurnExchange, ...]
    requests: tuple[ChatRequest, ...] = field(default=(), compare=False)

    @property
    def final_text(self) -> str:
        return self.exchanges[-1].response


def _exemplar_messages(
    plan: PromptPlan, shots: Sequence[tuple[str, str]]
) -> list[ChatMessage]:
    messages: list[ChatMessage] = []
    for shot_source, shot_target in shots:
        prompt = exemplar_prompt(shot_source, plan.source_lang, plan.target_lang)
        messages.append(ChatMessage("user", prompt))
        messages.append(ChatMessage("assistant", shot_target))
    return messages


def run_plan(
    plan: PromptPlan,
    transport: Transport,
    model: str,
    shots: Sequence[tuple[str, str]] | None = None,
    temperature: float = 0.0,
) -> PlanResult:
    """Execute a chat plan, threading earlier turns into later ones.

    Shots (the plan's own unless overridden here) become user/assistant
    exemplar exchanges ahead of the first turn.  A turn that depends on
    a predecessor sees that predecessor's prompt and response in its
    message history.
    """
    conversation = _exemplar_messages(plan, plan.shots if shots is None else shots)
    exchanges: list[TurnExchange] = []
    requests: list[ChatRequest] = []
    for turn in plan.turns:
        conversation.append(ChatMessage("user", turn.prompt))
        request = ChatRequest(
            model=model, messages=tuple(conversation), temperature=temperature
        )
        response = transport.complete(request)
        conversation.append(ChatMessage("assistant", response.content))
        exchanges.append(TurnExchange(prompt=turn.prompt, response=response.content))
        requests.append(request)
    return PlanResult(exchanges=tuple(exchanges), requests=tuple(requests))


def complete_text(
    transport: Transport, model: str, prompt: str, temperature: float = 0.0
) -> str:
    """Single user-turn completion for string-format prompts."""
    request = ChatRequest(
        model=model, messages=(ChatMessage("user", prompt),), temperature=temperature
    )
    return transport.complete(request).content


_CANDIDATE_LINE = re.compile(r"^\s*(?:\d+\s*[\.\):]\s*|[-*•]\s+)(.*\S)\s*$")


def parse_candidates(text: str, expected: int | None = None) -> list[str]:
    """Extract enumerated translation candidates from model output.

    Accepts "1. x", "2) y", "3: z", and bulleted lists.  When nothing
    looks enumerated, non-empty lines stand in, so a model that ignores
    the numbering instruction still yields candidates.
    """
    candidates = []
    for line in text.splitlines():
        match = _CANDIDATE_LINE.match(line)
        if match:
            candidates.append(match.group(1))
    if not candidates:
        candidates = [line.strip() for line in text.splitlines() if line.strip()]
    if expected is not None and len(candidates) > expected:
        candidates = candidates[:expected]
    return candidates
