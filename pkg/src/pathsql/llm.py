"""Completion clients: scripted mock, record/replay transcripts, HTTP adapter.

Every prompt in the pipeline flows through `complete()`, so a scripted or
replayed client makes whole runs deterministic. Transcripts are JSON files
of (prompt digest, responses) entries; replay can be strictly ordered (to
catch pipeline drift) or digest-keyed (tolerates reordering).
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Protocol

from .errors import LlmError


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    n_samples: int = 1
    temperature: float = 0.2

    def __post_init__(self):
        if self.n_samples < 1:
            raise LlmError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0.0 <= self.temperature <= 2.0:
            raise LlmError(f"temperature must be in [0, 2], got {self.temperature}")


def prompt_digest(prompt: str) -> str:
    """Stable hash of the whitespace-normalized prompt text."""
    normalized = re.sub(r"\s+", " ", prompt).strip()
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()[:16]


class LlmClient(Protocol):
    def complete(self, req: CompletionRequest) -> list[str]: ...


class ScriptedLlm:
    """Returns pre-scripted response lists in call order; never touches the network.

    Each script entry answers one complete() call. Entries shorter than the
    requested sample count are cycled to length; longer ones are truncated.
    """

    def __init__(self, script):
        self._script = deque(list(entry) for entry in script)
        self._lock = threading.Lock()
        self.calls: list[CompletionRequest] = []

    def complete(self, req: CompletionRequest) -> list[str]:
        with self._lock:
            self.calls.append(req)
            if not self._script:
                raise LlmError("mock script exhausted", prompt_digest=prompt_digest(req.prompt))
            entry = self._script.popleft()
        if not entry:
            raise LlmError("mock script entry is empty",
                           prompt_digest=prompt_digest(req.prompt))
        return [entry[i % len(entry)] for i in range(req.n_samples)]


@dataclass
class Transcript:
    entries: list[dict] = field(default_factory=list)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.entries, fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(entries=json.load(fh))


class RecordingLlm:
    """Wraps a client and logs every request/response pair into a transcript."""

    def __init__(self, inner):
        self.inner = inner
        self.transcript = Transcript()
        self._lock = threading.Lock()

    def complete(self, req: CompletionRequest) -> list[str]:
        responses = self.inner.complete(req)
        with self._lock:
            self.transcript.entries.append({
                "digest": prompt_digest(req.prompt),
                "n_samples": req.n_samples,
                "responses": list(responses),
            })
        return responses


class ReplayLlm:
    """Serves recorded responses back; ordered or digest-keyed replay."""

    def __init__(self, transcript: Transcript, mode: str = "ordered"):
        if mode not in ("ordered", "digest"):
            raise LlmError(f"unknown replay mode {mode!r}")
        self.mode = mode
        self._lock = threading.Lock()
        if mode == "ordered":
            self._queue = deque(transcript.entries)
        else:
            self._by_digest: dict[str, deque] = {}
            for entry in transcript.entries:
                self._by_digest.setdefault(entry["digest"], deque()).append(entry)

    def complete(self, req: CompletionRequest) -> list[str]:
        digest = prompt_digest(req.prompt)
        with self._lock:
            if self.mode == "ordered":
                if not self._queue:
                    raise LlmError("transcript exhausted", prompt_digest=digest)
                entry = self._queue.popleft()
                if entry["digest"] != digest:
                    raise LlmError(
                        f"transcript drift: expected digest {entry['digest']}, "
                        f"request has {digest}", prompt_digest=digest)
            else:
                bucket = self._by_digest.get(digest)
                if not bucket:
                    raise LlmError("no transcript entry for request", prompt_digest=digest)
                entry = bucket.popleft()
        responses = entry["responses"]
        if len(responses) < req.n_samples:
            raise LlmError(
                f"transcript entry has {len(responses)} responses, "
                f"{req.n_samples} requested", prompt_digest=digest)
        return list(responses[:req.n_samples])


class HttpLlm:
    """Chat-completion HTTP adapter (common provider request/response shape)."""

    def __init__(self, endpoint, model, api_key_env="PATHSQL_API_KEY",
                 max_retries=3, backoff=1.0, timeout=60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout

    def complete(self, req: CompletionRequest) -> list[str]:
        import httpx

        digest = prompt_digest(req.prompt)
        api_key = os.environ.get(self.api_key_env)
        if not api_key:
            raise LlmError(f"missing API key: set ${self.api_key_env}", prompt_digest=digest)
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "n": req.n_samples,
            "temperature": req.temperature,
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        last_error = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = httpx.post(self.endpoint, json=body, headers=headers,
                                  timeout=self.timeout)
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = LlmError(f"transient HTTP {resp.status_code}",
                                      prompt_digest=digest)
                continue
            if resp.status_code != 200:
                raise LlmError(f"HTTP {resp.status_code}: {resp.text[:200]}",
                               prompt_digest=digest)
            choices = resp.json().get("choices", [])
            texts = [c.get("message", {}).get("content", "") for c in choices]
            if len(texts) < req.n_samples:
                raise LlmError(f"provider returned {len(texts)} choices, "
                               f"{req.n_samples} requested", prompt_digest=digest)
            return texts[:req.n_samples]
        raise LlmError(f"exhausted retries: {last_error}", prompt_digest=digest)
