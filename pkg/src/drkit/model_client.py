"""Model-client contract: ordered messages in, text plus optional usage out.

The HTTP client speaks a chat-completions style JSON API with a bearer
credential read from MODEL_API_KEY. Scripted clients cover every offline
test path; nothing in the package requires a live backend.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Optional, Protocol

import httpx

TRANSPORT_RETRIES = 2
BACKOFF_INITIAL_SECONDS = 0.5


@dataclass(frozen=True)
class ModelResponse:
    text: str
    usage_tokens: Optional[int] = None


class ModelClient(Protocol):
    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse: ...


class TransportError(Exception):
    """Raised after all retries are exhausted; episodes convert this to
    termination=error rather than crashing the host."""


class HttpModelClient:
    def __init__(
        self,
        base_url: str,
        model: str,
        temperature: float = 0.0,
        timeout: float = 120.0,
        api_key: Optional[str] = None,
        sleep=time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.api_key = api_key if api_key is not None else os.environ.get("MODEL_API_KEY", "")
        self._sleep = sleep

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        payload = {
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
        }
        if max_tokens is not None:
            payload["max_tokens"] = max_tokens
        headers = {"Authorization": f"Bearer {self.api_key}"}
        delay = BACKOFF_INITIAL_SECONDS
        last_error: Exception | None = None
        for attempt in range(1 + TRANSPORT_RETRIES):
            try:
                response = httpx.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
                response.raise_for_status()
                body = response.json()
                text = body["choices"][0]["message"]["content"]
                usage = body.get("usage", {}).get("completion_tokens")
                return ModelResponse(text=text, usage_tokens=usage)
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < TRANSPORT_RETRIES:
                    self._sleep(delay)
                    delay *= 2
        raise TransportError(f"model backend failed after {TRANSPORT_RETRIES} retries: {last_error}")


class ScriptedClient:
    """Replays a fixed sequence of responses; sticks on the last one."""

    def __init__(self, responses: list[str | ModelResponse]):
        if not responses:
            raise ValueError("need at least one scripted response")
        self._responses = [
            r if isinstance(r, ModelResponse) else ModelResponse(text=r) for r in responses
        ]
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        self.calls.append(list(messages))
        idx = min(len(self.calls) - 1, len(self._responses) - 1)
        return self._responses[idx]


def estimate_tokens(text: str) -> int:
    """Backend-agnostic fallback when no usage is reported: ceil(chars / 4)."""
    return -(-len(text) // 4)
