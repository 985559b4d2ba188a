"""Chat-completion backends: OpenAI-compatible HTTP client plus test doubles.

The pipeline talks to any endpoint exposing ``POST {base_url}/chat/completions``
with the usual messages/choices payload. Requests are sent at temperature 0
so configuration runs are reproducible. :class:`MockBackend` serves canned
responses keyed by a prompt fingerprint, a scripted sequence, or a callable,
which keeps every test offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import requests

ENV_API_KEY = "AUTOSIMP_LLM_API_KEY"
ENV_BASE_URL = "AUTOSIMP_LLM_BASE_URL"
ENV_MODEL = "AUTOSIMP_LLM_MODEL"


class BackendError(RuntimeError):
    """The chat backend failed: network, HTTP status, or malformed payload."""


@dataclass(frozen=True)
class LlmBackendConfig:
    """Connection settings; the API key stays behind an env-var name."""

    base_url: str = ""
    model_name: str = ""
    api_key_ref: str = ENV_API_KEY
    temperature: float = 0.0
    timeout_seconds: float = 60.0
    max_retries_api: int = 2

    @classmethod
    def from_env(cls) -> "LlmBackendConfig":
        return cls(
            base_url=os.environ.get(ENV_BASE_URL, ""),
            model_name=os.environ.get(ENV_MODEL, ""),
        )

    @property
    def configured(self) -> bool:
        return bool(self.base_url and self.model_name)


def prompt_fingerprint(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def extract_json_object(text: str) -> dict:
    """Pull the first JSON object out of chatty model output.

    Strips markdown fences and any prose before/after the outermost braces.
    Raises ``ValueError`` when nothing parseable remains.
    """
    fenced = re.search(r"```(?:json)?\s*(\{.*?\})\s*```", text, re.DOTALL)
    if fenced:
        text = fenced.group(1)
    else:
        match = re.search(r"\{.*\}", text, re.DOTALL)
        if not match:
            raise ValueError("no JSON object found in response")
        text = match.group(0)
    parsed = json.loads(text)
    if not isinstance(parsed, dict):
        raise ValueError("response JSON is not an object")
    return parsed


class HttpChatBackend:
    """Minimal OpenAI-compatible chat client."""

    def __init__(self, config: LlmBackendConfig):
        if not config.configured:
            raise BackendError("backend not configured: base_url and model_name required")
        self.config = config

    def chat(self, system: str, user: str, timeout: float | None = None) -> str:
        cfg = self.config
        url = cfg.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_ref, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        last_error: Exception | None = None
        for _ in range(max(1, cfg.max_retries_api)):
            try:
                resp = requests.post(
                    url, json=payload, headers=headers,
                    timeout=timeout if timeout is not None else cfg.timeout_seconds,
                )
                resp.raise_for_status()
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise BackendError(f"chat backend failed after retries: {last_error}") from last_error


@dataclass
class MockBackend:
    """Offline stand-in for a chat backend.

    Resolution order: ``responder`` callable, then ``script`` (consumed in
    order), then ``fixtures`` keyed by prompt fingerprint (raw-prompt keys
    are fingerprinted on construction). Dict fixtures are serialized to
    JSON; exceptions are raised to simulate backend failures.
    """

    fixtures: Mapping[str, Any] = field(default_factory=dict)
    script: Sequence[Any] = ()
    responder: Callable[[str, str], Any] | None = None

    def __post_init__(self):
        resolved = {}
        for key, value in self.fixtures.items():
            if not re.fullmatch(r"[0-9a-f]{64}", key):
                key = prompt_fingerprint(key)
            resolved[key] = value
        self.fixtures = resolved
        self._script = list(self.script)
        self.calls: list[tuple[str, str]] = []

    def chat(self, system: str, user: str, timeout: float | None = None) -> str:
        self.calls.append((system, user))
        if self.responder is not None:
            return self._render(self.responder(system, user))
        if self._script:
            return self._render(self._script.pop(0))
        key = prompt_fingerprint(user)
        if key not in self.fixtures:
            raise BackendError(f"no fixture for prompt fingerprint {key[:12]}...")
        return self._render(self.fixtures[key])

    @staticmethod
    def _render(value: Any) -> str:
        if isinstance(value, Exception):
            raise value
        if isinstance(value, Mapping):
            return json.dumps(value)
        return str(value)


def make_backend(config: LlmBackendConfig | None = None):
    """HTTP backend from explicit config or environment variables."""
    cfg = config if config is not None else LlmBackendConfig.from_env()
    return HttpChatBackend(cfg)
