"""Chat completion providers.

The provider contract has two capabilities: plain completion and
schema-constrained completion (``supports_schema``). The deterministic mock
implements both so the whole pipeline runs offline; the HTTP adapter maps
the contract onto a JSON chat endpoint.
"""

from __future__ import annotations

import json
import math
import os
import re
from typing import Callable, Protocol

from . import wire
from .errors import ConfigError, ProviderError


class ChatProvider(Protocol):
    tag: str
    supports_schema: bool

    def complete(self, system: str, user: str, *, temperature: float = 0.7,
                 seed: int | None = None) -> str: ...

    def complete_structured(self, system: str, user: str, schema: dict, *,
                            temperature: float = 0.7, seed: int | None = None) -> dict: ...


# Off-curriculum stems for non-grounded prompts; vocabulary deliberately
# avoids the fixture corpus so alignment scores stay near zero.
_GENERIC_STEMS = (
    "Siapakah pelukis agung zaman pembaharuan Itali?",
    "Apakah ibu kota empayar Rom purba?",
    "Apakah lautan terluas di dunia?",
    "Siapakah pengarang hikayat lama tersebut?",
    "Apakah gunung tertinggi di Asia Tenggara?",
    "Siapakah saintis pencipta teleskop awal?",
    "Apakah planet paling hampir dengan matahari?",
    "Apakah burung kebangsaan negara kita?",
)

_GENERIC_OPTIONS = ("Pilihan pertama", "Pilihan kedua", "Pilihan ketiga", "Pilihan keempat")
_RAG_OPTIONS = ("-8", "-2", "1", "8")

_CONTEXT_BLOCK_RE = re.compile(r"\[(?P<cid>[^\]\n]+)\]\n(?P<body>.*?)\n---", re.DOTALL)

_QA_MARKER = "Jawab soalan berikut"
_RAG_MARKER = "Konteks nota:"

REFUSAL_TEXT = "Maaf, soalan ini tidak dapat dijawab berdasarkan konteks yang diberikan."


def _first_context_body(user: str) -> str | None:
    m = _CONTEXT_BLOCK_RE.search(user)
    return m.group("body") if m else None


class MockChatProvider:
    """Deterministic offline stand-in for a chat model.

    Behaviour is a pure function of (prompt, seed) except for two explicit
    knobs: ``malformed_rate`` injects broken JSON into plain MCQ completions
    on a fixed arithmetic schedule (every prefix of n calls contains exactly
    ``floor(n * rate)`` failures), and ``refuse_questions`` makes the QA
    mode answer with a refusal. Grounded prompts yield stems built from the
    first retrieved chunk, so retrieval quality propagates into the
    generated question text.
    """

    supports_schema = True

    def __init__(self, malformed_rate: float = 0.0, refuse_questions: bool = False):
        if not 0.0 <= malformed_rate <= 1.0:
            raise ConfigError(f"malformed_rate must be within [0, 1], got {malformed_rate}")
        self.tag = "mock-chat-v1"
        self.malformed_rate = malformed_rate
        self.refuse_questions = refuse_questions
        self.calls = 0
        self._mcq_calls = 0

    # -- scheduling ------------------------------------------------------

    def _next_is_malformed(self) -> bool:
        i = self._mcq_calls
        self._mcq_calls += 1
        return math.floor((i + 1) * self.malformed_rate) > math.floor(i * self.malformed_rate)

    # -- content synthesis -----------------------------------------------

    def _mcq_payload(self, user: str, seed: int | None) -> dict:
        body = _first_context_body(user) if _RAG_MARKER in user else None
        if body is not None:
            line = body.strip().split("\n")[0]
            line = " ".join(line.split()[:24])
            stem = f"{line} Antara berikut, yang manakah benar?"
            options = _RAG_OPTIONS
            answer = "B"
            explanation = f"Rujuk nota: {line}"
        else:
            idx = (seed if seed is not None else self.calls) % len(_GENERIC_STEMS)
            stem = _GENERIC_STEMS[idx]
            options = _GENERIC_OPTIONS
            answer = "A"
            explanation = "Jawapan umum."
        return {
            "stem": stem,
            "options": [{"label": label, "text": text} for label, text in zip("ABCD", options)],
            "answer_key": answer,
            "explanation": explanation,
        }

    def _qa_answer(self, user: str) -> str:
        if self.refuse_questions:
            return REFUSAL_TEXT
        body = _first_context_body(user)
        if body is None:
            return REFUSAL_TEXT
        line = body.strip().split("\n")[0]
        return f"Berdasarkan konteks rujukan: {line}"

    # -- provider contract -------------------------------------------------

    def complete(self, system: str, user: str, *, temperature: float = 0.7,
                 seed: int | None = None) -> str:
        del system, temperature
        self.calls += 1
        if _QA_MARKER in user:
            return self._qa_answer(user)
        payload = self._mcq_payload(user, seed)
        if self._next_is_malformed():
            return '{"stem": "Soalan tidak leng'
        return json.dumps(payload, ensure_ascii=False)

    def complete_structured(self, system: str, user: str, schema: dict, *,
                            temperature: float = 0.7, seed: int | None = None) -> dict:
        del system, schema, temperature
        self.calls += 1
        # Schema-constrained mode is guaranteed well-formed by contract, so
        # the malformed schedule never applies here.
        return self._mcq_payload(user, seed)


class HttpChatProvider:
    """Adapter for an HTTP chat-completion endpoint.

    Wire contract: POST ``{"model", "messages", "temperature"}`` plus
    ``"response_schema"`` for schema-constrained requests and ``"seed"``
    when given; bearer token from the configured environment variable. The
    response carries the completion at ``choices[0].message.content`` (or a
    top-level ``content``), JSON-encoded for structured requests.
    """

    supports_schema = True

    def __init__(self, endpoint: str, model: str, api_key_env: str = "QGEN_API_KEY",
                 transport: Callable[..., dict] | None = None, timeout: float = 120.0):
        if not endpoint:
            raise ConfigError("chat endpoint must be configured for non-mock runs")
        key = os.environ.get(api_key_env, "")
        if not key:
            raise ConfigError(f"environment variable {api_key_env} must be set for non-mock runs")
        self.endpoint = endpoint
        self.model = model
        self.tag = f"http:{model}"
        self.timeout = timeout
        self._key = key
        self._transport = transport

    def _request(self, system: str, user: str, temperature: float,
                 schema: dict | None, seed: int | None) -> str:
        transport = self._transport or wire.http_post_json
        payload: dict = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": temperature,
        }
        if schema is not None:
            payload["response_schema"] = schema
        if seed is not None:
            payload["seed"] = seed
        body = transport(self.endpoint, payload, {"Authorization": f"Bearer {self._key}"},
                         timeout=self.timeout)
        try:
            if "choices" in body:
                return str(body["choices"][0]["message"]["content"])
            return str(body["content"])
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(0, f"chat response missing completion content: {exc}", retryable=False) from exc

    def complete(self, system: str, user: str, *, temperature: float = 0.7,
                 seed: int | None = None) -> str:
        return self._request(system, user, temperature, None, seed)

    def complete_structured(self, system: str, user: str, schema: dict, *,
                            temperature: float = 0.7, seed: int | None = None) -> dict:
        content = self._request(system, user, temperature, schema, seed)
        try:
            data = json.loads(content)
        except json.JSONDecodeError as exc:
            raise ProviderError(0, f"schema-constrained response is not JSON: {exc}", retryable=False) from exc
        if not isinstance(data, dict):
            raise ProviderError(0, "schema-constrained response is not a JSON object", retryable=False)
        return data
