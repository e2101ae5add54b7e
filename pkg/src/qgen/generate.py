"""Question generation: request/outcome types and the four-method pipeline.

Every request produces exactly one :class:`GenOutcome`; malformed model
output becomes a recorded :class:`ParseFailure`, never an exception, so
batches account for failures instead of dropping them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .chat import ChatProvider
from .chunking import LearningStandard
from .embedding import EmbeddingProvider, RetryPolicy, call_with_retries, embed_texts
from .errors import MissingEmbedder, MissingIndex
from .mcq import Mcq, ParseFailure, parse_mcq_json
from .prompts import PromptBundle, build_prompt_basic, build_prompt_rag, build_prompt_structured
from .vectorindex import VectorIndex, top_k


class Method(Enum):
    STRUCTURED_PROMPT = "structured_prompt"
    BASIC_PROMPT = "basic_prompt"
    RAG_GENERIC = "rag_generic"
    RAG_STRUCTURE_AWARE = "rag_structure_aware"

    @property
    def is_rag(self) -> bool:
        return self in (Method.RAG_GENERIC, Method.RAG_STRUCTURE_AWARE)

    @property
    def display_name(self) -> str:
        return {
            Method.STRUCTURED_PROMPT: "Structured Prompt",
            Method.BASIC_PROMPT: "Basic Prompt",
            Method.RAG_GENERIC: "RAG (generic chunks)",
            Method.RAG_STRUCTURE_AWARE: "RAG (structure-aware chunks)",
        }[self]


METHOD_ORDER = (
    Method.STRUCTURED_PROMPT,
    Method.BASIC_PROMPT,
    Method.RAG_GENERIC,
    Method.RAG_STRUCTURE_AWARE,
)


@dataclass(frozen=True)
class GenRequest:
    method: Method
    topic: str
    target_standard: LearningStandard | None = None
    retrieval_k: int | None = None
    seed_hint: int | None = None

    def __post_init__(self):
        if self.method.is_rag:
            if self.retrieval_k is None or self.retrieval_k < 1:
                raise ValueError(f"{self.method.value} requires a positive retrieval_k")
        elif self.retrieval_k is not None:
            raise ValueError(f"{self.method.value} must not set retrieval_k")


@dataclass(frozen=True)
class GenOutcome:
    outcome_id: str
    request: GenRequest
    result: Mcq | ParseFailure
    retrieved_chunk_ids: tuple[str, ...]
    prompt_fingerprint: str
    provider_tag: str

    @property
    def mcq(self) -> Mcq | None:
        return self.result if isinstance(self.result, Mcq) else None

    @property
    def failed(self) -> bool:
        return isinstance(self.result, ParseFailure)

    def to_dict(self) -> dict:
        if isinstance(self.result, Mcq):
            result = {"kind": "mcq", **self.result.to_dict()}
        else:
            result = {"kind": "parse_failure", **self.result.to_dict()}
        std = self.request.target_standard
        return {
            "outcome_id": self.outcome_id,
            "method": self.request.method.value,
            "topic": self.request.topic,
            "target_standard": {"code": std.code, "description": std.description} if std else None,
            "retrieval_k": self.request.retrieval_k,
            "seed_hint": self.request.seed_hint,
            "result": result,
            "retrieved_chunk_ids": list(self.retrieved_chunk_ids),
            "prompt_fingerprint": self.prompt_fingerprint,
            "provider_tag": self.provider_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenOutcome":
        std = d.get("target_standard")
        request = GenRequest(
            method=Method(d["method"]),
            topic=d["topic"],
            target_standard=LearningStandard(std["code"], std["description"]) if std else None,
            retrieval_k=d.get("retrieval_k"),
            seed_hint=d.get("seed_hint"),
        )
        raw_result = dict(d["result"])
        kind = raw_result.pop("kind")
        result: Mcq | ParseFailure
        if kind == "mcq":
            result = Mcq.from_dict(raw_result)
        else:
            result = ParseFailure.from_dict(raw_result)
        return cls(
            outcome_id=d["outcome_id"],
            request=request,
            result=result,
            retrieved_chunk_ids=tuple(d["retrieved_chunk_ids"]),
            prompt_fingerprint=d["prompt_fingerprint"],
            provider_tag=d["provider_tag"],
        )


def _rag_query_text(request: GenRequest) -> str:
    # Retrieval query couples the run topic with the targeted standard's
    # description, when one is set; both are disclosed in provenance.
    if request.target_standard is not None:
        return f"{request.topic} {request.target_standard.description}"
    return request.topic


def _structured_result(chat: ChatProvider, bundle: PromptBundle, temperature: float,
                       seed: int | None, retry: RetryPolicy) -> Mcq | ParseFailure:
    payload = call_with_retries(
        lambda: chat.complete_structured(
            bundle.system_text, bundle.user_text, bundle.response_schema or {},
            temperature=temperature, seed=seed,
        ),
        retry,
    )
    # The schema contract should make this parse trivially; a provider that
    # violates it still becomes an accounted failure rather than a crash.
    raw = json.dumps(payload, ensure_ascii=False)
    parsed = parse_mcq_json(raw)
    if isinstance(parsed, ParseFailure):
        return ParseFailure(
            raw_text=raw,
            category=parsed.category,
            message=f"schema-mode response violated the MCQ contract: {parsed.message}",
        )
    return parsed


def generate_mcq(
    chat: ChatProvider,
    request: GenRequest,
    index: VectorIndex | None = None,
    embedder: EmbeddingProvider | None = None,
    *,
    outcome_id: str = "q:0000",
    temperature: float = 0.7,
    retry: RetryPolicy = RetryPolicy(),
) -> GenOutcome:
    """Run one generation request end to end and always return an outcome.

    RAG methods embed the query, retrieve top-k chunks from ``index`` and
    ground the prompt in them; non-RAG methods need neither index nor
    embedder. Only transport-level provider errors propagate, and only
    after the retry policy is exhausted.
    """
    retrieved: tuple[str, ...] = ()
    if request.method.is_rag:
        if index is None:
            raise MissingIndex(f"{request.method.value} requires a vector index")
        if embedder is None:
            raise MissingEmbedder(f"{request.method.value} requires an embedding provider")
        query_vec = embed_texts(embedder, [_rag_query_text(request)], retry=retry)[0]
        hits = top_k(index, query_vec, request.retrieval_k or 1)
        retrieved = tuple(h.chunk_id for h in hits)
        context = [index.chunk_by_id(cid) for cid in retrieved]
        bundle = build_prompt_rag(request.topic, context)
    elif request.method is Method.STRUCTURED_PROMPT:
        bundle = build_prompt_structured(request.topic)
    else:
        bundle = build_prompt_basic(request.topic)

    if request.method is Method.STRUCTURED_PROMPT:
        result: Mcq | ParseFailure = _structured_result(
            chat, bundle, temperature, request.seed_hint, retry
        )
    else:
        raw = call_with_retries(
            lambda: chat.complete(bundle.system_text, bundle.user_text,
                                  temperature=temperature, seed=request.seed_hint),
            retry,
        )
        result = parse_mcq_json(raw)

    return GenOutcome(
        outcome_id=outcome_id,
        request=request,
        result=result,
        retrieved_chunk_ids=retrieved,
        prompt_fingerprint=bundle.fingerprint(),
        provider_tag=chat.tag,
    )


def generate_batch(
    chat: ChatProvider,
    method: Method,
    n: int,
    *,
    topic: str,
    standards: list[LearningStandard],
    retrieval_k: int = 3,
    index: VectorIndex | None = None,
    embedder: EmbeddingProvider | None = None,
    temperature: float = 0.7,
    retry: RetryPolicy = RetryPolicy(),
) -> list[GenOutcome]:
    """Generate exactly ``n`` outcomes, cycling standards round-robin.

    Standards are targeted in order so coverage across the teaching plan is
    uniform; parse failures are recorded in place, never dropped.
    """
    if n < 1:
        raise ValueError(f"batch size must be >= 1, got {n}")
    outcomes: list[GenOutcome] = []
    for i in range(n):
        standard = standards[i % len(standards)] if standards else None
        request = GenRequest(
            method=method,
            topic=topic,
            target_standard=standard,
            retrieval_k=retrieval_k if method.is_rag else None,
            seed_hint=i,
        )
        outcomes.append(
            generate_mcq(
                chat, request, index=index, embedder=embedder,
                outcome_id=f"{method.value}:{i:04d}", temperature=temperature,
                retry=retry,
            )
        )
    return outcomes
