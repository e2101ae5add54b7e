"""Dual evaluation of generated questions: alignment scoring and validity.

Alignment is the maximum cosine similarity between a question and the
learning standards; validity is a functional check asking whether the
question can be answered from the standards document alone (retrieval
threshold plus refusal detection on the answering model).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .chat import ChatProvider
from .chunking import LearningStandard, Strategy
from .embedding import EmbeddingProvider, call_with_retries, embed_texts
from .errors import DanglingReference, EmptyBatch, WrongIndexRole
from .generate import METHOD_ORDER, GenOutcome, Method
from .mcq import Mcq
from .prompts import build_prompt_qa
from .vectorindex import VectorIndex, cosine_similarity, top_k


class Verdict(Enum):
    VALID = "Valid"
    INVALID = "Invalid"


class VerdictReason(Enum):
    ABOVE_THRESHOLD_ANSWERED = "AboveThresholdAnswered"
    BELOW_THRESHOLD = "BelowThreshold"
    REFUSAL = "Refusal"
    NO_MCQ = "NoMcq"


DEFAULT_REFUSAL_MARKERS = (
    "tidak dapat dijawab",
    "tidak mempunyai maklumat",
    "cannot be answered",
    "cannot answer",
    "not enough information",
)


class EmptyStandards(EmptyBatch):
    pass


@dataclass(frozen=True)
class AlignmentScore:
    question_ref: str
    score: float
    best_standard: str
    per_standard: dict[str, float] | None = None


@dataclass(frozen=True)
class ValidityVerdict:
    question_ref: str
    verdict: Verdict
    reason: VerdictReason
    top_score: float
    answer_text: str | None = None

    def __post_init__(self):
        if self.verdict is Verdict.VALID and self.reason is not VerdictReason.ABOVE_THRESHOLD_ANSWERED:
            raise ValueError("a Valid verdict must carry reason AboveThresholdAnswered")


@dataclass(frozen=True)
class MethodReport:
    method: Method
    n: int
    mean_sts: float
    std_sts: float
    validity_pct: float
    parse_failure_pct: float
    embedder_tag: str = ""
    chat_tag: str = ""

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "n": self.n,
            "mean_sts": self.mean_sts,
            "std_sts": self.std_sts,
            "validity_pct": self.validity_pct,
            "parse_failure_pct": self.parse_failure_pct,
            "embedder_tag": self.embedder_tag,
            "chat_tag": self.chat_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MethodReport":
        return cls(
            method=Method(d["method"]),
            n=d["n"],
            mean_sts=d["mean_sts"],
            std_sts=d["std_sts"],
            validity_pct=d["validity_pct"],
            parse_failure_pct=d["parse_failure_pct"],
            embedder_tag=d.get("embedder_tag", ""),
            chat_tag=d.get("chat_tag", ""),
        )


def _evaluation_text(mcq: Mcq, unit: str) -> str:
    if unit == "stem":
        return mcq.stem
    if unit == "full":
        parts = [mcq.stem] + [o.text for o in mcq.options]
        if mcq.explanation:
            parts.append(mcq.explanation)
        return "\n".join(parts)
    raise ValueError(f"sts unit must be 'stem' or 'full', got {unit!r}")


def sts_alignment(
    mcq: Mcq,
    rpt_standards: list[tuple[LearningStandard, np.ndarray]],
    embedder: EmbeddingProvider,
    *,
    question_ref: str = "",
    unit: str = "stem",
) -> AlignmentScore:
    """Max cosine similarity between the question and every standard.

    Ties on the maximum are broken by the lowest standard code so results
    stay deterministic.
    """
    if not rpt_standards:
        raise EmptyStandards("alignment scoring needs at least one learning standard")
    query = embed_texts(embedder, [_evaluation_text(mcq, unit)])[0]
    per_standard = {
        standard.code: cosine_similarity(query, vec) for standard, vec in rpt_standards
    }
    best_code, best_score = min(per_standard.items(), key=lambda kv: (-kv[1], kv[0]))
    return AlignmentScore(
        question_ref=question_ref,
        score=best_score,
        best_standard=best_code,
        per_standard=per_standard,
    )


def ragqa_validity(
    mcq: Mcq,
    rpt_index: VectorIndex,
    embedder: EmbeddingProvider,
    chat: ChatProvider,
    *,
    tau: float = 0.5,
    k: int = 3,
    refusal_markers: tuple[str, ...] = DEFAULT_REFUSAL_MARKERS,
    question_ref: str = "",
) -> ValidityVerdict:
    """Functional validity check over the standards-only index.

    The stem is used as a retrieval query; below-threshold retrieval is
    Invalid without ever calling the chat provider, otherwise the provider
    answers from the retrieved standards and a refusal marks the question
    Invalid.
    """
    if any(c.strategy is not Strategy.STANDARD_SPLIT for c in rpt_index.chunks):
        raise WrongIndexRole(
            "validity checking requires an index built exclusively from standard-split chunks"
        )
    query = embed_texts(embedder, [mcq.stem])[0]
    hits = top_k(rpt_index, query, k)
    top_score = hits[0].score
    if top_score < tau:
        return ValidityVerdict(
            question_ref=question_ref,
            verdict=Verdict.INVALID,
            reason=VerdictReason.BELOW_THRESHOLD,
            top_score=top_score,
        )
    context = [rpt_index.chunk_by_id(h.chunk_id) for h in hits]
    bundle = build_prompt_qa(mcq.stem, context)
    answer = call_with_retries(
        lambda: chat.complete(bundle.system_text, bundle.user_text, temperature=0.0)
    )
    lowered = answer.lower()
    if any(marker.lower() in lowered for marker in refusal_markers):
        return ValidityVerdict(
            question_ref=question_ref,
            verdict=Verdict.INVALID,
            reason=VerdictReason.REFUSAL,
            top_score=top_score,
            answer_text=answer,
        )
    return ValidityVerdict(
        question_ref=question_ref,
        verdict=Verdict.VALID,
        reason=VerdictReason.ABOVE_THRESHOLD_ANSWERED,
        top_score=top_score,
        answer_text=answer,
    )


def _sample_std(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))


def aggregate(
    outcomes: list[GenOutcome],
    alignments: list[AlignmentScore],
    verdicts: list[ValidityVerdict],
    *,
    embedder_tag: str = "",
) -> list[MethodReport]:
    """Fold per-question evaluations into one report per method.

    Parse failures are excluded from the score statistics but included in
    the failure percentage's denominator; every parsed outcome must have
    exactly one alignment and one verdict.
    """
    if not outcomes:
        raise EmptyBatch("cannot aggregate an empty outcome list")
    by_id = {o.outcome_id: o for o in outcomes}
    align_by_ref: dict[str, AlignmentScore] = {}
    for a in alignments:
        if a.question_ref not in by_id:
            raise DanglingReference(f"alignment references unknown outcome {a.question_ref!r}")
        if a.question_ref in align_by_ref:
            raise DanglingReference(f"outcome {a.question_ref!r} has multiple alignments")
        align_by_ref[a.question_ref] = a
    verdict_by_ref: dict[str, ValidityVerdict] = {}
    for v in verdicts:
        if v.question_ref not in by_id:
            raise DanglingReference(f"verdict references unknown outcome {v.question_ref!r}")
        if v.question_ref in verdict_by_ref:
            raise DanglingReference(f"outcome {v.question_ref!r} has multiple verdicts")
        verdict_by_ref[v.question_ref] = v

    for o in outcomes:
        if o.failed:
            if o.outcome_id in align_by_ref or o.outcome_id in verdict_by_ref:
                raise DanglingReference(f"failed outcome {o.outcome_id!r} must not carry evaluations")
        else:
            if o.outcome_id not in align_by_ref:
                raise DanglingReference(f"parsed outcome {o.outcome_id!r} is missing an alignment")
            if o.outcome_id not in verdict_by_ref:
                raise DanglingReference(f"parsed outcome {o.outcome_id!r} is missing a verdict")

    reports: list[MethodReport] = []
    for method in METHOD_ORDER:
        group = [o for o in outcomes if o.request.method is method]
        if not group:
            continue
        parsed = [o for o in group if not o.failed]
        failures = len(group) - len(parsed)
        scores = [align_by_ref[o.outcome_id].score for o in parsed]
        valid = sum(
            1 for o in parsed if verdict_by_ref[o.outcome_id].verdict is Verdict.VALID
        )
        chat_tags = sorted({o.provider_tag for o in group})
        reports.append(
            MethodReport(
                method=method,
                n=len(group),
                mean_sts=sum(scores) / len(scores) if scores else 0.0,
                std_sts=_sample_std(scores),
                validity_pct=100.0 * valid / len(parsed) if parsed else 0.0,
                parse_failure_pct=100.0 * failures / len(group),
                embedder_tag=embedder_tag,
                chat_tag=",".join(chat_tags),
            )
        )
    return reports


_MD_HEADER = "| Method | STS Score | Std. Dev. | Validity (%) | Parse Failures (%) |"
_MD_RULE = "| --- | ---: | ---: | ---: | ---: |"


def render_report(reports: list[MethodReport], format: str = "markdown") -> str:
    """Render method reports as a markdown table or a JSON document."""
    if not reports:
        raise EmptyBatch("cannot render an empty report list")
    if format == "json":
        return json.dumps([r.to_dict() for r in reports], ensure_ascii=False, indent=2, sort_keys=True)
    if format == "markdown":
        lines = [_MD_HEADER, _MD_RULE]
        for r in reports:
            lines.append(
                f"| {r.method.display_name} | {r.mean_sts:.2f} | {r.std_sts:.2f} "
                f"| {r.validity_pct:.2f} | {r.parse_failure_pct:.2f} |"
            )
        return "\n".join(lines)
    raise ValueError(f"unknown report format {format!r}")
