"""Multiple-choice question model and the tolerant JSON parser for model output.

The parser never raises on bad model text: it returns a
:class:`ParseFailure` carrying the full raw response and a diagnostic
category, so failure accounting downstream loses nothing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

LABELS = ("A", "B", "C", "D")


class ParseCategory(Enum):
    NOT_JSON = "NotJson"
    MISSING_FIELD = "MissingField"
    BAD_OPTION_COUNT = "BadOptionCount"
    DUPLICATE_OPTION = "DuplicateOption"
    ANSWER_NOT_IN_OPTIONS = "AnswerNotInOptions"


class McqValidationError(ValueError):
    def __init__(self, category: ParseCategory, message: str):
        super().__init__(message)
        self.category = category


def _squash_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


@dataclass(frozen=True)
class McqOption:
    label: str
    text: str


@dataclass(frozen=True)
class Mcq:
    """One multiple-choice question: stem, four labeled options, key, explanation."""

    stem: str
    options: tuple[McqOption, ...]
    answer_key: str
    explanation: str = ""
    language_tag: str = "ms"

    def __post_init__(self):
        validate_mcq_fields(self.stem, self.options, self.answer_key)

    def option_text(self, label: str) -> str:
        for opt in self.options:
            if opt.label == label:
                return opt.text
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "stem": self.stem,
            "options": [{"label": o.label, "text": o.text} for o in self.options],
            "answer_key": self.answer_key,
            "explanation": self.explanation,
            "language_tag": self.language_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mcq":
        return cls(
            stem=d["stem"],
            options=tuple(McqOption(o["label"], o["text"]) for o in d["options"]),
            answer_key=d["answer_key"],
            explanation=d.get("explanation", ""),
            language_tag=d.get("language_tag", "ms"),
        )


def validate_mcq_fields(stem: str, options: tuple[McqOption, ...], answer_key: str) -> None:
    """Enforce the MCQ invariants, raising a categorized validation error."""
    if not isinstance(stem, str) or not stem.strip():
        raise McqValidationError(ParseCategory.MISSING_FIELD, "stem must be a non-empty string")
    if len(options) != 4:
        raise McqValidationError(ParseCategory.BAD_OPTION_COUNT, f"expected 4 options, got {len(options)}")
    labels = [o.label for o in options]
    if sorted(labels) != list(LABELS):
        raise McqValidationError(
            ParseCategory.BAD_OPTION_COUNT, f"option labels must be exactly A-D once each, got {labels}"
        )
    for o in options:
        if not isinstance(o.text, str) or not o.text.strip():
            raise McqValidationError(ParseCategory.MISSING_FIELD, f"option {o.label} has empty text")
    normalized = [_squash_ws(o.text) for o in options]
    if len(set(normalized)) != 4:
        dupes = sorted({t for t in normalized if normalized.count(t) > 1})
        raise McqValidationError(ParseCategory.DUPLICATE_OPTION, f"duplicate option text(s): {dupes}")
    if answer_key not in labels:
        raise McqValidationError(
            ParseCategory.ANSWER_NOT_IN_OPTIONS, f"answer key {answer_key!r} is not an option label"
        )


@dataclass(frozen=True)
class ParseFailure:
    """A model response that could not be turned into a valid MCQ."""

    raw_text: str
    category: ParseCategory
    message: str

    def to_dict(self) -> dict:
        return {"raw_text": self.raw_text, "category": self.category.value, "message": self.message}

    @classmethod
    def from_dict(cls, d: dict) -> "ParseFailure":
        return cls(raw_text=d["raw_text"], category=ParseCategory(d["category"]), message=d["message"])


_FENCE_RE = re.compile(r"^\s*```[A-Za-z0-9_-]*\s*\n(?P<body>.*)\n?```\s*$", re.DOTALL)

_STEM_KEYS = ("stem", "question", "soalan")
_OPTIONS_KEYS = ("options", "choices", "pilihan")
_ANSWER_KEYS = ("answer_key", "answer", "correct_answer", "jawapan")
_EXPLANATION_KEYS = ("explanation", "penjelasan")
_TEXT_KEYS = ("text", "value", "teks")


def _first_key(obj: dict, keys: tuple[str, ...]):
    for k in keys:
        if k in obj:
            return obj[k]
    return None


def _strip_fence(raw: str) -> str:
    m = _FENCE_RE.match(raw)
    return m.group("body") if m else raw


def _coerce_options(payload) -> tuple[McqOption, ...]:
    if isinstance(payload, list):
        if all(isinstance(v, str) for v in payload):
            if len(payload) != 4:
                raise McqValidationError(
                    ParseCategory.BAD_OPTION_COUNT, f"expected 4 options, got {len(payload)}"
                )
            return tuple(McqOption(LABELS[i], v) for i, v in enumerate(payload))
        options = []
        for i, item in enumerate(payload):
            if not isinstance(item, dict):
                raise McqValidationError(ParseCategory.MISSING_FIELD, f"options[{i}] is not an object")
            label = item.get("label")
            text = _first_key(item, _TEXT_KEYS)
            if not isinstance(label, str) or not label.strip():
                raise McqValidationError(ParseCategory.MISSING_FIELD, f"options[{i}] is missing a label")
            if not isinstance(text, str):
                raise McqValidationError(ParseCategory.MISSING_FIELD, f"options[{i}] is missing text")
            options.append(McqOption(label.strip().upper(), text))
        return tuple(options)
    if isinstance(payload, dict):
        return tuple(
            McqOption(str(label).strip().upper(), text if isinstance(text, str) else "")
            for label, text in payload.items()
        )
    raise McqValidationError(ParseCategory.MISSING_FIELD, "options must be an array or an A-D map")


def _coerce_answer(payload, options: tuple[McqOption, ...]) -> str:
    if isinstance(payload, str):
        candidate = payload.strip()
        m = re.fullmatch(r"([A-Da-d])\s*[\).:,]?", candidate)
        if m:
            return m.group(1).upper()
        squashed = _squash_ws(candidate)
        for opt in options:
            if _squash_ws(opt.text) == squashed:
                return opt.label
        raise McqValidationError(
            ParseCategory.ANSWER_NOT_IN_OPTIONS, f"answer {payload!r} matches no option label or text"
        )
    raise McqValidationError(ParseCategory.ANSWER_NOT_IN_OPTIONS, f"answer must be a string, got {type(payload).__name__}")


def parse_mcq_json(raw: str) -> Mcq | ParseFailure:
    """Parse a model response into an :class:`Mcq`, or report why it failed.

    A single surrounding markdown code fence is stripped; field names are
    mapped tolerantly (``question``/``stem``, options as array or A-D map);
    the MCQ invariants are then enforced strictly.
    """
    body = _strip_fence(raw)
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        return ParseFailure(raw_text=raw, category=ParseCategory.NOT_JSON, message=f"invalid JSON: {exc}")
    if not isinstance(data, dict):
        return ParseFailure(
            raw_text=raw, category=ParseCategory.NOT_JSON,
            message=f"top-level JSON value is {type(data).__name__}, expected an object",
        )

    try:
        stem = _first_key(data, _STEM_KEYS)
        if stem is None:
            raise McqValidationError(ParseCategory.MISSING_FIELD, "missing stem/question field")
        if not isinstance(stem, str) or not stem.strip():
            raise McqValidationError(ParseCategory.MISSING_FIELD, "stem must be a non-empty string")
        options_payload = _first_key(data, _OPTIONS_KEYS)
        if options_payload is None:
            raise McqValidationError(ParseCategory.MISSING_FIELD, "missing options field")
        options = _coerce_options(options_payload)
        # Label sanity before answer matching so diagnostics stay precise.
        if len(options) != 4 or sorted(o.label for o in options) != list(LABELS):
            raise McqValidationError(
                ParseCategory.BAD_OPTION_COUNT,
                f"option labels must be exactly A-D once each, got {[o.label for o in options]}",
            )
        answer_payload = _first_key(data, _ANSWER_KEYS)
        if answer_payload is None:
            raise McqValidationError(ParseCategory.MISSING_FIELD, "missing answer field")
        answer = _coerce_answer(answer_payload, options)
        explanation = _first_key(data, _EXPLANATION_KEYS)
        if not isinstance(explanation, str):
            explanation = ""
        return Mcq(stem=stem.strip(), options=options, answer_key=answer, explanation=explanation)
    except McqValidationError as exc:
        return ParseFailure(raw_text=raw, category=exc.category, message=str(exc))
