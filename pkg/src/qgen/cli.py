"""Command-line pipeline: ingest -> index -> generate -> evaluate -> report.

Every stage is a pure function of its inputs plus the resolved config, so
deleting a stage's outputs and rerunning reproduces them exactly under the
mock providers. Exit codes: 0 ok, 2 input error, 3 provider error, 4
pipeline-state error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .blocks import DocRole, load_document
from .chat import ChatProvider, HttpChatProvider, MockChatProvider
from .chunking import Chunk, LearningStandard, chunk_recursive, chunk_rpt_standards, chunk_structure_aware
from .config import RunConfig, apply_flags, load_config
from .embedding import (
    EmbeddingProvider,
    HttpEmbeddingProvider,
    MockEmbeddingProvider,
    RetryPolicy,
    embed_texts,
)
from .errors import CorruptIndexFile, EmptyBatch, InputError, PipelineStateError, ProviderError, QgenError
from .evaluate import MethodReport, aggregate, ragqa_validity, render_report, sts_alignment
from .generate import GenOutcome, Method, generate_batch
from .jsonio import read_jsonl, write_json, write_jsonl
from .vectorindex import build_index, load_index, save_index

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_STATE = 4


class Workdir:
    """Fixed artifact layout inside the run directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.chunks = self.root / "chunks"
        self.indexes = self.root / "indexes"
        self.outcomes = self.root / "outcomes"
        self.eval = self.root / "eval"

    def chunk_file(self, name: str) -> Path:
        return self.chunks / f"{name}.jsonl"

    def index_file(self, name: str) -> Path:
        return self.indexes / f"{name}.index.json"

    def outcome_file(self, method: Method) -> Path:
        return self.outcomes / f"{method.value}.jsonl"

    @property
    def standards_file(self) -> Path:
        return self.chunks / "learning_standards.jsonl"

    @property
    def eval_records(self) -> Path:
        return self.eval / "records.jsonl"

    @property
    def report_md(self) -> Path:
        return self.root / "report.md"

    @property
    def report_json(self) -> Path:
        return self.root / "report.json"

    @property
    def resolved_config(self) -> Path:
        return self.root / "resolved_config.json"


def build_providers(cfg: RunConfig) -> tuple[ChatProvider, EmbeddingProvider]:
    """Construct providers; mock mode never touches the network by design."""
    p = cfg.provider
    if p.mock:
        return (
            MockChatProvider(malformed_rate=p.mock_malformed_rate),
            MockEmbeddingProvider(dim=p.mock_dim),
        )
    chat = HttpChatProvider(endpoint=p.chat_endpoint, model=p.chat_model, api_key_env=p.api_key_env)
    embedder = HttpEmbeddingProvider(endpoint=p.embed_endpoint, model=p.embed_model, api_key_env=p.api_key_env)
    return chat, embedder


def _retry_policy(cfg: RunConfig) -> RetryPolicy:
    return RetryPolicy(max_retries=cfg.provider.max_retries, base_delay=cfg.provider.backoff_base)


def _echo_config(cfg: RunConfig, work: Workdir) -> None:
    work.root.mkdir(parents=True, exist_ok=True)
    write_json(work.resolved_config, cfg.to_dict())


def _read_chunks(path: Path) -> list[Chunk]:
    if not path.is_file():
        raise PipelineStateError(f"missing chunk file {path}; run the ingest stage first")
    return [Chunk.from_dict(row) for row in read_jsonl(path)]


def _read_standards(work: Workdir) -> list[tuple[LearningStandard, str]]:
    if not work.standards_file.is_file():
        raise PipelineStateError(f"missing {work.standards_file}; run the ingest stage first")
    return [
        (LearningStandard(row["code"], row["description"]), row["chunk_id"])
        for row in read_jsonl(work.standards_file)
    ]


def cmd_ingest(cfg: RunConfig) -> int:
    """Chunk both source documents into the workdir chunk files."""
    work = Workdir(cfg.paths.workdir)
    _echo_config(cfg, work)
    knowledge = load_document(cfg.paths.knowledge_blocks, DocRole.KNOWLEDGE_SOURCE)
    standards_doc = load_document(cfg.paths.standards_blocks, DocRole.STANDARDS_BLUEPRINT)

    ch = cfg.chunking
    recursive = chunk_recursive(knowledge, max_chars=ch.recursive_max_chars, overlap=ch.recursive_overlap)
    structure = chunk_structure_aware(
        knowledge,
        heading_font_delta=ch.structure_heading_font_delta,
        max_chars=ch.structure_max_chars,
        keywords=ch.unit_keywords,
    )
    standard_pairs = chunk_rpt_standards(standards_doc)

    n1 = write_jsonl(work.chunk_file("knowledge_recursive"), (c.to_dict() for c in recursive))
    n2 = write_jsonl(work.chunk_file("knowledge_structure_aware"), (c.to_dict() for c in structure))
    n3 = write_jsonl(work.chunk_file("standards"), (c.to_dict() for _, c in standard_pairs))
    write_jsonl(
        work.standards_file,
        ({"code": s.code, "description": s.description, "chunk_id": c.chunk_id} for s, c in standard_pairs),
    )
    print(f"ingest: knowledge_recursive={n1} knowledge_structure_aware={n2} standards={n3}")
    return EXIT_OK


def cmd_index(cfg: RunConfig) -> int:
    """Embed every chunk file and persist one flat index per file."""
    work = Workdir(cfg.paths.workdir)
    _echo_config(cfg, work)
    _, embedder = build_providers(cfg)
    retry = _retry_policy(cfg)
    counts = []
    for name in ("knowledge_recursive", "knowledge_structure_aware", "standards"):
        chunks = _read_chunks(work.chunk_file(name))
        vectors = embed_texts(embedder, [c.text for c in chunks], retry=retry,
                              max_in_flight=cfg.provider.max_in_flight)
        index = build_index(chunks, vectors, provider_tag=embedder.tag)
        save_index(index, work.index_file(name))
        counts.append(f"{name}={len(index)}")
    print(f"index: {' '.join(counts)} provider={embedder.tag}")
    return EXIT_OK


def cmd_generate(cfg: RunConfig) -> int:
    """Generate n outcomes per enabled method, cycling the standards."""
    work = Workdir(cfg.paths.workdir)
    _echo_config(cfg, work)
    chat, embedder = build_providers(cfg)
    standards = [s for s, _ in _read_standards(work)]
    gen = cfg.generation
    for method in gen.methods:
        index = None
        if method.is_rag:
            index_path = work.index_file(
                "knowledge_recursive" if method is Method.RAG_GENERIC else "knowledge_structure_aware"
            )
            if not index_path.is_file():
                raise PipelineStateError(f"missing index {index_path}; run the index stage first")
            index = load_index(index_path)
        outcomes = generate_batch(
            chat,
            method,
            gen.n_per_method,
            topic=gen.topic,
            standards=standards,
            retrieval_k=gen.retrieval_k,
            index=index,
            embedder=embedder if method.is_rag else None,
            temperature=gen.temperature,
            retry=_retry_policy(cfg),
        )
        write_jsonl(work.outcome_file(method), (o.to_dict() for o in outcomes))
        failed = sum(1 for o in outcomes if o.failed)
        print(f"generate: method={method.value} parsed={len(outcomes) - failed} failed={failed}")
    return EXIT_OK


def _load_outcomes(work: Workdir) -> list[GenOutcome]:
    if not work.outcomes.is_dir():
        raise EmptyBatch(f"no outcomes directory at {work.outcomes}; run the generate stage first")
    outcomes: list[GenOutcome] = []
    for path in sorted(work.outcomes.glob("*.jsonl")):
        outcomes.extend(GenOutcome.from_dict(row) for row in read_jsonl(path))
    if not outcomes:
        raise EmptyBatch(f"no outcomes found under {work.outcomes}")
    return outcomes


def cmd_evaluate(cfg: RunConfig) -> int:
    """Score every parsed outcome and write records plus the method report."""
    work = Workdir(cfg.paths.workdir)
    _echo_config(cfg, work)
    chat, embedder = build_providers(cfg)
    standards_index_path = work.index_file("standards")
    if not standards_index_path.is_file():
        raise PipelineStateError(f"missing index {standards_index_path}; run the index stage first")
    rpt_index = load_index(standards_index_path)
    try:
        standard_pairs = [
            (standard, rpt_index.vector_for(chunk_id)) for standard, chunk_id in _read_standards(work)
        ]
    except KeyError as exc:
        raise PipelineStateError(
            f"learning_standards.jsonl references chunk {exc} missing from {standards_index_path}; "
            "rerun the ingest and index stages together"
        ) from exc
    outcomes = _load_outcomes(work)

    ev = cfg.evaluation
    alignments = []
    verdicts = []
    records = []
    for outcome in outcomes:
        mcq = outcome.mcq
        if mcq is None:
            continue
        alignment = sts_alignment(
            mcq, standard_pairs, embedder, question_ref=outcome.outcome_id, unit=ev.sts_unit
        )
        verdict = ragqa_validity(
            mcq, rpt_index, embedder, chat,
            tau=ev.tau, k=ev.k, refusal_markers=ev.refusal_markers,
            question_ref=outcome.outcome_id,
        )
        alignments.append(alignment)
        verdicts.append(verdict)
        records.append({
            "outcome_id": outcome.outcome_id,
            "method": outcome.request.method.value,
            "score": alignment.score,
            "best_standard": alignment.best_standard,
            "verdict": verdict.verdict.value,
            "reason": verdict.reason.value,
            "top_score": verdict.top_score,
        })

    write_jsonl(work.eval_records, records)
    reports = aggregate(outcomes, alignments, verdicts, embedder_tag=embedder.tag)
    work.report_md.write_text(render_report(reports, "markdown") + "\n", encoding="utf-8")
    work.report_json.write_text(render_report(reports, "json") + "\n", encoding="utf-8")
    print(f"evaluate: records={len(records)} methods={len(reports)}")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Print the stored report in the configured format."""
    work = Workdir(cfg.paths.workdir)
    if not work.report_json.is_file():
        raise PipelineStateError(f"missing {work.report_json}; run the evaluate stage first")
    reports = [MethodReport.from_dict(d) for d in json.loads(work.report_json.read_text(encoding="utf-8"))]
    print(render_report(reports, cfg.report_format))
    return EXIT_OK


def cmd_run_all(cfg: RunConfig) -> int:
    """Sequential composition of ingest, index, generate and evaluate."""
    for step in (cmd_ingest, cmd_index, cmd_generate, cmd_evaluate):
        code = step(cfg)
        if code != EXIT_OK:
            return code
    return EXIT_OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "run-all": cmd_run_all,
    "report": cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgen",
        description="Curriculum-grounded MCQ generation and evaluation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--mock", action="store_true", help="force offline mock providers")
        p.add_argument("--n", type=int, default=None, help="questions per method")
        p.add_argument("--methods", type=str, default=None,
                       help="comma-separated methods (structured,basic,rag_generic,rag_structure)")
        p.add_argument("--tau", type=float, default=None, help="validity retrieval threshold")
        p.add_argument("--k", type=int, default=None, help="evaluation retrieval depth")
        p.add_argument("--workdir", type=str, default=None, help="run artifact directory")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    return apply_flags(
        cfg,
        mock=args.mock,
        n=args.n,
        methods=args.methods.split(",") if args.methods else None,
        tau=args.tau,
        k=args.k,
        workdir=args.workdir,
    )


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except (FileNotFoundError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ProviderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (PipelineStateError, CorruptIndexFile) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATE
    except QgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATE


if __name__ == "__main__":
    raise SystemExit(main())
