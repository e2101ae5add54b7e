from __future__ import annotations

from pathlib import Path

import pytest

from qgen.blocks import Block, DocRole, Page, SourceDocument, load_document
from qgen.chat import MockChatProvider
from qgen.embedding import MockEmbeddingProvider

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def nota_doc() -> SourceDocument:
    return load_document(FIXTURES / "nota_mini.blocks.json", DocRole.KNOWLEDGE_SOURCE)


@pytest.fixture
def rpt_doc() -> SourceDocument:
    return load_document(FIXTURES / "rpt_mini.blocks.json", DocRole.STANDARDS_BLUEPRINT)


@pytest.fixture
def mock_embedder() -> MockEmbeddingProvider:
    return MockEmbeddingProvider(dim=64)


@pytest.fixture
def mock_chat() -> MockChatProvider:
    return MockChatProvider()


def make_block(text: str, page: int = 1, font_size: float = 11.0,
               bbox: tuple[float, float, float, float] = (10.0, 10.0, 100.0, 30.0)) -> Block:
    return Block(text=text, page=page, bbox=bbox, font_size=font_size)


def make_doc(texts: list[str], doc_id: str = "doc", role: DocRole = DocRole.KNOWLEDGE_SOURCE,
             font_sizes: list[float] | None = None) -> SourceDocument:
    sizes = font_sizes or [11.0] * len(texts)
    blocks = tuple(make_block(t, font_size=s) for t, s in zip(texts, sizes))
    return SourceDocument(doc_id=doc_id, role=role, pages=(Page(number=1, blocks=blocks),))
