import pytest

from corpus_gen import alternating_paragraphs
from sage_rag.embedder import EmbedderSpec
from sage_rag.segmenter import TrainConfig, collect_pairs, train


@pytest.fixture(scope="session")
def embed_spec():
    return EmbedderSpec()


@pytest.fixture(scope="session")
def topic_model(embed_spec):
    """Pair scorer trained on the sea/space corpus (about 2,400 pairs)."""
    pairs = collect_pairs(alternating_paragraphs(1200, seed=1), 1.0, seed=1)
    return train(pairs, embed_spec, TrainConfig(seed=0))


@pytest.fixture(scope="session")
def planted(tmp_path_factory, topic_model):
    """Planted 10-document corpus on disk plus a built index over it."""
    from corpus_gen import planted_corpus
    from sage_rag.config import make_config
    from sage_rag.pipeline import build_index

    docs, question, answer = planted_corpus()
    root = tmp_path_factory.mktemp("planted")
    corpus = root / "corpus"
    corpus.mkdir()
    for name, text in docs:
        (corpus / name).write_text(text, encoding="utf-8")
    config = make_config()
    store = build_index(corpus, topic_model, config, root / "index")
    return {"corpus": corpus, "index": root / "index", "store": store, "question": question, "answer": answer,
            "config": config}


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
