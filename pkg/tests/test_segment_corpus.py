import random

import pytest

from corpus_gen import TOPICS, sentence, topic_switch_paragraph
from sage_rag.segmenter import segment_corpus, split_sentences
from sage_rag.errors import ContractViolation


def _doc(seed: int, paras: int = 3) -> str:
    rng = random.Random(seed)
    names = sorted(TOPICS)
    return "\n".join(
        " ".join(sentence(rng, rng.choice(names)) for _ in range(rng.randint(1, 6))) for _ in range(paras)
    )


def _sentences(doc: str) -> list[str]:
    return [s for p in doc.split("\n") if p.strip() for s in split_sentences(p)]


def test_partition_of_sentences(topic_model, embed_spec):
    doc = _doc(1, paras=5)
    chunks = segment_corpus(doc, topic_model, embed_spec, 0.55, 400)
    assert [s for c in chunks for s in split_sentences(c.text)] == _sentences(doc)
    assert [c.id for c in chunks] == list(range(len(chunks)))


def test_ss_zero_gives_coarse_chunks(topic_model, embed_spec):
    doc = _doc(2, paras=4)
    chunks = segment_corpus(doc, topic_model, embed_spec, 0.0, 400)
    assert len(chunks) == 4  # one coarse chunk per short paragraph
    assert [c.span[0] for c in chunks] == [0, 1, 2, 3]


def test_ss_one_gives_sentence_chunks(topic_model, embed_spec):
    doc = _doc(3, paras=4)
    chunks = segment_corpus(doc, topic_model, embed_spec, 1.0, 400)
    assert [c.text for c in chunks] == _sentences(doc)


def test_topic_switch_is_split(topic_model, embed_spec):
    for seed in range(5):
        text, switch = topic_switch_paragraph(seed)
        chunks = segment_corpus(text, topic_model, embed_spec, 0.55, 400)
        assert [(c.span[1], c.span[2]) for c in chunks] == [(0, switch), (switch, 6)]


def test_coarse_boundaries_always_split(topic_model, embed_spec):
    rng = random.Random(0)
    para = " ".join(sentence(rng, "sea", 8, 8) for _ in range(6))  # 9 tokens each
    chunks = segment_corpus(para, topic_model, embed_spec, 0.0, 20)
    assert [(c.span[1], c.span[2]) for c in chunks] == [(0, 2), (2, 4), (4, 6)]
    assert all(c.token_count == 18 for c in chunks)


def test_chunk_ids_start_offset(topic_model, embed_spec):
    chunks = segment_corpus(_doc(4), topic_model, embed_spec, 0.55, 400, doc_id="x", start_id=100)
    assert chunks[0].id == 100 and all(c.doc_id == "x" for c in chunks)


def test_threshold_monotone(topic_model, embed_spec):
    doc = _doc(5, paras=6)
    counts = [len(segment_corpus(doc, topic_model, embed_spec, ss, 400)) for ss in (0.0, 0.2, 0.5, 0.8, 1.0)]
    assert counts == sorted(counts)


def test_ss_range(topic_model, embed_spec):
    with pytest.raises(ContractViolation):
        segment_corpus("A. B.", topic_model, embed_spec, 1.5, 400)
