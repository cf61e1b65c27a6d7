"""Deterministic synthetic corpora with disjoint topic vocabularies."""

import random

TOPICS = {
    "sea": (
        "ocean wave tide harbor sailor anchor coral reef whale dolphin current "
        "lighthouse vessel shore seaweed salt gull pelican lagoon buoy captain "
        "mast rudder fisherman trawler kelp oyster shell sand dune surf "
        "marina pier dock net mackerel tuna squid plankton breeze"
    ).split(),
    "space": (
        "planet orbit comet galaxy nebula telescope rocket astronaut crater moon "
        "satellite asteroid meteor gravity vacuum star quasar pulsar cosmos module "
        "booster launch capsule spectrum eclipse jupiter saturn mercury venus "
        "horizon photon radiation lunar solar stellar probe rover"
    ).split(),
}
FILLER = ["the", "a", "near", "with", "over", "and"]


def sentence(rng: random.Random, topic: str, n_min: int = 6, n_max: int = 11) -> str:
    vocab = TOPICS[topic]
    words = [rng.choice(vocab) for _ in range(rng.randint(n_min, n_max))]
    return words[0].capitalize() + " " + " ".join(words[1:]) + "."


def alternating_paragraphs(n: int, seed: int = 0, sentences: int = 2) -> list[str]:
    """Paragraphs alternate sea/space topics so neighbouring paragraphs differ."""
    rng = random.Random(seed)
    names = sorted(TOPICS)
    return [" ".join(sentence(rng, names[i % 2]) for _ in range(sentences)) for i in range(n)]


def labelled_pairs(n: int, seed: int = 0) -> list[tuple[str, str, int]]:
    """Pairs labelled 1 when both sentences share a topic, 0 otherwise."""
    rng = random.Random(seed)
    names = sorted(TOPICS)
    out = []
    for i in range(n):
        t1 = rng.choice(names)
        same = i % 2 == 0
        t2 = t1 if same else names[1 - names.index(t1)]
        out.append((sentence(rng, t1), sentence(rng, t2), int(same)))
    return out


def topic_switch_paragraph(seed: int, first: int = 3, second: int = 3) -> tuple[str, int]:
    """One paragraph: ``first`` sea sentences then ``second`` space sentences. Returns (text, switch index)."""
    rng = random.Random(seed)
    sents = [sentence(rng, "sea") for _ in range(first)] + [sentence(rng, "space") for _ in range(second)]
    return " ".join(sents), first


def _pseudo_vocab(rng: random.Random, n: int = 30) -> list[str]:
    cons, vow = "bcdfghjklmnprstvz", "aeiou"
    return ["".join(rng.choice(cons) + rng.choice(vow) for _ in range(rng.randint(2, 3))) for _ in range(n)]


def multi_topic_paragraphs(k: int, n: int, seed: int, vocab_seed: int = 100) -> list[str]:
    """``n`` two-sentence paragraphs over ``k`` pseudo-word topics; neighbours never share a topic."""
    topics = [_pseudo_vocab(random.Random(vocab_seed + t)) for t in range(k)]
    rng = random.Random(seed)
    paras, prev = [], None
    for _ in range(n):
        t = rng.choice([x for x in range(k) if x != prev])
        prev = t
        sents = [" ".join(rng.choice(topics[t]) for _ in range(rng.randint(6, 10))).capitalize() + "." for _ in range(2)]
        paras.append(" ".join(sents))
    return paras


def planted_corpus(n_docs: int = 10, seed: int = 0) -> tuple[list[tuple[str, str]], str, str]:
    """Documents of sea/space filler plus one document with a planted fact.

    Returns (documents, question, answer).
    """
    rng = random.Random(seed)
    names = sorted(TOPICS)
    docs = []
    for i in range(n_docs):
        paras = [" ".join(sentence(rng, names[(i + p) % 2]) for _ in range(3)) for p in range(3)]
        docs.append((f"doc{i:02d}.txt", "\n".join(paras)))
    fact = "The keeper of the Vellmore lighthouse is Oriana Castellan."
    i = n_docs // 2
    name, text = docs[i]
    docs[i] = (name, text + "\n" + fact)
    return docs, "Who is the keeper of the Vellmore lighthouse?", fact
