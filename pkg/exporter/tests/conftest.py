import json

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer, LongformerConfig, LongformerModel

DOCS = [
    {
        "doc_id": "news01",
        "topic_id": "t1",
        "tokens": (
            "a heavy storm hit the coast late tuesday night . "
            "flooding followed within hours and crews began working . "
            "the cleanup lasted three days overall , officials said ."
        ).split(),
        "sentence_boundaries": [10, 19, 29],
        "events": [
            {"event_id": "ev1", "sentence_index": 0, "token_span": [2, 3], "surface": "storm"},
            {"event_id": "ev2", "sentence_index": 1, "token_span": [10, 11], "surface": "flooding"},
            {"event_id": "ev3", "sentence_index": 2, "token_span": [20, 21], "surface": "cleanup"},
        ],
        "links": [{"source": "ev1", "target": "ev2"}],
    },
    {
        "doc_id": "news02",
        "topic_id": "t1",
        "tokens": "children kept playing while rain was falling outside .".split(),
        "sentence_boundaries": [9],
        "events": [
            {"event_id": "ev1", "sentence_index": 0, "token_span": [2, 3], "surface": "playing"},
            {"event_id": "ev2", "sentence_index": 0, "token_span": [6, 7], "surface": "falling"},
        ],
        "links": [],
    },
    {
        "doc_id": "news03",
        "topic_id": "t2",
        "tokens": "the fire spread quickly . evacuation of the block started immediately after the alarm .".split(),
        "sentence_boundaries": [5, 15],
        "events": [
            {"event_id": "ev1", "sentence_index": 0, "token_span": [1, 2], "surface": "fire"},
            {"event_id": "ev2", "sentence_index": 1, "token_span": [5, 6], "surface": "evacuation"},
        ],
        "links": [{"source": "ev1", "target": "ev2"}],
    },
]

LONG_DOC = {
    "doc_id": "long01",
    "topic_id": "t9",
    "tokens": ["word"] * 200,
    "sentence_boundaries": [200],
    "events": [
        {"event_id": "ev1", "sentence_index": 0, "token_span": [0, 1], "surface": "word"},
        {"event_id": "ev2", "sentence_index": 0, "token_span": [150, 151], "surface": "word"},
    ],
    "links": [],
}


def corpus_words():
    words = set()
    for doc in DOCS + [LONG_DOC]:
        words.update(doc["tokens"])
    words.discard("playing")  # force a wordpiece split
    return sorted(words)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("corpus")
    for doc in DOCS:
        (directory / f"{doc['doc_id']}.json").write_text(json.dumps(doc))
    return directory


@pytest.fixture(scope="session")
def long_corpus_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("corpus-long")
    (directory / "long01.json").write_text(json.dumps(LONG_DOC))
    return directory


@pytest.fixture(scope="session")
def vocab_path(tmp_path_factory):
    tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "<t>", "</t>", "play", "##ing"]
    tokens += corpus_words()
    path = tmp_path_factory.mktemp("vocab") / "vocab.txt"
    path.write_text("\n".join(tokens) + "\n")
    return path


def make_tokenizer(vocab_path):
    return BertTokenizer(
        vocab=str(vocab_path), do_lower_case=False, additional_special_tokens=["<t>", "</t>"]
    )


@pytest.fixture(scope="session")
def tiny_bert_dir(tmp_path_factory, vocab_path):
    tokenizer = make_tokenizer(vocab_path)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(tokenizer),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=37,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.eval()
    directory = tmp_path_factory.mktemp("tiny-bert")
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_longformer_dir(tmp_path_factory, vocab_path):
    tokenizer = make_tokenizer(vocab_path)
    torch.manual_seed(0)
    config = LongformerConfig(
        vocab_size=len(tokenizer),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=37,
        max_position_embeddings=130,
        attention_window=[8, 8],
    )
    model = LongformerModel(config)
    model.eval()
    directory = tmp_path_factory.mktemp("tiny-longformer")
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory
