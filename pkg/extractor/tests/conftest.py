import os

import pytest
import torch

from nncomp.corpus import SampleManifest, split_compound
from nncomp.gold import CompoundEntry

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "Die", "die", "Das", "das", "war", "ist", "liegt", "im", "Tal", "tal",
    "essen", "Kinder", "kinder", "gern", "oft", "sehr", "alt", "dort", "hier",
    "heute", "und", "mit", "schmeckt", "gut", "salzig", "dampft", "leise",
    "Erb", "erb", "##se", "Suppe", "suppe", "Kirche", "kirche", "Spiel", "spiel",
    ".", ",", "!", "?",
]

ERBSE = CompoundEntry("Erbsensuppe", "Erbse", "Suppe", 5.3, 5.3)
KIRCH = CompoundEntry("Kirchspiel", "Kirche", "Spiel", 4.4, 3.1)

RAW_SENTENCES = {
    ERBSE: [
        "Die Erbsensuppe war heiß.",
        "Erbsensuppe schmeckt gut.",
        "Kinder essen gern Erbsensuppe.",
        "Die Erbsensuppe dampft leise.",
        "Heute gibt es Erbsensuppe mit Brot.",
        "Die alte Erbsensuppe war salzig.",
        "Dort steht Erbsensuppe.",
        "Hier war die Erbsensuppe gut.",
        "Oft schmeckt Erbsensuppe sehr gut.",
        "Erbsensuppe, bitte!",
    ],
    KIRCH: [
        "Das Kirchspiel liegt im Tal.",
        "Kirchspiel und Tal gehören zusammen.",
        "Das alte Kirchspiel ist klein.",
        "Hier liegt das Kirchspiel.",
        "Das Kirchspiel war sehr alt.",
        "Dort ist das Kirchspiel.",
        "Heute besucht sie das Kirchspiel.",
        "Im Tal liegt ein Kirchspiel.",
        "Das Kirchspiel dampft nicht.",
        "Kirchspiel, sagt sie leise.",
    ],
}


def build_model_dir(base: str, lowercase: bool) -> str:
    """Small random-weight encoder with the standard 12x768 geometry."""
    from tokenizers import BertWordPieceTokenizer
    from transformers import BertConfig, BertModel, BertTokenizerFast

    path = os.path.join(base, "uncased" if lowercase else "cased")
    os.makedirs(path, exist_ok=True)
    vocab_file = os.path.join(path, "vocab.txt")
    with open(vocab_file, "w", encoding="utf-8") as handle:
        handle.write("\n".join(VOCAB) + "\n")

    backend = BertWordPieceTokenizer(vocab_file, lowercase=lowercase)
    backend_file = os.path.join(path, "backend.json")
    backend.save(backend_file)
    tokenizer = BertTokenizerFast(
        tokenizer_file=backend_file, vocab_file=vocab_file, do_lower_case=lowercase
    )
    tokenizer.save_pretrained(path)

    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=768,
        num_hidden_layers=12,
        num_attention_heads=12,
        intermediate_size=128,
        max_position_embeddings=64,
    )
    torch.manual_seed(0)  # same weights for both casings; only the tokenizer differs
    model = BertModel(config)
    model.save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def model_dirs(tmp_path_factory):
    base = str(tmp_path_factory.mktemp("models"))
    return {
        "cased": build_model_dir(base, lowercase=False),
        "uncased": build_model_dir(base, lowercase=True),
    }


@pytest.fixture(scope="session")
def fixture_manifest():
    manifest = SampleManifest(seed=0, cap=100)
    for entry, sentences in RAW_SENTENCES.items():
        manifest.records[entry.compound] = [split_compound(s, entry) for s in sentences]
    assert sum(len(v) for v in manifest.records.values()) == 20
    return manifest
