"""Synthetic end-to-end fixture with a planted geometric signal.

Thirty compounds with distinct gold ratings; embedding files in which the
modif-vs-cont cosine at layer 4 of the uncased variant increases strictly
with the modifier rating, and the head-vs-cont cosine at layer 1 of the
cased variant increases strictly with the head rating. Every other layer
holds seeded random vectors, so only the planted configurations can reach
a perfect rank correlation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from nncomp.analytics import SweepConfig
from nncomp.estimates import EstimateId
from nncomp.gold import CompoundEntry, GoldDataset, dump_gold
from nncomp.store import SentenceTensor, TokenRole, embedding_filename, write_embeddings
from nncomp.targets import LayerSpan

N_COMPOUNDS = 30
N_LAYERS = 13
DIM = 16
N_SENTENCES = 2

ROLES = np.array(
    [
        TokenRole.CLS,
        TokenRole.MODIFIER_SUBWORD,
        TokenRole.HEAD_SUBWORD,
        TokenRole.CONTEXT,
        TokenRole.CONTEXT,
        TokenRole.SEP,
    ],
    dtype=np.uint8,
)
MOD_TOKEN, HEAD_TOKEN, CTX_TOKENS = 1, 2, (3, 4)

PLANTED_MODIFIER = SweepConfig("uncased", LayerSpan(4, 4), EstimateId.direct("modif", "cont"))
PLANTED_HEAD = SweepConfig("cased", LayerSpan(1, 1), EstimateId.direct("head", "cont"))


@dataclass
class PlantedFixture:
    gold_path: str
    embeddings_dir: str
    gold: GoldDataset
    modifier_config: SweepConfig
    head_config: SweepConfig


def _direction(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=DIM)
    return v / np.linalg.norm(v)


def _planted_token(target_cosine: float) -> np.ndarray:
    v = np.zeros(DIM)
    v[0] = target_cosine
    v[1] = np.sqrt(1.0 - target_cosine**2)
    return v


def build_planted(base_dir: str | os.PathLike, seed: int = 20240501) -> PlantedFixture:
    base_dir = str(base_dir)
    embeddings_dir = os.path.join(base_dir, "embeddings")
    os.makedirs(embeddings_dir, exist_ok=True)
    rng = np.random.default_rng(seed)

    mod_ratings = np.linspace(1.0, 6.0, N_COMPOUNDS)
    head_ratings = rng.permutation(mod_ratings)
    entries = [
        CompoundEntry(
            compound=f"Komp{i:02d}wort",
            modifier=f"Mod{i:02d}",
            head=f"Kopf{i:02d}",
            rating_modifier=float(mod_ratings[i]),
            rating_head=float(head_ratings[i]),
        )
        for i in range(N_COMPOUNDS)
    ]
    gold = GoldDataset(entries)
    gold_path = os.path.join(base_dir, "gold.tsv")
    with open(gold_path, "w", encoding="utf-8") as handle:
        handle.write(dump_gold(gold))

    def planted_cosine(rating: float) -> float:
        return 0.1 + 0.8 * (rating - 1.0) / 5.0

    for entry in entries:
        for variant in ("cased", "uncased"):
            tensors = []
            for _ in range(N_SENTENCES):
                vectors = rng.normal(size=(N_LAYERS, len(ROLES), DIM))
                if variant == "uncased":
                    layer, token, cosine = 4, MOD_TOKEN, planted_cosine(entry.rating_modifier)
                else:
                    layer, token, cosine = 1, HEAD_TOKEN, planted_cosine(entry.rating_head)
                vectors[layer, token] = _planted_token(cosine)
                for ctx in CTX_TOKENS:
                    vectors[layer, ctx] = np.eye(DIM)[0]
                other = HEAD_TOKEN if token == MOD_TOKEN else MOD_TOKEN
                vectors[layer, other] = _direction(rng)
                tensors.append(
                    SentenceTensor(
                        compound=entry.compound,
                        roles=ROLES.copy(),
                        vectors=vectors.astype(np.float32),
                    )
                )
            write_embeddings(
                os.path.join(embeddings_dir, embedding_filename(entry.compound, variant)),
                tensors,
                variant=variant,
                dim=DIM,
                n_layers=N_LAYERS,
            )

    return PlantedFixture(
        gold_path=gold_path,
        embeddings_dir=embeddings_dir,
        gold=gold,
        modifier_config=PLANTED_MODIFIER,
        head_config=PLANTED_HEAD,
    )
