import numpy as np
import pytest

from nncomp.store import SentenceTensor, TokenRole

GOLD_FIXTURE = """compound\tmodifier\thead\trating_modifier\trating_head
Erbsensuppe\tErbse\tSuppe\t5.3\t5.3
Kirchspiel\tKirche\tSpiel\t4.4\t3.1
Eifersucht\tEifer\tSucht\t2.0\t2.1
"""


@pytest.fixture
def gold_path(tmp_path):
    path = tmp_path / "gold.tsv"
    path.write_text(GOLD_FIXTURE, encoding="utf-8")
    return str(path)


def make_roles(n_tokens: int, rng: np.random.Generator) -> np.ndarray:
    """Random valid role array: one CLS/SEP, >=1 modifier/head/context."""
    assert n_tokens >= 5
    roles = np.full(n_tokens, TokenRole.CONTEXT, dtype=np.uint8)
    slots = rng.permutation(n_tokens)
    roles[slots[0]] = TokenRole.CLS
    roles[slots[1]] = TokenRole.SEP
    roles[slots[2]] = TokenRole.MODIFIER_SUBWORD
    roles[slots[3]] = TokenRole.HEAD_SUBWORD
    for extra in slots[5:]:
        roles[extra] = rng.choice(
            [TokenRole.MODIFIER_SUBWORD, TokenRole.HEAD_SUBWORD, TokenRole.CONTEXT, TokenRole.IGNORE],
            p=[0.15, 0.15, 0.6, 0.1],
        )
    return roles


def make_tensor(
    rng: np.random.Generator,
    compound: str = "Testwort",
    n_tokens: int = 8,
    n_layers: int = 13,
    dim: int = 16,
) -> SentenceTensor:
    return SentenceTensor(
        compound=compound,
        roles=make_roles(n_tokens, rng),
        vectors=rng.normal(size=(n_layers, n_tokens, dim)).astype(np.float32),
    )


@pytest.fixture(scope="session")
def planted(tmp_path_factory):
    from planted import build_planted

    return build_planted(tmp_path_factory.mktemp("planted"))
