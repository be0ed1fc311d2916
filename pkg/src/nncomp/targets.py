"""Layer-span pooling and the five per-sentence target embeddings.

Pooling is arithmetic averaging throughout: over the layers of a span,
over the subwords of a constituent, and over the context tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimateError
from .store import SentenceTensor, TokenRole

TARGET_NAMES = ("modif", "head", "comp", "cont", "cls")


@dataclass(frozen=True, order=True)
class LayerSpan:
    """Contiguous inclusive range of layer indices."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid layer span {self.start}-{self.end}")

    def __str__(self) -> str:
        return f"{self.start}-{self.end}"

    @classmethod
    def parse(cls, text: str) -> "LayerSpan":
        start, _, end = text.partition("-")
        return cls(int(start), int(end))

    @property
    def n_layers(self) -> int:
        return self.end - self.start + 1


def enumerate_spans(n_layers: int) -> list[LayerSpan]:
    """All contiguous spans, ordered by (start, end); n*(n+1)/2 of them."""
    if n_layers < 1:
        raise ValueError(f"n_layers must be >= 1, got {n_layers}")
    return [LayerSpan(s, e) for s in range(n_layers) for e in range(s, n_layers)]


def pool_span(tensor: SentenceTensor, span: LayerSpan) -> np.ndarray:
    """Per-token mean over the span's layers; (n_tokens, dim) float64."""
    if span.end >= tensor.n_layers:
        raise ValueError(f"span {span} out of range for {tensor.n_layers} layers")
    return tensor.vectors[span.start : span.end + 1].mean(axis=0, dtype=np.float64)


@dataclass
class TargetVectors:
    """The five pooled target embeddings for one sentence and one layer span."""

    modif: np.ndarray
    head: np.ndarray
    comp: np.ndarray
    cont: np.ndarray
    cls: np.ndarray
    span: LayerSpan

    def get(self, name: str) -> np.ndarray:
        if name not in TARGET_NAMES:
            raise KeyError(f"unknown target {name!r}")
        return getattr(self, name)


def target_vectors(tensor: SentenceTensor, span: LayerSpan) -> TargetVectors:
    """Pool the span, then average tokens by role.

    modif/head average their constituent subwords, cont averages the plain
    context tokens, cls is the classification token, and comp is the mean
    of modif and head.
    """
    pooled = pool_span(tensor, span)
    roles = np.asarray(tensor.roles)

    def role_mean(role: TokenRole) -> np.ndarray:
        mask = roles == role
        if not mask.any():
            raise EstimateError(f"sentence has no {role.name} token")
        return pooled[mask].mean(axis=0)

    modif = role_mean(TokenRole.MODIFIER_SUBWORD)
    head = role_mean(TokenRole.HEAD_SUBWORD)
    return TargetVectors(
        modif=modif,
        head=head,
        comp=(modif + head) / 2.0,
        cont=role_mean(TokenRole.CONTEXT),
        cls=role_mean(TokenRole.CLS),
        span=span,
    )
