"""The 19 per-sentence compositionality estimates and their aggregation.

Ten direct estimates are cosine scores of unordered target pairs; nine
composite estimates combine the modifier-vs-reference and head-vs-reference
cosines per reference (comp, cont, cls): add = a+b, mult = a*b,
comb = add + mult. Per-sentence values are averaged into compound-level
predictions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EstimateError
from .store import SentenceTensor, TokenRole
from .targets import TARGET_NAMES, LayerSpan, TargetVectors

COMPOSITE_FUNCTIONS = ("add", "mult", "comb")
COMPOSITE_REFERENCES = ("comp", "cont", "cls")


@dataclass(frozen=True)
class EstimateId:
    """Identifier of one estimate: a direct target pair or a composite function."""

    kind: str  # "direct" | "composite"
    pair: tuple[str, str] | None = None
    function: str | None = None
    reference: str | None = None

    def __str__(self) -> str:
        if self.kind == "direct":
            return f"{self.pair[0]}-{self.pair[1]}"
        return f"{self.function}-{self.reference}"

    @classmethod
    def direct(cls, a: str, b: str) -> "EstimateId":
        pair = tuple(sorted((a, b), key=TARGET_NAMES.index))
        if len(set(pair)) != 2 or any(t not in TARGET_NAMES for t in pair):
            raise ValueError(f"invalid target pair ({a}, {b})")
        return cls(kind="direct", pair=pair)  # type: ignore[arg-type]

    @classmethod
    def composite(cls, function: str, reference: str) -> "EstimateId":
        if function not in COMPOSITE_FUNCTIONS or reference not in COMPOSITE_REFERENCES:
            raise ValueError(f"invalid composite ({function}, {reference})")
        return cls(kind="composite", function=function, reference=reference)

    @classmethod
    def parse(cls, text: str) -> "EstimateId":
        left, _, right = text.partition("-")
        if left in COMPOSITE_FUNCTIONS:
            return cls.composite(left, right)
        return cls.direct(left, right)


def all_estimates() -> list[EstimateId]:
    """Canonical enumeration: 10 direct pairs, then 9 composites."""
    direct = [EstimateId.direct(a, b) for a, b in itertools.combinations(TARGET_NAMES, 2)]
    composite = [
        EstimateId.composite(fn, ref)
        for fn in COMPOSITE_FUNCTIONS
        for ref in COMPOSITE_REFERENCES
    ]
    return direct + composite


ESTIMATES = all_estimates()
ESTIMATE_INDEX = {est: i for i, est in enumerate(ESTIMATES)}


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clamped into [-1, 1]; zero-norm inputs are an error."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EstimateError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise EstimateError("cosine undefined for zero-norm vector")
    return min(1.0, max(-1.0, float(u @ v) / (nu * nv)))


def direct_estimate(tv: TargetVectors, pair: tuple[str, str]) -> float:
    return cosine(tv.get(pair[0]), tv.get(pair[1]))


def composite_estimate(tv: TargetVectors, function: str, reference: str) -> float:
    if reference not in COMPOSITE_REFERENCES:
        raise EstimateError(f"composite reference must be one of {COMPOSITE_REFERENCES}")
    a = cosine(tv.modif, tv.get(reference))
    b = cosine(tv.head, tv.get(reference))
    if function == "add":
        return a + b
    if function == "mult":
        return a * b
    if function == "comb":
        return (a + b) + a * b
    raise EstimateError(f"unknown composite function {function!r}")


def estimate_value(tv: TargetVectors, estimate: EstimateId) -> float:
    if estimate.kind == "direct":
        return direct_estimate(tv, estimate.pair)
    return composite_estimate(tv, estimate.function, estimate.reference)


def aggregate(per_sentence: Sequence[float]) -> float:
    """Arithmetic mean of per-sentence estimates (exact, order-independent)."""
    if len(per_sentence) == 0:
        raise EstimateError("cannot aggregate an empty estimate list")
    return math.fsum(per_sentence) / len(per_sentence)


def sentence_estimate_matrix(tensor: SentenceTensor, spans: Sequence[LayerSpan]) -> np.ndarray:
    """All 19 estimates for every span at once; (n_spans, 19) float64.

    Layer pooling for every span comes from one prefix sum over layers;
    target pooling and the cosine grid are then batched across spans.
    Numerically this matches the per-span target_vectors/estimate_value
    path to float64 round-off.
    """
    roles = np.asarray(tensor.roles)
    vectors = np.asarray(tensor.vectors, dtype=np.float64)
    n_layers = vectors.shape[0]

    starts = np.array([s.start for s in spans])
    ends = np.array([s.end for s in spans])
    if len(spans) == 0:
        raise EstimateError("no spans given")
    if ends.max() >= n_layers:
        raise EstimateError(f"span {spans[int(ends.argmax())]} out of range for {n_layers} layers")

    csum = np.concatenate([np.zeros((1,) + vectors.shape[1:]), np.cumsum(vectors, axis=0)])
    pooled = (csum[ends + 1] - csum[starts]) / (ends - starts + 1)[:, None, None]

    def role_mean(role: TokenRole) -> np.ndarray:
        mask = roles == role
        if not mask.any():
            raise EstimateError(f"sentence has no {role.name} token")
        return pooled[:, mask, :].mean(axis=1)

    targets = {
        "modif": role_mean(TokenRole.MODIFIER_SUBWORD),
        "head": role_mean(TokenRole.HEAD_SUBWORD),
        "cont": role_mean(TokenRole.CONTEXT),
        "cls": role_mean(TokenRole.CLS),
    }
    targets["comp"] = (targets["modif"] + targets["head"]) / 2.0

    norms = {name: np.linalg.norm(vec, axis=1) for name, vec in targets.items()}
    for name, norm in norms.items():
        if (norm == 0.0).any():
            raise EstimateError(f"zero-norm {name} vector in span {spans[int(norm.argmin())]}")

    def cos(a: str, b: str) -> np.ndarray:
        raw = np.einsum("sd,sd->s", targets[a], targets[b]) / (norms[a] * norms[b])
        return np.clip(raw, -1.0, 1.0)

    out = np.empty((len(spans), len(ESTIMATES)))
    for i, est in enumerate(ESTIMATES):
        if est.kind == "direct":
            out[:, i] = cos(*est.pair)
        else:
            a = cos("modif", est.reference)
            b = cos("head", est.reference)
            if est.function == "add":
                out[:, i] = a + b
            elif est.function == "mult":
                out[:, i] = a * b
            else:
                out[:, i] = (a + b) + a * b
    return out


def mean_sentence_estimates(matrices: Iterable[np.ndarray]) -> tuple[np.ndarray, int]:
    """Compound-level prediction: elementwise mean of per-sentence matrices."""
    total = None
    count = 0
    for matrix in matrices:
        total = matrix.copy() if total is None else total + matrix
        count += 1
    if count == 0:
        raise EstimateError("no sentences to aggregate")
    return total / count, count
