"""Character-span to subword-role alignment.

Roles are assigned purely by offset intersection with the modifier and
head spans recorded in the manifest: every subword whose character range
overlaps a constituent span carries that constituent's role, everything
else between [CLS] and [SEP] is context. Offsets always refer to the
original (pre-case-folding) sentence, which is what fast tokenizers
report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nncomp.errors import NncompError
from nncomp.store import TokenRole


class AlignmentError(NncompError):
    """No usable subword alignment for a sentence; the sentence is dropped."""


@dataclass
class AlignmentResult:
    tokens: list[str]
    offsets: list[tuple[int, int]]
    roles: np.ndarray  # (n_tokens,) uint8


def _overlaps(offset: tuple[int, int], span: tuple[int, int]) -> bool:
    start, end = offset
    return start < span[1] and end > span[0] and end > start


def assign_roles(
    tokens: list[str],
    offsets: list[tuple[int, int]],
    special_mask: list[int],
    modifier_span: tuple[int, int],
    head_span: tuple[int, int],
) -> AlignmentResult:
    """Map every subword to exactly one TokenRole.

    The first and last special tokens are [CLS] and [SEP]; any other
    special token (there are none for plain BERT input) is ignored.
    """
    n = len(tokens)
    if n < 3:
        raise AlignmentError(f"sequence of {n} tokens cannot hold CLS, content and SEP")
    roles = np.full(n, TokenRole.CONTEXT, dtype=np.uint8)
    special_positions = [i for i, flag in enumerate(special_mask) if flag]
    if not special_positions or special_positions[0] != 0 or special_positions[-1] != n - 1:
        raise AlignmentError("expected [CLS] first and [SEP] last")
    roles[0] = TokenRole.CLS
    roles[n - 1] = TokenRole.SEP
    for position in special_positions[1:-1]:
        roles[position] = TokenRole.IGNORE

    for i in range(1, n - 1):
        if special_mask[i]:
            continue
        hits_modifier = _overlaps(offsets[i], modifier_span)
        hits_head = _overlaps(offsets[i], head_span)
        if hits_modifier and hits_head:
            raise AlignmentError(f"token {tokens[i]!r} at {offsets[i]} overlaps both constituents")
        if hits_modifier:
            roles[i] = TokenRole.MODIFIER_SUBWORD
        elif hits_head:
            roles[i] = TokenRole.HEAD_SUBWORD

    for role, span in ((TokenRole.MODIFIER_SUBWORD, modifier_span), (TokenRole.HEAD_SUBWORD, head_span)):
        if not (roles == role).any():
            raise AlignmentError(f"no subword intersects the {role.name} span {span}")
    if not (roles == TokenRole.CONTEXT).any():
        raise AlignmentError("no context token outside the constituent spans")
    return AlignmentResult(tokens=tokens, offsets=offsets, roles=roles)
