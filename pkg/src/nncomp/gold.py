"""Gold-standard compound dataset: loading, validation, family statistics.

The expected file is UTF-8 TSV with a header line and five columns per
entry: compound, modifier, head, modifier rating, head rating. Files with
extra columns can be ingested through a :class:`ColumnMap` that names or
indexes the five relevant columns; everything else is ignored.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import GoldFormatError, GoldValidationError, MissingInputError

RATING_MIN = 1.0
RATING_MAX = 6.0

DEFAULT_HEADER = ("compound", "modifier", "head", "rating_modifier", "rating_head")


@dataclass(frozen=True)
class CompoundEntry:
    """One compound with its two constituents and compositionality ratings."""

    compound: str
    modifier: str
    head: str
    rating_modifier: float
    rating_head: float

    def validate(self) -> None:
        for name in ("compound", "modifier", "head"):
            value = getattr(self, name)
            if not value:
                raise GoldValidationError(f"{name} is empty for compound {self.compound!r}")
            if any(ch.isspace() for ch in value):
                raise GoldValidationError(f"{name} {value!r} contains whitespace")
        for name in ("rating_modifier", "rating_head"):
            rating = getattr(self, name)
            if not (RATING_MIN <= rating <= RATING_MAX):
                raise GoldValidationError(
                    f"{name}={rating} out of [{RATING_MIN:g}, {RATING_MAX:g}] "
                    f"for compound {self.compound!r}"
                )


@dataclass
class GoldDataset:
    """Ordered compound entries plus the inverse constituent-family indexes."""

    entries: list[CompoundEntry]
    modifier_families: dict[str, list[str]] = field(default_factory=dict)
    head_families: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.modifier_families and not self.head_families:
            for entry in self.entries:
                self.modifier_families.setdefault(entry.modifier, []).append(entry.compound)
                self.head_families.setdefault(entry.head, []).append(entry.compound)

    def __len__(self) -> int:
        return len(self.entries)

    def by_compound(self) -> dict[str, CompoundEntry]:
        return {entry.compound: entry for entry in self.entries}


class FamilyStats(NamedTuple):
    unique_modifiers: int
    repeated_modifiers: int
    unique_heads: int
    repeated_heads: int


@dataclass(frozen=True)
class ColumnMap:
    """Where to find the five gold columns; int = position, str = header name."""

    compound: int | str = 0
    modifier: int | str = 1
    head: int | str = 2
    rating_modifier: int | str = 3
    rating_head: int | str = 4

    def resolve(self, header: list[str]) -> tuple[int, int, int, int, int]:
        indices = []
        for name in DEFAULT_HEADER:
            ref = getattr(self, name)
            if isinstance(ref, str):
                if ref not in header:
                    raise GoldFormatError(f"column {ref!r} not found in header {header}")
                indices.append(header.index(ref))
            else:
                indices.append(ref)
        return tuple(indices)  # type: ignore[return-value]


def load_gold(path: str | os.PathLike, column_map: ColumnMap | None = None) -> GoldDataset:
    """Parse and validate a gold TSV file, preserving entry order.

    With the default positional mapping every data line must have exactly
    five columns; a custom ``column_map`` tolerates additional columns.
    """
    if not os.path.exists(path):
        raise MissingInputError(f"gold file not found: {path}")
    strict_five = column_map is None
    column_map = column_map or ColumnMap()

    entries: list[CompoundEntry] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        header_line = handle.readline()
        if not header_line.strip():
            raise GoldFormatError(f"{path}: missing header line")
        indices = column_map.resolve(header_line.rstrip("\n").split("\t"))
        needed = max(indices) + 1

        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            cells = line.rstrip("\n").split("\t")
            if strict_five and len(cells) != 5:
                raise GoldFormatError(f"{path}: line {lineno}: expected 5 columns, got {len(cells)}")
            if len(cells) < needed:
                raise GoldFormatError(
                    f"{path}: line {lineno}: expected at least {needed} columns, got {len(cells)}"
                )
            raw = [cells[i] for i in indices]
            try:
                rating_modifier = float(raw[3])
                rating_head = float(raw[4])
            except ValueError as exc:
                raise GoldFormatError(f"{path}: line {lineno}: unparsable rating: {exc}") from exc
            entry = CompoundEntry(raw[0], raw[1], raw[2], rating_modifier, rating_head)
            try:
                entry.validate()
            except GoldValidationError as exc:
                raise GoldValidationError(f"{path}: line {lineno}: {exc}") from exc
            if entry.compound in seen:
                raise GoldValidationError(f"{path}: line {lineno}: duplicate compound {entry.compound!r}")
            seen.add(entry.compound)
            entries.append(entry)

    return GoldDataset(entries)


def dump_gold(dataset: GoldDataset) -> str:
    """Serialize back to canonical five-column TSV (header included)."""
    lines = ["\t".join(DEFAULT_HEADER)]
    for e in dataset.entries:
        lines.append(
            "\t".join((e.compound, e.modifier, e.head, _format_rating(e.rating_modifier), _format_rating(e.rating_head)))
        )
    return "\n".join(lines) + "\n"


def _format_rating(value: float) -> str:
    # shortest round-trip repr; "5.3" stays "5.3", integral values keep one decimal
    if value == int(value):
        return f"{value:.1f}"
    return repr(value)


def family_stats(dataset: GoldDataset) -> FamilyStats:
    """Distinct and repeated (>1 compound) constituent counts."""
    return FamilyStats(
        unique_modifiers=len(dataset.modifier_families),
        repeated_modifiers=sum(1 for c in dataset.modifier_families.values() if len(c) > 1),
        unique_heads=len(dataset.head_families),
        repeated_heads=sum(1 for c in dataset.head_families.values() if len(c) > 1),
    )
