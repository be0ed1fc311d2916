"""Corpus scanning, compound splitting, and per-compound sentence sampling.

A compound occurrence counts only when the exact surface form appears as a
standalone token (no word character on either side), case-sensitively, and
exactly once in the sentence. Splitting replaces that occurrence with
"<modifier> <head>" using the gold forms verbatim and records the character
spans of both inserted constituents.
"""

from __future__ import annotations

import json
import os
import random
import re
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import MissingInputError, SplitError
from .gold import CompoundEntry

Span = tuple[int, int]

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class SentenceRecord:
    """One split sentence with [start, end) offsets of the inserted constituents."""

    compound: str
    text: str
    modifier_span: Span
    head_span: Span

    def validate(self, entry: CompoundEntry | None = None) -> None:
        ms, me = self.modifier_span
        hs, he = self.head_span
        if not (0 <= ms < me <= len(self.text)) or not (0 <= hs < he <= len(self.text)):
            raise SplitError(f"spans out of range in {self.text!r}")
        if me + 1 != hs or self.text[me] != " ":
            raise SplitError("modifier and head spans must be separated by exactly one space")
        if entry is not None:
            if self.text[ms:me] != entry.modifier:
                raise SplitError(f"modifier span does not contain {entry.modifier!r}")
            if self.text[hs:he] != entry.head:
                raise SplitError(f"head span does not contain {entry.head!r}")
        context = self.text[:ms] + self.text[he:]
        if not any(ch.isalpha() for ch in context):
            raise SplitError(f"no context outside constituent spans in {self.text!r}")

    def restore_original(self) -> str:
        """Undo the split: re-insert the compound over both constituent spans."""
        return self.text[: self.modifier_span[0]] + self.compound + self.text[self.head_span[1] :]


def standalone_occurrences(sentence: str, surface: str) -> list[Span]:
    """[start, end) offsets where ``surface`` occurs with no adjacent word character."""
    pattern = re.compile(r"(?<!\w)" + re.escape(surface) + r"(?!\w)")
    return [(m.start(), m.end()) for m in pattern.finditer(sentence)]


def scan_occurrences(corpus: Iterable[str], entry: CompoundEntry) -> list[str]:
    """Sentences containing the compound standalone exactly once."""
    matches = []
    for line in corpus:
        sentence = line.rstrip("\n")
        if entry.compound not in sentence:
            continue
        if len(standalone_occurrences(sentence, entry.compound)) == 1:
            matches.append(sentence)
    return matches


def scan_corpus(corpus: Iterable[str], entries: Iterable[CompoundEntry]) -> dict[str, list[str]]:
    """Single-pass scan for many compounds; compound -> matching sentences.

    Word-character-only compounds are matched against the token runs of each
    sentence (fast path); anything else falls back to the per-compound regex.
    """
    token_lookup: dict[str, str] = {}
    awkward: list[str] = []
    result: dict[str, list[str]] = {}
    for entry in entries:
        result.setdefault(entry.compound, [])
        if re.fullmatch(r"\w+", entry.compound):
            token_lookup[entry.compound] = entry.compound
        else:
            awkward.append(entry.compound)

    word_re = re.compile(r"\w+")
    for line in corpus:
        sentence = line.rstrip("\n")
        if token_lookup:
            counts: dict[str, int] = {}
            for m in word_re.finditer(sentence):
                token = m.group()
                if token in token_lookup:
                    counts[token] = counts.get(token, 0) + 1
            for compound, n in counts.items():
                if n == 1:
                    result[compound].append(sentence)
        for compound in awkward:
            if compound in sentence and len(standalone_occurrences(sentence, compound)) == 1:
                result[compound].append(sentence)
    return result


def split_compound(sentence: str, entry: CompoundEntry) -> SentenceRecord:
    """Replace the single compound occurrence with "modifier head" and record spans.

    The rest of the sentence is untouched; reversing the replacement
    reconstructs the input exactly.
    """
    occurrences = standalone_occurrences(sentence, entry.compound)
    if len(occurrences) != 1:
        raise SplitError(
            f"expected exactly one occurrence of {entry.compound!r}, found {len(occurrences)}"
        )
    start, end = occurrences[0]
    text = sentence[:start] + entry.modifier + " " + entry.head + sentence[end:]
    modifier_span = (start, start + len(entry.modifier))
    head_span = (modifier_span[1] + 1, modifier_span[1] + 1 + len(entry.head))
    record = SentenceRecord(entry.compound, text, modifier_span, head_span)
    record.validate(entry)
    return record


def sample_sentences(records: list[SentenceRecord], cap: int, seed: int) -> list[SentenceRecord]:
    """At most ``cap`` records, uniformly sampled with ``seed``, input order kept."""
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    if len(records) <= cap:
        return list(records)
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(len(records)), cap))
    return [records[i] for i in chosen]


def compound_seed(seed: int, compound: str) -> int:
    """Stable per-compound sampling seed, independent of scan order."""
    return seed ^ zlib.crc32(compound.encode("utf-8"))


@dataclass
class SampleManifest:
    """Capped sentence samples per compound plus the sampling parameters."""

    seed: int
    cap: int
    records: dict[str, list[SentenceRecord]] = field(default_factory=dict)

    def __len__(self) -> int:
        return sum(len(v) for v in self.records.values())


def write_manifest(manifest: SampleManifest, path: str | os.PathLike, meta: dict | None = None) -> None:
    """JSON-lines: one header object, then one record object per line."""
    header = {"manifest_version": MANIFEST_VERSION, "seed": manifest.seed, "cap": manifest.cap}
    header.update(meta or {})
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for compound in manifest.records:
            for record in manifest.records[compound]:
                row = {
                    "compound": record.compound,
                    "text": record.text,
                    "modifier_span": list(record.modifier_span),
                    "head_span": list(record.head_span),
                }
                handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def read_manifest(path: str | os.PathLike) -> SampleManifest:
    if not os.path.exists(path):
        raise MissingInputError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as handle:
        header_line = handle.readline()
        if not header_line.strip():
            raise SplitError(f"{path}: empty manifest")
        header = json.loads(header_line)
        manifest = SampleManifest(seed=int(header["seed"]), cap=int(header["cap"]))
        for line in handle:
            if not line.strip():
                continue
            row = json.loads(line)
            record = SentenceRecord(
                compound=row["compound"],
                text=row["text"],
                modifier_span=tuple(row["modifier_span"]),
                head_span=tuple(row["head_span"]),
            )
            record.validate()
            manifest.records.setdefault(record.compound, []).append(record)
    return manifest


def iter_corpus_lines(paths: list[str]) -> Iterator[str]:
    """Stream sentences from one or more sentence-per-line files."""
    for path in paths:
        with open(path, encoding="utf-8") as handle:
            yield from handle
