"""Run a pretrained encoder over manifest sentences and emit embedding files.

Sentences are fed to the model one at a time, all layer outputs (input
embeddings plus every hidden state) are kept, and token roles come from
offset alignment. Inference is forced single-threaded so identical inputs
and weights always reproduce identical files.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from nncomp.corpus import SampleManifest, SentenceRecord
from nncomp.store import SentenceTensor, embedding_filename, write_embeddings

from .align import AlignmentError, assign_roles

log = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 512


@dataclass
class ExtractReport:
    variant: str
    dim: int
    n_layers: int
    files: list[str] = field(default_factory=list)
    n_sentences: int = 0
    dropped: list[tuple[str, int, str]] = field(default_factory=list)  # compound, index, reason


class Extractor:
    def __init__(self, model_id: str, variant: str, max_tokens: int = DEFAULT_MAX_TOKENS):
        from transformers import AutoModel, AutoTokenizer

        if variant not in ("cased", "uncased"):
            raise ValueError(f"variant must be cased or uncased, got {variant!r}")
        self.variant = variant
        self.max_tokens = max_tokens
        self.tokenizer = AutoTokenizer.from_pretrained(model_id, use_fast=True)
        self.model = AutoModel.from_pretrained(model_id)
        self.model.eval()
        torch.set_num_threads(1)
        self.dim = int(self.model.config.hidden_size)
        self.n_layers = int(self.model.config.num_hidden_layers) + 1

    def encode_sentence(self, record: SentenceRecord) -> SentenceTensor:
        """One tensor with all layers retained and roles from offset alignment."""
        encoding = self.tokenizer(
            record.text,
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
            return_tensors=None,
        )
        n_tokens = len(encoding["input_ids"])
        if n_tokens > self.max_tokens:
            encoding = self._truncate(record, encoding)
            n_tokens = len(encoding["input_ids"])

        alignment = assign_roles(
            self.tokenizer.convert_ids_to_tokens(encoding["input_ids"]),
            [tuple(pair) for pair in encoding["offset_mapping"]],
            encoding["special_tokens_mask"],
            record.modifier_span,
            record.head_span,
        )

        with torch.inference_mode():
            output = self.model(
                input_ids=torch.tensor([encoding["input_ids"]]),
                attention_mask=torch.tensor([encoding["attention_mask"]]),
                output_hidden_states=True,
            )
        layers = torch.stack(output.hidden_states, dim=0)[:, 0]  # (n_layers, n_tokens, dim)
        return SentenceTensor(
            compound=record.compound,
            roles=alignment.roles,
            vectors=layers.numpy().astype(np.float32),
        )

    def _truncate(self, record: SentenceRecord, encoding) -> dict:
        """Right-truncate, refusing to cut inside a constituent span."""
        keep = self.max_tokens - 1  # positions 0..keep-1 survive, then [SEP]
        offsets = encoding["offset_mapping"]
        special = encoding["special_tokens_mask"]
        for i, (offset, flag) in enumerate(zip(offsets, special)):
            if flag:
                continue
            in_constituent = (
                offset[0] < record.modifier_span[1] and offset[1] > record.modifier_span[0]
            ) or (offset[0] < record.head_span[1] and offset[1] > record.head_span[0])
            if in_constituent and i >= keep:
                raise AlignmentError(
                    f"constituent subword at position {i} would be truncated "
                    f"(limit {self.max_tokens} tokens)"
                )
        sep_id = encoding["input_ids"][-1]
        return {
            "input_ids": encoding["input_ids"][: keep] + [sep_id],
            "attention_mask": encoding["attention_mask"][: keep] + [1],
            "offset_mapping": offsets[: keep] + [(0, 0)],
            "special_tokens_mask": special[: keep] + [1],
        }

    def extract_manifest(self, manifest: SampleManifest, out_dir: str | os.PathLike) -> ExtractReport:
        """One embedding file per compound, in manifest order."""
        os.makedirs(out_dir, exist_ok=True)
        report = ExtractReport(variant=self.variant, dim=self.dim, n_layers=self.n_layers)
        for compound, records in manifest.records.items():
            tensors = []
            for index, record in enumerate(records):
                try:
                    tensors.append(self.encode_sentence(record))
                except AlignmentError as exc:
                    log.warning("%s sentence %d dropped: %s", compound, index, exc)
                    report.dropped.append((compound, index, str(exc)))
            if not tensors:
                log.warning("no usable sentences for %r; no file written", compound)
                continue
            path = os.path.join(str(out_dir), embedding_filename(compound, self.variant))
            write_embeddings(path, tensors, variant=self.variant, dim=self.dim, n_layers=self.n_layers)
            report.files.append(path)
            report.n_sentences += len(tensors)
        return report
