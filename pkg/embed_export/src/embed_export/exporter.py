"""Encode node labels and whole texts of a record corpus into the embedding
interchange format.

Reads the line-delimited record wire format, collects every distinct node
label (entity prefixes stripped, as consumers of the graphs see them) plus
one entry per record text, encodes them, and writes:

    dim=<d>
    <id> <v1> <v2> ... <vd>

plus a JSON manifest (model name, dimension, item count, input digest).

Model names:
  hash://<dim>   deterministic offline encoder (no downloads; for tests and
                 air-gapped runs)
  anything else  a huggingface model id, mean-pooled final hidden states
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ENTITY_PREFIXES = ("Entity::", "Entity:")


@dataclass(frozen=True)
class ExportManifest:
    model: str
    dimension: int
    item_count: int
    input_digest: str

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def strip_entity_prefix(text: str) -> str:
    for prefix in ENTITY_PREFIXES:
        if text.startswith(prefix) and text[len(prefix):]:
            return text[len(prefix):]
    return text


def collect_corpus(path: str | Path) -> tuple[list[str], dict[str, str]]:
    """(distinct node labels, record id -> text) from a record corpus file."""
    labels: dict[str, None] = {}
    texts: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from None
        if "causal_graph" not in obj or "text" not in obj:
            raise ValueError(f"{path}:{lineno}: record needs text and causal_graph")
        record_id = str(obj.get("@id") or obj.get("schema_id") or f"line-{lineno}")
        texts[record_id] = str(obj["text"])
        for triple in obj["causal_graph"]:
            for key in ("head", "tail"):
                labels.setdefault(strip_entity_prefix(str(triple[key])), None)
    if not texts:
        raise ValueError(f"{path}: empty corpus")
    return list(labels), texts


class HashEncoder:
    """Deterministic stand-in encoder: word-gram hashing, L2-normalized."""

    def __init__(self, dim: int):
        if dim < 8:
            raise ValueError(f"hash encoder dimension must be >= 8, got {dim}")
        self.dim = dim

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            tokens = text.lower().split() or [text.lower()]
            grams = tokens + [" ".join(p) for p in zip(tokens, tokens[1:])]
            for gram in grams:
                digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
                value = int.from_bytes(digest, "big")
                out[row, (value >> 1) % self.dim] += 1.0 if value & 1 else -1.0
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
            else:
                out[row, 0] = 1.0
        return out


class TransformerEncoder:
    """Mean-pooled final hidden states of a pretrained encoder."""

    def __init__(self, model_name: str, batch_size: int = 16):
        try:
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise RuntimeError(f"transformers is not installed: {exc}") from None
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name)
        except Exception as exc:
            raise RuntimeError(f"could not load model {model_name!r}: {exc}") from None
        self.model.eval()
        self.batch_size = batch_size

    def encode(self, texts: list[str]) -> np.ndarray:
        import torch

        chunks = []
        with torch.no_grad():
            for start in range(0, len(texts), self.batch_size):
                batch = texts[start : start + self.batch_size]
                encoded = self.tokenizer(
                    batch, padding=True, truncation=True, max_length=512, return_tensors="pt"
                )
                hidden = self.model(**encoded).last_hidden_state
                mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
                chunks.append(pooled.cpu().numpy())
        return np.concatenate(chunks, axis=0)


def make_encoder(model_name: str):
    if model_name.startswith("hash://"):
        return HashEncoder(int(model_name[len("hash://"):]))
    return TransformerEncoder(model_name)


def write_interchange(table: dict[str, np.ndarray], path: Path) -> None:
    dims = {vec.shape[0] for vec in table.values()}
    if len(dims) != 1:
        raise ValueError(f"inconsistent embedding dimensions: {sorted(dims)}")
    dim = dims.pop()
    lines = [f"dim={dim}"]
    for key in sorted(table):
        if key != key.strip() or "  " in key or any(c in key for c in "\n\r\t"):
            raise ValueError(f"id not representable in the interchange format: {key!r}")
        lines.append(f"{key} {' '.join(repr(float(v)) for v in table[key])}")
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(path)


def export_embeddings(corpus_path: str | Path, model_name: str, output_path: str | Path) -> ExportManifest:
    """Encode a corpus and write the interchange file plus its manifest.

    Emits one vector per distinct node label and one per record text (keyed
    by record id). Label/record-id collisions are rejected rather than
    silently merged.
    """
    labels, texts = collect_corpus(corpus_path)
    collisions = set(labels) & set(texts)
    if collisions:
        raise ValueError(f"node labels collide with record ids: {sorted(collisions)[:3]}")

    encoder = make_encoder(model_name)
    items = labels + [texts[record_id] for record_id in sorted(texts)]
    keys = labels + sorted(texts)
    vectors = encoder.encode(items)
    table = {key: vectors[i] for i, key in enumerate(keys)}

    output_path = Path(output_path)
    write_interchange(table, output_path)
    manifest = ExportManifest(
        model=model_name,
        dimension=int(vectors.shape[1]),
        item_count=len(table),
        input_digest=hashlib.sha256(Path(corpus_path).read_bytes()).hexdigest(),
    )
    manifest.write(output_path.with_suffix(output_path.suffix + ".manifest.json"))
    return manifest


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", required=True, help="model id, or hash://<dim> for offline runs")
    parser.add_argument("--input", required=True, help="line-delimited record corpus")
    parser.add_argument("--output", required=True, help="interchange file to write")
    args = parser.parse_args(argv)
    try:
        manifest = export_embeddings(args.input, args.model, args.output)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {manifest.item_count} vectors (dim {manifest.dimension}) to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
