"""Offline embedding exporter for causal graph corpora."""

from embed_export.exporter import ExportManifest, export_embeddings

__version__ = "0.1.0"
