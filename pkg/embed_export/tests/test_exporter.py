import json
from pathlib import Path

import numpy as np
import pytest

from embed_export.exporter import collect_corpus, export_embeddings, main, strip_entity_prefix

FIXTURE_CORPUS = Path(__file__).resolve().parent.parent.parent / "data" / "fixtures" / "corpus_20.jsonl"


def write_corpus(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def five_node_record():
    return {
        "@id": "rec-1",
        "text": "alpha causes beta which causes gamma",
        "causal_graph": [
            {"head": "alpha happens", "rel": "ENABLES", "tail": "beta happens"},
            {"head": "beta happens", "rel": "ENABLES", "tail": "gamma happens"},
            {"head": "Entity::delta", "rel": "BLOCKS", "tail": "gamma happens"},
            {"head": "epsilon happens", "rel": "ENABLES", "tail": "beta happens"},
        ],
    }


class TestCollect:
    def test_entity_prefix_stripped(self):
        assert strip_entity_prefix("Entity::Charles Keating") == "Charles Keating"
        assert strip_entity_prefix("Entity:court") == "court"
        assert strip_entity_prefix("plain event") == "plain event"

    def test_labels_and_texts(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, [five_node_record()])
        labels, texts = collect_corpus(corpus)
        assert sorted(labels) == [
            "alpha happens", "beta happens", "delta", "epsilon happens", "gamma happens",
        ]
        assert texts == {"rec-1": "alpha causes beta which causes gamma"}

    def test_empty_corpus_rejected(self, tmp_path):
        corpus = tmp_path / "empty.jsonl"
        corpus.write_text("")
        with pytest.raises(ValueError, match="empty corpus"):
            collect_corpus(corpus)


class TestExport:
    def test_five_node_fixture_counts(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, [five_node_record()])
        out = tmp_path / "vectors.emb"
        manifest = export_embeddings(corpus, "hash://64", out)
        assert manifest.item_count == 6  # 5 node labels + 1 text
        assert manifest.dimension == 64
        assert out.read_text().splitlines()[0] == "dim=64"

    def test_rerun_same_ids_and_dims(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, [five_node_record()])
        out1, out2 = tmp_path / "a.emb", tmp_path / "b.emb"
        export_embeddings(corpus, "hash://32", out1)
        export_embeddings(corpus, "hash://32", out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_manifest_written(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, [five_node_record()])
        out = tmp_path / "vectors.emb"
        export_embeddings(corpus, "hash://16", out)
        manifest = json.loads((out.parent / "vectors.emb.manifest.json").read_text())
        assert manifest["model"] == "hash://16"
        assert len(manifest["input_digest"]) == 64

    def test_model_load_failure_surfaces(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, [five_node_record()])
        with pytest.raises(RuntimeError, match="could not load model"):
            export_embeddings(corpus, "no-such-org/no-such-model-xyz", tmp_path / "v.emb")

    def test_cli_entry(self, tmp_path, capsys):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, [five_node_record()])
        rc = main(["--model", "hash://16", "--input", str(corpus), "--output", str(tmp_path / "v.emb")])
        assert rc == 0
        assert "wrote 6 vectors" in capsys.readouterr().out

    def test_cli_error_path(self, tmp_path, capsys):
        rc = main(["--model", "hash://16", "--input", str(tmp_path / "missing.jsonl"), "--output", str(tmp_path / "v.emb")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestRoundTripWithCore:
    """The exporter's output must drive the core pipeline end to end."""

    def test_load_external_embeddings_round_trip(self, tmp_path):
        causalkit = pytest.importorskip("causalkit")
        from causalkit.embed import load_external_embeddings
        from causalkit.ingest import load_records, record_to_graph

        out = tmp_path / "nodes.emb"
        manifest = export_embeddings(FIXTURE_CORPUS, "hash://48", out)
        table = load_external_embeddings(out)
        assert len(table) == manifest.item_count
        assert all(vec.shape == (48,) for vec in table.values())

        # id set covers every node label and every record text id
        labels = set()
        record_ids = set()
        for record in load_records(FIXTURE_CORPUS):
            record_ids.add(record.id)
            for node in record_to_graph(record).nodes:
                labels.add(node.label)
        assert labels | record_ids == set(table)

    def test_embed_gnn_consumes_export(self, tmp_path):
        pytest.importorskip("causalkit")
        from causalkit.cli import dispatch
        from causalkit.embed import load_external_embeddings

        out = tmp_path / "nodes.emb"
        export_embeddings(FIXTURE_CORPUS, "hash://32", out)
        rc = dispatch(
            [
                "train-gnn", "--input", str(FIXTURE_CORPUS),
                "--embedder", "external", "--embeddings", str(out),
                "--hidden1", "8", "--hidden2", "8", "--embed-dim", "8",
                "--steps", "4", "--out", str(tmp_path),
            ]
        )
        assert rc == 0
        rc = dispatch(
            [
                "embed-gnn", "--input", str(FIXTURE_CORPUS),
                "--embedder", "external", "--embeddings", str(out),
                "--params", str(tmp_path / "gnn_params.txt"), "--out", str(tmp_path),
            ]
        )
        assert rc == 0
        table = load_external_embeddings(tmp_path / "gnn.emb")
        assert len(table) == 20
