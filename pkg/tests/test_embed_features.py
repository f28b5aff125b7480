import numpy as np
import pytest
from hypothesis import given, strategies as st

from causalkit.embed import (
    feature_matrix,
    features_from_embeddings,
    hash_encode,
    hash_features,
    load_external_embeddings,
    save_embeddings,
    structural_features,
)
from conftest import random_graph


class TestHashEncode:
    def test_deterministic(self):
        assert np.array_equal(hash_encode("Keating was released", 64), hash_encode("Keating was released", 64))

    @given(st.text(min_size=1, max_size=30))
    def test_unit_norm(self, label):
        vec = hash_encode(label, 32)
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-9

    def test_empty_label_is_zero_vector(self):
        assert np.array_equal(hash_encode("", 16), np.zeros(16))

    def test_short_labels_still_encode(self):
        assert np.linalg.norm(hash_encode("go", 16)) > 0

    def test_small_dimension_rejected(self):
        with pytest.raises(ValueError):
            hash_encode("x", 4)

    def test_distinct_labels_differ(self):
        assert not np.array_equal(hash_encode("stock market", 64), hash_encode("court ruling", 64))


class TestStructuralFeatures:
    def test_label_free_and_relabel_invariant(self):
        g = random_graph(3)
        relabeled = random_graph(3, prefix="zz")
        f1 = structural_features(g, 16)
        f2 = structural_features(relabeled, 16)
        for a, b in zip(sorted(f1), sorted(f2)):
            assert np.allclose(f1[a], f2[b])

    def test_minimum_dimension(self):
        with pytest.raises(ValueError):
            structural_features(random_graph(0), 8)

    def test_vectors_unit_norm(self):
        for vec in structural_features(random_graph(1), 16).values():
            assert abs(np.linalg.norm(vec) - 1.0) < 1e-9


class TestFeatureMatrix:
    def test_rows_align_to_sorted_ids(self):
        g = random_graph(4)
        features = hash_features(g, 16)
        ids, X = feature_matrix(g, features)
        assert ids == sorted(n.id for n in g.nodes)
        assert X.shape == (g.node_count, 16)

    def test_missing_node_rejected(self):
        g = random_graph(4)
        features = hash_features(g, 16)
        features.pop(sorted(features)[0])
        with pytest.raises(ValueError, match="missing features"):
            feature_matrix(g, features)

    def test_dimension_mismatch_rejected(self):
        g = random_graph(4)
        features = hash_features(g, 16)
        features[sorted(features)[0]] = np.zeros(8)
        with pytest.raises(ValueError, match="dimension mismatch"):
            feature_matrix(g, features)

    def test_non_finite_rejected(self):
        g = random_graph(4)
        features = hash_features(g, 16)
        features[sorted(features)[0]] = np.full(16, np.nan)
        with pytest.raises(ValueError, match="non-finite"):
            feature_matrix(g, features)


class TestInterchangeFormat:
    def test_round_trip(self, tmp_path):
        table = {
            "Keating was released": np.array([0.25, -1.5, 3.0]),
            "Entity提示": np.array([1e-9, 2.0, -0.125]),
            "plain": np.array([0.1, 0.2, 0.3]),
        }
        path = tmp_path / "vectors.emb"
        save_embeddings(table, path)
        loaded = load_external_embeddings(path)
        assert set(loaded) == set(table)
        for key in table:
            assert np.array_equal(loaded[key], table[key])

    def test_two_entry_fixture(self, tmp_path):
        path = tmp_path / "two.emb"
        path.write_text("dim=2\na 1.0 2.0\nb 3.5 -1.0\n")
        table = load_external_embeddings(path)
        assert len(table) == 2
        assert np.array_equal(table["b"], np.array([3.5, -1.0]))

    def test_mixed_dimensions_rejected_on_save(self, tmp_path):
        table = {"a": np.zeros(256), "b": np.zeros(128)}
        with pytest.raises(ValueError, match="dimension mismatch"):
            save_embeddings(table, tmp_path / "bad.emb")

    def test_short_line_rejected(self, tmp_path):
        path = tmp_path / "bad.emb"
        path.write_text("dim=3\na 1.0 2.0\n")
        with pytest.raises(ValueError, match="expected id plus 3 values"):
            load_external_embeddings(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "bad.emb"
        path.write_text("dim=1\na 1.0\na 2.0\n")
        with pytest.raises(ValueError, match="duplicate id"):
            load_external_embeddings(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "bad.emb"
        path.write_text("dim=1\na nan\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_external_embeddings(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.emb"
        path.write_text("a 1.0\n")
        with pytest.raises(ValueError, match="dim= header"):
            load_external_embeddings(path)

    def test_unrepresentable_id_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="not representable"):
            save_embeddings({"two  spaces": np.zeros(2)}, tmp_path / "bad.emb")


class TestExternalLookup:
    def test_lookup_by_label_then_id(self):
        g = random_graph(2)
        node = g.nodes[0]
        table = {node.label: np.ones(4)}
        table.update({n.id: np.zeros(4) for n in g.nodes[1:]})
        features = features_from_embeddings(g, table)
        assert np.array_equal(features[node.id], np.ones(4))

    def test_missing_node_rejected(self):
        g = random_graph(2)
        with pytest.raises(ValueError, match="no external embedding"):
            features_from_embeddings(g, {})
