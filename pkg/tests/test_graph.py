import pytest
from hypothesis import given, strategies as st

from causalkit.graph import (
    CausalEdge,
    CausalGraph,
    CausalNode,
    NodeKind,
    Relation,
    SubRelation,
    bfs_linearize,
    edge_scalar,
    graph_stats,
    parse_relation,
    salient_subgraph,
    to_dot,
    validate,
)
from conftest import make_graph, random_graph


class TestValidate:
    def test_wellformed_two_node_graph_is_valid(self):
        assert validate(make_graph([("a", "b")])) == []

    def test_dangling_tail_reported(self):
        g = CausalGraph(
            id="g",
            nodes=(CausalNode("a", "a"),),
            edges=(CausalEdge("a", "x", Relation.ENABLES),),
        )
        report = validate(g)
        assert len(report) == 1
        assert "dangling tail x" in report[0]

    def test_incompatible_sub_relation(self):
        g = CausalGraph(
            id="g",
            nodes=(CausalNode("a", "a"), CausalNode("b", "b")),
            edges=(CausalEdge("a", "b", Relation.ENABLES, sub_relation=SubRelation.ENDS),),
        )
        assert any("incompatible sub-relation" in v for v in validate(g))

    def test_shared_sub_relations_compatible_with_both(self):
        for relation in Relation:
            for sub in (SubRelation.WITHOUT_EFFECT, SubRelation.UNKNOWN):
                g = CausalGraph(
                    id="g",
                    nodes=(CausalNode("a", "a"), CausalNode("b", "b")),
                    edges=(CausalEdge("a", "b", relation, sub_relation=sub),),
                )
                assert validate(g) == []

    def test_self_loop_and_duplicate_triple(self):
        g = CausalGraph(
            id="g",
            nodes=(CausalNode("a", "a"), CausalNode("b", "b")),
            edges=(
                CausalEdge("a", "a", Relation.ENABLES),
                CausalEdge("a", "b", Relation.ENABLES),
                CausalEdge("a", "b", Relation.ENABLES),
            ),
        )
        report = validate(g)
        assert any("self-loop" in v for v in report)
        assert any("duplicate triple" in v for v in report)

    def test_same_pair_different_relation_not_duplicate(self):
        g = make_graph([("a", "b"), ("a", "b")], relations=[Relation.ENABLES, Relation.BLOCKS])
        assert validate(g) == []

    def test_duplicate_node_id_and_empty_label(self):
        g = CausalGraph(
            id="g", nodes=(CausalNode("a", "a"), CausalNode("a", ""), CausalNode("", "x"))
        )
        report = validate(g)
        assert any("duplicate node id" in v for v in report)
        assert any("empty label" in v for v in report)
        assert any("empty id" in v for v in report)


class TestEdgeScalar:
    def test_enables_is_plus_one(self):
        assert edge_scalar(Relation.ENABLES) == 1.0

    def test_blocks_is_minus_one(self):
        assert edge_scalar(Relation.BLOCKS) == -1.0

    def test_unknown_relation_rejected_with_offender(self):
        with pytest.raises(ValueError, match="CAUSES"):
            edge_scalar("CAUSES")

    def test_string_relations_accepted_case_insensitively(self):
        assert edge_scalar("ENABLES") == 1.0
        assert edge_scalar("blocks") == -1.0

    def test_scalars_are_opposite(self):
        assert edge_scalar(Relation.ENABLES) == -edge_scalar(Relation.BLOCKS)


class TestParseRelation:
    def test_suffixed_sub_relation(self):
        assert parse_relation("ENABLES-BEGINS") == (Relation.ENABLES, SubRelation.BEGINS)
        assert parse_relation("BLOCKS-ENDS") == (Relation.BLOCKS, SubRelation.ENDS)

    def test_separator_variants(self):
        assert parse_relation("ENABLES-ALLOWS_LETS_ACTION") == (
            Relation.ENABLES,
            SubRelation.ALLOWS_LETS_ACTION,
        )
        assert parse_relation("blocks-prevents action") == (
            Relation.BLOCKS,
            SubRelation.PREVENTS_ACTION,
        )

    def test_unknown_sub_relation_rejected(self):
        with pytest.raises(ValueError, match="sub-relation"):
            parse_relation("ENABLES-EXPLODES")


class TestBfsLinearize:
    def test_star_fans_out_lexicographically(self):
        g = make_graph([("a", "d"), ("a", "b"), ("a", "c")])
        nodes, edges = bfs_linearize(g)
        assert [n.id for n in nodes] == ["a", "b", "c", "d"]
        assert [(e.head, e.tail) for e in edges] == [("a", "b"), ("a", "c"), ("a", "d")]

    def test_cycle_falls_back_to_smallest_id(self):
        g = make_graph([("a", "b"), ("b", "a")])
        nodes, _ = bfs_linearize(g)
        assert [n.id for n in nodes] == ["a", "b"]

    def test_two_components_visit_roots_in_order(self):
        # hand trace of the stated root policy: each in-degree-0 root runs to
        # completion before the next starts
        g = make_graph([("a", "b"), ("c", "d")])
        nodes, _ = bfs_linearize(g)
        assert [n.id for n in nodes] == ["a", "b", "c", "d"]

    def test_isolated_node_is_appended(self):
        g = make_graph([("b", "c")], node_ids=["z"])
        nodes, _ = bfs_linearize(g)
        assert [n.id for n in nodes] == ["b", "c", "z"]

    @given(st.integers(0, 200))
    def test_is_permutation_of_nodes(self, seed):
        g = random_graph(seed)
        nodes, edges = bfs_linearize(g)
        assert sorted(n.id for n in nodes) == sorted(n.id for n in g.nodes)
        assert len(nodes) == g.node_count
        assert len(edges) == g.edge_count

    @given(st.integers(0, 100), st.randoms(use_true_random=False))
    def test_invariant_under_storage_order(self, seed, rnd):
        g = random_graph(seed)
        nodes = list(g.nodes)
        edges = list(g.edges)
        rnd.shuffle(nodes)
        rnd.shuffle(edges)
        shuffled = CausalGraph(id=g.id, nodes=tuple(nodes), edges=tuple(edges))
        assert [n.id for n in bfs_linearize(g)[0]] == [n.id for n in bfs_linearize(shuffled)[0]]


class TestGraphStats:
    def test_directed_triangle(self):
        stats = graph_stats(make_graph([("a", "b"), ("b", "c"), ("c", "a")]))
        assert stats.mean_degree == 2.0
        assert stats.mean_clustering == 1.0
        assert stats.transitivity == 1.0

    def test_path_has_no_triangles(self):
        stats = graph_stats(make_graph([("a", "b"), ("b", "c")]))
        assert stats.mean_clustering == 0.0
        assert stats.transitivity == 0.0

    def test_relation_counts(self):
        g = make_graph(
            [("a", "b"), ("b", "c"), ("c", "a")],
            relations=[Relation.ENABLES, Relation.BLOCKS, Relation.ENABLES],
        )
        stats = graph_stats(g)
        assert (stats.enables_count, stats.blocks_count) == (2, 1)

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            graph_stats(CausalGraph(id="empty"))

    @given(st.integers(0, 200))
    def test_bounds_and_count_identity(self, seed):
        g = random_graph(seed)
        stats = graph_stats(g)
        assert stats.enables_count + stats.blocks_count == stats.edge_count
        assert 0.0 <= stats.transitivity <= 1.0
        assert 0.0 <= stats.mean_clustering <= 1.0


class TestSalientSubgraph:
    def _flagged(self, flags):
        pairs = [("a", "b"), ("b", "c"), ("c", "d")]
        nodes = tuple(CausalNode(i, i) for i in "abcd")
        edges = tuple(
            CausalEdge(h, t, Relation.ENABLES, salience=f) for (h, t), f in zip(pairs, flags)
        )
        return CausalGraph(id="g", nodes=nodes, edges=edges)

    def test_keeps_only_flagged_edges_and_endpoints(self):
        sub = salient_subgraph(self._flagged([True, False, True]))
        assert len(sub.edges) == 2
        assert sorted(n.id for n in sub.nodes) == ["a", "b", "c", "d"]

    def test_no_salient_edges_yields_empty_graph(self):
        sub = salient_subgraph(self._flagged([False, False, False]))
        assert sub.edges == () and sub.nodes == ()

    def test_all_salient_is_identity(self):
        g = self._flagged([True, True, True])
        sub = salient_subgraph(g)
        assert sub.nodes == g.nodes and sub.edges == g.edges

    def test_idempotent(self):
        g = self._flagged([True, False, False])
        once = salient_subgraph(g)
        twice = salient_subgraph(once)
        assert once.nodes == twice.nodes and once.edges == twice.edges


class TestSchemaGraph:
    def _schema(self):
        from causalkit.graph import SchemaGraph

        return SchemaGraph(
            id="s",
            nodes=(CausalNode("Attack", "Attack"), CausalNode("Custom_label", "Custom_label")),
            edges=(CausalEdge("Attack", "Custom_label", Relation.ENABLES),),
        )

    def test_participant_node_flagged(self):
        from causalkit.graph import SchemaGraph

        g = SchemaGraph(
            id="s", nodes=(CausalNode("Attack", "Attack", NodeKind.PARTICIPANT),)
        )
        assert any("not an Event" in v for v in validate(g))

    def test_unresolved_labels_are_free_form(self):
        from causalkit.ontology import EventTypeOntology

        ontology = EventTypeOntology(("attack", "conflict"))
        assert self._schema().unresolved_labels(ontology) == {"Custom_label"}


@given(st.integers(0, 300))
def test_valid_graph_supports_every_operation(seed):
    g = random_graph(seed)
    assert validate(g) == []
    nodes, edges = bfs_linearize(g)
    assert len(nodes) == g.node_count and len(edges) == g.edge_count
    graph_stats(g)
    salient_subgraph(g)
    assert to_dot(g).startswith("digraph")


class TestToDot:
    def test_empty_graph_minimal_skeleton(self):
        out = to_dot(CausalGraph(id="empty"))
        assert out == 'digraph "empty" {\n}\n'

    def test_participants_styled_distinctly(self):
        g = CausalGraph(
            id="fig",
            nodes=(
                CausalNode("rebels", "rebels", NodeKind.PARTICIPANT),
                CausalNode("leader", "leader", NodeKind.PARTICIPANT),
                CausalNode("ousting", "rebels oust leader"),
                CausalNode("conflict", "conflict ends"),
                CausalNode("unrest", "unrest"),
            ),
            edges=(
                CausalEdge("rebels", "ousting", Relation.ENABLES),
                CausalEdge("ousting", "leader", Relation.BLOCKS),
                CausalEdge("ousting", "conflict", Relation.BLOCKS),
            ),
        )
        out = to_dot(g)
        assert out.count("ellipse") == 2
        assert out.count("box") == 3
        assert out.count("style=dashed") == 2

    def test_deterministic_bytes(self):
        g = random_graph(5)
        assert to_dot(g) == to_dot(g)

    def test_storage_order_does_not_change_bytes(self):
        g = random_graph(9)
        shuffled = CausalGraph(id=g.id, nodes=tuple(reversed(g.nodes)), edges=tuple(reversed(g.edges)))
        assert to_dot(g) == to_dot(shuffled)

    def test_quotes_escaped(self):
        g = CausalGraph(id='say "hi"', nodes=(CausalNode("a", 'label "x"'),))
        out = to_dot(g)
        assert '\\"hi\\"' in out and '\\"x\\"' in out
