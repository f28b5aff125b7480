"""Cluster the bundled corpus with every pipeline and compare the metrics.

Mirrors the clustering benchmark shape: tf-idf text vectors against FEATHER
and trained-GAT graph embeddings, scored with purity/ARI/V-measure and event
cluster purity on the topic labels.
"""

import argparse
from pathlib import Path

from causalkit.discover import kmeans, tfidf_fit_transform
from causalkit.embed import TrainConfig, feather_embed, gat_embed, hash_features, train_gnn
from causalkit.ingest import load_records, record_to_graph
from causalkit.metrics import LabeledAssignment
from causalkit.ontology import graph_type_leaves

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", default=str(ROOT / "data" / "fixtures" / "corpus_20.jsonl"))
    parser.add_argument("--k", type=int, default=6)
    parser.add_argument("--j", type=int, default=10)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--steps", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    records = load_records(args.input)
    graphs = [record_to_graph(r) for r in records]
    features = [hash_features(g, args.dim) for g in graphs]
    topics = {r.id: r.topic for r in records}
    types = {g.id: frozenset(graph_type_leaves(g)) for g in graphs}

    tables = {}
    vectors, vocabulary = tfidf_fit_transform([r.text for r in records])
    tables["tfidf"] = {
        r.id: v.to_dense(len(vocabulary)) for r, v in zip(records, vectors)
    }
    tables["feather"] = {g.id: feather_embed(g, f) for g, f in zip(graphs, features)}
    params, losses = train_gnn(
        list(zip(graphs, features)),
        TrainConfig(seed=args.seed),
        hidden=(32, 32),
        out_dim=32,
        steps=args.steps,
    )
    print(f"gat training: {len(losses)} steps, loss {losses[0]:.4f} -> {losses[-1]:.4f}")
    tables["gat"] = {g.id: gat_embed(params, g, f) for g, f in zip(graphs, features)}

    header = f"{'pipeline':<10} {'purity':>8} {'ari':>8} {'v':>8} {'event':>8}"
    print(header)
    print("-" * len(header))
    for name, table in tables.items():
        result = kmeans(table, k=args.k, seed=args.seed)
        labeled = LabeledAssignment(
            clusters={i: result.assignment[i] for i in table if topics[i]},
            labels={i: topics[i] for i in table if topics[i]},
            event_types={i: types[i] for i in table if topics[i]},
        )
        metrics = labeled.evaluate(args.j)
        print(
            f"{name:<10} {metrics['purity']:>8.3f} {metrics['ari']:>8.3f} "
            f"{metrics['v_measure']:>8.3f} {metrics['event_cluster_purity']:>8.3f}"
        )


if __name__ == "__main__":
    main()
