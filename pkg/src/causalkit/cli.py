"""Command-line pipeline: ingest, stats, embed, train, cluster, match, evaluate, export.

Every run writes its primary artifacts plus a ``manifest.json`` (config echo,
input digests, versions). Primary artifacts are byte-identical across reruns
with the same config, seed, and inputs; only the manifest carries a timestamp.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import platform
import re
import sys
from pathlib import Path

import numpy as np

import causalkit
from causalkit.discover import RankedMatches, kmeans, match_corpus, tfidf_fit_transform
from causalkit.embed import (
    GnnParams,
    TrainConfig,
    feather_embed,
    features_from_embeddings,
    gat_embed,
    hash_features,
    load_external_embeddings,
    save_embeddings,
    structural_features,
    train_gnn,
)
from causalkit.graph import SchemaGraph, graph_stats, salient_subgraph, to_dot, validate
from causalkit.ingest import (
    DEFAULT_LIGHT_VERBS,
    PromptConfig,
    build_prompt_dense,
    build_prompt_temporal,
    load_records,
    load_schema_library,
    record_to_graph,
)
from causalkit.metrics import (
    LabeledAssignment,
    RelevanceJudgment,
    evaluate_matches,
)
from causalkit.ontology import graph_type_leaves


def _safe_name(identifier: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", identifier) or "unnamed"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def _write_manifest(args: argparse.Namespace, inputs: list[Path]) -> None:
    out = Path(args.out)
    config = {
        key: value
        for key, value in sorted(vars(args).items())
        if key != "func" and isinstance(value, (str, int, float, bool, type(None), tuple, list))
    }
    manifest = {
        "command": args.command,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in config.items()},
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if p and Path(p).exists()},
        "versions": {
            "causalkit": causalkit.__version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_report(path: Path, entries: dict) -> None:
    lines = []
    for key, value in entries.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_graphs(path: str, require_valid: bool = True):
    records = load_records(path)
    graphs = []
    for record in records:
        graph = record_to_graph(record)
        if require_valid:
            violations = validate(graph)
            if violations:
                raise ValueError(f"record {record.id}: {violations[0]}")
        graphs.append(graph)
    return records, graphs


def _graph_features(args: argparse.Namespace, graphs):
    """Per-graph node feature dicts for the configured embedder."""
    if args.embedder == "hash":
        return [hash_features(g, args.dim) for g in graphs]
    if args.embedder == "structural":
        return [structural_features(g, args.dim) for g in graphs]
    if args.embedder == "external":
        if not args.embeddings:
            raise ValueError("--embedder external requires --embeddings")
        table = load_external_embeddings(args.embeddings)
        return [features_from_embeddings(g, table) for g in graphs]
    raise ValueError(f"unknown embedder: {args.embedder!r}")


def _feather_scales(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _feather_table(args: argparse.Namespace, graphs, features_list) -> dict[str, np.ndarray]:
    theta = np.linspace(args.theta_max / args.theta_points, args.theta_max, args.theta_points)
    return {
        graph.id: feather_embed(graph, features, scales=args.scales, theta=theta)
        for graph, features in zip(graphs, features_list)
    }


def _gnn_table(params: GnnParams, graphs, features_list) -> dict[str, np.ndarray]:
    return {
        graph.id: gat_embed(params, graph, features)
        for graph, features in zip(graphs, features_list)
    }


def _tfidf_table(records) -> dict[str, np.ndarray]:
    vectors, vocabulary = tfidf_fit_transform([r.text for r in records])
    return {
        record.id: vector.to_dense(len(vocabulary))
        for record, vector in zip(records, vectors)
    }


# --- subcommands -----------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> None:
    records, graphs = _load_graphs(args.input, require_valid=False)
    lines = []
    ok = 0
    for record, graph in zip(records, graphs):
        violations = validate(graph)
        if violations:
            lines.extend(f"record {record.id}: {v}" for v in violations)
        else:
            ok += 1
            lines.append(f"record {record.id}: ok")
    lines.append(f"summary: {ok}/{len(records)} valid")
    (Path(args.out) / "validation.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(lines[-1])
    _write_manifest(args, [Path(args.input)])


def cmd_stats(args: argparse.Namespace) -> None:
    records, graphs = _load_graphs(args.input, require_valid=False)
    groups: dict[str, list] = {"all": graphs}
    for record, graph in zip(records, graphs):
        if record.source:
            groups.setdefault(record.source, []).append(graph)

    entries: dict[str, object] = {}
    for name in sorted(groups, key=lambda g: (g != "all", g)):
        members = groups[name]
        per_graph = [graph_stats(g) for g in members if g.node_count > 0]
        count = len(members)
        entries[f"{name}.count"] = count
        entries[f"{name}.mean_nodes"] = sum(g.node_count for g in members) / count
        entries[f"{name}.mean_edges"] = sum(g.edge_count for g in members) / count
        entries[f"{name}.mean_enables"] = sum(s.enables_count for s in per_graph) / count
        entries[f"{name}.mean_blocks"] = sum(s.blocks_count for s in per_graph) / count
        if per_graph:
            entries[f"{name}.mean_degree"] = sum(s.mean_degree for s in per_graph) / len(per_graph)
            entries[f"{name}.mean_clustering"] = sum(s.mean_clustering for s in per_graph) / len(per_graph)
            entries[f"{name}.mean_transitivity"] = sum(s.transitivity for s in per_graph) / len(per_graph)
    _write_report(Path(args.out) / "stats.txt", entries)
    print(f"stats over {len(records)} records -> {Path(args.out) / 'stats.txt'}")
    _write_manifest(args, [Path(args.input)])


def _select_records(records, wanted_id: str | None):
    if wanted_id is None:
        return records
    selected = [r for r in records if r.id == wanted_id]
    if not selected:
        raise ValueError(f"no record with id {wanted_id!r}")
    return selected


def cmd_prompt_temporal(args: argparse.Namespace) -> None:
    records = _select_records(load_records(args.input), args.id)
    stoplist = frozenset(args.stoplist.split(",")) if args.stoplist else DEFAULT_LIGHT_VERBS
    config = PromptConfig(
        qa_count_range=(args.qa_low, args.qa_high), light_verb_stoplist=stoplist, seed=args.seed
    )
    for record in records:
        prompt = build_prompt_temporal(record, config)
        path = Path(args.out) / f"prompt_temporal_{_safe_name(record.id)}.txt"
        path.write_text(prompt, encoding="utf-8")
    print(f"wrote {len(records)} temporal prompt(s)")
    _write_manifest(args, [Path(args.input)])


def cmd_prompt_dense(args: argparse.Namespace) -> None:
    records = _select_records(load_records(args.input), args.id)
    for record in records:
        prompt = build_prompt_dense(record)
        path = Path(args.out) / f"prompt_dense_{_safe_name(record.id)}.txt"
        path.write_text(prompt, encoding="utf-8")
    print(f"wrote {len(records)} dense prompt(s)")
    _write_manifest(args, [Path(args.input)])


def cmd_embed_feather(args: argparse.Namespace) -> None:
    _, graphs = _load_graphs(args.input)
    features_list = _graph_features(args, graphs)
    table = _feather_table(args, graphs, features_list)
    save_embeddings(table, Path(args.out) / "feather.emb")
    print(f"embedded {len(table)} graphs (dim {next(iter(table.values())).shape[0]})")
    _write_manifest(args, [Path(args.input), Path(args.embeddings) if args.embeddings else None])


def cmd_train_gnn(args: argparse.Namespace) -> None:
    _, graphs = _load_graphs(args.input)
    features_list = _graph_features(args, graphs)
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        dropout=args.dropout,
        mask_rate=args.mask_rate,
        masked_variants_sampled=args.mask_sampled,
        masked_variants_used=args.mask_used,
        masking_mode=args.masking_mode,
        seed=args.seed,
    )
    params, losses = train_gnn(
        list(zip(graphs, features_list)),
        config,
        hidden=(args.hidden1, args.hidden2),
        out_dim=args.embed_dim,
        steps=args.steps,
    )
    params.save(Path(args.out) / "gnn_params.txt")
    (Path(args.out) / "loss_trace.txt").write_text(
        "".join(f"{repr(float(l))}\n" for l in losses), encoding="utf-8"
    )
    print(f"trained {len(losses)} steps; first loss {losses[0]:.4f}, last {losses[-1]:.4f}")
    _write_manifest(args, [Path(args.input), Path(args.embeddings) if args.embeddings else None])


def cmd_embed_gnn(args: argparse.Namespace) -> None:
    _, graphs = _load_graphs(args.input)
    features_list = _graph_features(args, graphs)
    params = GnnParams.load(args.params)
    table = _gnn_table(params, graphs, features_list)
    save_embeddings(table, Path(args.out) / "gnn.emb")
    print(f"embedded {len(table)} graphs (dim {params.out_dim})")
    _write_manifest(
        args,
        [Path(args.input), Path(args.params), Path(args.embeddings) if args.embeddings else None],
    )


def cmd_tfidf(args: argparse.Namespace) -> None:
    records = load_records(args.input)
    vectors, vocabulary = tfidf_fit_transform([r.text for r in records])
    table = {r.id: v.to_dense(len(vocabulary)) for r, v in zip(records, vectors)}
    save_embeddings(table, Path(args.out) / "tfidf.emb")
    (Path(args.out) / "tfidf_vocab.txt").write_text(
        "".join(f"{tok}\n" for tok in vocabulary), encoding="utf-8"
    )
    print(f"vectorized {len(records)} texts over {len(vocabulary)} terms")
    _write_manifest(args, [Path(args.input)])


def _cluster_embeddings(args: argparse.Namespace):
    """(table, records, graphs) per the cluster/match input flags."""
    if args.embeddings and not args.pipeline:
        return load_external_embeddings(args.embeddings), None, None
    if not args.input:
        raise ValueError("clustering needs --embeddings or --pipeline with --input")
    records, graphs = _load_graphs(args.input)
    if args.pipeline == "tfidf":
        return _tfidf_table(records), records, graphs
    features_list = _graph_features(args, graphs)
    if args.pipeline == "feather":
        return _feather_table(args, graphs, features_list), records, graphs
    if args.pipeline == "gnn":
        if not args.params:
            raise ValueError("--pipeline gnn requires --params")
        return _gnn_table(GnnParams.load(args.params), graphs, features_list), records, graphs
    raise ValueError(f"unknown pipeline: {args.pipeline!r}")


def cmd_cluster(args: argparse.Namespace) -> None:
    table, records, graphs = _cluster_embeddings(args)
    assignment = kmeans(table, k=args.k, seed=args.seed)
    evaluated = (
        assignment.evaluated_subset(table, args.eval_n) if args.eval_n > 0 else frozenset(table)
    )
    lines = [
        json.dumps(
            {"id": item, "cluster": assignment.assignment[item], "evaluated": item in evaluated},
            sort_keys=True,
        )
        for item in sorted(table)
    ]
    (Path(args.out) / "clusters.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    report: dict[str, object] = {
        "k": args.k,
        "n": len(table),
        "evaluated_n": len(evaluated),
        "inertia": assignment.inertia,
        "iterations": len(assignment.inertia_trace),
    }
    if records is not None:
        labeled = _labeled_assignment(assignment.assignment, records, graphs, evaluated)
        if labeled is not None:
            report.update(labeled.evaluate(args.j))
    _write_report(Path(args.out) / "cluster_report.txt", report)
    print(f"clustered {len(table)} items into k={args.k}, inertia {assignment.inertia:.4f}")
    _write_manifest(
        args,
        [Path(p) for p in (args.input, args.embeddings, args.params) if p],
    )


def _labeled_assignment(assignment, records, graphs, keep_ids) -> LabeledAssignment | None:
    topics = {r.id: r.topic for r in records}
    types = {g.id: graph_type_leaves(g) for g in graphs}
    ids = [i for i in assignment if i in keep_ids and topics.get(i)]
    if len(ids) < 2:
        return None
    return LabeledAssignment(
        clusters={i: assignment[i] for i in ids},
        labels={i: topics[i] for i in ids},
        event_types={i: frozenset(types.get(i, frozenset())) for i in ids},
    )


def cmd_eval_cluster(args: argparse.Namespace) -> None:
    rows = [
        json.loads(line)
        for line in Path(args.assignments).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    assignment = {row["id"]: int(row["cluster"]) for row in rows}
    if args.use_all:
        keep = frozenset(assignment)
    else:
        keep = frozenset(row["id"] for row in rows if row.get("evaluated", True))
    records, graphs = _load_graphs(args.input, require_valid=False)
    labeled = _labeled_assignment(assignment, records, graphs, keep)
    if labeled is None:
        raise ValueError("fewer than two labeled items to evaluate")
    _write_report(Path(args.out) / "cluster_metrics.txt", labeled.evaluate(args.j))
    print(f"evaluated {len(labeled.clusters)} items")
    _write_manifest(args, [Path(args.assignments), Path(args.input)])


def cmd_match(args: argparse.Namespace) -> None:
    queries = load_external_embeddings(args.queries)
    library = load_external_embeddings(args.library)
    matches = match_corpus(queries, library, top_k=args.top_k)
    lines = [
        json.dumps(
            {
                "query_id": m.query_id,
                "matches": [[library_id, score] for library_id, score in m.matches],
            },
            sort_keys=True,
        )
        for m in matches.values()
    ]
    (Path(args.out) / "matches.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"matched {len(queries)} queries against {len(library)} library entries")
    _write_manifest(args, [Path(args.queries), Path(args.library)])


def cmd_eval_match(args: argparse.Namespace) -> None:
    matches = {}
    for line in Path(args.matches).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        matches[row["query_id"]] = RankedMatches(
            query_id=row["query_id"],
            matches=tuple((str(i), float(s)) for i, s in row["matches"]),
        )
    query_records, query_graphs = _load_graphs(args.query_corpus, require_valid=False)
    library = load_schema_library(args.library_corpus)

    if args.relevance == "topic":
        judgment = RelevanceJudgment.from_topic_labels(
            {r.id: r.topic for r in query_records},
            {e.schema_id: e.topic for e in library.entries},
        )
    else:
        library_types = {}
        for entry in library.entries:
            types = set(graph_type_leaves(entry.graph))
            if isinstance(entry.graph, SchemaGraph):
                types |= entry.graph.label_type_names()
            library_types[entry.schema_id] = frozenset(types)
        judgment = RelevanceJudgment.from_type_overlap(
            {g.id: graph_type_leaves(g) for g in query_graphs},
            library_types,
            min_overlap=args.min_overlap,
        )
    results = evaluate_matches(matches, judgment)
    _write_report(
        Path(args.out) / "match_metrics.txt",
        {k: results[k] for k in ("map", "mrr", "evaluated_queries")},
    )
    per_query = results["per_query_ap"]
    ranks = results["per_query_rank"]
    lines = [
        json.dumps(
            {"query_id": q, "ap": per_query[q], "first_relevant_rank": ranks[q]}, sort_keys=True
        )
        for q in sorted(per_query)
    ]
    (Path(args.out) / "match_per_query.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"MAP {results['map']:.4f}, MRR {results['mrr']:.4f}")
    _write_manifest(args, [Path(args.matches), Path(args.query_corpus), Path(args.library_corpus)])


def cmd_export_dot(args: argparse.Namespace) -> None:
    records, graphs = _load_graphs(args.input)
    if args.id is not None:
        graphs = [g for g in graphs if g.id == args.id]
        if not graphs:
            raise ValueError(f"no record with id {args.id!r}")
    for graph in graphs:
        if args.salient_only:
            graph = salient_subgraph(graph)
        path = Path(args.out) / f"{_safe_name(graph.id)}.dot"
        path.write_text(to_dot(graph), encoding="utf-8")
    print(f"wrote {len(graphs)} DOT file(s)")
    _write_manifest(args, [Path(args.input)])


# --- parser ------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--config", default=None, help="flat key = value config file")
    parser.add_argument("--out", default="out", help="output directory")


def _add_embedder(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--embedder", choices=("hash", "structural", "external"), default="hash"
    )
    parser.add_argument("--dim", type=int, default=256, help="node feature dimension")
    parser.add_argument("--embeddings", default=None, help="external node embedding file")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="causalkit", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = subparsers.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=func, command=name)
        registry[name] = p
        return p

    p = sub("validate", cmd_validate, "validate every record's causal graph")
    p.add_argument("--input", required=True)

    p = sub("stats", cmd_stats, "corpus graph statistics, grouped by source")
    p.add_argument("--input", required=True)

    p = sub("prompt-temporal", cmd_prompt_temporal, "build text + QA prompts")
    p.add_argument("--input", required=True)
    p.add_argument("--id", default=None, help="single record id (default: all)")
    p.add_argument("--qa-low", type=int, default=2)
    p.add_argument("--qa-high", type=int, default=3)
    p.add_argument("--stoplist", default=None, help="comma-separated light verbs")

    p = sub("prompt-dense", cmd_prompt_dense, "build event-type-annotated prompts")
    p.add_argument("--input", required=True)
    p.add_argument("--id", default=None)

    p = sub("embed-feather", cmd_embed_feather, "random-walk characteristic embeddings")
    p.add_argument("--input", required=True)
    _add_embedder(p)
    p.add_argument("--scales", type=_feather_scales, default=(1, 2))
    p.add_argument("--theta-points", type=int, default=8)
    p.add_argument("--theta-max", type=float, default=5.0)

    p = sub("train-gnn", cmd_train_gnn, "self-supervised attention encoder training")
    p.add_argument("--input", required=True)
    _add_embedder(p)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--steps", type=int, default=None, help="override epoch-derived step count")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--mask-rate", type=float, default=0.15)
    p.add_argument("--mask-sampled", type=int, default=10)
    p.add_argument("--mask-used", type=int, default=5)
    p.add_argument("--masking-mode", choices=("uniform", "pagerank"), default="uniform")
    p.add_argument("--hidden1", type=int, default=128)
    p.add_argument("--hidden2", type=int, default=128)
    p.add_argument("--embed-dim", type=int, default=128)

    p = sub("embed-gnn", cmd_embed_gnn, "embed graphs with trained parameters")
    p.add_argument("--input", required=True)
    p.add_argument("--params", required=True)
    _add_embedder(p)

    p = sub("tfidf", cmd_tfidf, "TF-IDF text vectors in the interchange format")
    p.add_argument("--input", required=True)

    p = sub("cluster", cmd_cluster, "K-means over embeddings or a pipeline")
    p.add_argument("--input", default=None)
    p.add_argument("--pipeline", choices=("feather", "gnn", "tfidf"), default=None)
    p.add_argument("--params", default=None, help="trained parameters for --pipeline gnn")
    _add_embedder(p)
    p.add_argument("--scales", type=_feather_scales, default=(1, 2))
    p.add_argument("--theta-points", type=int, default=8)
    p.add_argument("--theta-max", type=float, default=5.0)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--eval-n", type=int, default=25, help="evaluated items per cluster (0 = all)")
    p.add_argument("--j", type=int, default=10, help="top-j event types for event purity")

    p = sub("eval-cluster", cmd_eval_cluster, "clustering metrics for an assignment file")
    p.add_argument("--assignments", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--j", type=int, default=10)
    p.add_argument("--use-all", action="store_true", help="ignore evaluated-subset flags")

    p = sub("match", cmd_match, "rank library embeddings against query embeddings")
    p.add_argument("--queries", required=True)
    p.add_argument("--library", required=True)
    p.add_argument("--top-k", type=int, default=5)

    p = sub("eval-match", cmd_eval_match, "MAP/MRR for a match run")
    p.add_argument("--matches", required=True)
    p.add_argument("--query-corpus", required=True)
    p.add_argument("--library-corpus", required=True)
    p.add_argument("--relevance", choices=("topic", "event-overlap"), default="topic")
    p.add_argument("--min-overlap", type=int, default=1)

    p = sub("export-dot", cmd_export_dot, "DOT visualization export")
    p.add_argument("--input", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--salient-only", action="store_true")

    return parser, registry


def _read_config_file(path: str) -> dict[str, str]:
    entries = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _apply_config(subparser: argparse.ArgumentParser, entries: dict[str, str]) -> None:
    actions = {action.dest: action for action in subparser._actions}
    defaults = {}
    for key, value in entries.items():
        action = actions.get(key)
        if action is None:
            raise ValueError(f"unknown config key: {key}")
        if action.type is not None:
            defaults[key] = action.type(value)
        elif isinstance(action.const, bool):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)


def dispatch(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()

    command = argv[0] if argv else ""
    try:
        if "--config" in argv and command in registry:
            config_path = argv[argv.index("--config") + 1]
            _apply_config(registry[command], _read_config_file(config_path))
        args = parser.parse_args(argv)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error[{command or '?'}]: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
