"""Recount the bundled fixture statistics straight off the wire format.

Independent of the causalkit package on purpose: this is the oracle the
corpus-statistics acceptance criterion freezes its expected values from.
"""

import argparse
import json
from collections import defaultdict
from pathlib import Path


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--input",
        default=str(Path(__file__).resolve().parent.parent / "data" / "fixtures" / "corpus_20.jsonl"),
    )
    args = parser.parse_args()

    sums = defaultdict(lambda: [0, 0, 0, 0, 0])  # count, nodes, edges, enables, blocks
    for line in Path(args.input).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        strings = set()
        enables = blocks = 0
        for triple in obj["causal_graph"]:
            strings.add(triple["head"])
            strings.add(triple["tail"])
            if triple["rel"].upper().startswith("ENABLES"):
                enables += 1
            else:
                blocks += 1
        for group in ("all", obj.get("source", "")):
            if not group:
                continue
            s = sums[group]
            s[0] += 1
            s[1] += len(strings)
            s[2] += len(obj["causal_graph"])
            s[3] += enables
            s[4] += blocks

    for group in sorted(sums, key=lambda g: (g != "all", g)):
        count, nodes, edges, enables, blocks = sums[group]
        print(
            f"{group}: count={count} nodes={nodes} edges={edges} enables={enables} blocks={blocks}"
        )
        print(
            f"{group}: mean_nodes={nodes / count!r} mean_edges={edges / count!r} "
            f"mean_enables={enables / count!r} mean_blocks={blocks / count!r}"
        )


if __name__ == "__main__":
    main()
