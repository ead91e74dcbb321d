"""Walk a sentence through the scoring pipeline, printing each stage.

Everything downstream (decoding, the CLI, the loss helpers) consumes the
ScoredInstance produced here, so this is the place to see what the
numbers mean: span candidates, filter survivors, entity and relation
logits, and the type-bias table.
"""

from __future__ import annotations

import numpy as np

from spanrel import (
    TypeInventory,
    default_k_span,
    enumerate_spans,
    forward,
    init_params,
)


def main() -> None:
    inventory = TypeInventory.from_names(
        ["Person", "Place"], ["visited", "born_in"]
    )
    params = init_params(inventory, dim=32, heads=4, max_span_width=3, seed=11)
    tokens = ("ada", "walked", "through", "old", "cairo")

    print(f"tokens: {tokens}")
    grid = enumerate_spans(len(tokens), params.max_span_width)
    print(f"candidate spans (width <= {params.max_span_width}): {len(grid)}")
    budget = default_k_span(len(tokens), params.max_span_width)
    print(f"default span budget for this length: {budget}")

    result = forward(tokens, params)
    inst = result.instance

    print("\nsurvivors after filtering")
    print(f"  spans kept: {result.span_filter.kept_indices}")
    for (i, j), row in zip(inst.spans, inst.entity_logits):
        text = " ".join(tokens[i : j + 1])
        best = inventory.entity_types[int(np.argmax(row))]
        print(f"  ({i},{j}) {text!r:24s} argmax={best:10s} logits={np.round(row, 2)}")

    print("\nordered span pairs scored for relations")
    for (h, t), row in zip(inst.pairs, inst.relation_logits):
        hs, ts = inst.spans[h], inst.spans[t]
        best = inventory.relation_types[int(np.argmax(row))]
        print(f"  {hs} -> {ts}  argmax={best:12s} logits={np.round(row, 2)}")

    table = inst.bias.combined()
    print(f"\ntype-bias table shape (head, tail, relation): {table.shape}")
    h, t, r = np.unravel_index(np.argmax(table), table.shape)
    print(
        "strongest bias: "
        f"({inventory.entity_types[h]}, {inventory.entity_types[t]}, "
        f"{inventory.relation_types[r]}) = {table[h, t, r]:.3f}"
    )


if __name__ == "__main__":
    main()
