"""Training objectives: gold alignment, the two losses, and a gradient check.

Aligns a small gold annotation onto the candidate grids, prints the
filter ranking loss and the two classification losses, and confirms the
classification gradient against central finite differences, the same
check the test suite runs at scale.
"""

from __future__ import annotations

import numpy as np

from spanrel import (
    GoldAnnotation,
    TypeInventory,
    align_gold,
    classification_loss,
    finite_difference_gradient,
    forward,
    init_params,
    loss_from_forward,
    ranking_loss,
    softmax,
)


def main() -> None:
    inventory = TypeInventory.from_names(["Person", "Org"], ["works_for"])
    params = init_params(inventory, dim=32, heads=4, max_span_width=3, seed=5)
    tokens = ("imre", "runs", "the", "mill")
    gold = GoldAnnotation(
        entities=((0, 0, "Person"), (2, 3, "Org")),
        relations=(((0, 0), (2, 3), "works_for"),),
    )

    result = forward(tokens, params)
    inst = result.instance
    aligned = align_gold(inst.spans, inst.pairs, gold, inventory, inst.length)
    print("gold labels on the surviving candidates")
    print(f"  spans {inst.spans}")
    print(f"  entity labels    {aligned.entity_labels}")
    print(f"  relation labels  {aligned.relation_labels}")

    breakdown = loss_from_forward(result, gold)
    print("\nloss terms")
    for name in (
        "ranking_entity",
        "ranking_relation",
        "classification_entity",
        "classification_relation",
    ):
        print(f"  {name:24s} {getattr(breakdown, name):8.4f}")
    print(f"  {'total':24s} {breakdown.total:8.4f}")

    # a perfect filter scores every kept candidate above the rest by the
    # margin, at which point the ranking loss is exactly zero
    scores = np.array([5.0, 5.0, -1.0, -2.0])
    keep = np.array([True, True, False, False])
    print(f"\nseparated ranking loss: {ranking_loss(scores, keep, alpha=1.0)}")
    print(f"violating ranking loss: {ranking_loss(scores[::-1], keep, alpha=1.0):.3f}")

    rng = np.random.default_rng(9)
    logits = rng.normal(0.0, 2.0, 5)
    label = 2
    fd = finite_difference_gradient(
        lambda th: classification_loss(th.reshape(1, 5), np.array([label])), logits
    )
    analytic = softmax(logits)
    analytic[label] -= 1.0
    print("\nclassification gradient, one 5-class row")
    print(f"  finite difference {np.round(fd, 6)}")
    print(f"  softmax - onehot  {np.round(analytic, 6)}")
    print(f"  max abs gap       {np.max(np.abs(fd - analytic)):.2e}")


if __name__ == "__main__":
    main()
