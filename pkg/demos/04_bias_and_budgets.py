"""Type-bias tables as soft preferences and as hard vetoes.

The relation score between two typed spans is its logit plus a bias
looked up by (head type, tail type, relation).  Learned bias nudges;
a sentinel-valued bias forbids.  The same instance is decoded with no
bias, a nudging bias, and a veto bias, then once more with a node
budget small enough to trip the search guard.
"""

from __future__ import annotations

import numpy as np

from spanrel import (
    BiasTable,
    BudgetExceededError,
    ConstraintSet,
    NEG_SENTINEL,
    ScoredInstance,
    TypeInventory,
    joint_decode,
)


def instance(inventory: TypeInventory, bias: BiasTable | None) -> ScoredInstance:
    return ScoredInstance(
        length=5,
        spans=((0, 0), (2, 3)),
        entity_logits=np.array([[0.0, 4.0, 0.0], [0.0, 0.0, 4.0]]),
        pairs=((0, 1),),
        # "advises" barely beats "audits" on the raw logit
        relation_logits=np.array([[0.0, 2.1, 2.0]]),
        inventory=inventory,
        bias=bias,
    )


def report(tag: str, st, inventory: TypeInventory) -> None:
    rel = inventory.relation_types[st.relation_labels[0]]
    print(f"{tag:10s} -> relation {rel!r}, total {st.score:.2f}")


def main() -> None:
    inventory = TypeInventory.from_names(["Firm", "Auditor"], ["advises", "audits"])
    cons = ConstraintSet(inventory)
    e = inventory.num_entity_types
    r = inventory.num_relation_types

    def table(joint: np.ndarray) -> BiasTable:
        return BiasTable(
            joint=joint,
            head_relation=np.zeros((e, r)),
            tail_relation=np.zeros((e, r)),
            head_tail=np.zeros((e, e)),
        )

    st = joint_decode(instance(inventory, None), cons, use_bias=False)
    report("no bias", st, inventory)

    # a mild learned preference for (Firm, Auditor) -> audits flips the argmax
    nudge = np.zeros((e, e, r))
    nudge[1, 2, 2] = 0.5
    st = joint_decode(instance(inventory, table(nudge)), cons, use_bias=True)
    report("nudge", st, inventory)

    # the sentinel makes "audits" unpickable for that typing, a manual veto
    veto = np.zeros((e, e, r))
    veto[1, 2, 2] = NEG_SENTINEL
    st = joint_decode(instance(inventory, table(veto)), cons, use_bias=True)
    report("veto", st, inventory)

    # the exact search counts nodes; a hostile budget raises instead of
    # silently returning something weaker
    try:
        joint_decode(instance(inventory, None), cons, use_bias=False, budget=1)
    except BudgetExceededError as exc:
        print(f"budget=1  -> {exc}")


if __name__ == "__main__":
    main()
