"""Portable JSON formats: sentences, params, scores, structures, gold.

Every document kind has a published schema under spanrel/schemas/; loaders
validate before constructing objects and raise FormatError with the
offending location.  Writers emit canonical JSON (sorted keys, two-space
indent, trailing newline) so identical data is byte-identical on disk.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from importlib import resources

import jsonschema
import numpy as np

from .decode import (
    ConstraintSet,
    DecodedStructure,
    ScoredInstance,
    constraints_from_doc,
)
from .objectives import GoldAnnotation
from .params import bias_from_json, bias_to_json
from .pipeline import ForwardResult
from .representation import TypeInventory

SCHEMA_NAMES = ("sentences", "params", "score", "structure", "constraints", "gold")


class FormatError(ValueError):
    """A document failed schema or referential validation."""


_schemas: dict[str, dict] = {}


def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise ValueError(f"no schema named {name!r}")
    if name not in _schemas:
        text = (
            resources.files("spanrel")
            .joinpath("schemas", f"{name}.schema.json")
            .read_text()
        )
        _schemas[name] = json.loads(text)
    return _schemas[name]


def validate_document(doc: object, schema_name: str) -> None:
    """Schema-check a parsed document; FormatError names the bad path."""
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise FormatError(f"invalid {schema_name} document at {where}: {err.message}")


def read_json(path: str) -> object:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc


def dump_canonical(doc: object) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path: str, doc: object) -> None:
    with open(path, "w") as fh:
        fh.write(dump_canonical(doc))


# ---------------------------------------------------------------------------
# sentences


def load_sentences(path: str) -> list[tuple[str, ...]]:
    doc = read_json(path)
    validate_document(doc, "sentences")
    return [tuple(entry["tokens"]) for entry in doc["sentences"]]


# ---------------------------------------------------------------------------
# scores


def _score_entry(result: ForwardResult) -> dict:
    inst = result.instance
    entry = {
        "length": inst.length,
        "spans": [list(s) for s in inst.spans],
        "entity_logits": inst.entity_logits.tolist(),
        "pairs": [list(p) for p in inst.pairs],
        "relation_logits": inst.relation_logits.tolist(),
        "span_kept": list(result.span_filter.kept_indices),
        "span_ranking_scores": result.span_filter.ranking_scores.tolist(),
        "pair_kept": list(result.pair_filter.kept_indices),
        "pair_ranking_scores": result.pair_filter.ranking_scores.tolist(),
    }
    if inst.tokens is not None:
        entry["tokens"] = list(inst.tokens)
    return entry


def score_document(results: Sequence[ForwardResult], seed: int) -> dict:
    """Pack forward results (all from the same params) into one document."""
    if not results:
        raise ValueError("need at least one scored sentence")
    inv = results[0].instance.inventory
    bias = results[0].instance.bias
    return {
        "version": 1,
        "seed": seed,
        "entity_types": list(inv.entity_types),
        "relation_types": list(inv.relation_types),
        "bias": bias_to_json(bias) if bias is not None else None,
        "sentences": [_score_entry(r) for r in results],
    }


def instances_from_score_doc(doc: dict) -> list[ScoredInstance]:
    """Rebuild decoder inputs from a validated score document."""
    inventory = TypeInventory(
        tuple(doc["entity_types"]), tuple(doc["relation_types"])
    )
    bias = bias_from_json(doc["bias"]) if doc.get("bias") is not None else None
    out = []
    for pos, entry in enumerate(doc["sentences"]):
        try:
            out.append(
                ScoredInstance(
                    length=entry["length"],
                    spans=tuple((s[0], s[1]) for s in entry["spans"]),
                    entity_logits=np.asarray(entry["entity_logits"], dtype=np.float64),
                    pairs=tuple((p[0], p[1]) for p in entry["pairs"]),
                    relation_logits=np.asarray(
                        entry["relation_logits"], dtype=np.float64
                    ),
                    inventory=inventory,
                    bias=bias,
                    tokens=tuple(entry["tokens"]) if "tokens" in entry else None,
                )
            )
        except ValueError as exc:
            raise FormatError(f"score sentence {pos}: {exc}") from exc
    return out


def load_score_file(path: str) -> tuple[dict, list[ScoredInstance]]:
    doc = read_json(path)
    validate_document(doc, "score")
    return doc, instances_from_score_doc(doc)


# ---------------------------------------------------------------------------
# structures


def structure_document(
    instances: Sequence[ScoredInstance],
    structures: Sequence[DecodedStructure],
    algorithm: str,
    use_bias: bool,
    constraints: str | None = None,
) -> dict:
    if len(instances) != len(structures):
        raise ValueError("one structure per instance required")
    sentences = []
    for inst, st in zip(instances, structures):
        inv = inst.inventory
        sentences.append(
            {
                "objective": st.score,
                "entities": [
                    {
                        "start": s,
                        "end": e,
                        "type": inv.entity_types[c],
                        "score": v,
                    }
                    for s, e, c, v in st.entity_items(inst)
                ],
                "relations": [
                    {
                        "head": h,
                        "tail": t,
                        "type": inv.relation_types[c],
                        "score": v,
                    }
                    for h, t, c, v in st.relation_items(inst, use_bias)
                ],
                "entity_labels": list(st.entity_labels),
                "relation_labels": list(st.relation_labels),
            }
        )
    return {
        "version": 1,
        "algorithm": algorithm.replace("_", "-"),
        "use_bias": use_bias,
        "constraints": constraints,
        "sentences": sentences,
    }


def structures_from_doc(
    doc: dict, instances: Sequence[ScoredInstance]
) -> list[DecodedStructure]:
    """Rebuild label vectors from a structure document for verification."""
    entries = doc["sentences"]
    if len(entries) != len(instances):
        raise FormatError(
            f"structure file has {len(entries)} sentences, "
            f"score file has {len(instances)}"
        )
    out = []
    for pos, (entry, inst) in enumerate(zip(entries, instances)):
        ents = tuple(entry["entity_labels"])
        rels = tuple(entry["relation_labels"])
        n_ent = inst.inventory.num_entity_types
        n_rel = inst.inventory.num_relation_types
        if len(ents) != len(inst.spans) or len(rels) != len(inst.pairs):
            raise FormatError(f"structure sentence {pos}: label count mismatch")
        if any(not 0 <= e < n_ent for e in ents) or any(
            not 0 <= r < n_rel for r in rels
        ):
            raise FormatError(f"structure sentence {pos}: label out of range")
        out.append(DecodedStructure(ents, rels, float(entry["objective"])))
    return out


def load_structure_file(path: str) -> dict:
    doc = read_json(path)
    validate_document(doc, "structure")
    return doc


# ---------------------------------------------------------------------------
# constraints

BUNDLED_CONSTRAINTS = ("conll04", "ace05")


def load_constraint_set(name_or_path: str) -> ConstraintSet:
    """Resolve a bundled fixture name (conll04, ace05) or a file path."""
    if name_or_path in BUNDLED_CONSTRAINTS:
        text = (
            resources.files("spanrel")
            .joinpath("data", f"{name_or_path}_constraints.json")
            .read_text()
        )
        doc = json.loads(text)
        origin = f"bundled:{name_or_path}"
    else:
        doc = read_json(name_or_path)
        origin = name_or_path
    validate_document(doc, "constraints")
    try:
        return constraints_from_doc(doc, origin=origin)
    except (KeyError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


# ---------------------------------------------------------------------------
# gold


def load_gold(path: str) -> list[GoldAnnotation]:
    doc = read_json(path)
    validate_document(doc, "gold")
    out = []
    for pos, entry in enumerate(doc["sentences"]):
        try:
            out.append(
                GoldAnnotation(
                    entities=tuple(
                        (s, e, t) for s, e, t in entry.get("entities", [])
                    ),
                    relations=tuple(
                        ((h[0], h[1]), (t[0], t[1]), name)
                        for h, t, name in entry.get("relations", [])
                    ),
                )
            )
        except ValueError as exc:
            raise FormatError(f"gold sentence {pos}: {exc}") from exc
    return out


__all__ = [
    "BUNDLED_CONSTRAINTS",
    "FormatError",
    "SCHEMA_NAMES",
    "dump_canonical",
    "instances_from_score_doc",
    "load_constraint_set",
    "load_gold",
    "load_schema",
    "load_score_file",
    "load_sentences",
    "load_structure_file",
    "read_json",
    "score_document",
    "structure_document",
    "structures_from_doc",
    "validate_document",
    "write_json",
]
