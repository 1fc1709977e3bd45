"""JSON network (``*.bn.json``) and evidence (``*.ev.json``) documents.

Network schema::

    {"name": str,
     "nodes": [{"id": str, "states": [str, ...], "parents": [str, ...],
                "cpt": [[p, ...], ...]}]}

CPT rows follow the parent-configuration order of :mod:`episbn.network`.
Serialization is canonical: fixed key order, nodes in declaration order and
floats written with ``repr`` (shortest string that re-parses to the same
double, never more than 17 significant digits).
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping

from .errors import EvidenceError, FormatError
from .network import Network, Node, validate


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} is not allowed")


def _loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, kind="syntax", line=exc.lineno, column=exc.colno) from None
    except ValueError as exc:
        raise FormatError(str(exc), kind="syntax") from None


def _probability(value, node_id: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"non-numeric probability {value!r}", node=node_id)
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise FormatError(f"probability {value!r} outside [0, 1]", node=node_id)
    return value


def network_from_dict(doc: Mapping[str, Any]) -> Network:
    if not isinstance(doc, Mapping) or "nodes" not in doc:
        raise FormatError("document must be an object with a 'nodes' list")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise FormatError("'name' must be a string")
    if not isinstance(doc["nodes"], list):
        raise FormatError("'nodes' must be a list")

    nodes = []
    declared = {nd.get("id") for nd in doc["nodes"] if isinstance(nd, Mapping)}
    for nd in doc["nodes"]:
        if not isinstance(nd, Mapping):
            raise FormatError("each node must be an object")
        nid = nd.get("id")
        if not isinstance(nid, str):
            raise FormatError("node 'id' must be a string")
        states = nd.get("states")
        parents = nd.get("parents", [])
        cpt = nd.get("cpt")
        if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
            raise FormatError("'states' must be a list of strings", node=nid)
        if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
            raise FormatError("'parents' must be a list of node ids", node=nid)
        for p in parents:
            if p not in declared:
                raise FormatError(f"unknown parent {p!r} of node {nid!r}", node=nid)
        if not isinstance(cpt, list) or not all(isinstance(r, list) for r in cpt):
            raise FormatError("'cpt' must be a list of rows", node=nid)
        rows = [[_probability(v, nid) for v in row] for row in cpt]
        if any(len(r) != len(states) for r in rows):
            raise FormatError(f"row length mismatch on node {nid!r}: expected {len(states)} entries",
                              node=nid)
        if not rows:
            raise FormatError(f"row count 0 on node {nid!r}", node=nid)
        nodes.append(Node(nid, tuple(states), tuple(parents), rows))

    network = Network(name, tuple(nodes))
    report = validate(network)
    if report:
        v = report[0]
        label = {"arity": "row count", "row-sum": "row sum"}.get(v.kind, v.kind)
        raise FormatError(f"{label} violation on node {v.node!r}: {v.message}", node=v.node)
    return network


def parse_network(text: str) -> Network:
    return network_from_dict(_loads(text))


def _fmt(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return repr(x)


def serialize_network(network: Network) -> str:
    dump = json.dumps
    lines = ["{", f'  "name": {dump(network.name)},', '  "nodes": [']
    for i, node in enumerate(network.nodes):
        rows = ",\n".join("        [" + ", ".join(_fmt(v) for v in row) + "]" for row in node.cpt)
        lines.append("    {")
        lines.append(f'      "id": {dump(node.id)},')
        lines.append(f'      "states": [{", ".join(dump(s) for s in node.states)}],')
        lines.append(f'      "parents": [{", ".join(dump(p) for p in node.parents)}],')
        lines.append('      "cpt": [\n' + rows + "\n      ]")
        lines.append("    }" + ("," if i + 1 < len(network.nodes) else ""))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_evidence(text: str, network: Network) -> dict[str, int]:
    """Resolve an evidence document to state indices.

    Accepts the JSON object form ``{"C": "1"}`` and, for convenience on the
    command line, ``C=1`` pairs separated by commas or newlines.
    """
    stripped = text.strip()
    if not stripped:
        return {}
    if stripped.startswith("{"):
        doc = _loads(stripped)
        pairs = list(doc.items())
    else:
        pairs = []
        for chunk in stripped.replace("\n", ",").split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "=" not in chunk:
                raise FormatError(f"expected node=state, got {chunk!r}", kind="syntax")
            nid, label = (s.strip() for s in chunk.split("=", 1))
            pairs.append((nid, label))

    out: dict[str, int] = {}
    for nid, label in pairs:
        if nid not in network:
            raise EvidenceError(f"unknown node {nid!r}")
        states = network[nid].states
        if not isinstance(label, str) or label not in states:
            raise EvidenceError(f"unknown state {label!r} for node {nid!r}; expected one of {list(states)}")
        if nid in out:
            raise EvidenceError(f"node {nid!r} observed twice")
        out[nid] = states.index(label)
    return out


def serialize_evidence(evidence: Mapping[str, int], network: Network) -> str:
    # declaration order keeps output canonical
    doc = {nid: network[nid].states[evidence[nid]] for nid in network.ids if nid in evidence}
    return json.dumps(doc, indent=2) + "\n"


def load_network(path) -> Network:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def save_network(network: Network, path) -> None:
    Path(path).write_text(serialize_network(network), encoding="utf-8")


def load_evidence(path, network: Network) -> dict[str, int]:
    return parse_evidence(Path(path).read_text(encoding="utf-8"), network)


def save_evidence(evidence: Mapping[str, int], network: Network, path) -> None:
    Path(path).write_text(serialize_evidence(evidence, network), encoding="utf-8")
