"""Importance function built from belief-propagation lambda vectors.

Each non-evidence node gets an ICPT whose row for parent configuration ``pa``
is ``normalize(P(X | pa) * lambda(X))``. On polytrees with enough sweeps this
is exactly P(X | pa, E). The epsilon cutoff then thickens the tails of every
row so no state has sampling probability below a threshold that depends on
the node's number of outcomes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import lbp
from .network import Evidence, Network


@dataclass(frozen=True, eq=False)
class IcptSet:
    tables: dict[str, np.ndarray]
    propagation_length: int
    cutoff_applied: bool = False
    conflicts: frozenset = field(default_factory=frozenset)
    # nodes where at least one row needed the clamp-and-renormalize fallback
    cutoff_fallbacks: frozenset = field(default_factory=frozenset)

    def __getitem__(self, nid: str) -> np.ndarray:
        return self.tables[nid]


def _is_uniform(vec: np.ndarray) -> bool:
    return bool(np.all(vec == vec[0]))


def compute_icpts(network: Network, evidence: Evidence, d: int,
                  messages: lbp.MessageState | None = None) -> IcptSet:
    """ICPTs from ``d`` sweeps of loopy belief propagation.

    Pass ``messages`` to reuse an existing propagation result.
    """
    if messages is None:
        messages = lbp.run(network, evidence, d)
    tables = {}
    conflicts = set()
    for node in network.nodes:
        if node.id in evidence:
            continue
        lam = lbp.lambda_vector(messages, network, node.id)
        if _is_uniform(lam):
            # no evidence below: ICPT is the CPT itself, bit for bit
            table = np.array(node.cpt)
        else:
            table = node.cpt * lam
            sums = table.sum(axis=1)
            bad = ~(sums > 0)
            if bad.any():
                conflicts.add(node.id)
                sums[bad] = 1.0
                table[bad] = 1.0 / node.cardinality
            table /= sums[:, None]
        table.flags.writeable = False
        tables[node.id] = table
    return IcptSet(tables, messages.iteration, False, frozenset(conflicts))


def epsilon_for(outcome_count: int) -> float:
    if outcome_count < 1:
        raise ValueError("outcome_count must be >= 1")
    if outcome_count < 5:
        return 0.006
    if outcome_count <= 8:
        return 0.001
    return 0.0005


def _cutoff_row(row: np.ndarray, eps: float) -> tuple[np.ndarray, bool]:
    row = np.asarray(row, dtype=np.float64)
    if eps * len(row) >= 1.0:
        raise ValueError(f"epsilon {eps} too large for a row of {len(row)} states")
    low = row < eps
    if not low.any():
        return row.copy(), False
    top = int(np.argmax(row))  # first maximum: lowest state index wins ties
    deficit = math.fsum(eps - row[low])
    out = row.copy()
    out[low] = eps
    out[top] = row[top] - deficit
    if out[top] >= eps:
        return out, False
    out = np.maximum(row, eps)
    return out / out.sum(), True


def cutoff_row(row, eps: float) -> np.ndarray:
    """Raise entries below ``eps`` to ``eps``, paying for it from the largest entry.

    If the largest entry cannot absorb the deficit and stay at or above
    ``eps``, all entries are clamped to ``eps`` and the row renormalized
    instead.
    """
    return _cutoff_row(row, eps)[0]


def apply_cutoff(icpts: IcptSet) -> IcptSet:
    tables = {}
    fallbacks = set()
    for nid, table in icpts.tables.items():
        eps = epsilon_for(table.shape[1])
        out = np.empty_like(table)
        for r, row in enumerate(table):
            out[r], fell_back = _cutoff_row(row, eps)
            if fell_back:
                fallbacks.add(nid)
        out.flags.writeable = False
        tables[nid] = out
    return replace(icpts, tables=tables, cutoff_applied=True,
                   cutoff_fallbacks=icpts.cutoff_fallbacks | frozenset(fallbacks))


def build_importance_function(network: Network, evidence: Evidence, d: int,
                              cutoff: bool) -> IcptSet:
    icpts = compute_icpts(network, evidence, d)
    return apply_cutoff(icpts) if cutoff else icpts


def dump_icpts(icpts: IcptSet, network: Network) -> str:
    """Debug dump using the network file's CPT table layout."""
    nodes = []
    for node in network.nodes:
        if node.id not in icpts.tables:
            continue
        nodes.append({
            "id": node.id,
            "states": list(node.states),
            "parents": list(node.parents),
            "cpt": icpts.tables[node.id].tolist(),
            "conflict": node.id in icpts.conflicts,
            "cutoffFallback": node.id in icpts.cutoff_fallbacks,
        })
    doc = {
        "name": network.name,
        "propagationLength": icpts.propagation_length,
        "cutoffApplied": icpts.cutoff_applied,
        "nodes": nodes,
    }
    return json.dumps(doc, indent=2) + "\n"
