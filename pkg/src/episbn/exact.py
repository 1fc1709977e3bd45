"""Exact inference used as ground truth for the approximate engines.

Two independent routes are provided so they can check each other:
brute-force enumeration of the joint (small networks) and variable
elimination with a min-degree order (mid-size networks).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import CapExceededError
from .network import Evidence, Network, check_evidence

DEFAULT_ENUMERATION_CAP = 2 ** 22
DEFAULT_FACTOR_CAP = 2 ** 24
_CHUNK = 2 ** 16


@dataclass(frozen=True, eq=False)
class MarginalSet:
    """Posterior marginals of the non-evidence nodes plus P(E).

    When ``evidence_probability`` is 0 the marginals are undefined and every
    vector is NaN.
    """

    marginals: dict[str, np.ndarray]
    evidence_probability: float

    @property
    def defined(self) -> bool:
        return self.evidence_probability > 0.0


@dataclass(frozen=True, eq=False)
class IcptTable:
    """Rows of P(X | parents, E); ``defined[r]`` is False where P(row, E) = 0."""

    node: str
    rows: np.ndarray
    defined: np.ndarray


def _enumerate(network: Network, evidence: Evidence, cap: int
               ) -> Iterator[tuple[dict[str, np.ndarray], np.ndarray]]:
    """Yield (node -> state array, joint probability array) chunks.

    Only assignments consistent with the evidence are visited; chunks come
    in a fixed order so reductions over them are deterministic.
    """
    check_evidence(network, evidence)
    free = [n for n in network.nodes if n.id not in evidence]
    total = math.prod(n.cardinality for n in free)
    if total > cap:
        raise CapExceededError(f"{total} joint assignments exceed the enumeration cap {cap}")
    strides = {}
    acc = 1
    for n in reversed(free):
        strides[n.id] = acc
        acc *= n.cardinality
    row_strides = {n.id: network.row_strides(n.id) for n in network.nodes}

    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        values: dict[str, np.ndarray] = {}
        for n in network.nodes:
            if n.id in evidence:
                values[n.id] = np.full(idx.shape, evidence[n.id], dtype=np.int64)
            else:
                values[n.id] = (idx // strides[n.id]) % n.cardinality
        joint = np.ones(idx.shape)
        for n in network.nodes:
            row = np.zeros(idx.shape, dtype=np.int64)
            for s, p in zip(row_strides[n.id], n.parents):
                row += s * values[p]
            joint *= n.cpt[row, values[n.id]]
        yield values, joint


def enumerate_posteriors(network: Network, evidence: Evidence,
                         cap: int = DEFAULT_ENUMERATION_CAP) -> MarginalSet:
    free = [n for n in network.nodes if n.id not in evidence]
    partial_pe = []
    partial = {n.id: [] for n in free}
    for values, joint in _enumerate(network, evidence, cap):
        partial_pe.append(joint.sum())
        for n in free:
            partial[n.id].append(np.bincount(values[n.id], weights=joint, minlength=n.cardinality))
    pe = math.fsum(partial_pe)
    marginals = {}
    for n in free:
        vec = np.array([math.fsum(col) for col in zip(*partial[n.id])])
        marginals[n.id] = vec / pe if pe > 0 else np.full(n.cardinality, np.nan)
    return MarginalSet(marginals, min(pe, 1.0))


def exact_icpt(network: Network, node_id: str, evidence: Evidence,
               cap: int = DEFAULT_ENUMERATION_CAP, method: str = "auto") -> IcptTable:
    """P(X | parents, E) for one node.

    ``method`` is "enumerate", "ve" or "auto" (enumeration when the free
    joint fits under ``cap``, elimination otherwise).
    """
    if method not in ("auto", "enumerate", "ve"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        free = math.prod(n.cardinality for n in network.nodes if n.id not in evidence)
        method = "enumerate" if free <= cap else "ve"
    if method == "ve":
        return ve_icpt(network, node_id, evidence)
    node = network[node_id]
    k = node.cardinality
    n_rows = node.cpt.shape[0]
    strides = network.row_strides(node_id)
    parts = []
    for values, joint in _enumerate(network, evidence, cap):
        row = np.zeros(joint.shape, dtype=np.int64)
        for s, p in zip(strides, node.parents):
            row += s * values[p]
        parts.append(np.bincount(row * k + values[node_id], weights=joint, minlength=n_rows * k))
    mass = np.array([math.fsum(col) for col in zip(*parts)]).reshape(n_rows, k)
    return _icpt_from_mass(node_id, mass)


def _icpt_from_mass(node_id: str, mass: np.ndarray) -> IcptTable:
    n_rows, k = mass.shape
    totals = mass.sum(axis=1)
    defined = totals > 0
    rows = np.full((n_rows, k), np.nan)
    rows[defined] = mass[defined] / totals[defined, None]
    return IcptTable(node_id, rows, defined)


# -- variable elimination ------------------------------------------------------

class _Factor:
    __slots__ = ("vars", "table")

    def __init__(self, vars: Sequence[int], table: np.ndarray):
        self.vars = tuple(vars)
        self.table = table


def _sum_product(factors: list[_Factor], keep: Sequence[int], cards: Mapping[int, int],
                 cap: int) -> _Factor:
    """Multiply ``factors`` and sum out every variable not in ``keep``."""
    keep = [v for v in keep]
    size = math.prod(cards[v] for v in keep)
    if size > cap:
        raise CapExceededError(f"intermediate factor of {size} entries exceeds cap {cap}")
    labels = {}
    for f in factors:
        for v in f.vars:
            labels.setdefault(v, len(labels))
    for v in keep:
        labels.setdefault(v, len(labels))
    if len(labels) > 52:
        raise CapExceededError("too many variables in one elimination step")
    operands = []
    for f in factors:
        operands.extend([f.table, [labels[v] for v in f.vars]])
    operands.append([labels[v] for v in keep])
    return _Factor(keep, np.einsum(*operands, optimize=False))


def _initial_factors(network: Network, evidence: Evidence) -> tuple[list[_Factor], dict[int, int]]:
    cards = {i: n.cardinality for i, n in enumerate(network.nodes)}
    factors = []
    for i, n in enumerate(network.nodes):
        vars = [network.index[p] for p in n.parents] + [i]
        table = network.cpt_tensor(n.id)
        # slice evidence axes away
        index = tuple(evidence[network.nodes[v].id] if network.nodes[v].id in evidence else slice(None)
                      for v in vars)
        table = np.asarray(table[index], dtype=np.float64)
        vars = [v for v in vars if network.nodes[v].id not in evidence]
        factors.append(_Factor(vars, table))
    return factors, cards


def min_degree_order(factors: Sequence[_Factor], eliminate: Sequence[int]) -> list[int]:
    """Greedy min-degree order on the interaction graph; ties go to the lowest index."""
    adj: dict[int, set[int]] = {v: set() for v in eliminate}
    pending = set(eliminate)
    for f in factors:
        for a in f.vars:
            for b in f.vars:
                if a != b:
                    adj.setdefault(a, set()).add(b)
    order = []
    while pending:
        v = min(pending, key=lambda u: (len(adj[u]), u))
        order.append(v)
        nbrs = adj[v]
        for a in nbrs:
            adj.setdefault(a, set()).update(nbrs - {a})
            adj[a].discard(v)
        pending.discard(v)
    return order


def _eliminate(factors: list[_Factor], order: Sequence[int], cards: Mapping[int, int],
               cap: int) -> list[_Factor]:
    factors = list(factors)
    for v in order:
        bucket = [f for f in factors if v in f.vars]
        if not bucket:
            continue
        rest = [f for f in factors if v not in f.vars]
        scope = sorted({u for f in bucket for u in f.vars} - {v})
        rest.append(_sum_product(bucket, scope, cards, cap))
        factors = rest
    return factors


def ve_posteriors(network: Network, evidence: Evidence, order: Sequence[str] | None = None,
                  cap: int = DEFAULT_FACTOR_CAP) -> MarginalSet:
    """Marginals by one variable-elimination pass per query node.

    ``order`` fixes the elimination order (node ids); by default each query
    uses a min-degree order over the remaining variables.
    """
    check_evidence(network, evidence)
    base, cards = _initial_factors(network, evidence)
    free = [i for i, n in enumerate(network.nodes) if n.id not in evidence]
    given = [network.index[nid] for nid in order] if order is not None else None

    marginals = {}
    pe_values = []
    for q in free:
        rest = [v for v in free if v != q]
        elim = [v for v in given if v != q] if given is not None else min_degree_order(base, rest)
        remaining = _eliminate(base, elim, cards, cap)
        unnorm = _sum_product(remaining, [q], cards, cap).table
        pe_values.append(math.fsum(unnorm))
        marginals[network.nodes[q].id] = unnorm
    if free:
        pe = pe_values[0]
    else:
        pe = float(np.prod([f.table for f in base if not f.vars])) if base else 1.0
    for nid, unnorm in marginals.items():
        marginals[nid] = unnorm / pe if pe > 0 else np.full(unnorm.shape, np.nan)
    return MarginalSet(marginals, min(max(pe, 0.0), 1.0))


def evidence_probability(network: Network, evidence: Evidence,
                         cap: int = DEFAULT_FACTOR_CAP) -> float:
    """P(E) by eliminating every unobserved variable."""
    check_evidence(network, evidence)
    base, cards = _initial_factors(network, evidence)
    free = [i for i, n in enumerate(network.nodes) if n.id not in evidence]
    remaining = _eliminate(base, min_degree_order(base, free), cards, cap)
    return float(min(_sum_product(remaining, [], cards, cap).table, 1.0))


def ve_icpt(network: Network, node_id: str, evidence: Evidence,
            cap: int = DEFAULT_FACTOR_CAP) -> IcptTable:
    """P(X | parents, E) from the family marginal P(parents, X, E) by elimination."""
    check_evidence(network, evidence)
    node = network[node_id]
    base, cards = _initial_factors(network, evidence)
    family = [network.index[p] for p in node.parents] + [network.index[node_id]]
    keep = [v for v in family if network.nodes[v].id not in evidence]
    elim = [i for i, n in enumerate(network.nodes) if n.id not in evidence and i not in keep]
    remaining = _eliminate(base, min_degree_order(base, elim), cards, cap)
    table = _sum_product(remaining, keep, cards, cap).table
    full = np.zeros([cards[v] for v in family])
    index = tuple(evidence[network.nodes[v].id] if network.nodes[v].id in evidence else slice(None)
                  for v in family)
    full[index] = table
    return _icpt_from_mass(node_id, full.reshape(-1, node.cardinality))


def exact_posteriors(network: Network, evidence: Evidence,
                     cap: int = DEFAULT_ENUMERATION_CAP) -> MarginalSet:
    """Enumeration when the joint is small enough, variable elimination otherwise."""
    free = math.prod(n.cardinality for n in network.nodes if n.id not in evidence)
    if free <= cap:
        return enumerate_posteriors(network, evidence, cap)
    return ve_posteriors(network, evidence)
