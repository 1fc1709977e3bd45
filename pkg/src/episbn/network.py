"""Discrete Bayesian networks: representation, validation, ordering.

CPTs are dense 2-D arrays of shape ``(rows, states)``. The row index of a
parent configuration is its mixed-radix value with the first declared parent
as the most significant digit, so ``cpt.reshape(*parent_cards, k)`` gives the
natural tensor view. Memory is the product of all parent cardinalities times
the node's own; there is no sparse form.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CycleError, EvidenceError

ROW_SUM_TOL = 1e-9

Evidence = Mapping[str, int]


@dataclass(frozen=True, eq=False)
class Node:
    id: str
    states: tuple[str, ...]
    parents: tuple[str, ...]
    cpt: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "parents", tuple(self.parents))
        cpt = np.array(self.cpt, dtype=np.float64, ndmin=2)
        cpt.flags.writeable = False
        object.__setattr__(self, "cpt", cpt)

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        return (self.id == other.id and self.states == other.states
                and self.parents == other.parents
                and self.cpt.shape == other.cpt.shape
                and np.array_equal(self.cpt, other.cpt))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Network:
    name: str
    nodes: tuple[Node, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.name == other.name and self.nodes == other.nodes

    __hash__ = None

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, node_id: str) -> Node:
        return self.nodes[self.index[node_id]]

    def __contains__(self, node_id) -> bool:
        return node_id in self.index

    @property
    def ids(self) -> list[str]:
        return [node.id for node in self.nodes]

    @cached_property
    def index(self) -> dict[str, int]:
        return {node.id: i for i, node in enumerate(self.nodes)}

    @cached_property
    def children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {node.id: [] for node in self.nodes}
        for node in self.nodes:
            for p in node.parents:
                if p in out and node.id not in out[p]:
                    out[p].append(node.id)
        return out

    @cached_property
    def order(self) -> list[str]:
        return topological_order(self)

    def cpt_tensor(self, node_id: str) -> np.ndarray:
        """The CPT viewed as ``(*parent_cards, k)``."""
        node = self[node_id]
        shape = [self[p].cardinality for p in node.parents] + [node.cardinality]
        return node.cpt.reshape(shape)

    def row_strides(self, node_id: str) -> list[int]:
        """Multipliers turning parent state indices into a CPT row index."""
        cards = [self[p].cardinality for p in self[node_id].parents]
        strides = [1] * len(cards)
        for i in range(len(cards) - 2, -1, -1):
            strides[i] = strides[i + 1] * cards[i + 1]
        return strides

    def row_index(self, node_id: str, values: Mapping[str, int]) -> int:
        node = self[node_id]
        return sum(s * values[p] for s, p in zip(self.row_strides(node_id), node.parents))

    def assignment_count(self) -> int:
        return math.prod(node.cardinality for node in self.nodes)


@dataclass(frozen=True)
class Violation:
    node: str
    kind: str  # cycle | row-sum | arity | duplicate-id | state-count | unknown-parent | range
    message: str = field(default="", compare=False)


def validate(network: Network) -> list[Violation]:
    """Check every structural and numerical invariant; empty list means valid."""
    report: list[Violation] = []
    seen: set[str] = set()
    for node in network.nodes:
        if node.id in seen:
            report.append(Violation(node.id, "duplicate-id", f"node id {node.id!r} declared twice"))
        seen.add(node.id)

    known = {node.id: node for node in network.nodes}
    for node in network.nodes:
        if node.cardinality < 1:
            report.append(Violation(node.id, "state-count", "node has no states"))
            continue
        if len(set(node.states)) != node.cardinality:
            report.append(Violation(node.id, "state-count", "duplicate state labels"))
        missing = [p for p in node.parents if p not in known]
        for p in missing:
            report.append(Violation(node.id, "unknown-parent", f"unknown parent {p!r}"))
        if len(set(node.parents)) != len(node.parents):
            report.append(Violation(node.id, "arity", "parent listed twice"))
        if missing:
            continue
        rows = math.prod(known[p].cardinality for p in node.parents)
        cpt = node.cpt
        if cpt.ndim != 2 or cpt.shape[0] != rows:
            report.append(Violation(node.id, "arity",
                                    f"row count {cpt.shape[0] if cpt.ndim else 0}, expected {rows}"))
            continue
        if cpt.shape[1] != node.cardinality:
            report.append(Violation(node.id, "arity",
                                    f"row length {cpt.shape[1]}, expected {node.cardinality}"))
            continue
        if not np.all(np.isfinite(cpt)) or np.any(cpt < 0) or np.any(cpt > 1):
            report.append(Violation(node.id, "range", "probabilities must lie in [0, 1]"))
            continue
        for r, row in enumerate(cpt):
            total = math.fsum(row)
            if abs(total - 1.0) > ROW_SUM_TOL:
                report.append(Violation(node.id, "row-sum", f"row {r} sums to {total!r}"))

    cyc = _find_cycle_node(network)
    if cyc is not None:
        report.append(Violation(cyc, "cycle", f"directed cycle through {cyc!r}"))
    return report


def _find_cycle_node(network: Network) -> str | None:
    known = {node.id for node in network.nodes}
    parents = {node.id: [p for p in node.parents if p in known] for node in network.nodes}
    # Kahn's algorithm; any node left over sits on or downstream of a cycle
    indeg = {nid: len(ps) for nid, ps in parents.items()}
    kids: dict[str, list[str]] = {nid: [] for nid in parents}
    for nid, ps in parents.items():
        for p in ps:
            kids[p].append(nid)
    queue = deque(nid for nid in parents if indeg[nid] == 0)
    done = set()
    while queue:
        nid = queue.popleft()
        done.add(nid)
        for c in kids[nid]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if len(done) == len(parents):
        return None
    # walk parents among the leftovers until a node repeats: it lies on a cycle
    nid = next(n for n in parents if n not in done)
    visited = []
    while nid not in visited:
        visited.append(nid)
        nid = next(p for p in parents[nid] if p not in done)
    return nid


def topological_order(network: Network) -> list[str]:
    """Parents before children; ties broken by declaration order."""
    decl = {node.id: i for i, node in enumerate(network.nodes)}
    indeg = {node.id: len(node.parents) for node in network.nodes}
    kids: dict[str, list[str]] = {node.id: [] for node in network.nodes}
    for node in network.nodes:
        for p in node.parents:
            kids[p].append(node.id)
    ready = [decl[nid] for nid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        nid = network.nodes[heapq.heappop(ready)].id
        out.append(nid)
        for c in kids[nid]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, decl[c])
    if len(out) != len(network.nodes):
        raise CycleError(_find_cycle_node(network))
    return out


def check_evidence(network: Network, evidence: Evidence) -> None:
    for nid, state in evidence.items():
        if nid not in network:
            raise EvidenceError(f"unknown evidence node {nid!r}")
        k = network[nid].cardinality
        if not isinstance(state, (int, np.integer)) or not 0 <= state < k:
            raise EvidenceError(f"state index {state!r} invalid for node {nid!r} with {k} states")


def joint_probability(network: Network, assignment: Mapping[str, int]) -> float:
    """Product of the CPT entries selected by a complete assignment."""
    missing = [nid for nid in network.ids if nid not in assignment]
    if missing:
        raise ValueError(f"incomplete assignment, missing {missing}")
    p = 1.0
    for node in network.nodes:
        p *= node.cpt[network.row_index(node.id, assignment), assignment[node.id]]
        if p == 0.0:
            return 0.0
    return p


def node_depths(network: Network) -> dict[str, int]:
    """Longest directed path from any root to each node (roots are 0)."""
    depth: dict[str, int] = {}
    for nid in network.order:
        ps = network[nid].parents
        depth[nid] = 1 + max(depth[p] for p in ps) if ps else 0
    return depth


def deepest_evidence_depth(network: Network, evidence: Evidence) -> int:
    if not evidence:
        return 0
    depth = node_depths(network)
    return max(depth[nid] for nid in evidence)


def leaves(network: Network) -> list[str]:
    return [nid for nid in network.ids if not network.children[nid]]


def _skeleton(network: Network) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {nid: set() for nid in network.ids}
    for node in network.nodes:
        for p in node.parents:
            adj[p].add(node.id)
            adj[node.id].add(p)
    return adj


def is_polytree(network: Network) -> bool:
    """True when the undirected skeleton has no cycle (a forest)."""
    adj = _skeleton(network)
    edges = sum(len(v) for v in adj.values()) // 2
    components = _components(adj)
    return edges == len(adj) - components


def _components(adj: Mapping[str, Iterable[str]]) -> int:
    seen: set[str] = set()
    count = 0
    for start in adj:
        if start in seen:
            continue
        count += 1
        stack = [start]
        seen.add(start)
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
    return count


def skeleton_diameter(network: Network) -> int:
    """Longest shortest undirected path, in edges, over all connected pairs."""
    adj = _skeleton(network)
    best = 0
    for start in adj:
        dist = {start: 0}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nb in adj[cur]:
                if nb not in dist:
                    dist[nb] = dist[cur] + 1
                    queue.append(nb)
        best = max(best, max(dist.values()))
    return best


def states_to_indices(network: Network, labelled: Mapping[str, str]) -> dict[str, int]:
    out = {}
    for nid, label in labelled.items():
        if nid not in network:
            raise EvidenceError(f"unknown node {nid!r}")
        states = network[nid].states
        if label not in states:
            raise EvidenceError(f"unknown state {label!r} for node {nid!r}; expected one of {list(states)}")
        out[nid] = states.index(label)
    return out


def make_node(id: str, parents: Sequence[str], cpt, states: Sequence[str] | None = None) -> Node:
    """Shorthand used in tests and examples: states default to "0", "1", ..."""
    cpt = np.array(cpt, dtype=np.float64, ndmin=2)
    if states is None:
        states = [str(i) for i in range(cpt.shape[1])]
    return Node(id, tuple(states), tuple(parents), cpt)
