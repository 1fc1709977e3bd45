"""Pearl's polytree message passing, run for a fixed number of synchronous
sweeps on arbitrary DAGs (loopy belief propagation).

For each edge U -> X two vectors over U's states are kept: the pi-message
U sends to X and the lambda-message X sends to U. Every sweep recomputes all
of them from the previous sweep's values (Jacobi schedule) and normalizes
each to sum 1. A message that comes out all-zero (conflicting deterministic
evidence) is replaced by the uniform vector and the receiving edge recorded
in ``conflicts``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Evidence, Network, check_evidence, deepest_evidence_depth

Edge = tuple[str, str]  # (parent, child)

MAX_DEFAULT_PROPAGATION = 5


@dataclass(frozen=True, eq=False)
class MessageState:
    pi: dict[Edge, np.ndarray]
    lam: dict[Edge, np.ndarray]
    evidence_vectors: dict[str, np.ndarray]
    iteration: int = 0
    conflicts: frozenset = field(default_factory=frozenset)


def default_propagation_length(network: Network, evidence: Evidence) -> int:
    """Depth of the deepest evidence node, capped at 5."""
    return min(MAX_DEFAULT_PROPAGATION, deepest_evidence_depth(network, evidence))


def _normalize(vec: np.ndarray) -> np.ndarray | None:
    total = vec.sum()
    if not np.isfinite(total) or total <= 0.0:
        return None
    return vec / total


def _uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def _contract(tensor: np.ndarray, vectors: list[np.ndarray], skip: int | None = None) -> np.ndarray:
    """Sum ``tensor`` against one vector per leading axis, leaving ``skip`` free.

    Axes are contracted from the last parent backwards so earlier axis
    numbers stay valid.
    """
    for axis in range(len(vectors) - 1, -1, -1):
        if axis == skip:
            continue
        tensor = np.tensordot(tensor, vectors[axis], axes=([axis], [0]))
    return tensor


def init_messages(network: Network, evidence: Evidence) -> MessageState:
    check_evidence(network, evidence)
    ev = {}
    for node in network.nodes:
        vec = np.ones(node.cardinality)
        if node.id in evidence:
            vec = np.zeros(node.cardinality)
            vec[evidence[node.id]] = 1.0
        ev[node.id] = vec
    pi, lam = {}, {}
    for node in network.nodes:
        for p in node.parents:
            pi[(p, node.id)] = np.ones(network[p].cardinality)
            lam[(p, node.id)] = np.ones(network[p].cardinality)
    return MessageState(pi, lam, ev, 0, frozenset())


def _pi_aggregate(state: MessageState, network: Network, nid: str) -> np.ndarray:
    node = network[nid]
    msgs = [state.pi[(p, nid)] for p in node.parents]
    return _contract(network.cpt_tensor(nid), msgs)


def _lambda_aggregate(state: MessageState, network: Network, nid: str,
                      exclude: str | None = None) -> np.ndarray:
    vec = state.evidence_vectors[nid].copy()
    for c in network.children[nid]:
        if c != exclude:
            vec *= state.lam[(nid, c)]
    return vec


def sweep(state: MessageState, network: Network) -> MessageState:
    """One synchronous update of every pi- and lambda-message."""
    new_pi: dict[Edge, np.ndarray] = {}
    new_lam: dict[Edge, np.ndarray] = {}
    conflicts = set(state.conflicts)

    for node in network.nodes:
        nid = node.id
        pi_agg = _pi_aggregate(state, network, nid)
        lam_agg = _lambda_aggregate(state, network, nid)

        for c in network.children[nid]:
            msg = _normalize(pi_agg * _lambda_aggregate(state, network, nid, exclude=c))
            if msg is None:
                msg = _uniform(node.cardinality)
                conflicts.add((nid, c))
            new_pi[(nid, c)] = msg

        if node.parents and lam_agg[0] > 0 and np.all(lam_agg == lam_agg[0]):
            # constant lambda carries no evidence; CPT rows sum to 1 so the
            # messages are uniform, set exactly to avoid rounding noise
            for p in node.parents:
                new_lam[(p, nid)] = _uniform(network[p].cardinality)
        elif node.parents:
            # sum_x P(x | u) lambda(x), then marginalize the other parents with their pi-messages
            weighted = np.tensordot(network.cpt_tensor(nid), lam_agg, axes=([-1], [0]))
            msgs = [state.pi[(p, nid)] for p in node.parents]
            for i, p in enumerate(node.parents):
                msg = _normalize(_contract(weighted, msgs, skip=i))
                if msg is None:
                    msg = _uniform(network[p].cardinality)
                    conflicts.add((p, nid))
                new_lam[(p, nid)] = msg

    return MessageState(new_pi, new_lam, state.evidence_vectors, state.iteration + 1,
                        frozenset(conflicts))


def run(network: Network, evidence: Evidence, d: int) -> MessageState:
    if d < 0:
        raise ValueError("propagation length must be >= 0")
    state = init_messages(network, evidence)
    for _ in range(d):
        state = sweep(state, network)
    return state


def lambda_vector(state: MessageState, network: Network, nid: str) -> np.ndarray:
    """lambda(x) up to scale: self-evidence times all child lambda-messages, normalized."""
    vec = _normalize(_lambda_aggregate(state, network, nid))
    if vec is None:
        vec = _normalize(state.evidence_vectors[nid])
    return vec if vec is not None else _uniform(network[nid].cardinality)


def beliefs(state: MessageState, network: Network) -> dict[str, np.ndarray]:
    """BEL(x) = alpha * lambda(x) * pi(x) for every node.

    If the product vanishes (conflict) the belief falls back to the lambda
    part, which keeps evidence nodes at their indicator.
    """
    out = {}
    for node in network.nodes:
        lam = _lambda_aggregate(state, network, node.id)
        bel = _normalize(lam * _pi_aggregate(state, network, node.id))
        if bel is None:
            bel = lambda_vector(state, network, node.id)
        out[node.id] = bel
    return out
