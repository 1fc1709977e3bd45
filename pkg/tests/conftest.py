import itertools
import math
import sys

import numpy as np
import pytest

from episbn.netgen import GenSpec, generate_evidence, generate_network
from episbn.network import Network, make_node


def make_chain3(c_given_b=((0.8, 0.2), (0.1, 0.9))):
    return Network("chain3", [
        make_node("A", [], [[0.8, 0.2]]),
        make_node("B", ["A"], [[0.9, 0.1], [0.2, 0.8]]),
        make_node("C", ["B"], c_given_b),
    ])


@pytest.fixture
def chain3():
    return make_chain3()


def brute_force(network, evidence):
    """Plain-Python enumeration, independent of the package's oracles.

    Returns (P(E), {node: posterior list}) over non-evidence nodes.
    """
    ids = [n.id for n in network.nodes]
    cards = [n.cardinality for n in network.nodes]
    pe = 0.0
    mass = {nid: [0.0] * k for nid, k in zip(ids, cards) if nid not in evidence}
    for combo in itertools.product(*[range(k) for k in cards]):
        a = dict(zip(ids, combo))
        if any(a[k] != v for k, v in evidence.items()):
            continue
        p = 1.0
        for node in network.nodes:
            row = 0
            for par in node.parents:
                row = row * network[par].cardinality + a[par]
            p *= float(node.cpt[row][a[node.id]])
        pe += p
        for nid in mass:
            mass[nid][a[nid]] += p
    post = {nid: [v / pe for v in vec] if pe > 0 else [math.nan] * len(vec) for nid, vec in mass.items()}
    return pe, post


def random_polytree(seed, nodes=(8, 14), states=(2, 4), p_ext=0.0):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(nodes[0], nodes[1] + 1))
    return generate_network(GenSpec(nodes=n, max_parents=3, min_states=states[0], max_states=states[1],
                                    topology="polytree", p_ext=p_ext, seed=seed))


def random_dag(seed, nodes=(6, 12), states=(2, 3), max_parents=3, p_ext=0.1):
    rng = np.random.default_rng(seed + 10_000)
    n = int(rng.integers(nodes[0], nodes[1] + 1))
    return generate_network(GenSpec(nodes=n, max_parents=max_parents, min_states=states[0],
                                    max_states=states[1], topology="dag", p_ext=p_ext, seed=seed))


def random_case(net, seed, k=None, leaves_only=False):
    rng = np.random.default_rng(seed + 20_000)
    if k is None:
        k = int(rng.integers(1, max(2, len(net) // 3) + 1))
    return generate_evidence(net, k, seed, require_positive=True, leaves_only=leaves_only)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
