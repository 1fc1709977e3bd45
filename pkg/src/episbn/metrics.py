"""Distances between posterior marginal sets."""
from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np


def _marginals(obj) -> Mapping[str, np.ndarray]:
    return obj.marginals if hasattr(obj, "marginals") else obj


def _pairs(exact, estimate, evidence: Iterable[str]):
    p, q = _marginals(exact), _marginals(estimate)
    skip = set(evidence)
    keys = [k for k in p if k not in skip]
    other = [k for k in q if k not in skip]
    if sorted(keys) != sorted(other):
        raise ValueError(f"node sets differ: {sorted(set(keys) ^ set(other))}")
    if not keys:
        raise ValueError("no non-evidence nodes to compare")
    out = []
    for k in keys:
        a, b = np.asarray(p[k], dtype=float), np.asarray(q[k], dtype=float)
        if a.shape != b.shape:
            raise ValueError(f"state count mismatch on node {k!r}: {a.shape} vs {b.shape}")
        out.append((a, b))
    return out


def hellinger(exact, estimate, evidence: Iterable[str] = ()) -> float:
    """Hellinger distance averaged over all (node, state) pairs outside the evidence.

    ``sqrt(sum (sqrt(p) - sqrt(q))**2 / sum n_i)``; exact zeros are fine.
    """
    pairs = _pairs(exact, estimate, evidence)
    num = math.fsum(float(((np.sqrt(a) - np.sqrt(b)) ** 2).sum()) for a, b in pairs)
    den = sum(a.size for a, _ in pairs)
    return math.sqrt(num / den)


def mse(exact, estimate, evidence: Iterable[str] = ()) -> float:
    """Mean squared probability difference over non-evidence (node, state) pairs."""
    pairs = _pairs(exact, estimate, evidence)
    num = math.fsum(float(((a - b) ** 2).sum()) for a, b in pairs)
    den = sum(a.size for a, _ in pairs)
    return num / den
