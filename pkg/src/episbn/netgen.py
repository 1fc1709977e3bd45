"""Seeded random networks and evidence for tests and benchmarks."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Mapping

import numpy as np

from .errors import EpisError
from .exact import DEFAULT_ENUMERATION_CAP, enumerate_posteriors, evidence_probability
from .network import Network, Node, leaves


class GenerationError(EpisError, ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    """Knobs for :func:`generate_network`.

    A fraction ``p_ext`` of CPT entries is pushed to roughly ``floor`` (within
    a factor of two either way, or exactly 0 when ``floor`` is 0) before the
    row is renormalized. ``depth_target`` only applies to DAG topology.
    """

    nodes: int = 10
    max_parents: int = 3
    min_states: int = 2
    max_states: int = 2
    topology: str = "dag"  # or "polytree"
    depth_target: int | None = None
    p_ext: float = 0.0
    floor: float = 1e-3
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.nodes < 1:
            raise GenerationError("node count must be >= 1")
        if self.max_parents < 0:
            raise GenerationError("max_parents must be >= 0")
        if not 1 <= self.min_states <= self.max_states:
            raise GenerationError("need 1 <= min_states <= max_states")
        if self.topology not in ("dag", "polytree"):
            raise GenerationError(f"unknown topology {self.topology!r}")
        if not 0.0 <= self.p_ext <= 1.0:
            raise GenerationError("p_ext must lie in [0, 1]")
        if not 0.0 <= self.floor < 1.0:
            raise GenerationError("floor must lie in [0, 1)")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "GenSpec":
        aliases = {"maxParents": "max_parents", "minStates": "min_states", "maxStates": "max_states",
                   "depthTarget": "depth_target", "pExt": "p_ext"}
        kwargs = {aliases.get(k, k): v for k, v in doc.items()}
        if "states" in kwargs:
            states = kwargs.pop("states")
            if isinstance(states, int):
                states = [states]
            if not isinstance(states, (list, tuple)) or len(states) not in (1, 2):
                raise GenerationError("states must be an integer or a [min, max] pair")
            kwargs["min_states"], kwargs["max_states"] = states[0], states[-1]
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise GenerationError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)


def _dag_parents(g: GenSpec, rng: np.random.Generator) -> list[list[int]]:
    n = g.nodes
    parents: list[list[int]] = [[] for _ in range(n)]
    if g.depth_target is None:
        for i in range(1, n):
            count = int(rng.integers(0, min(g.max_parents, i) + 1))
            parents[i] = sorted(rng.choice(i, size=count, replace=False).tolist())
        return parents

    layers = g.depth_target + 1
    if g.depth_target < 0 or layers > n:
        raise GenerationError(f"depth target {g.depth_target} needs at least {layers} nodes")
    if g.depth_target > 0 and g.max_parents < 1:
        raise GenerationError("a positive depth target needs max_parents >= 1")
    bounds = np.linspace(0, n, layers + 1).astype(int)
    layer_of = np.repeat(np.arange(layers), np.diff(bounds))
    for i in range(n):
        lay = layer_of[i]
        if lay == 0:
            continue
        prev = np.arange(bounds[lay - 1], bounds[lay])
        first = int(rng.choice(prev))
        earlier = [j for j in range(bounds[lay]) if j != first]
        extra = int(rng.integers(0, min(g.max_parents - 1, len(earlier)) + 1))
        chosen = [first] + rng.choice(earlier, size=extra, replace=False).tolist() if extra else [first]
        parents[i] = sorted(int(c) for c in chosen)
    return parents


def _polytree_parents(g: GenSpec, rng: np.random.Generator) -> list[list[int]]:
    n = g.nodes
    if n > 1 and g.max_parents < 1:
        raise GenerationError("a connected polytree with more than one node needs max_parents >= 1")
    parents: list[list[int]] = [[] for _ in range(n)]
    for i in range(1, n):
        j = int(rng.integers(0, i))
        # orient j -> i or i -> j; i is new so it has no parents yet
        if rng.random() < 0.5 and len(parents[j]) < g.max_parents:
            parents[j].append(i)
        else:
            parents[i].append(j)
    return [sorted(ps) for ps in parents]


def _cpt(rows: int, k: int, g: GenSpec, rng: np.random.Generator) -> np.ndarray:
    table = rng.dirichlet(np.ones(k), size=rows)
    if g.p_ext > 0 and k > 1:
        mask = rng.random(table.shape) < g.p_ext
        near = g.floor * rng.uniform(0.5, 2.0, size=table.shape)
        table = np.where(mask, near, table)
        dead = table.sum(axis=1) <= 0
        if dead.any():
            table[dead, rng.integers(0, k, size=int(dead.sum()))] = 1.0
    table = table / table.sum(axis=1, keepdims=True)
    return table


def generate_network(g: GenSpec) -> Network:
    rng = np.random.default_rng(g.seed)
    parents = _dag_parents(g, rng) if g.topology == "dag" else _polytree_parents(g, rng)
    width = len(str(g.nodes - 1))
    ids = [f"X{i:0{width}d}" for i in range(g.nodes)]
    cards = [int(rng.integers(g.min_states, g.max_states + 1)) for _ in range(g.nodes)]
    nodes = []
    for i in range(g.nodes):
        rows = int(np.prod([cards[p] for p in parents[i]], dtype=np.int64))
        states = tuple(str(s) for s in range(cards[i]))
        nodes.append(Node(ids[i], states, tuple(ids[p] for p in parents[i]),
                          _cpt(rows, cards[i], g, rng)))
    name = g.name or f"{g.topology}-{g.nodes}-s{g.seed}"
    return Network(name, tuple(nodes))


def generate_evidence(network: Network, k: int, seed: int, require_positive: bool = False,
                      leaves_only: bool = False, max_retries: int = 1000) -> dict[str, int]:
    """``k`` distinct observed nodes with uniformly drawn states.

    With ``require_positive`` candidates whose exact P(E) is 0 are redrawn,
    up to ``max_retries`` times.
    """
    pool = leaves(network) if leaves_only else network.ids
    if k < 0 or k > len(pool):
        raise GenerationError(f"cannot pick {k} evidence nodes from {len(pool)} candidates")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        chosen = rng.choice(len(pool), size=k, replace=False)
        chosen = sorted(int(c) for c in chosen)
        ev = {pool[c]: int(rng.integers(0, network[pool[c]].cardinality)) for c in chosen}
        if not require_positive or not ev or _evidence_probability(network, ev) > 0:
            return ev
    raise GenerationError(f"no evidence with positive probability after {max_retries} attempts")


def _evidence_probability(network: Network, evidence) -> float:
    free = 1
    for node in network.nodes:
        if node.id not in evidence:
            free *= node.cardinality
    if free <= DEFAULT_ENUMERATION_CAP // 16:
        return enumerate_posteriors(network, evidence).evidence_probability
    return evidence_probability(network, evidence)
