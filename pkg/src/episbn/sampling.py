"""Forward importance samplers: EPIS, likelihood weighting, logic sampling.

All three share one vectorized engine. Sample ``i`` reads its uniforms from
a fixed slice of a Philox stream keyed by the seed (one uniform per node in
topological position, rows padded to a multiple of four so every sample
starts on a counter boundary). Samples are reduced in fixed-size blocks and
the blocks merged in index order, so the output does not depend on how many
shards generated them.

Weights live in log space. Each block is scaled by its own maximum log
weight and the merge keeps a running maximum, rescaling the Kahan-
compensated accumulators whenever it grows.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import lbp
from .errors import ZeroWeightError
from .importance import IcptSet, apply_cutoff, compute_icpts
from .network import Evidence, Network, check_evidence

ALGORITHMS = ("epis", "lw", "pls")
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class SamplerConfig:
    algorithm: str = "epis"
    m: int = 1000
    d: int | None = None  # None: depth of the deepest evidence, capped at 5
    cutoff: bool = True
    seed: int = 0
    shards: int = 1
    label: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.m < 1:
            raise ValueError("sample count m must be >= 1")
        if self.d is not None and self.d < 0:
            raise ValueError("propagation length d must be >= 0")
        if self.shards < 1:
            raise ValueError("shards must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def name(self) -> str:
        return self.label or self.algorithm


@dataclass(frozen=True, eq=False)
class ScoreTables:
    """Per-state weight sums, all scaled by ``exp(-log_scale)``.

    ``second`` is the sum of squared weights scaled by ``exp(-2 * log_scale)``.
    """

    scores: dict[str, np.ndarray]
    total: float
    second: float
    log_scale: float
    m: int
    rejected: int = 0

    def total_weight(self) -> float:
        return math.exp(self.log_scale) * self.total if self.total > 0 else 0.0


@dataclass(frozen=True, eq=False)
class PosteriorEstimate:
    marginals: dict[str, np.ndarray]
    evidence_probability: float  # total weight / m
    ess: float
    m: int
    rejected: int
    scores: ScoreTables
    icpts: IcptSet | None = None
    timings: dict = field(default_factory=dict, compare=False)


def estimate_evidence_probability(tables: ScoreTables, m: int) -> float:
    if m < 1:
        raise ValueError("m must be >= 1")
    if tables.total <= 0:
        return 0.0
    return math.exp(tables.log_scale + math.log(tables.total / m))


# -- compiled sampling plan ----------------------------------------------------

@dataclass
class _Step:
    pos: int  # declaration index, i.e. column in the state matrix
    parents: list[int]
    strides: list[int]
    evidence: int | None
    cum: np.ndarray | None  # row-wise normalized cumulative sampling table
    log_p: np.ndarray  # log CPT
    log_q: np.ndarray | None  # log sampling table; None when it adds nothing to the weight


class _Plan:
    def __init__(self, network: Network, evidence: Evidence, mode: str,
                 tables: Mapping[str, np.ndarray] | None = None):
        check_evidence(network, evidence)
        self.network = network
        self.evidence = dict(evidence)
        self.mode = mode
        self.n = len(network)
        self.width = 4 * ((self.n + 3) // 4)
        self.steps: list[_Step] = []
        with np.errstate(divide="ignore"):
            for nid in network.order:
                node = network[nid]
                observed = evidence.get(nid) if mode != "pls" else None
                table = node.cpt if tables is None or nid not in tables else tables[nid]
                cum = None
                if observed is None:
                    cum = np.cumsum(table, axis=1)
                    cum = cum / cum[:, -1:]
                log_q = None
                if mode == "epis" and observed is None:
                    log_q = np.log(table)
                self.steps.append(_Step(
                    pos=network.index[nid],
                    parents=[network.index[p] for p in node.parents],
                    strides=network.row_strides(nid),
                    evidence=observed,
                    cum=cum,
                    log_p=np.log(node.cpt),
                    log_q=log_q,
                ))
        self.free = [i for i, node in enumerate(network.nodes) if node.id not in evidence]
        self.observed = [(network.index[nid], s) for nid, s in evidence.items()]

    def uniforms(self, seed: int, start: int, count: int) -> np.ndarray:
        bits = np.random.Philox(key=seed, counter=start * self.width // 4)
        return np.random.Generator(bits).random((count, self.width))

    def sample(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """States (rows x nodes, declaration order) and log weights for uniforms ``u``."""
        count = u.shape[0]
        states = np.zeros((count, self.n), dtype=np.int64)
        logw = np.zeros(count)
        for j, step in enumerate(self.steps):
            row = np.zeros(count, dtype=np.int64)
            for s, p in zip(step.strides, step.parents):
                row += s * states[:, p]
            if step.evidence is not None:
                states[:, step.pos] = step.evidence
                logw += step.log_p[row, step.evidence]
                continue
            cum = step.cum[row, :-1]
            x = (u[:, j, None] >= cum).sum(axis=1)
            states[:, step.pos] = x
            if step.log_q is not None:
                logw += step.log_p[row, x] - step.log_q[row, x]
        if self.mode == "pls":
            ok = np.ones(count, dtype=bool)
            for pos, s in self.observed:
                ok &= states[:, pos] == s
            logw = np.where(ok, 0.0, -np.inf)
        return states, logw


@dataclass
class _Block:
    max_logw: float
    sums: list[np.ndarray]
    total: float
    second: float
    rejected: int


def _reduce_block(plan: _Plan, seed: int, start: int, count: int) -> _Block:
    states, logw = plan.sample(plan.uniforms(seed, start, count))
    rejected = int(np.count_nonzero(np.isneginf(logw)))
    top = float(logw.max())
    if not np.isfinite(top):
        zeros = [np.zeros(plan.network.nodes[i].cardinality) for i in plan.free]
        return _Block(-math.inf, zeros, 0.0, 0.0, rejected)
    w = np.exp(logw - top)
    sums = [np.bincount(states[:, i], weights=w, minlength=plan.network.nodes[i].cardinality)
            for i in plan.free]
    return _Block(top, sums, float(w.sum()), float((w * w).sum()), rejected)


class _Kahan:
    def __init__(self, size: int):
        self.s = np.zeros(size)
        self.c = np.zeros(size)

    def add(self, x):
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t

    def scale(self, f: float):
        self.s *= f
        self.c *= f


def _accumulate(plan: _Plan, m: int, seed: int, shards: int) -> ScoreTables:
    starts = list(range(0, m, BLOCK_SIZE))

    def work(chunk):
        return [_reduce_block(plan, seed, s, min(BLOCK_SIZE, m - s)) for s in chunk]

    if shards == 1 or len(starts) == 1:
        blocks = work(starts)
    else:
        per = -(-len(starts) // shards)
        chunks = [starts[i:i + per] for i in range(0, len(starts), per)]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            blocks = [b for part in pool.map(work, chunks) for b in part]

    cards = [plan.network.nodes[i].cardinality for i in plan.free]
    offsets = np.cumsum([0] + cards)
    # one flat accumulator: node sums, then total, then second moment
    acc = _Kahan(int(offsets[-1]) + 2)
    scale = -math.inf
    rejected = 0
    for b in blocks:
        rejected += b.rejected
        if b.max_logw == -math.inf:
            continue
        flat = np.concatenate(b.sums + [np.array([b.total, b.second])])
        if b.max_logw > scale:
            if scale > -math.inf:
                f = math.exp(scale - b.max_logw)
                acc.scale(f)
                acc.s[-1] *= f
                acc.c[-1] *= f
            scale = b.max_logw
        else:
            f = math.exp(b.max_logw - scale)
            flat = flat * f
            flat[-1] *= f
        acc.add(flat)
    s = acc.s
    scores = {plan.network.nodes[i].id: s[offsets[k]:offsets[k + 1]].copy()
              for k, i in enumerate(plan.free)}
    return ScoreTables(scores, float(s[-2]), float(s[-1]), scale, m, rejected)


def _estimate(tables: ScoreTables, icpts: IcptSet | None, algorithm: str,
              timings: dict) -> PosteriorEstimate:
    if tables.total <= 0:
        hint = "no sample was accepted" if algorithm == "pls" else "all importance weights are zero"
        raise ZeroWeightError(f"{hint} after {tables.m} samples; the evidence may have zero probability",
                              m=tables.m, rejected=tables.rejected)
    marginals = {nid: v / v.sum() for nid, v in tables.scores.items()}
    ess = tables.total ** 2 / tables.second
    return PosteriorEstimate(marginals, estimate_evidence_probability(tables, tables.m), ess,
                             tables.m, tables.rejected, tables, icpts, timings)


# -- public entry points -------------------------------------------------------

def draw_sample(network: Network, icpts: IcptSet, evidence: Evidence,
                rng: np.random.Generator) -> tuple[dict[str, int], float]:
    """One EPIS sample and its importance weight P(x, e) / Q(x)."""
    plan = _Plan(network, evidence, "epis", icpts.tables)
    states, logw = plan.sample(rng.random((1, plan.width)))
    assignment = {nid: int(states[0, i]) for i, nid in enumerate(network.ids)}
    return assignment, float(np.exp(logw[0]))


def draw_samples(network: Network, evidence: Evidence, m: int, seed: int,
                 algorithm: str = "epis", icpts: IcptSet | None = None,
                 start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Samples ``start .. start+m-1`` of a run as (states, log weights).

    States are columns in declaration order. These are the same samples the
    corresponding ``run_*`` call accumulates for the same seed.
    """
    tables = icpts.tables if (algorithm == "epis" and icpts is not None) else None
    plan = _Plan(network, evidence, algorithm, tables)
    return plan.sample(plan.uniforms(seed, start, m))


def _resolve_d(network: Network, evidence: Evidence, cfg: SamplerConfig) -> int:
    return lbp.default_propagation_length(network, evidence) if cfg.d is None else cfg.d


def run_epis(network: Network, evidence: Evidence, cfg: SamplerConfig) -> PosteriorEstimate:
    if cfg.algorithm != "epis":
        raise ValueError("run_epis needs a config with algorithm='epis'")
    t0 = time.perf_counter()
    network.order  # raises on cycles
    d = _resolve_d(network, evidence, cfg)
    icpts = compute_icpts(network, evidence, d)
    if cfg.cutoff:
        icpts = apply_cutoff(icpts)
    plan = _Plan(network, evidence, "epis", icpts.tables)
    t1 = time.perf_counter()
    tables = _accumulate(plan, cfg.m, cfg.seed, cfg.shards)
    t2 = time.perf_counter()
    return _estimate(tables, icpts, "epis", {"setup_s": t1 - t0, "sample_s": t2 - t1})


def run_lw(network: Network, evidence: Evidence, cfg: SamplerConfig) -> PosteriorEstimate:
    if cfg.algorithm != "lw":
        raise ValueError("run_lw needs a config with algorithm='lw'")
    t0 = time.perf_counter()
    plan = _Plan(network, evidence, "lw")
    t1 = time.perf_counter()
    tables = _accumulate(plan, cfg.m, cfg.seed, cfg.shards)
    t2 = time.perf_counter()
    return _estimate(tables, None, "lw", {"setup_s": t1 - t0, "sample_s": t2 - t1})


def run_pls(network: Network, evidence: Evidence, cfg: SamplerConfig) -> PosteriorEstimate:
    if cfg.algorithm != "pls":
        raise ValueError("run_pls needs a config with algorithm='pls'")
    t0 = time.perf_counter()
    plan = _Plan(network, evidence, "pls")
    t1 = time.perf_counter()
    tables = _accumulate(plan, cfg.m, cfg.seed, cfg.shards)
    t2 = time.perf_counter()
    return _estimate(tables, None, "pls", {"setup_s": t1 - t0, "sample_s": t2 - t1})


def run_sampler(network: Network, evidence: Evidence, cfg: SamplerConfig) -> PosteriorEstimate:
    runner = {"epis": run_epis, "lw": run_lw, "pls": run_pls}[cfg.algorithm]
    return runner(network, evidence, cfg)
