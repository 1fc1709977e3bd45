"""Convergence and ablation experiments with CSV output.

Config JSON::

    {"network": "net.bn.json" | {"gen": {GenSpec fields}},
     "evidence": "case.ev.json" | {"k": 3, "leavesOnly": true, "requirePositive": true},
     "cases": 1,
     "arms": [{"algorithm": "epis", "d": null, "cutoff": true, "label": "E+PC"}, ...],
     "schedule": [1000, 2000, 4000],
     "reps": 1,
     "seed": 0,
     "timing": false}

Relative paths resolve against the config file's directory. Wall-clock
columns are written as NA unless ``timing`` is on, which keeps the CSV
byte-identical across reruns.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import EvidenceError, FormatError, ZeroWeightError
from .exact import MarginalSet, exact_posteriors
from .lbp import default_propagation_length
from .metrics import hellinger, mse
from .model_io import load_evidence, load_network
from .netgen import GenSpec, generate_evidence, generate_network
from .network import Network
from .sampling import SamplerConfig, run_sampler

log = logging.getLogger(__name__)

CSV_HEADER = ["algorithm", "seed", "m", "d", "cutoff", "hellinger", "mse", "pe_hat", "ess",
              "setup_ms", "sample_ms"]


@dataclass(frozen=True)
class EvidenceSpec:
    k: int
    leaves_only: bool = False
    require_positive: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    network: Path | GenSpec
    evidence: Path | EvidenceSpec | None
    arms: tuple[SamplerConfig, ...]
    schedule: tuple[int, ...]
    reps: int = 1
    seed: int = 0
    cases: int = 1
    timing: bool = False

    def __post_init__(self):
        if not self.arms:
            raise ValueError("at least one arm is required")
        if not self.schedule or any(m < 1 for m in self.schedule):
            raise ValueError("schedule must be a non-empty list of positive sample counts")
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ValueError("schedule must be strictly increasing")
        if self.reps < 1 or self.cases < 1:
            raise ValueError("reps and cases must be >= 1")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], base_dir: Path | None = None) -> "ExperimentConfig":
        base = base_dir or Path(".")
        net = doc.get("network")
        if isinstance(net, Mapping) and "gen" in net:
            network = GenSpec.from_dict(net["gen"])
        elif isinstance(net, str):
            network = base / net
        else:
            raise FormatError("'network' must be a path or {\"gen\": {...}}")
        ev = doc.get("evidence")
        if ev is None or isinstance(ev, str):
            evidence = base / ev if ev else None
        elif isinstance(ev, Mapping):
            evidence = EvidenceSpec(int(ev["k"]), bool(ev.get("leavesOnly", False)),
                                    bool(ev.get("requirePositive", True)))
        else:
            raise FormatError("'evidence' must be a path or {\"k\": ...}")
        arms = []
        for a in doc.get("arms", []):
            arms.append(SamplerConfig(
                algorithm=a.get("algorithm", "epis"),
                m=1,
                d=a.get("d"),
                cutoff=bool(a.get("cutoff", True)),
                shards=int(a.get("shards", 1)),
                label=a.get("label"),
            ))
        return cls(network, evidence, tuple(arms), tuple(int(m) for m in doc.get("schedule", [])),
                   int(doc.get("reps", 1)), int(doc.get("seed", 0)), int(doc.get("cases", 1)),
                   bool(doc.get("timing", False)))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(exc.msg, kind="syntax", line=exc.lineno, column=exc.colno) from None
        return cls.from_dict(doc, path.parent)


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    seed: int
    m: int
    d: int | None
    cutoff: bool | None
    hellinger: float | None
    mse: float | None
    pe_hat: float | None
    ess: float | None
    setup_ms: float | None = None
    sample_ms: float | None = None
    case: int = field(default=0, compare=False)

    def row(self) -> list[str]:
        return [self.algorithm, str(self.seed), str(self.m), _na(self.d),
                "NA" if self.cutoff is None else ("on" if self.cutoff else "off"),
                _num(self.hellinger), _num(self.mse), _num(self.pe_hat), _num(self.ess),
                _num(self.setup_ms), _num(self.sample_ms)]


def _na(v) -> str:
    return "NA" if v is None else str(v)


def _num(v: float | None) -> str:
    if v is None or not math.isfinite(v):
        return "NA"
    return format(v, ".17g")


def derive_seed(*parts: int) -> int:
    """A 64-bit seed mixed from integers (stable across platforms)."""
    words = np.random.SeedSequence(list(parts)).generate_state(2, np.uint32)
    return int(words[0]) << 32 | int(words[1])


def _cases(cfg: ExperimentConfig) -> tuple[Network, list[dict[str, int]]]:
    if isinstance(cfg.network, GenSpec):
        network = generate_network(cfg.network)
    else:
        network = load_network(cfg.network)
    if cfg.evidence is None:
        return network, [{} for _ in range(cfg.cases)]
    if isinstance(cfg.evidence, EvidenceSpec):
        spec = cfg.evidence
        return network, [generate_evidence(network, spec.k, derive_seed(cfg.seed, c, 0xE7),
                                           spec.require_positive, spec.leaves_only)
                         for c in range(cfg.cases)]
    return network, [load_evidence(cfg.evidence, network)] * cfg.cases


def run_experiment(cfg: ExperimentConfig, shards: int | None = None) -> list[RunRecord]:
    """Every (case, arm, m, rep) run against the exact posteriors, in fixed order.

    Arms share the per-(case, rep) seed so their comparison is paired.
    ``shards`` overrides every arm's shard count.
    """
    network, cases = _cases(cfg)
    records = []
    for c, evidence in enumerate(cases):
        oracle: MarginalSet = exact_posteriors(network, evidence)
        if not oracle.defined:
            raise EvidenceError(f"case {c}: evidence has zero probability")
        for arm in cfg.arms:
            d = None
            if arm.algorithm == "epis":
                d = default_propagation_length(network, evidence) if arm.d is None else arm.d
            for m in cfg.schedule:
                for rep in range(cfg.reps):
                    seed = derive_seed(cfg.seed, c, rep)
                    run_cfg = replace(arm, m=m, seed=seed, d=d if d is not None else arm.d,
                                      shards=shards or arm.shards)
                    records.append(_one_run(network, evidence, oracle, run_cfg, d, c, cfg.timing))
    return records


def _one_run(network, evidence, oracle, cfg: SamplerConfig, d, case, timing) -> RunRecord:
    cutoff = cfg.cutoff if cfg.algorithm == "epis" else None
    try:
        est = run_sampler(network, evidence, cfg)
    except ZeroWeightError:
        log.warning("%s seed=%d m=%d: undefined estimate (zero total weight)", cfg.name, cfg.seed, cfg.m)
        return RunRecord(cfg.name, cfg.seed, cfg.m, d, cutoff, None, None, 0.0, None, case=case)
    setup = sample = None
    if timing:
        setup = 1000.0 * est.timings["setup_s"]
        sample = 1000.0 * est.timings["sample_s"]
    return RunRecord(cfg.name, cfg.seed, cfg.m, d, cutoff,
                     hellinger(oracle, est, evidence), mse(oracle, est, evidence),
                     est.evidence_probability, est.ess, setup, sample, case=case)


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


@dataclass(frozen=True)
class SummaryRow:
    arm: str
    d: int | None
    cutoff: bool | None
    m: int
    metric: str
    count: int
    mean: float | None
    std: float | None
    min: float | None
    median: float | None
    max: float | None
    note: str = ""


def summarize(records: Sequence[RunRecord], arms: Sequence[str] = ()) -> list[SummaryRow]:
    """mean, std (population), min, median and max per arm, sample count and metric.

    An arm is (algorithm label, d, cutoff). Arms named in ``arms`` without
    any record, and groups whose estimates are all undefined, get a warning
    row instead of statistics.
    """
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.algorithm, r.d, r.cutoff, r.m), []).append(r)
    out = []
    for (arm, d, cutoff, m), rs in groups.items():
        for metric in ("hellinger", "mse"):
            vals = [getattr(r, metric) for r in rs if getattr(r, metric) is not None]
            if not vals:
                out.append(SummaryRow(arm, d, cutoff, m, metric, 0, None, None, None, None, None,
                                      "warning: no defined estimates"))
                continue
            out.append(SummaryRow(arm, d, cutoff, m, metric, len(vals), statistics.fmean(vals),
                                  statistics.pstdev(vals), min(vals), statistics.median(vals),
                                  max(vals)))
    seen = {key[0] for key in groups}
    for arm in arms:
        if arm not in seen:
            out.append(SummaryRow(arm, None, None, 0, "hellinger", 0, None, None, None, None, None,
                                  "warning: arm has no records"))
    return out


def summary_to_csv(rows: Iterable[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arm", "d", "cutoff", "m", "metric", "count", "mean", "std", "min", "median", "max",
                "note"])
    for s in rows:
        cut = "NA" if s.cutoff is None else ("on" if s.cutoff else "off")
        w.writerow([s.arm, _na(s.d), cut, s.m, s.metric, s.count, _num(s.mean), _num(s.std),
                    _num(s.min), _num(s.median), _num(s.max), s.note])
    return buf.getvalue()
