import json
import math

import pytest

from episbn.errors import EvidenceError, FormatError
from episbn.experiment import (CSV_HEADER, EvidenceSpec, ExperimentConfig, RunRecord, derive_seed,
                               records_to_csv, run_experiment, summarize, summary_to_csv)
from episbn.model_io import save_evidence, save_network
from episbn.netgen import GenSpec
from episbn.sampling import SamplerConfig

from conftest import make_chain3


def chain_config(tmp_path, **over):
    net = make_chain3()
    save_network(net, tmp_path / "chain3.json")
    save_evidence({"C": 1}, net, tmp_path / "ev.json")
    doc = {
        "network": "chain3.json",
        "evidence": "ev.json",
        "arms": [{"algorithm": "epis", "d": 2}, {"algorithm": "lw"}],
        "schedule": [100, 1000],
        "reps": 1,
        "seed": 7,
    }
    doc.update(over)
    (tmp_path / "exp.json").write_text(json.dumps(doc))
    return ExperimentConfig.load(tmp_path / "exp.json")


class TestConfig:
    def test_load(self, tmp_path):
        cfg = chain_config(tmp_path)
        assert [a.algorithm for a in cfg.arms] == ["epis", "lw"]
        assert cfg.schedule == (100, 1000)
        assert cfg.network == tmp_path / "chain3.json"

    def test_generated_network(self):
        cfg = ExperimentConfig.from_dict({
            "network": {"gen": {"nodes": 8, "maxParents": 2, "seed": 1}},
            "evidence": {"k": 2, "leavesOnly": True},
            "arms": [{"algorithm": "lw"}], "schedule": [50], "cases": 3,
        })
        assert isinstance(cfg.network, GenSpec)
        assert cfg.evidence == EvidenceSpec(2, True, True)
        assert cfg.cases == 3

    @pytest.mark.parametrize("over", [{"arms": []}, {"schedule": []}, {"schedule": [100, 100]},
                                      {"schedule": [0]}, {"reps": 0}])
    def test_invalid(self, tmp_path, over):
        with pytest.raises(ValueError):
            chain_config(tmp_path, **over)

    def test_bad_network_entry(self):
        with pytest.raises(FormatError):
            ExperimentConfig.from_dict({"network": 3, "arms": [{}], "schedule": [1]})

    def test_syntax_error(self, tmp_path):
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(FormatError):
            ExperimentConfig.load(tmp_path / "bad.json")


class TestRun:
    def test_row_count_and_order(self, tmp_path):
        records = run_experiment(chain_config(tmp_path))
        assert len(records) == 4
        assert [(r.algorithm, r.m) for r in records] == [("epis", 100), ("epis", 1000),
                                                         ("lw", 100), ("lw", 1000)]
        epis, lw = records[0], records[2]
        assert epis.d == 2 and epis.cutoff is True
        assert lw.d is None and lw.cutoff is None
        assert epis.seed == lw.seed == derive_seed(7, 0, 0)

    def test_csv_deterministic(self, tmp_path):
        cfg = chain_config(tmp_path)
        a = records_to_csv(run_experiment(cfg))
        b = records_to_csv(run_experiment(cfg, shards=4))
        assert a == b
        lines = a.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 5
        # timing columns are NA unless requested
        assert all(line.endswith("NA,NA") for line in lines[1:])

    def test_timing(self, tmp_path):
        records = run_experiment(chain_config(tmp_path, timing=True))
        assert all(r.setup_ms is not None and r.sample_ms >= 0 for r in records)

    def test_ablation_labels(self, tmp_path):
        arms = [{"algorithm": "epis", "d": 0, "cutoff": False, "label": "E"},
                {"algorithm": "epis", "d": 0, "cutoff": True, "label": "E+C"},
                {"algorithm": "epis", "d": 2, "cutoff": False, "label": "E+P"},
                {"algorithm": "epis", "d": 2, "cutoff": True, "label": "E+PC"}]
        text = records_to_csv(run_experiment(chain_config(tmp_path, arms=arms, schedule=[500])))
        rows = [line.split(",") for line in text.splitlines()[1:]]
        assert [(r[0], r[3], r[4]) for r in rows] == [("E", "0", "off"), ("E+C", "0", "on"),
                                                      ("E+P", "2", "off"), ("E+PC", "2", "on")]

    def test_exact_proposal_has_no_error_in_pe(self, tmp_path):
        records = run_experiment(chain_config(tmp_path, arms=[{"algorithm": "epis", "d": 2,
                                                               "cutoff": False}]))
        assert all(r.pe_hat == pytest.approx(0.368, rel=1e-12) for r in records)

    def test_impossible_evidence(self, tmp_path):
        net = make_chain3(c_given_b=((1.0, 0.0), (1.0, 0.0)))
        save_network(net, tmp_path / "dead.json")
        with pytest.raises(EvidenceError):
            run_experiment(chain_config(tmp_path, network="dead.json"))

    def test_generated_cases(self):
        cfg = ExperimentConfig.from_dict({
            "network": {"gen": {"nodes": 8, "maxParents": 2, "seed": 1}},
            "evidence": {"k": 2}, "arms": [{"algorithm": "lw"}], "schedule": [200],
            "cases": 3, "reps": 2, "seed": 4,
        })
        records = run_experiment(cfg)
        assert len(records) == 6
        assert [r.case for r in records] == [0, 0, 1, 1, 2, 2]
        assert len({r.seed for r in records}) == 6


def rec(h, m=100, arm="lw"):
    return RunRecord(arm, 0, m, None, None, h, None if h is None else h / 10, 0.5, 10.0)


class TestSummarize:
    def test_single(self):
        rows = summarize([rec(0.2)])
        h = next(r for r in rows if r.metric == "hellinger")
        assert (h.count, h.mean, h.std, h.min, h.median, h.max) == (1, 0.2, 0.0, 0.2, 0.2, 0.2)

    def test_three(self):
        rows = summarize([rec(0.1), rec(0.2), rec(0.3)])
        h = next(r for r in rows if r.metric == "hellinger")
        assert h.mean == pytest.approx(0.2, abs=1e-15)
        assert h.std == pytest.approx(math.sqrt(2 / 300), abs=1e-15)
        assert (h.min, h.median, h.max) == (0.1, 0.2, 0.3)

    def test_groups_by_m(self):
        rows = summarize([rec(0.1, m=10), rec(0.2, m=20)])
        assert sorted({r.m for r in rows}) == [10, 20]

    def test_empty_arm_warning(self):
        rows = summarize([rec(0.1)], arms=["lw", "pls"])
        warn = [r for r in rows if r.arm == "pls"]
        assert len(warn) == 1 and warn[0].note.startswith("warning")
        assert "warning" in summary_to_csv(rows)

    def test_undefined_estimates(self):
        rows = summarize([rec(None), rec(None)])
        assert all(r.count == 0 and r.note for r in rows)
        text = summary_to_csv(rows)
        assert "NA" in text
