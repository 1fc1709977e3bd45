"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error (invalid network,
impossible evidence), 3 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import CapExceededError, EpisError, FormatError
from .exact import DEFAULT_ENUMERATION_CAP, enumerate_posteriors, ve_posteriors
from .experiment import ExperimentConfig, records_to_csv, run_experiment, summarize, summary_to_csv
from .importance import dump_icpts
from .lbp import beliefs, default_propagation_length, run as run_lbp
from .model_io import load_evidence, parse_network, save_evidence, save_network
from .netgen import GenSpec, generate_evidence, generate_network
from .sampling import SamplerConfig, run_sampler

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAP = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="episbn", description="Evidence pre-propagation importance sampling for "
                                           "discrete Bayesian networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check a network file")
    s.add_argument("network")

    s = sub.add_parser("exact", help="exact marginals and P(E)")
    s.add_argument("network")
    s.add_argument("evidence", nargs="?")
    s.add_argument("--method", choices=["auto", "enumerate", "ve"], default="auto")

    s = sub.add_parser("lbp", help="loopy belief propagation beliefs")
    s.add_argument("network")
    s.add_argument("evidence", nargs="?")
    s.add_argument("--iters", type=_non_negative, default=None,
                   help="sweeps (default: deepest evidence depth, capped at 5)")

    s = sub.add_parser("sample", help="approximate posteriors by sampling")
    s.add_argument("network")
    s.add_argument("evidence", nargs="?")
    s.add_argument("--algo", choices=["epis", "lw", "pls"], default="epis")
    s.add_argument("--samples", type=_positive, default=10000)
    s.add_argument("--prop-len", type=_non_negative, default=None)
    s.add_argument("--cutoff", type=_on_off, default=True)
    s.add_argument("--seed", type=_non_negative, default=0)
    s.add_argument("--shards", type=_positive, default=1)
    s.add_argument("--timing", action="store_true", help="also print wall-clock timings")
    s.add_argument("--dump-icpts", metavar="PATH", help="write the importance function as JSON")

    s = sub.add_parser("gen", help="generate a random network (and optionally evidence)")
    s.add_argument("--spec", required=True, help="GenSpec JSON file or inline JSON object")
    s.add_argument("--out", required=True)
    s.add_argument("--evidence-out")
    s.add_argument("--k", type=_non_negative, default=0)
    s.add_argument("--leaves-only", action="store_true")
    s.add_argument("--require-positive", action="store_true")
    s.add_argument("--evidence-seed", type=_non_negative, default=0)

    s = sub.add_parser("experiment", help="run a benchmark config, write CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--summary", help="also write per-arm summary statistics here")
    s.add_argument("--shards", type=_positive, default=None, help="override every arm's shards")
    s.add_argument("--timing", action="store_true", help="record wall-clock columns")
    return p


def _load(path: str):
    return parse_network(Path(path).read_text(encoding="utf-8"))


def _evidence(net, path):
    return load_evidence(path, net) if path else {}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _print_marginals(net, marginals, out):
    out.write("node,state,probability\n")
    for node in net.nodes:
        if node.id in marginals:
            for s, p in zip(node.states, marginals[node.id]):
                out.write(f"{node.id},{s},{_fmt(p)}\n")


def _cmd_validate(args, out):
    net = _load(args.network)  # parsing rejects the first violation found
    out.write(f"ok: {len(net.nodes)} nodes, {sum(len(n.parents) for n in net.nodes)} edges\n")
    return EXIT_OK


def _cmd_exact(args, out):
    net = _load(args.network)
    ev = _evidence(net, args.evidence)
    method = args.method
    if method == "auto":
        free = 1
        for n in net.nodes:
            if n.id not in ev:
                free *= n.cardinality
        method = "enumerate" if free <= DEFAULT_ENUMERATION_CAP else "ve"
    result = enumerate_posteriors(net, ev) if method == "enumerate" else ve_posteriors(net, ev)
    if not result.defined:
        sys.stderr.write("error: evidence has zero probability; posteriors undefined\n")
        out.write("P(E)=0\n")
        return EXIT_DATA
    out.write(f"P(E)={_fmt(result.evidence_probability)}\n")
    _print_marginals(net, result.marginals, out)
    return EXIT_OK


def _cmd_lbp(args, out):
    net = _load(args.network)
    ev = _evidence(net, args.evidence)
    d = default_propagation_length(net, ev) if args.iters is None else args.iters
    state = run_lbp(net, ev, d)
    bel = beliefs(state, net)
    out.write(f"# iterations={d}\n")
    if state.conflicts:
        out.write(f"# conflicts={len(state.conflicts)}\n")
    _print_marginals(net, bel, out)
    return EXIT_OK


def _cmd_sample(args, out):
    net = _load(args.network)
    ev = _evidence(net, args.evidence)
    cfg = SamplerConfig(args.algo, args.samples, args.prop_len, args.cutoff, args.seed, args.shards)
    est = run_sampler(net, ev, cfg)
    if args.dump_icpts and est.icpts is not None:
        Path(args.dump_icpts).write_text(dump_icpts(est.icpts, net), encoding="utf-8")
    _print_marginals(net, est.marginals, out)
    out.write(f"# algorithm={cfg.algorithm} m={est.m}")
    if est.icpts is not None:
        out.write(f" d={est.icpts.propagation_length} cutoff={'on' if cfg.cutoff else 'off'}")
    out.write(f"\n# pe_hat={_fmt(est.evidence_probability)} ess={_fmt(est.ess)} rejected={est.rejected}\n")
    if args.timing:
        out.write(f"# setup_ms={1000 * est.timings['setup_s']:.3f} "
                  f"sample_ms={1000 * est.timings['sample_s']:.3f}\n")
    return EXIT_OK


def _cmd_gen(args, out):
    spec_text = args.spec
    if not spec_text.lstrip().startswith("{"):
        spec_text = Path(spec_text).read_text(encoding="utf-8")
    try:
        spec = GenSpec.from_dict(json.loads(spec_text))
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, kind="syntax", line=exc.lineno, column=exc.colno) from None
    net = generate_network(spec)
    save_network(net, args.out)
    out.write(f"wrote {args.out}\n")
    if args.evidence_out:
        ev = generate_evidence(net, args.k, args.evidence_seed, args.require_positive, args.leaves_only)
        save_evidence(ev, net, args.evidence_out)
        out.write(f"wrote {args.evidence_out}\n")
    return EXIT_OK


def _cmd_experiment(args, out):
    cfg = ExperimentConfig.load(args.config)
    if args.timing:
        cfg = replace(cfg, timing=True)
    records = run_experiment(cfg, shards=args.shards)
    Path(args.out).write_text(records_to_csv(records), encoding="utf-8")
    out.write(f"wrote {len(records)} records to {args.out}\n")
    if args.summary:
        labels = [a.name for a in cfg.arms]
        Path(args.summary).write_text(summary_to_csv(summarize(records, labels)), encoding="utf-8")
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "exact": _cmd_exact,
    "lbp": _cmd_lbp,
    "sample": _cmd_sample,
    "gen": _cmd_gen,
    "experiment": _cmd_experiment,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, out)
    except CapExceededError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CAP
    except (EpisError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except ValueError as exc:
        # invalid option combinations surfaced by config validation
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
