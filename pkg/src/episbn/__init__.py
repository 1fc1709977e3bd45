"""Importance sampling for discrete Bayesian networks with an importance
function pre-computed by loopy belief propagation, plus likelihood
weighting, logic sampling, exact oracles and a benchmark harness."""

from .errors import (CapExceededError, CycleError, EpisError, EvidenceError, FormatError,
                     NetworkError, ZeroWeightError)
from .exact import (MarginalSet, enumerate_posteriors, exact_icpt, exact_posteriors, ve_icpt,
                    ve_posteriors)
from .importance import IcptSet, apply_cutoff, compute_icpts, cutoff_row, epsilon_for
from .lbp import default_propagation_length
from .metrics import hellinger, mse
from .model_io import parse_evidence, parse_network, serialize_network
from .network import Network, Node, joint_probability, topological_order, validate
from .sampling import (PosteriorEstimate, SamplerConfig, run_epis, run_lw, run_pls,
                       run_sampler)

__version__ = "0.1.0"
