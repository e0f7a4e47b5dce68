"""Exchangeable random partitions with a random, possibly finite, number of
boxes: the two-parameter (gamma, zeta) family and its relatives.

Modules:

- ``combinatorics``: log-space arithmetic, rising factorials, Lah and
  generalized Stirling numbers, complex log-gamma.
- ``model``: parameters, partition states, succession rule, EPPF, Gibbs
  triples.
- ``inference``: laws of K_n and of the terminal box count, posterior,
  restricted starts, occupancy laws.
- ``sampler``: sequential and mixture samplers, frequencies, tagged sequences.
- ``verify``: oracles and the check suite.
"""

from .combinatorics import LogValue, lah_number, rising_factorial
from .inference import (
    FirstFrequencyLaw,
    PmfTable,
    pmf_K,
    pmf_Kn,
    posterior_K,
    restricted_pmf_K,
    tail_constant,
)
from .model import (
    AdmissibilityError,
    DegenerateError,
    EwensPitmanParams,
    GnedinParams,
    PartitionState,
    eppf,
    restricted_eppf,
    succession,
    validate_ewens_pitman,
    validate_gnedin,
)
from .sampler import (
    SeedSpec,
    mixture_batch,
    predictive,
    sample_mixture,
    sample_sequential,
    sample_stick_breaking,
    sample_tagged_sequence,
    sample_uniform_simplex,
    sequential_batch,
)

__version__ = "0.1.0"
