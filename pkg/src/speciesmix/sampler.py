"""Random generation: sequential growth by the succession rule, the
mixture construction (draw kappa, a uniform point of the simplex, allocate
balls i.i.d.), stick-breaking frequencies and tagged sequences.

Batch functions return partitions as restricted growth strings: an integer
array of shape ``(reps, n)`` whose row gives, for each ball, the 0-based
index of its box in least-element order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .inference import K_tail_mass, _log_K_term, log_pmf_K
from .combinatorics import factor_quadratic, log_gamma_ratio
from .model import (
    AdmissibilityError,
    DegenerateError,
    EwensPitmanParams,
    GnedinParams,
    PartitionState,
    restricted_params,
    succession,
)

DEFAULT_SEED = 20100301
CHUNK = 1 << 16
EXPLICIT_KAPPA_MAX = 4096
KAPPA_TABLE_MAX = 10**5


@dataclass(frozen=True)
class SeedSpec:
    """Key of a counter-based random stream.

    ``(master_seed, stream_index)`` is the 128-bit Philox key; block ``b``
    of a stream starts at counter ``b * 2**192``, so blocks never overlap
    and any block can be generated without generating its predecessors.
    """

    master_seed: int = DEFAULT_SEED
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2**64 and 0 <= self.stream_index < 2**64):
            raise ValueError("master_seed and stream_index must fit in 64 bits")

    def generator(self, block: int = 0) -> np.random.Generator:
        key = self.master_seed | (self.stream_index << 64)
        bitgen = np.random.Philox(key=key, counter=[0, 0, 0, block])
        return np.random.Generator(bitgen)

    def stream(self, index: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, index)


def as_seed(seed) -> SeedSpec:
    if seed is None:
        return SeedSpec()
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


def run_chunked(fn: Callable[[np.random.Generator, int], np.ndarray], reps: int,
                seed: SeedSpec, workers: int = 1) -> np.ndarray:
    """Call ``fn(rng, size)`` on fixed-size chunks of ``reps`` and stack the
    results.  Chunk ``c`` always uses block ``c`` of the stream, so the
    output does not depend on ``workers``."""
    sizes = [min(CHUNK, reps - s) for s in range(0, reps, CHUNK)]
    jobs = [(c, size) for c, size in enumerate(sizes)]

    def one(job):
        c, size = job
        return fn(seed.generator(c), size)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    return np.concatenate(parts, axis=0)


# --------------------------------------------------------------------------
# sequential growth


def _rule(params):
    """``(alpha, g, h)`` with new-box probability g(k)/h(n) and old-box
    weights proportional to ``n_j - alpha``."""
    if isinstance(params, GnedinParams):
        return -1.0, params.new_box_weight, params.denominator
    if isinstance(params, EwensPitmanParams):
        a, t, kap = params.alpha, params.theta, params.kappa

        def g(k):
            out = a * np.asarray(k, dtype=float) + t
            return np.where(np.asarray(k) >= kap, 0.0, out) if kap is not None else out

        return a, g, lambda n: np.asarray(n, dtype=float) + t
    raise TypeError(f"unsupported parameters {params!r}")


def _grow(rng, rgs, sizes, k, start, n, alpha, new_prob):
    """Place balls ``start+1..n`` in place.  ``new_prob(t, k)`` gives the
    new-box probability per row when ``t`` balls are placed."""
    reps = rgs.shape[0]
    rows = np.arange(reps)
    for t in range(start, n):
        nu = new_prob(t, k)
        new = rng.random(reps) < nu
        width = min(t, sizes.shape[1])
        cols = np.arange(width)
        w = np.where(cols[None, :] < k[:, None], sizes[:, :width] - alpha, 0.0)
        cum = np.cumsum(w, axis=1)
        v = rng.random(reps) * cum[:, -1]
        old = np.argmax(cum > v[:, None], axis=1)
        label = np.where(new, k, old)
        sizes[rows, label] += 1
        k += new
        rgs[:, t] = label


def _sequential_chunk(rng, size, n, params, initial: Optional[PartitionState]):
    alpha, g, h = _rule(params)
    rgs = np.zeros((size, n), dtype=np.int32)
    sizes = np.zeros((size, n), dtype=float)
    if initial is None:
        sizes[:, 0] = 1
        k = np.ones(size, dtype=np.int64)
        start = 1
    else:
        start = initial.n
        if n < start:
            raise ValueError("n is smaller than the initial allocation")
        rgs[:, :start] = initial.rgs()
        sizes[:, : initial.k] = initial.sizes
        k = np.full(size, initial.k, dtype=np.int64)
    _grow(rng, rgs, sizes, k, start, n, alpha, lambda t, kk: g(kk) / h(t))
    return rgs


def _check_initial(params, initial: Optional[PartitionState]):
    if initial is None:
        return params
    if not isinstance(params, GnedinParams) or params.zeta != 0:
        raise AdmissibilityError("initial allocations are supported for zeta = 0 only")
    return restricted_params(params.gamma, initial.sizes)


def sequential_batch(n: int, params, reps: int, seed=None,
                     initial: Optional[PartitionState] = None, workers: int = 1) -> np.ndarray:
    """``reps`` independent partitions of ``{1..n}`` grown ball by ball."""
    seed = as_seed(seed)
    params = _check_initial(params, initial)
    return run_chunked(lambda rng, size: _sequential_chunk(rng, size, n, params, initial),
                       reps, seed, workers)


def sample_sequential(n: int, params, seed=None,
                      initial: Optional[PartitionState] = None) -> PartitionState:
    """One partition of ``{1..n}`` grown by the succession rule.

    With ``initial`` (zeta = 0 only) growth starts from that allocation and
    gamma may lie anywhere in ``-(m-k) < gamma < k``.
    """
    return PartitionState.from_rgs(sequential_batch(n, params, 1, seed, initial)[0])


# --------------------------------------------------------------------------
# terminal number of boxes


class KappaSampler:
    """Inverse-CDF sampler for the terminal number of boxes.

    Values up to ``table_max`` come from the exact table; the remaining
    mass is sampled by rejection from a discrete Pareto proposal
    ``P(j) = ((T+1)/j)^gamma - ((T+1)/(j+1))^gamma``, j > T, whose ratio to
    the target tends to a constant.  Draws are floats so that astronomically
    large values remain representable.
    """

    def __init__(self, params: GnedinParams, table_max: int = KAPPA_TABLE_MAX):
        if params.singleton:
            raise DegenerateError("gamma = 0: only singleton boxes, K is infinite")
        self.params = params
        logp = log_pmf_K(params, table_max)
        self.table_max = len(logp)
        cdf = np.cumsum(np.exp(logp))
        if params.k0 is not None:
            cdf = cdf / cdf[-1]
            self.tail = 0.0
        else:
            self.tail = max(0.0, 1.0 - float(cdf[-1]))
        self.cdf = cdf
        if self.tail > 0:
            T = self.table_max
            g = params.gamma
            self._logterm = _log_K_term(params, T, float(logp[-1]))
            fq = factor_quadratic(params.gamma, params.zeta)
            corr = (log_gamma_ratio(T, fq.s1, 1) + log_gamma_ratio(T, fq.s2, 0)).real
            log_c = float(logp[-1]) - corr          # log lim P(K=j) j^(gamma+1)
            r_inf = log_c - math.log(g) - g * math.log(T + 1)
            r_first = self._log_ratio(np.array([T + 1.0]))[0]
            self._log_bound = max(r_inf, r_first) + 1e-6

    def _log_ratio(self, j: np.ndarray) -> np.ndarray:
        g = self.params.gamma
        T1 = self.table_max + 1.0
        logq = g * np.log(T1 / j) + np.log(-np.expm1(g * np.log1p(-1.0 / (j + 1))))
        logt = np.array([self._logterm(float(x)) for x in j])
        return logt - logq

    def _draw_tail(self, rng: np.random.Generator, size: int) -> np.ndarray:
        g = self.params.gamma
        T1 = self.table_max + 1.0
        out = np.empty(size)
        filled = 0
        while filled < size:
            m = size - filled
            u = 1.0 - rng.random(m)
            with np.errstate(over="ignore"):
                x = T1 * u ** (-1.0 / g)
            j = np.floor(x)
            accept = np.zeros(m, dtype=bool)
            fin = np.isfinite(j) & (j < 1e300)
            accept[~fin] = True        # beyond any float: treated as infinite
            j = np.where(fin, j, np.inf)
            v = rng.random(m)
            if fin.any():
                lr = self._log_ratio(j[fin])
                accept[fin] = np.log(v[fin]) < lr - self._log_bound
            got = j[accept]
            out[filled: filled + len(got)] = got
            filled += len(got)
        return out

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        kap = (np.searchsorted(self.cdf, u, side="right") + 1).astype(float)
        if self.tail > 0:
            beyond = u >= self.cdf[-1]
            if beyond.any():
                kap[beyond] = self._draw_tail(rng, int(beyond.sum()))
        else:
            kap = np.minimum(kap, self.table_max)
        return kap


@lru_cache(maxsize=32)
def kappa_sampler(params: GnedinParams) -> KappaSampler:
    return KappaSampler(params)


# --------------------------------------------------------------------------
# mixture construction


def canonical_rgs(labels: np.ndarray) -> np.ndarray:
    """Relabel each row so boxes are numbered by first appearance."""
    labels = np.asarray(labels)
    reps, n = labels.shape
    first = np.empty((reps, n), dtype=np.int64)
    for i in range(n):
        first[:, i] = np.argmax(labels[:, : i + 1] == labels[:, i: i + 1], axis=1)
    rank = np.cumsum(first == np.arange(n), axis=1) - 1
    return np.take_along_axis(rank, first, axis=1).astype(np.int32)


def _allocate_explicit(rng, kap: np.ndarray, n: int) -> np.ndarray:
    """Draw a uniform point of each simplex (normalized exponentials) and
    allocate n balls i.i.d.; returns raw box labels."""
    reps = len(kap)
    offsets = np.concatenate(([0], np.cumsum(kap)))
    e = rng.standard_exponential(int(offsets[-1]))
    cum = np.cumsum(e)
    before = np.concatenate(([0.0], cum))[offsets[:-1]]
    seg = np.repeat(np.arange(reps), kap)
    local = cum - before[seg]
    total = local[offsets[1:] - 1]
    keys = seg + local / total[seg]
    labels = np.empty((reps, n), dtype=np.int64)
    for i in range(n):
        u = 1.0 - rng.random(reps)
        pos = np.searchsorted(keys, np.arange(reps) + u, side="left")
        labels[:, i] = pos - offsets[:-1]
    return labels


def _fisher_urn(rng, kap: np.ndarray, n: int) -> np.ndarray:
    """Partition of ``{1..n}`` for the fixed-kappa model via its urn rule:
    new box with probability ``(kappa - k)/(t + kappa)``."""
    reps = len(kap)
    rgs = np.zeros((reps, n), dtype=np.int32)
    sizes = np.zeros((reps, n), dtype=float)
    sizes[:, 0] = 1
    k = np.ones(reps, dtype=np.int64)

    def new_prob(t, kk):
        with np.errstate(invalid="ignore"):
            p = (kap - kk) / (t + kap)
        return np.where(np.isinf(kap), 1.0, p)

    _grow(rng, rgs, sizes, k, 1, n, -1.0, new_prob)
    return rgs


def _mixture_chunk(rng, size, n, sampler: KappaSampler):
    kap = sampler.draw(rng, size)
    out = np.empty((size, n), dtype=np.int32)
    small = kap <= EXPLICIT_KAPPA_MAX
    if small.any():
        labels = _allocate_explicit(rng, kap[small].astype(np.int64), n)
        out[small] = canonical_rgs(labels)
    if (~small).any():
        out[~small] = _fisher_urn(rng, kap[~small], n)
    return out


def mixture_batch(n: int, params: GnedinParams, reps: int, seed=None, workers: int = 1) -> np.ndarray:
    """``reps`` partitions built by mixing over the terminal box count.

    For kappa above ``EXPLICIT_KAPPA_MAX`` the allocation of n balls to a
    uniform random point of the simplex is drawn through the equivalent
    fixed-kappa urn instead of materializing kappa weights.
    """
    seed = as_seed(seed)
    sampler = kappa_sampler(params)
    return run_chunked(lambda rng, size: _mixture_chunk(rng, size, n, sampler), reps, seed, workers)


def sample_mixture(n: int, params: GnedinParams, seed=None) -> PartitionState:
    """One partition from: kappa ~ law of K, a uniform point of the
    (kappa-1)-simplex, i.i.d. allocation, boxes ordered by least element."""
    return PartitionState.from_rgs(mixture_batch(n, params, 1, seed)[0])


def sample_kappa(params: GnedinParams, reps: int, seed=None) -> np.ndarray:
    seed = as_seed(seed)
    sampler = kappa_sampler(params)
    return run_chunked(lambda rng, size: sampler.draw(rng, size), reps, seed)


# --------------------------------------------------------------------------
# frequencies


@dataclass(frozen=True)
class Frequencies:
    """Limiting box frequencies in least-element (size-biased) order."""

    kappa: int
    values: tuple


def _beta2(rng, b: np.ndarray) -> np.ndarray:
    """beta(2, b) as (E1+E2)/(E1+E2+G_b); b = 0 gives 1."""
    b = np.asarray(b, dtype=float)
    e = rng.standard_exponential(b.shape) + rng.standard_exponential(b.shape)
    gam = np.where(b > 0, rng.standard_gamma(np.where(b > 0, b, 1.0)), 0.0)
    return e / (e + gam)


def uniform_simplex_batch(kappa: int, reps: int, seed=None) -> np.ndarray:
    if kappa < 1:
        raise ValueError("kappa must be >= 1")

    def chunk(rng, size):
        e = rng.standard_exponential((size, kappa))
        return e / e.sum(axis=1, keepdims=True)

    return run_chunked(chunk, reps, as_seed(seed))


def stick_breaking_batch(kappa: int, reps: int, seed=None) -> np.ndarray:
    """Rows ``W_j prod_{i<j}(1 - W_i)`` with ``W_i ~ beta(2, kappa - i)``."""
    if kappa < 1:
        raise ValueError("kappa must be >= 1")

    def chunk(rng, size):
        w = _beta2(rng, np.broadcast_to(kappa - np.arange(1, kappa + 1), (size, kappa)))
        out = np.empty((size, kappa))
        rem = np.ones(size)
        for j in range(kappa - 1):
            out[:, j] = w[:, j] * rem
            rem = rem - out[:, j]
        out[:, kappa - 1] = rem
        return out

    return run_chunked(chunk, reps, as_seed(seed))


def size_biased_first(points: np.ndarray, seed=None) -> np.ndarray:
    """For each row y, pick coordinate j with probability y_j and return it."""
    rng = as_seed(seed).generator()
    cum = np.cumsum(points, axis=1)
    u = rng.random(points.shape[0]) * cum[:, -1]
    idx = np.minimum(np.argmax(cum > u[:, None], axis=1), points.shape[1] - 1)
    return points[np.arange(points.shape[0]), idx]


def sample_uniform_simplex(kappa: int, seed=None) -> np.ndarray:
    return uniform_simplex_batch(kappa, 1, seed)[0]


def sample_stick_breaking(kappa: int, seed=None) -> Frequencies:
    return Frequencies(kappa, tuple(float(x) for x in stick_breaking_batch(kappa, 1, seed)[0]))


def first_frequency_batch(params: GnedinParams, reps: int, seed=None) -> np.ndarray:
    """Frequency of the first box under the mixture: kappa ~ law of K, then
    ``W_1 ~ beta(2, kappa - 1)``."""
    sampler = kappa_sampler(params)

    def chunk(rng, size):
        kap = sampler.draw(rng, size)
        return _beta2(rng, kap - 1)

    return run_chunked(chunk, reps, as_seed(seed))


# --------------------------------------------------------------------------
# tagged sequences


def uniform_tags(rng: np.random.Generator, k: int) -> np.ndarray:
    return rng.random(k)


def sample_tagged_sequence(n: int, params: GnedinParams, seed=None,
                           tag_sampler: Callable = uniform_tags) -> list:
    """``X_1..X_n``: each box gets an i.i.d. tag from ``tag_sampler`` (uniform
    on [0, 1) by default) and every ball carries the tag of its box."""
    if params.singleton:
        raise DegenerateError("gamma = 0 gives only singleton boxes")
    rng = as_seed(seed).generator()
    rgs = _sequential_chunk(rng, 1, n, params, None)[0]
    tags = tag_sampler(rng, int(rgs.max()) + 1)
    return [tags[j] for j in rgs]


def tagged_sequence_batch(n: int, params: GnedinParams, reps: int, seed=None) -> np.ndarray:
    def chunk(rng, size):
        rgs = _sequential_chunk(rng, size, n, params, None)
        tags = rng.random((size, n))
        return np.take_along_axis(tags, rgs.astype(np.int64), axis=1)

    return run_chunked(chunk, reps, as_seed(seed))


def predictive(state: PartitionState, tags: Sequence, params: GnedinParams):
    """Conditional law of the next tag: atoms ``[(T_j, omega_j)]`` on the
    tags already seen and the mass ``nu`` given to a fresh draw from mu."""
    if len(tags) != state.k:
        raise ValueError(f"need one tag per box: {len(tags)} tags for {state.k} boxes")
    if len(set(tags)) != len(tags):
        raise ValueError("tags must be distinct")
    omega, nu = succession(state, params)
    return list(zip(tags, omega)), nu


def predictive_step_batch(state: PartitionState, params: GnedinParams, reps: int, seed=None) -> np.ndarray:
    """Box index chosen for ball n+1 (``state.k`` means a new box), drawn
    from ``predictive`` weights."""
    tags = list(range(state.k))
    atoms, nu = predictive(state, tags, params)
    probs = np.array([w for _, w in atoms] + [nu])
    rng = as_seed(seed).generator()
    return rng.choice(len(probs), size=reps, p=probs / probs.sum())
