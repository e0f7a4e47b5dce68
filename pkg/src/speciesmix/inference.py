"""Exact distributions: number of boxes after n balls, terminal number of
boxes, posterior of the terminal count, occupancy laws and the law of the
first-box frequency."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .combinatorics import (
    LogValue,
    complex_log_gamma,
    factor_quadratic,
    generalized_stirling_table,
    lah_number,
    log_gamma_ratio,
    log_lah_row,
    rising_factorial,
)
from .model import (
    AdmissibilityError,
    DegenerateError,
    GibbsTriple,
    GnedinParams,
    _check_composition,
    log_v_row,
    restricted_params,
    triple_v_row,
    v_nk,
)

DEFAULT_EPS = 1e-10
DEFAULT_KAPPA_MAX = 10**6
ENVELOPE_SAFETY = 1.5


@dataclass
class PmfTable:
    """Probabilities on ``start, start+1, ...`` plus the mass beyond the table.

    ``tail_bound`` is the estimated mass of the untabulated tail (0 when the
    support is finite), so ``probs.sum() + tail_bound`` is 1 up to rounding.
    ``tail_envelope`` is the conservative power-law bound that drove the
    truncation decision.
    """

    start: int
    probs: np.ndarray
    tail_bound: float = 0.0
    log_probs: Optional[np.ndarray] = None
    tail_envelope: float = 0.0
    label: str = field(default="")

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.log_probs is None:
            with np.errstate(divide="ignore"):
                self.log_probs = np.log(self.probs)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self.probs))

    @property
    def stop(self) -> int:
        """Last tabulated index."""
        return self.start + len(self.probs) - 1

    @property
    def total(self) -> float:
        return math.fsum(self.probs)

    def __getitem__(self, k: int) -> float:
        i = k - self.start
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        if i < 0:
            return 0.0
        raise IndexError(f"{k} lies beyond the truncated table (last index {self.stop})")

    def mode(self) -> int:
        return int(self.start + np.argmax(self.probs))

    def to_rows(self) -> list[tuple[int, float]]:
        return [(int(k), float(p)) for k, p in zip(self.support, self.probs)]

    def to_dict(self) -> dict:
        return {
            "support": [int(self.start), int(self.stop)],
            "probs": [float(p) for p in self.probs],
            "tail_bound": float(self.tail_bound),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "PmfTable":
        return cls(int(d["support"][0]), np.array(d["probs"], dtype=float), float(d["tail_bound"]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "probability"])
        for k, p in self.to_rows():
            w.writerow([k, repr(p)])
        return buf.getvalue()


def _table_from_logs(start: int, logp: np.ndarray, **kw) -> PmfTable:
    return PmfTable(start, np.exp(logp), log_probs=logp, **kw)


# --------------------------------------------------------------------------
# number of boxes after n balls


def pmf_Kn(n: int, params: GnedinParams) -> PmfTable:
    """``P(K_n = k) = d_{n,k} v_{n,k}`` for k = 1..n, with Lah numbers d.

    Evaluated from ``P(K_n = 1)`` through the ratios of consecutive terms,
    ``(n-k) g(k) / (k (k+1) (gamma + n-k-1))``, which keeps the relative
    error near machine precision for large n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if params.singleton:
        probs = np.zeros(n)
        probs[-1] = 1.0
        return PmfTable(1, probs, label=f"K_{n}")
    g = params.gamma
    # P(K_n = 1) = prod_{m=1}^{n-1} (m+1)(gamma+m-1) / h(m); factors are near 1
    m = np.arange(1, n, dtype=float)
    first = float(np.sum(np.log((m + 1) * (g + m - 1) / params.denominator(m)).astype(np.longdouble)))
    k = np.arange(1, n, dtype=float)
    with np.errstate(divide="ignore"):
        steps = np.log((n - k) * params.new_box_weight(k) / (k * (k + 1) * (g + n - k - 1)))
    logp = first + _cumulative(steps)
    return _table_from_logs(1, logp, label=f"K_{n}")


def pmf_Kn_triple(n: int, triple: GibbsTriple) -> PmfTable:
    """``P(K_n = k) = d_{n,k}(alpha) v_{n,k}`` for any Gibbs triple."""
    logd, sgnd = generalized_stirling_table(n, triple.alpha)
    logv, sgnv = triple_v_row(n, triple)
    sgn = sgnd[n - 1] * sgnv
    logp = np.where(sgn > 0, logd[n - 1] + logv, -np.inf)
    return _table_from_logs(1, logp, label=f"K_{n}")


def fisher_Kn(n: int, k: int, kappa: int) -> float:
    """``P(K_n = k)`` for the partition with exactly ``kappa`` boxes:
    ``d_{n,k} prod_{i<k}(kappa - i) / (kappa+1)_{n-1}``."""
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if k > kappa:
        return 0.0
    out = lah_number(n, k) * rising_factorial(kappa - k + 1, k - 1)
    return float(out / rising_factorial(kappa + 1, n - 1))


# --------------------------------------------------------------------------
# tails


def _power_tail(logterm: Callable[[float], float], x0: float, p: float) -> float:
    """Approximate ``sum_{j > x0 - 1/2} t(j)`` for a term ``t`` that decays like
    ``x^{-p}`` (p > 1): midpoint-rule integral from ``x0`` plus the first
    derivative correction.  The substitution ``x = x0 u^{-1/(p-1)}`` turns
    the integrand into a bounded smooth function on (0, 1]."""
    lt0 = logterm(x0)
    if lt0 == -math.inf:
        return 0.0
    leading = math.exp(lt0) * x0 / (p - 1.0)
    if leading < 1e-20:
        return leading

    def phi(u):
        if u <= 0:
            u = 1e-300
        x = x0 * u ** (-1.0 / (p - 1.0))
        if not math.isfinite(x):
            return phi_inf
        return math.exp(logterm(x) + p * math.log(x / x0) - lt0)

    # phi tends to the limit of t(x) x^p, reached by x ~ 1e12 x0
    x_far = x0 * 1e12
    phi_inf = math.exp(logterm(x_far) + p * math.log(x_far / x0) - lt0)
    val, _ = integrate.quad(phi, 0.0, 1.0, epsabs=1e-14, epsrel=1e-11, limit=200)
    integral = leading * val
    return integral - p * math.exp(lt0) / (24.0 * x0)


def _envelope(last_logp: float, last_k: int, gamma: float) -> float:
    # c' sum_{j>K} j^{-gamma-1} <= c' K^{-gamma} / gamma with c' = 1.5 P(K) K^{gamma+1}
    c = ENVELOPE_SAFETY * math.exp(last_logp + (gamma + 1) * math.log(last_k))
    return c * last_k ** (-gamma) / gamma


# --------------------------------------------------------------------------
# terminal number of boxes


def _log_mix_constant(params: GnedinParams) -> float:
    """``log [Gamma(z1+1) Gamma(z2+1) / Gamma(gamma)]``."""
    fq = factor_quadratic(params.gamma, params.zeta)
    val = complex_log_gamma(fq.z1 + 1) + complex_log_gamma(fq.z2 + 1) - complex_log_gamma(params.gamma)
    return val.real


def log_pmf_K(params: GnedinParams, kappa_max: int) -> np.ndarray:
    """``log P(K = kappa)`` for kappa = 1..kappa_max::

        Gamma(z1+1) Gamma(z2+1) / Gamma(gamma) * prod_{i<kappa}(i^2 - gamma i + zeta)
                                                 / (kappa! (kappa-1)!)

    accumulated as successive ratios ``g(kappa) / (kappa (kappa+1))``.
    """
    if params.gamma <= 0:
        raise DegenerateError("gamma = 0: only singleton boxes, K is infinite")
    if params.k0 is not None:
        kappa_max = min(kappa_max, params.k0)
    i = np.arange(1, kappa_max, dtype=float)
    g = params.new_box_weight(i)
    # g(i) / (i (i+1)) - 1 = (zeta - (gamma+1) i) / (i (i+1))
    with np.errstate(divide="ignore", invalid="ignore"):
        steps = np.log1p((params.zeta - (params.gamma + 1) * i) / (i * (i + 1)))
    steps = np.where(g > 0, steps, -np.inf)
    return _log_mix_constant(params) + _cumulative(steps)


def _cumulative(steps: np.ndarray) -> np.ndarray:
    """``[0, s0, s0+s1, ...]`` accumulated in extended precision."""
    acc = np.cumsum(steps.astype(np.longdouble))
    return np.concatenate(([0.0], acc.astype(float)))


def pmf_K_zeta0(gamma: float, kappa_max: int) -> np.ndarray:
    """``P(K = kappa) = gamma (1-gamma)_{kappa-1} / kappa!`` (zeta = 0), direct."""
    kappa = np.arange(1, kappa_max + 1, dtype=float)
    if 0 < gamma < 1:
        return np.exp(math.log(gamma) + gammaln(kappa - gamma) - gammaln(1 - gamma) - gammaln(kappa + 1))
    return np.array([gamma * float(rising_factorial(1 - gamma, int(k) - 1)) / math.factorial(int(k))
                     for k in kappa])


def _log_K_term(params: GnedinParams, anchor_k: int, anchor_logp: float) -> Callable[[float], float]:
    fq = factor_quadratic(params.gamma, params.zeta)
    base = (log_gamma_ratio(anchor_k, fq.s1, 1) + log_gamma_ratio(anchor_k, fq.s2, 0)).real

    def logterm(x: float) -> float:
        return anchor_logp + (log_gamma_ratio(x, fq.s1, 1) + log_gamma_ratio(x, fq.s2, 0)).real - base

    return logterm


def K_tail_mass(params: GnedinParams, kappa: int, logp_kappa: float) -> float:
    """Estimated ``P(K > kappa)`` from the value ``log P(K = kappa)``."""
    if params.k0 is not None:
        return 0.0
    logterm = _log_K_term(params, kappa, logp_kappa)
    return max(0.0, _power_tail(logterm, kappa + 0.5, params.gamma + 1.0))


def pmf_K(params: GnedinParams, eps: float = DEFAULT_EPS,
          kappa_max: int = DEFAULT_KAPPA_MAX) -> PmfTable:
    """Law of the terminal number of boxes, truncated adaptively.

    The table grows geometrically until the power-law envelope of the
    remaining mass drops below ``eps`` or ``kappa_max`` is reached; in the
    finite-support case it is exact on ``1..k0``.
    """
    if params.singleton:
        raise DegenerateError("gamma = 0: only singleton boxes, K is infinite")
    if params.k0 is not None:
        logp = log_pmf_K(params, params.k0)
        return _table_from_logs(1, logp, label="K")
    size = 64
    while True:
        size = min(size, kappa_max)
        logp = log_pmf_K(params, size)
        env = _envelope(logp[-1], size, params.gamma)
        if env < eps or size >= kappa_max:
            break
        size *= 4
    tail = K_tail_mass(params, size, float(logp[-1]))
    return _table_from_logs(1, logp, tail_bound=tail, tail_envelope=env, label="K")


@dataclass(frozen=True)
class TailConstant:
    """Large-kappa behaviour ``P(K = kappa) ~ c / kappa^(gamma+1)``."""

    numerical: float            # extrapolated limit of P(K=kappa) kappa^(gamma+1)
    at_kappa: dict              # raw P(K=kappa) kappa^(gamma+1) at sample points
    printed: float              # Gamma(z1+1)Gamma(z2+1) / (Gamma(gamma)Gamma(s1+1)Gamma(s2+2))
    corrected: float            # same with Gamma(s2+1) in place of Gamma(s2+2)
    supported: str              # which closed form the numerical limit matches (1%)

    def as_dict(self) -> dict:
        return {
            "numerical": self.numerical,
            "at_kappa": {str(k): v for k, v in self.at_kappa.items()},
            "printed": self.printed,
            "corrected": self.corrected,
            "supported": self.supported,
        }


def _real_gamma_ratio(num: Sequence[complex], den: Sequence[complex]) -> float:
    logs = sum(complex_log_gamma(z) for z in num) - sum(complex_log_gamma(z) for z in den)
    return math.exp(logs.real) * math.cos(logs.imag)


def tail_constant(params: GnedinParams, kappas: Sequence[int] = (10**3, 10**4)) -> TailConstant:
    """Tail constant from both closed-form readings and from the exact masses.

    The numerical value divides ``P(K=kappa) kappa^(gamma+1)`` at the largest
    sample point by its known Stirling-series correction factor, so it is
    the limit up to O(kappa^-9).
    """
    if params.k0 is not None:
        raise ValueError("finite support: no power-law tail")
    if params.gamma <= 0:
        raise DegenerateError("gamma = 0: only singleton boxes, K is infinite")
    fq = factor_quadratic(params.gamma, params.zeta)
    top = max(kappas)
    logp = log_pmf_K(params, top)
    g = params.gamma
    at = {int(k): math.exp(logp[k - 1] + (g + 1) * math.log(k)) for k in kappas}
    corr = (log_gamma_ratio(top, fq.s1, 1) + log_gamma_ratio(top, fq.s2, 0)).real + (g + 1) * math.log(top)
    numerical = at[top] / math.exp(corr)
    printed = _real_gamma_ratio([fq.z1 + 1, fq.z2 + 1], [g, fq.s1 + 1, fq.s2 + 2])
    corrected = _real_gamma_ratio([fq.z1 + 1, fq.z2 + 1], [g, fq.s1 + 1, fq.s2 + 1])
    matches = [name for name, c in (("corrected", corrected), ("printed", printed))
               if abs(c - numerical) <= 0.01 * abs(numerical)]
    return TailConstant(numerical, at, printed, corrected, "+".join(matches) or "neither")


# --------------------------------------------------------------------------
# posterior of K given K_n = k (zeta = 0)


def _posterior_first_log(n: int, k: int, gamma: float) -> float:
    # kappa = k term: (n-1)! prod_{j=1}^{k} (gamma + n - j) / (k + n - 1)!
    s = math.fsum(math.log(gamma + n - j) for j in range(1, k + 1))
    return math.lgamma(n) + s - math.lgamma(k + n)


def _posterior_logs(n: int, k: int, gamma: float, top: int) -> np.ndarray:
    kap = np.arange(k, top, dtype=float)
    # ratio of consecutive terms: kappa (kappa-gamma) / ((kappa-k+1)(kappa+n))
    excess = (k - 1) * n - (gamma + n - k + 1) * kap
    steps = np.log1p(excess / ((kap - k + 1) * (kap + n)))
    return _posterior_first_log(n, k, gamma) + _cumulative(steps)


def _posterior_table(n: int, k: int, gamma: float, eps: float, kappa_max: int, label: str) -> PmfTable:
    p = n + gamma + 1.0 - k      # tail decays like kappa^{-p}
    top = max(k + 64, 2 * k)
    while True:
        top = min(top, max(kappa_max, k))
        logp = _posterior_logs(n, k, gamma, top)
        last = logp[-1]
        env = ENVELOPE_SAFETY * math.exp(last + p * math.log(top)) * top ** (1 - p) / (p - 1)
        if env < eps or top >= kappa_max:
            break
        top *= 4

    def logterm(x: float) -> float:
        d = (log_gamma_ratio(x, 0, 1 - k) - log_gamma_ratio(top, 0, 1 - k)
             + log_gamma_ratio(x, -gamma, n) - log_gamma_ratio(top, -gamma, n))
        return last + d.real

    tail = max(0.0, _power_tail(logterm, top + 0.5, p))
    return _table_from_logs(k, logp, tail_bound=tail, tail_envelope=env, label=label)


def posterior_K(n: int, k: int, gamma: float, eps: float = DEFAULT_EPS,
                kappa_max: int = 10**5) -> PmfTable:
    """``P(K = kappa | K_n = k)`` for zeta = 0, 0 < gamma < 1::

        (n-1)! / ((k-1)! (kappa+n-1)!) prod_{i=1}^{k-1}(kappa-i)
            prod_{j=1}^{k}(gamma+n-j) prod_{l=k}^{kappa-1}(l-gamma)

    Conditioning on any particular partition of ``{1..n}`` with k blocks
    gives the same law.
    """
    if not (0 < gamma < 1):
        raise AdmissibilityError(f"posterior needs 0 < gamma < 1 (zeta = 0), got {gamma}")
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    return _posterior_table(n, k, gamma, eps, kappa_max, label=f"K|K_{n}={k}")


def restricted_pmf_K(initial_sizes: Sequence[int], gamma: float, eps: float = DEFAULT_EPS,
                     kappa_max: int = 10**5) -> PmfTable:
    """Terminal number of boxes when the process starts from an allocation of
    ``{1..m}`` into k boxes (zeta = 0), valid on ``-(m-k) < gamma < k``.

    It has the same form as the posterior given ``K_m = k``; for
    0 < gamma < 1 the two coincide.
    """
    params = restricted_params(gamma, initial_sizes)
    m, k = _check_composition(initial_sizes)
    return _posterior_table(m, k, params.gamma, eps, kappa_max, label=f"K|start{tuple(initial_sizes)}")


def restricted_pmf_Kn(n: int, initial_sizes: Sequence[int], gamma: float) -> PmfTable:
    """Exact law of ``K_n`` from an initial allocation, by forward propagation
    of the box-count chain with new-box probability ``k(k-gamma)/(t(t+gamma))``."""
    params = restricted_params(gamma, initial_sizes)
    m, k = _check_composition(initial_sizes)
    if n < m:
        raise ValueError("n must be at least the size of the initial allocation")
    probs = np.zeros(n - m + 1)      # index j <-> K = k + j
    probs[0] = 1.0
    g = params.gamma
    for t in range(m, n):
        ks = k + np.arange(t - m + 1)
        nu = ks * (ks - g) / (t * (t + g))
        nxt = np.zeros_like(probs)
        nxt[: t - m + 1] += probs[: t - m + 1] * (1 - nu)
        nxt[1: t - m + 2] += probs[: t - m + 1] * nu
        probs = nxt
    return PmfTable(k, probs, label=f"K_{n}|start")


# --------------------------------------------------------------------------
# occupancy laws


def joint_counts_pmf(sizes: Sequence[int], params: GnedinParams) -> LogValue:
    """``P(K_n = k, box sizes = sizes in least-element order)``
    ``= v_{n,k} n! prod_j n_j / (n_j + ... + n_k)``."""
    n, k = _check_composition(sizes)
    tails = np.cumsum(np.asarray(sizes, dtype=float)[::-1])[::-1]
    logs = math.fsum(np.log(np.asarray(sizes, dtype=float) / tails))
    return v_nk(n, k, params) * LogValue(math.lgamma(n + 1) + logs, 1)


def multiplicities_pmf(mults: Sequence[int], params: GnedinParams) -> LogValue:
    """``P(K_{n,r} = k_r for all r) = v_{n,k} n! / prod_r k_r!`` where
    ``mults[r-1] = k_r`` counts boxes holding exactly r balls."""
    mults = [int(x) for x in mults]
    if not mults or any(x < 0 for x in mults):
        raise ValueError("multiplicities must be nonnegative integers")
    n = sum(r * x for r, x in enumerate(mults, start=1))
    k = sum(mults)
    if n < 1 or k < 1:
        raise ValueError("multiplicity vector describes an empty partition")
    if len(mults) > n and any(mults[n:]):
        raise ValueError("inconsistent multiplicity vector")
    tail = math.lgamma(n + 1) - math.fsum(math.lgamma(x + 1) for x in mults)
    return v_nk(n, k, params) * LogValue(tail, 1)


# --------------------------------------------------------------------------
# first-box frequency (zeta = 0)


@dataclass(frozen=True)
class FirstFrequencyLaw:
    """Law of the limiting frequency of the first box when zeta = 0:
    an atom ``gamma`` at 1 plus ``(1-gamma)`` times beta(gamma, 1)."""

    gamma: float

    def __post_init__(self):
        if not (0 < self.gamma < 1):
            raise AdmissibilityError(f"need 0 < gamma < 1, got {self.gamma}")

    @property
    def atom(self) -> float:
        return self.gamma

    def density(self, y):
        """Density of the continuous part on (0, 1) (integrates to 1 - gamma)."""
        y = np.asarray(y, dtype=float)
        g = self.gamma
        with np.errstate(divide="ignore"):
            return np.where((y > 0) & (y < 1), (1 - g) * g * y ** (g - 1), 0.0)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        g = self.gamma
        return np.where(y >= 1, 1.0, np.where(y > 0, (1 - g) * np.clip(y, 0, 1) ** g, 0.0))

    def moment(self, r: float) -> float:
        """``E[P^r] = gamma + (1-gamma) gamma / (gamma + r)``."""
        g = self.gamma
        return g + (1 - g) * g / (g + r)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        g = self.gamma
        atom = rng.random(size) < g
        cont = rng.random(size) ** (1.0 / g)
        return np.where(atom, 1.0, cont)


def freq1_moment(n: int, gamma: float) -> float:
    """``E[sum_j P_j^n] = E[P_1^(n-1)] = n gamma / (n + gamma - 1)``."""
    if not (0 < gamma < 1):
        raise AdmissibilityError(f"need 0 < gamma < 1, got {gamma}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * gamma / (n + gamma - 1)
