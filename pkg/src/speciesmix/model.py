"""Parameter domains, succession rules, partition probabilities and the
generic Gibbs-triple engine.

Two families live here:

* the quadratic-rate family ``(gamma, zeta)`` of genus -1, where a new box
  opens with probability ``(k^2 - gamma k + zeta) / (n^2 + gamma n + zeta)``;
* the Ewens-Pitman family ``(alpha, theta)``, used for comparison and, at
  ``alpha = -1, theta = kappa``, as the fixed-``kappa`` building block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .combinatorics import (
    LogValue,
    complex_rising_factorial,
    factor_quadratic,
    rising_factorial,
)

ROOT_TOL = 1e-9
MAX_EXACT_N = 10**6


class AdmissibilityError(ValueError):
    """Raised when parameters violate the positivity conditions of a family."""


class DegenerateError(ValueError):
    """Raised when a quantity is undefined because the model is degenerate
    (``gamma = 0``: only singleton boxes, so the number of boxes is infinite)."""


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class GnedinParams:
    """Validated ``(gamma, zeta)``.

    ``k0`` is None when ``k^2 - gamma k + zeta > 0`` for every positive
    integer k (infinite support); otherwise it is the first integer root and
    the partition never has more than ``k0`` boxes.  ``min_k`` is the block
    count from which positivity is required (1 unless the process starts
    from an initial allocation).
    """

    gamma: float
    zeta: float
    k0: Optional[int] = None
    min_k: int = 1

    @property
    def case(self) -> str:
        return "infinite" if self.k0 is None else f"root_at({self.k0})"

    @property
    def finite_support(self) -> bool:
        return self.k0 is not None

    @property
    def singleton(self) -> bool:
        """gamma = 0 and no initial allocation: every ball opens a new box."""
        return self.gamma == 0 and self.min_k == 1

    def new_box_weight(self, k):
        """``g(k) = k^2 - gamma k + zeta``, exactly zero at ``k0``."""
        k = np.asarray(k, dtype=float)
        out = k * k - self.gamma * k + self.zeta
        if self.k0 is not None:
            out = np.where(k == self.k0, 0.0, out)
        return out if out.ndim else float(out)

    def denominator(self, n):
        """``h(n) = n^2 + gamma n + zeta``."""
        n = np.asarray(n, dtype=float)
        out = n * n + self.gamma * n + self.zeta
        return out if out.ndim else float(out)


def _quad(gamma: float, zeta: float, k: float) -> float:
    return k * k - gamma * k + zeta


def validate_gnedin(gamma: float, zeta: float) -> GnedinParams:
    """Check admissibility of ``(gamma, zeta)`` and classify the support.

    Requires ``gamma >= 0`` and either ``k^2 - gamma k + zeta > 0`` for all
    k >= 1, or positivity on ``1..k0-1`` with an exact root at ``k0``.
    A value within ``ROOT_TOL`` of zero counts as a root; a negative value
    at the first nonpositive integer is rejected.
    """
    gamma = float(gamma)
    zeta = float(zeta)
    if not (math.isfinite(gamma) and math.isfinite(zeta)):
        raise AdmissibilityError("gamma and zeta must be finite")
    if gamma < 0:
        raise AdmissibilityError(f"gamma must be >= 0, got {gamma}")
    disc = gamma * gamma - 4 * zeta
    k0 = None
    if disc >= 0:
        r1 = (gamma - math.sqrt(disc)) / 2
        start = max(1, math.floor(r1))
        for k in range(start, start + 3):
            q = _quad(gamma, zeta, k)
            tol = ROOT_TOL * max(1.0, k * k)
            if abs(q) <= tol:
                k0 = k
                break
            if q < 0:
                raise AdmissibilityError(
                    f"k^2 - gamma*k + zeta = {q:.6g} < 0 at k={k} without a root at "
                    f"a smaller integer (gamma={gamma}, zeta={zeta})")
    if 1 + gamma + zeta <= 0:
        raise AdmissibilityError(
            f"n^2 + gamma*n + zeta must be positive for n >= 1 (gamma={gamma}, zeta={zeta})")
    return GnedinParams(gamma, zeta, k0)


def restricted_params(gamma: float, initial_sizes: Sequence[int]) -> GnedinParams:
    """Parameters for a start from an initial allocation with ``zeta = 0``.

    The admissible range is ``-(m - k) < gamma < k`` where m is the number of
    balls and k the number of boxes initially occupied.
    """
    m, k = _check_composition(initial_sizes)
    gamma = float(gamma)
    if not (-(m - k) < gamma < k):
        raise AdmissibilityError(
            f"gamma={gamma} outside the range -(m-k) < gamma < k = ({-(m - k)}, {k}) "
            f"for an initial allocation with m={m}, k={k}")
    return GnedinParams(gamma, 0.0, None, min_k=k)


@dataclass(frozen=True)
class EwensPitmanParams:
    """``(alpha, theta)`` with ``kappa`` set for Fisher's subfamily
    (``alpha < 0``, ``theta = -alpha * kappa``)."""

    alpha: float
    theta: float
    kappa: Optional[int] = None


def validate_ewens_pitman(alpha: float, theta: float) -> EwensPitmanParams:
    alpha = float(alpha)
    theta = float(theta)
    if 0 <= alpha < 1:
        if theta <= -alpha:
            raise AdmissibilityError(f"need theta > -alpha, got alpha={alpha}, theta={theta}")
        return EwensPitmanParams(alpha, theta)
    if alpha < 0:
        ratio = theta / -alpha
        kappa = round(ratio)
        if kappa < 1 or abs(ratio - kappa) > ROOT_TOL * max(1.0, abs(ratio)):
            raise AdmissibilityError(
                f"for alpha < 0, theta/(-alpha) must be a positive integer, got {ratio}")
        return EwensPitmanParams(alpha, theta, int(kappa))
    raise AdmissibilityError(f"alpha must be < 1, got {alpha}")


def fisher_params(kappa: int) -> EwensPitmanParams:
    """The ``alpha = -1, theta = kappa`` partition with exactly kappa boxes."""
    return validate_ewens_pitman(-1.0, float(kappa))


# --------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class PartitionState:
    """A partition of ``{1..n}`` with blocks ordered by their least element."""

    n: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(int(x) for x in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if self.n < 1:
            raise ValueError("a partition needs n >= 1")
        seen = sorted(x for b in blocks for x in b)
        if seen != list(range(1, self.n + 1)):
            raise ValueError(f"blocks do not partition [1..{self.n}]: {blocks}")
        if any(len(b) == 0 or list(b) != sorted(b) for b in blocks):
            raise ValueError("blocks must be nonempty and sorted")
        mins = [b[0] for b in blocks]
        if mins != sorted(mins):
            raise ValueError("blocks must be listed by increasing least element")

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    @classmethod
    def from_labels(cls, labels: Sequence) -> "PartitionState":
        """Group positions 1..n by equal label (tags, box ids, ...)."""
        order: dict = {}
        blocks: list = []
        for i, lab in enumerate(labels, start=1):
            if lab not in order:
                order[lab] = len(blocks)
                blocks.append([])
            blocks[order[lab]].append(i)
        return cls(len(labels), tuple(tuple(b) for b in blocks))

    @classmethod
    def from_rgs(cls, rgs: Sequence[int]) -> "PartitionState":
        """From a restricted growth string (0-based block index per ball)."""
        return cls.from_labels([int(x) for x in rgs])

    def rgs(self) -> tuple:
        out = [0] * self.n
        for j, b in enumerate(self.blocks):
            for x in b:
                out[x - 1] = j
        return tuple(out)

    def restrict(self, m: int) -> "PartitionState":
        """The induced partition of ``{1..m}``."""
        return PartitionState.from_rgs(self.rgs()[:m])

    def to_dict(self) -> dict:
        return {"n": self.n, "blocks": [list(b) for b in self.blocks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d) -> "PartitionState":
        """Accepts ``{"n": .., "blocks": [[..], ..]}`` or a bare list of blocks."""
        if isinstance(d, list):
            d = {"blocks": d}
        blocks = [sorted(int(x) for x in b) for b in d["blocks"]]
        blocks.sort(key=lambda b: b[0])
        n = int(d.get("n", sum(len(b) for b in blocks)))
        return cls(n, tuple(tuple(b) for b in blocks))

    @classmethod
    def from_json(cls, s: str) -> "PartitionState":
        return cls.from_dict(json.loads(s))


def _check_composition(sizes: Sequence[int]) -> tuple[int, int]:
    sizes = list(sizes)
    if not sizes or any(int(s) != s or s < 1 for s in sizes):
        raise ValueError(f"sizes must be a nonempty list of positive integers, got {sizes}")
    n = int(sum(sizes))
    if n > MAX_EXACT_N:
        raise ValueError(f"exact evaluation is capped at n <= {MAX_EXACT_N}")
    return n, len(sizes)


# --------------------------------------------------------------------------
# succession rules


def succession(state: PartitionState, params: GnedinParams) -> tuple[list, float]:
    """Probabilities of placing ball ``n+1`` in each old box, and in a new one."""
    n, k = state.n, state.k
    if k < params.min_k:
        raise ValueError("state has fewer boxes than the initial allocation")
    h = params.denominator(n)
    nu = params.new_box_weight(k) / h
    scale = (n - k + params.gamma) / h
    omega = [(nj + 1) * scale for nj in state.sizes]
    return omega, float(nu)


def ep_succession(state: PartitionState, params: EwensPitmanParams) -> tuple[list, float]:
    n, k = state.n, state.k
    if params.kappa is not None and k > params.kappa:
        raise ValueError(f"state has {k} boxes but the Fisher partition allows {params.kappa}")
    denom = n + params.theta
    omega = [(nj - params.alpha) / denom for nj in state.sizes]
    nu = (params.theta + k * params.alpha) / denom
    if params.kappa is not None and k == params.kappa:
        nu = 0.0
    return omega, nu


# --------------------------------------------------------------------------
# partition probabilities


def _sum_log_abs(values: np.ndarray) -> LogValue:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return LogValue.one()
    if np.any(values == 0):
        return LogValue.zero()
    sign = -1 if np.count_nonzero(values < 0) % 2 else 1
    logs = np.log(np.abs(values))
    total = math.fsum(logs) if values.size <= 4096 else float(np.sum(logs))
    return LogValue(total, sign)


def v_nk(n: int, k: int, params: GnedinParams) -> LogValue:
    """Gibbs weight ``v_{n,k}`` in its raw product form::

        (gamma)_{n-k} prod_{i=1}^{k-1} (i^2 - gamma i + zeta)
        ----------------------------------------------------
                prod_{m=1}^{n-1} (m^2 + gamma m + zeta)
    """
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if n > MAX_EXACT_N:
        raise ValueError(f"exact evaluation is capped at n <= {MAX_EXACT_N}")
    if params.k0 is not None and k > params.k0:
        return LogValue.zero()
    num = rising_factorial(params.gamma, n - k)
    num = num * _sum_log_abs(params.new_box_weight(np.arange(1, k)))
    return num / _sum_log_abs(params.denominator(np.arange(1, n)))


def v_nk_factored(n: int, k: int, params: GnedinParams) -> LogValue:
    """``v_{n,k}`` through the linear factorization of both quadratics::

        (gamma)_{n-k} (s1+1)_{k-1} (s2+1)_{k-1} / ((z1+1)_{n-1} (z2+1)_{n-1})

    with the complex Pochhammer symbols evaluated by log-gamma.
    """
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    fq = factor_quadratic(params.gamma, params.zeta)
    head = rising_factorial(params.gamma, n - k)
    if head.is_zero:
        return head
    logs = (complex_rising_factorial(fq.s1 + 1, k - 1)
            + complex_rising_factorial(fq.s2 + 1, k - 1)
            - complex_rising_factorial(fq.z1 + 1, n - 1)
            - complex_rising_factorial(fq.z2 + 1, n - 1))
    if logs.real == -math.inf:
        return LogValue.zero()
    # the imaginary part is a multiple of pi: it only carries the sign
    sign = 1 if math.cos(logs.imag) > 0 else -1
    return head * LogValue(logs.real, sign)


def log_v_row(n: int, params: GnedinParams) -> tuple[np.ndarray, np.ndarray]:
    """``log |v_{n,k}|`` and signs for k = 1..n (index 0 is k = 1)."""
    k = np.arange(1, n + 1)
    lf, sf = _cumlog(params.gamma + np.arange(0, n))              # (gamma)_j, j = 0..n
    lg, sg = _cumlog(params.new_box_weight(np.arange(1, n)))      # prod_{i<=j} g(i)
    lh, sh = _cumlog(params.denominator(np.arange(1, n)))
    logv = lf[n - k] + lg[k - 1] - lh[n - 1]
    sgn = sf[n - k] * sg[k - 1] * sh[n - 1]
    return np.where(sgn == 0, -np.inf, logv), sgn


def _cumlog(values) -> tuple[np.ndarray, np.ndarray]:
    """Prefix products ``prod_{i<j} values[i]`` for j = 0..len in log/sign form."""
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(values))
    zero = np.cumsum(values == 0) > 0
    neg = np.cumsum(values < 0) % 2
    cl = np.concatenate(([0.0], np.cumsum(np.where(values == 0, 0.0, logs))))
    cs = np.concatenate(([1], np.where(zero, 0, np.where(neg == 1, -1, 1))))
    cl = np.where(cs == 0, -np.inf, cl)
    return cl, cs


def _log_factorial_sum(sizes: Sequence[int]) -> float:
    return math.fsum(math.lgamma(s + 1) for s in sizes)


def eppf(sizes: Sequence[int], params: GnedinParams) -> LogValue:
    """Probability of one particular partition with the given block sizes."""
    n, k = _check_composition(sizes)
    return v_nk(n, k, params) * LogValue(_log_factorial_sum(sizes), 1)


def ep_eppf(sizes: Sequence[int], params: EwensPitmanParams) -> LogValue:
    """Ewens-Pitman EPPF ``prod_{i<k}(theta + i alpha) / (theta+1)_{n-1}
    * prod_j (1 - alpha)_{n_j - 1}``."""
    n, k = _check_composition(sizes)
    if params.kappa is not None and k > params.kappa:
        return LogValue.zero()
    out = _sum_log_abs(params.theta + params.alpha * np.arange(1, k))
    out = out / rising_factorial(params.theta + 1, n - 1)
    for s in sizes:
        out = out * rising_factorial(1 - params.alpha, s - 1)
    return out


def restricted_eppf(sizes: Sequence[int], initial_sizes: Sequence[int], gamma: float) -> LogValue:
    """Probability of a partition of ``{1..n}`` given the process started from
    an allocation of ``{1..m}`` with block sizes ``initial_sizes`` (zeta = 0).

    Computed as the product of succession probabilities from ``(m, k)`` to
    ``(n, K)``, which equals ``p(sizes) / p(initial_sizes)`` wherever the
    latter is nonzero and stays finite at the edges of the range.
    """
    params = restricted_params(gamma, initial_sizes)
    n, big_k = _check_composition(sizes)
    m, k = _check_composition(initial_sizes)
    if big_k < k or any(a < b for a, b in zip(sizes, initial_sizes)):
        raise ValueError(f"sizes {list(sizes)} do not extend the initial sizes {list(initial_sizes)}")
    if n - big_k < m - k:
        raise ValueError("inconsistent extension: fewer repeat placements than initially")
    g = params.gamma
    out = _sum_log_abs(g + np.arange(m - k, n - big_k))
    out = out * _sum_log_abs(params.new_box_weight(np.arange(k, big_k)))
    out = out / _sum_log_abs(params.denominator(np.arange(m, n)))
    return out * LogValue(_log_factorial_sum(sizes) - _log_factorial_sum(initial_sizes), 1)


# --------------------------------------------------------------------------
# Gibbs triples


@dataclass(frozen=True)
class GibbsTriple:
    """Weight functions ``(f, g, h)`` of a genus-``alpha`` Gibbs partition.

    They must satisfy ``(n - alpha k) f(n - k) + g(k) = h(n)`` for
    1 <= k <= n, and then ``v_{n,k} = prod_{i=0}^{n-k-1} f(i)
    prod_{j=1}^{k-1} g(j) / prod_{m=1}^{n-1} h(m)`` solves the backward
    recursion.  All three callables accept numpy arrays.
    """

    alpha: float
    f: Callable
    g: Callable
    h: Callable
    g_root: Optional[int] = None
    name: str = field(default="", compare=False)

    def new_box_probability(self, n, k):
        return self.g(k) / self.h(n)


def gibbs_triple_for(params) -> GibbsTriple:
    """The triple realising either family."""
    if isinstance(params, GnedinParams):
        g_, z_ = params.gamma, params.zeta
        return GibbsTriple(
            alpha=-1.0,
            f=lambda i: np.asarray(i, dtype=float) + g_,
            g=params.new_box_weight,
            h=params.denominator,
            g_root=params.k0,
            name=f"gnedin(gamma={g_}, zeta={z_})",
        )
    if isinstance(params, EwensPitmanParams):
        a_, t_ = params.alpha, params.theta
        return GibbsTriple(
            alpha=a_,
            f=lambda i: np.ones_like(np.asarray(i, dtype=float)),
            g=lambda k: a_ * np.asarray(k, dtype=float) + t_,
            h=lambda n: np.asarray(n, dtype=float) + t_,
            g_root=params.kappa,
            name=f"ewens_pitman(alpha={a_}, theta={t_})",
        )
    raise TypeError(f"unsupported parameter object {params!r}")


def triple_v(n: int, k: int, triple: GibbsTriple) -> LogValue:
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    out = _sum_log_abs(triple.f(np.arange(0, n - k)))
    out = out * _sum_log_abs(triple.g(np.arange(1, k)))
    return out / _sum_log_abs(triple.h(np.arange(1, n)))


def triple_v_row(n: int, triple: GibbsTriple) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, n + 1)
    lf, sf = _cumlog(triple.f(np.arange(0, n)))
    lg, sg = _cumlog(triple.g(np.arange(1, n)))
    lh, sh = _cumlog(triple.h(np.arange(1, n)))
    sgn = sf[n - k] * sg[k - 1] * sh[n - 1]
    return np.where(sgn == 0, -np.inf, lf[n - k] + lg[k - 1] - lh[n - 1]), sgn


def identity_residual(triple: GibbsTriple, n_max: int) -> float:
    """Max relative residual of ``(n - alpha k) f(n-k) + g(k) - h(n)``."""
    n, k = np.meshgrid(np.arange(1, n_max + 1), np.arange(1, n_max + 1), indexing="ij")
    mask = k <= n
    n, k = n[mask].astype(float), k[mask].astype(float)
    lhs = (n - triple.alpha * k) * triple.f(n - k) + triple.g(k)
    rhs = triple.h(n)
    scale = np.maximum.reduce([np.abs(lhs), np.abs(rhs), np.ones_like(rhs)])
    return float(np.max(np.abs(lhs - rhs) / scale))


def recursion_residual(triple: GibbsTriple, n_max: int) -> float:
    """Max relative residual of ``v_{n,k} - (n - alpha k) v_{n+1,k} - v_{n+1,k+1}``
    over 1 <= k <= n <= n_max, with v from ``triple_v_row``."""
    worst = 0.0
    prev_l, prev_s = triple_v_row(1, triple)
    for n in range(1, n_max + 1):
        nxt_l, nxt_s = triple_v_row(n + 1, triple)
        k = np.arange(1, n + 1)
        with np.errstate(over="ignore", invalid="ignore"):
            ref = prev_l.max() if np.isfinite(prev_l).any() else 0.0
            v = prev_s * np.exp(prev_l - ref)
            a = (n - triple.alpha * k) * nxt_s[:n] * np.exp(nxt_l[:n] - ref)
            b = nxt_s[1: n + 1] * np.exp(nxt_l[1: n + 1] - ref)
            scale = np.maximum.reduce([np.abs(v), np.abs(a) + np.abs(b)])
            res = np.where(scale > 0, np.abs(v - a - b) / np.where(scale > 0, scale, 1), 0.0)
        worst = max(worst, float(np.max(res)))
        prev_l, prev_s = nxt_l, nxt_s
    return worst


def perturbed_triple(triple: GibbsTriple, delta: float = 0.01) -> GibbsTriple:
    """A copy with ``g(k) + delta`` (breaks the identity; negative control)."""
    g0 = triple.g
    return GibbsTriple(triple.alpha, triple.f, lambda k: g0(k) + delta, triple.h,
                       None, name=triple.name + f"+perturb({delta})")
