"""Scalar kernels in signed log-space: rising factorials, Lah and generalized
Stirling numbers, quadratic factorization and a complex log-gamma."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LogValue",
    "FactoredQuadratic",
    "rising_factorial",
    "complex_rising_factorial",
    "lah_number",
    "log_lah_row",
    "generalized_stirling",
    "generalized_stirling_table",
    "factor_quadratic",
    "complex_log_gamma",
    "log_gamma_ratio",
    "log_gamma_ratio_real",
    "signed_log_sum",
]

_INT_TOL = 1e-9


@dataclass(frozen=True)
class LogValue:
    """A real number stored as ``sign * exp(log_magnitude)``.

    ``sign == 0`` encodes an exact zero (``log_magnitude`` is then ``-inf``).
    """

    log_magnitude: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0 and self.log_magnitude != -math.inf:
            object.__setattr__(self, "log_magnitude", -math.inf)
        if self.sign != 0 and not math.isfinite(self.log_magnitude):
            if self.log_magnitude == -math.inf:
                object.__setattr__(self, "sign", 0)
            else:
                raise OverflowError("log magnitude is not finite")

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(-math.inf, 0)

    @classmethod
    def one(cls) -> "LogValue":
        return cls(0.0, 1)

    @classmethod
    def from_float(cls, x: float) -> "LogValue":
        if x == 0:
            return cls.zero()
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: "LogValue") -> "LogValue":
        if not isinstance(other, LogValue):
            other = LogValue.from_float(float(other))
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_magnitude + other.log_magnitude, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if not isinstance(other, LogValue):
            other = LogValue.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by an exact zero LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_magnitude - other.log_magnitude, self.sign * other.sign)

    def __neg__(self) -> "LogValue":
        return LogValue(self.log_magnitude, -self.sign)

    def __add__(self, other: "LogValue") -> "LogValue":
        if not isinstance(other, LogValue):
            other = LogValue.from_float(float(other))
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_magnitude >= other.log_magnitude else (other, self)
        d = math.exp(lo.log_magnitude - hi.log_magnitude)
        if hi.sign == lo.sign:
            return LogValue(hi.log_magnitude + math.log1p(d), hi.sign)
        if d == 1.0:
            return LogValue.zero()
        return LogValue(hi.log_magnitude + math.log1p(-d), hi.sign)

    __radd__ = __add__

    def __sub__(self, other: "LogValue") -> "LogValue":
        return self + (-other)

    def isclose(self, other: "LogValue", rel: float = 1e-12) -> bool:
        """Relative comparison carried out on the log scale."""
        if self.sign == 0 or other.sign == 0:
            return self.sign == other.sign
        return self.sign == other.sign and abs(self.log_magnitude - other.log_magnitude) <= rel


def _nonpositive_integer(a: complex | float) -> int | None:
    """Return ``a`` as an int if it is (within tolerance) an integer <= 0."""
    if isinstance(a, complex):
        if abs(a.imag) > _INT_TOL:
            return None
        a = a.real
    r = round(a)
    if r <= 0 and abs(a - r) <= _INT_TOL:
        return int(r)
    return None


def rising_factorial(a: float, m: int) -> LogValue:
    """Pochhammer symbol ``(a)_m = a (a+1) ... (a+m-1)`` as a LogValue."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return LogValue.one()
    a = float(a)
    z = _nonpositive_integer(a)
    if z is not None and m > -z:
        return LogValue.zero()
    if m <= 64 or a <= 0:
        # direct product; for a <= 0 only the leading factors can be negative
        head = m if m <= 64 else min(m, int(math.ceil(-a)) + 1)
        logs = [math.log(abs(a + i)) for i in range(head)]
        sign = -1 if sum(1 for i in range(head) if a + i < 0) % 2 else 1
        out = LogValue(math.fsum(logs), sign)
        if head == m:
            return out
        b = a + head
        return out * LogValue(math.lgamma(b + m - head) - math.lgamma(b), 1)
    return LogValue(math.lgamma(a + m) - math.lgamma(a), 1)


def complex_rising_factorial(a: complex, m: int) -> complex:
    """Log of ``(a)_m`` for complex ``a``; returns ``-inf`` for an exact zero.

    The imaginary part carries the phase; for real products it is a
    multiple of pi.
    """
    if m == 0:
        return 0j
    z = _nonpositive_integer(a)
    if z is not None:
        if m > -z:
            return complex(-math.inf, 0.0)
        return complex(sum(cmath.log(complex(z + i)) for i in range(m)))
    return complex_log_gamma(a + m) - complex_log_gamma(a)


def lah_number(n: int, k: int) -> LogValue:
    """Unsigned Lah number ``C(n-1, k-1) n! / k!``."""
    if not (1 <= k <= n):
        raise ValueError(f"Lah number needs 1 <= k <= n, got n={n}, k={k}")
    if n <= 1000:
        exact = math.comb(n - 1, k - 1) * math.factorial(n) // math.factorial(k)
        return LogValue(math.log(exact), 1)
    return LogValue(
        math.lgamma(n) - math.lgamma(k) - math.lgamma(n - k + 1)
        + math.lgamma(n + 1) - math.lgamma(k + 1),
        1,
    )


def log_lah_row(n: int) -> np.ndarray:
    """``log d_{n,k}`` for k = 1..n as an array (index 0 is k=1)."""
    from scipy.special import gammaln

    k = np.arange(1, n + 1, dtype=float)
    if n <= 170:
        return np.array([lah_number(n, int(j)).log_magnitude for j in k])
    return (gammaln(n) - gammaln(k) - gammaln(n - k + 1)
            + gammaln(n + 1) - gammaln(k + 1))


def signed_log_sum(la: np.ndarray, sa: np.ndarray, lb: np.ndarray, sb: np.ndarray):
    """Elementwise signed ``a + b`` for arrays in (log|x|, sign) form."""
    la, lb = np.broadcast_arrays(la, lb)
    sa, sb = np.broadcast_arrays(sa, sb)
    hi = np.maximum(la, lb)
    with np.errstate(invalid="ignore", divide="ignore"):
        ea = np.where(sa == 0, 0.0, sa * np.exp(la - hi))
        eb = np.where(sb == 0, 0.0, sb * np.exp(lb - hi))
        tot = ea + eb
        out_l = np.where(tot == 0, -np.inf, hi + np.log(np.abs(tot)))
    return out_l, np.sign(tot).astype(int)


def generalized_stirling_table(n_max: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Table of ``d_{n,k}(alpha)`` for 1 <= k <= n <= n_max in signed log form.

    Entry ``[n-1, k-1]`` holds the sum over lattice paths from (1,1) to (n,k)
    of weight products, where a step (n,k)->(n+1,k) weighs ``n - k*alpha`` and
    (n,k)->(n+1,k+1) weighs 1.
    """
    logd = np.full((n_max, n_max), -np.inf)
    sgn = np.zeros((n_max, n_max), dtype=int)
    logd[0, 0] = 0.0
    sgn[0, 0] = 1
    for n in range(1, n_max):
        k = np.arange(1, n + 1)
        w = n - k * alpha
        lw = np.log(np.abs(w), where=w != 0, out=np.full(w.shape, -np.inf))
        stay_l = logd[n - 1, :n] + lw
        stay_s = sgn[n - 1, :n] * np.sign(w).astype(int)
        up_l = np.concatenate(([-np.inf], logd[n - 1, : n - 1]))
        up_s = np.concatenate(([0], sgn[n - 1, : n - 1]))
        row_l, row_s = signed_log_sum(stay_l, stay_s, up_l, up_s)
        logd[n, :n] = row_l
        sgn[n, :n] = row_s
        logd[n, n] = logd[n - 1, n - 1]
        sgn[n, n] = sgn[n - 1, n - 1]
    return logd, sgn


def generalized_stirling(n: int, k: int, alpha: float) -> LogValue:
    """Generalized Stirling number ``d_{n,k}(alpha)`` via the forward recursion
    ``d_{n+1,k} = (n - k alpha) d_{n,k} + d_{n,k-1}``, ``d_{1,1} = 1``."""
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    logd, sgn = generalized_stirling_table(n, alpha)
    return LogValue(float(logd[n - 1, k - 1]), int(sgn[n - 1, k - 1]))


@dataclass(frozen=True)
class FactoredQuadratic:
    """Roots of ``x^2 + gamma x + zeta = (x+z1)(x+z2)`` and
    ``x^2 - gamma x + zeta = (x+s1)(x+s2)``.

    Ordering: ``z1 <= z2`` and ``s1 >= s2`` for real roots, so that
    ``zeta = 0`` gives ``z1 = 0, z2 = gamma, s1 = 0, s2 = -gamma``.
    """

    gamma: float
    zeta: float
    z1: complex
    z2: complex
    s1: complex
    s2: complex

    @property
    def real_roots(self) -> bool:
        return self.gamma * self.gamma - 4 * self.zeta >= 0


def factor_quadratic(gamma: float, zeta: float) -> FactoredQuadratic:
    disc = gamma * gamma - 4.0 * zeta
    r = cmath.sqrt(disc) if disc < 0 else complex(math.sqrt(disc))
    z1 = (gamma - r) / 2
    z2 = (gamma + r) / 2
    s1 = (-gamma + r) / 2
    s2 = (-gamma - r) / 2
    if disc == 0:
        z1 = z2 = complex(gamma / 2)
        s1 = s2 = complex(-gamma / 2)
    elif disc > 0 and zeta != 0:
        # product form avoids cancellation in the smaller root
        z1 = complex(zeta / z2.real)
        s1 = complex(zeta / s2.real)
    return FactoredQuadratic(float(gamma), float(zeta), z1, z2, s1, s2)


# Lanczos approximation, g = 7, n = 9 coefficient set.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def complex_log_gamma(z: complex) -> complex:
    """log Gamma(z) for complex z via the Lanczos approximation.

    Matches the analytic continuation of the real log-gamma along the
    positive axis (real on z > 0); the phase of the result may differ from
    other conventions by a multiple of 2*pi*i, which does not affect
    ``exp``. Raises ValueError at the poles.
    """
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        raise ValueError(f"log-gamma pole at {z}")
    if z.imag == 0 and z.real < 0:
        # negative real axis: limit from the side given by the sign of zero
        return complex(math.lgamma(z.real), math.copysign(math.pi, z.imag) * math.floor(z.real))
    if z.real < 0.5:
        # reflection Gamma(z) Gamma(1-z) = pi / sin(pi z); the 2*pi*k shift
        # keeps the branch continuous with the right half-plane
        shift = math.copysign(2 * math.pi, z.imag) * math.floor(0.5 * z.real + 0.25)
        # sin(pi z) with the integer part removed first, accurate near poles
        r = round(z.real)
        sin_pz = cmath.sin(math.pi * (z - r)) * (-1 if r % 2 else 1)
        return (complex(math.log(math.pi), shift)
                - cmath.log(sin_pz) - complex_log_gamma(1 - z))
    z -= 1
    x = complex(_LANCZOS[0])
    for i in range(1, len(_LANCZOS)):
        x += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


_BERNOULLI = (1.0, -0.5, 1 / 6, 0.0, -1 / 30, 0.0, 1 / 42, 0.0, -1 / 30, 0.0, 5 / 66)


def _bernoulli_poly(m: int, a: complex) -> complex:
    return sum(math.comb(m, j) * _BERNOULLI[j] * a ** (m - j) for j in range(m + 1))


def _stirling_shift(x: float, a: complex, terms: int = 8) -> complex:
    # log Gamma(x+a) - log Gamma(x) - a log x, asymptotic in 1/x
    out = 0j
    for k in range(1, terms + 1):
        c = _bernoulli_poly(k + 1, a) - _BERNOULLI[k + 1]
        out += (-1) ** (k + 1) * c / (k * (k + 1) * x ** k)
    return out


def log_gamma_ratio(x: float, a: complex, b: complex) -> complex:
    """``log Gamma(x+a) - log Gamma(x+b)`` for real x, complex shifts.

    Uses the Stirling-series difference when x dominates the shifts, which
    avoids cancellation between two huge log-gamma values.
    """
    scale = (abs(a) + abs(b) + 1.0) ** 2
    if x >= max(200.0, 50.0 * scale):
        return (a - b) * math.log(x) + _stirling_shift(x, a) - _stirling_shift(x, b)
    return complex_log_gamma(x + a) - complex_log_gamma(x + b)


def log_gamma_ratio_real(x: np.ndarray, a: float, b: float) -> np.ndarray:
    """Vectorized ``log Gamma(x+a) - log Gamma(x+b)`` for real shifts."""
    from scipy.special import gammaln

    x = np.asarray(x, dtype=float)
    cut = max(200.0, 50.0 * (abs(a) + abs(b) + 1.0) ** 2)
    big = x >= cut
    out = np.empty_like(x)
    xs = x[~big]
    out[~big] = gammaln(xs + a) - gammaln(xs + b)
    xb = x[big]
    if xb.size:
        acc = (a - b) * np.log(xb)
        for k in range(1, 9):
            c = (_bernoulli_poly(k + 1, a) - _bernoulli_poly(k + 1, b)).real
            acc = acc + (-1) ** (k + 1) * c / (k * (k + 1) * xb ** k)
        out[big] = acc
    return out
