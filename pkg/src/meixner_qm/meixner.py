"""Orthonormal two-parameter discrete Meixner system.

The polynomial M_n(k) is evaluated either from its terminating hypergeometric
sum

    M_n(k) = sqrt((2*mu)_n / n!) * exp(-n*theta)
             * sum_{j=0}^{min(n,k)} (-n)_j (-k)_j / (2*mu)_j * z^j / j!,
    z = 1 - exp(2*theta) < 0,

or by upward three-term recursion in n.  The sum alternates in sign, so terms
are accumulated as sign-tracked log magnitudes with compensated summation and
every value carries a cancellation-based error estimate.  The recursion grows
an unwanted dominant solution once n passes the turning index
(k + mu)*coth(theta/2) - mu; past that point the recursion is run at an
internally raised precision sized to the expected amplification.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gammaln

from .errors import AccuracyError, DomainError, PreconditionError

#: Largest degree / argument index supported by the double-precision sum.
INDEX_MAX = 200

#: Relative error above which a value is rejected by the precision guard.
EST_ERROR_LIMIT = 1e-8

#: Relative error above which the sum is re-evaluated at higher precision.
_RESCUE_AT = 1e-12

_EPS = float(np.finfo(float).eps)
_LN10 = math.log(10.0)

GUARD_ENV = "MEIXNER_QM_PRECISION_GUARD"


@dataclass(frozen=True)
class MeixnerParams:
    """Parameter pair (mu, theta), both strictly positive."""

    mu: float
    theta: float

    def __post_init__(self):
        if not (isinstance(self.mu, (int, float)) and math.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"mu must be a positive real, got {self.mu!r}")
        if not (isinstance(self.theta, (int, float)) and math.isfinite(self.theta) and self.theta > 0):
            raise DomainError(f"theta must be a positive real, got {self.theta!r}")


@dataclass(frozen=True)
class RecursionCoeffs:
    """Diagonal (a) and off-diagonal (b) three-term recursion coefficients."""

    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class EvalReport:
    """A value together with the method that produced it and an error estimate.

    ``est_error`` is relative to ``value`` and reflects the cancellation of the
    alternating sum (ratio of the largest term magnitude to the result).
    """

    value: float
    method: str  # "hypergeometric-sum" or "recursion-in-n"
    est_error: float

    def __post_init__(self):
        if not math.isfinite(self.est_error) or self.est_error < 0:
            raise DomainError(f"est_error must be finite and nonnegative, got {self.est_error}")


def precision_guard_mode() -> str:
    """Read the precision-guard mode from the environment: strict (default) or warn."""
    mode = os.environ.get(GUARD_ENV, "strict").strip().lower()
    if mode not in ("strict", "warn"):
        raise ValueError(f"{GUARD_ENV} must be 'strict' or 'warn', got {mode!r}")
    return mode


def check_report(report: EvalReport, context: str = "") -> None:
    """Enforce the accuracy threshold on an evaluation report.

    In strict mode an est_error above EST_ERROR_LIMIT raises AccuracyError;
    in warn mode it emits a warning and the value is used as-is.
    """
    if report.est_error <= EST_ERROR_LIMIT:
        return
    msg = (f"estimated relative error {report.est_error:.3e} exceeds "
           f"{EST_ERROR_LIMIT:.0e}" + (f" ({context})" if context else ""))
    if precision_guard_mode() == "strict":
        raise AccuracyError(msg)
    warnings.warn(msg, RuntimeWarning, stacklevel=2)


def _check_index(value: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise PreconditionError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise PreconditionError(f"{name} must be nonnegative, got {value}")
    if value > INDEX_MAX:
        raise PreconditionError(f"{name}={value} exceeds the supported range {INDEX_MAX}")
    return int(value)


def log_pochhammer(a: float, n: int) -> float:
    """log of the rising factorial (a)_n = a (a+1) ... (a+n-1), a > 0."""
    if not (a > 0):
        raise DomainError(f"log_pochhammer requires a > 0, got a={a}")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 0:
        raise DomainError(f"log_pochhammer requires integer n >= 0, got {n!r}")
    return float(gammaln(a + n) - gammaln(a))


def _log_2sinh(theta: float) -> float:
    # log(2 sinh(theta)) = theta + log(1 - exp(-2 theta)), stable for theta > 0
    return theta + math.log1p(-math.exp(-2.0 * theta))


def log_weight(k: int, p: MeixnerParams) -> float:
    """log of the discrete weight rho(k)."""
    k = _check_index(k, "k")
    two_mu = 2.0 * p.mu
    return (two_mu * _log_2sinh(p.theta)
            + log_pochhammer(two_mu, k) - float(gammaln(k + 1))
            - 2.0 * (k + p.mu) * p.theta)


def weight(k: int, p: MeixnerParams) -> float:
    """Discrete weight rho(k) = (2 sinh theta)^(2 mu) (2 mu)_k / k! e^(-2(k+mu) theta)."""
    return math.exp(log_weight(k, p))


def weight_cutoff(p: MeixnerParams, tail: float = 1e-14) -> int:
    """Smallest K such that sum_{k>K} rho(k) is provably below ``tail``.

    Uses the geometric bound rho(k+1)/rho(k) = e^(-2 theta) (2mu+k)/(k+1),
    which is eventually below 1 and monotone toward e^(-2 theta).
    """
    r_inf = math.exp(-2.0 * p.theta)
    k = 0
    rho = weight(0, p)
    while k < 100_000:
        ratio_next = r_inf * (2.0 * p.mu + k + 1) / (k + 2)
        r_bound = max(ratio_next, r_inf)
        if r_bound < 1.0:
            tail_bound = rho * r_inf * (2.0 * p.mu + k) / (k + 1) / (1.0 - r_bound)
            if tail_bound < tail:
                return k
        rho_next = rho * r_inf * (2.0 * p.mu + k) / (k + 1)
        rho = rho_next
        k += 1
    raise AccuracyError("weight tail did not fall below the requested bound")


def z_of_k(k: int, p: MeixnerParams) -> float:
    """Spectral variable z_k = (k + mu) sinh(theta)."""
    k = _check_index(k, "k")
    return (k + p.mu) * math.sinh(p.theta)


def recursion_coeffs(n_max: int, p: MeixnerParams) -> RecursionCoeffs:
    """Recursion coefficients a_n = (n+mu) cosh(theta), b_n = -1/2 sqrt((n+1)(n+2mu))."""
    n_max = _check_index(n_max, "n_max")
    n = np.arange(n_max + 1, dtype=float)
    a = (n + p.mu) * math.cosh(p.theta)
    b = -0.5 * np.sqrt((n + 1.0) * (n + 2.0 * p.mu))
    return RecursionCoeffs(a=a, b=b)


def turning_index(k: int, p: MeixnerParams) -> float:
    """Index n beyond which M_n(k) leaves the oscillatory regime and decays."""
    return (k + p.mu) / math.tanh(0.5 * p.theta) - p.mu


# ---------------------------------------------------------------------------
# hypergeometric-sum evaluation


def _sum_float(n: int, k: int, p: MeixnerParams):
    """Sign-tracked, log-magnitude, compensated evaluation of the terminating sum.

    Returns (value, kappa, n_terms) where kappa is the ratio of the largest
    term magnitude of the scaled sum to the scaled result.
    """
    two_mu = 2.0 * p.mu
    jmax = min(n, k)
    j = np.arange(jmax + 1, dtype=float)
    log_absz = math.log(math.expm1(2.0 * p.theta))  # |z| = e^{2 theta} - 1
    logt = (gammaln(n + 1) - gammaln(n - j + 1)
            + gammaln(k + 1) - gammaln(k - j + 1)
            - (gammaln(two_mu + j) - gammaln(two_mu))
            - gammaln(j + 1)
            + j * log_absz)
    signs = np.where(j.astype(int) % 2 == 0, 1.0, -1.0)
    peak = float(np.max(logt))
    scaled = signs * np.exp(logt - peak)
    s = math.fsum(scaled.tolist())
    log_pref = 0.5 * (gammaln(two_mu + n) - gammaln(two_mu) - gammaln(n + 1)) - n * p.theta
    if s == 0.0:
        return 0.0, math.inf, jmax + 1
    value = math.copysign(math.exp(peak + log_pref + math.log(abs(s))), s)
    kappa = 1.0 / abs(s)
    return value, kappa, jmax + 1


def _sum_mp(n: int, k: int, p: MeixnerParams, dps: int) -> float:
    """Same terminating sum evaluated with mpmath at ``dps`` digits."""
    with mpmath.workdps(dps):
        mu = mpmath.mpf(p.mu)
        theta = mpmath.mpf(p.theta)
        z = 1 - mpmath.e ** (2 * theta)
        two_mu = 2 * mu
        total = mpmath.mpf(0)
        term = mpmath.mpf(1)
        for j in range(min(n, k) + 1):
            if j > 0:
                term *= mpmath.mpf(-(n - j + 1)) * (-(k - j + 1)) / (two_mu + j - 1) * z / j
            total += term
        pref = mpmath.sqrt(mpmath.rf(two_mu, n) / mpmath.factorial(n)) * mpmath.e ** (-n * theta)
        return float(pref * total)


def _sum_mp_verified(n: int, k: int, p: MeixnerParams, kappa: float) -> float:
    if math.isfinite(kappa) and kappa > 0:
        dps = 30 + int(math.log10(max(kappa, 1.0))) + 1
    else:
        dps = 60
    previous = _sum_mp(n, k, p, dps)
    for _ in range(3):
        dps *= 2
        current = _sum_mp(n, k, p, dps)
        if previous == current or (current != 0.0 and abs(previous - current) <= 1e-18 * abs(current)):
            return current
        previous = current
    return previous


def meixner(n: int, k: int, p: MeixnerParams) -> EvalReport:
    """Orthonormal Meixner polynomial M_n(k) via the terminating sum.

    The result carries an estimated relative error.  When the double-precision
    cancellation estimate is worse than 1e-12 the same sum is transparently
    re-evaluated at higher internal precision, so returned values are accurate
    across the supported index range; est_error always describes the value
    actually returned.
    """
    n = _check_index(n, "n")
    k = _check_index(k, "k")
    value, kappa, n_terms = _sum_float(n, k, p)
    est = _EPS * kappa * n_terms
    if not (est < _RESCUE_AT):
        value = _sum_mp_verified(n, k, p, kappa)
        est = 4.0 * _EPS
    return EvalReport(value=value, method="hypergeometric-sum", est_error=est)


def meixner_values(n_max: int, k: int, p: MeixnerParams):
    """Bulk hypergeometric-sum evaluation of (M_0(k), ..., M_{n_max}(k)).

    Vectorized over n; entries whose cancellation estimate is poor are
    re-evaluated at higher precision exactly as in :func:`meixner`.
    Returns (values, est_errors) arrays of length n_max + 1.
    """
    n_max = _check_index(n_max, "n_max")
    k = _check_index(k, "k")
    two_mu = 2.0 * p.mu
    n = np.arange(n_max + 1, dtype=float)[:, None]
    j = np.arange(min(n_max, k) + 1, dtype=float)[None, :]
    log_absz = math.log(math.expm1(2.0 * p.theta))
    with np.errstate(invalid="ignore"):
        logt = (gammaln(n + 1) - gammaln(n - j + 1)
                + gammaln(k + 1) - gammaln(k - j + 1)
                - (gammaln(two_mu + j) - gammaln(two_mu))
                - gammaln(j + 1)
                + j * log_absz)
    logt = np.where(j <= n, logt, -np.inf)  # terminating: (-n)_j = 0 past j = n
    signs = np.where(j.astype(int) % 2 == 0, 1.0, -1.0)
    peak = np.max(logt, axis=1, keepdims=True)
    s = np.sum(signs * np.exp(logt - peak), axis=1)
    log_pref = (0.5 * (gammaln(two_mu + n[:, 0]) - gammaln(two_mu) - gammaln(n[:, 0] + 1))
                - n[:, 0] * p.theta)
    with np.errstate(divide="ignore"):
        values = np.sign(s) * np.exp(peak[:, 0] + log_pref + np.log(np.abs(s)))
    values = np.where(s == 0.0, 0.0, values)
    n_terms = np.minimum(n[:, 0], k) + 1
    with np.errstate(divide="ignore"):
        est = _EPS * n_terms / np.abs(s)
    for i in np.nonzero(~(est < _RESCUE_AT))[0]:
        kappa = 1.0 / abs(s[i]) if s[i] != 0.0 else math.inf
        values[i] = _sum_mp_verified(int(i), k, p, kappa)
        est[i] = 4.0 * _EPS
    return values, est


# ---------------------------------------------------------------------------
# recursion-in-n evaluation


def _m1_closed_form(k: int, p: MeixnerParams) -> float:
    # M_1(k) = sqrt(2 mu) e^{-theta} (1 + k (1 - e^{2 theta}) / (2 mu))
    return (math.sqrt(2.0 * p.mu) * math.exp(-p.theta)
            * (1.0 + k * (-math.expm1(2.0 * p.theta)) / (2.0 * p.mu)))


def meixner_by_recursion(n_max: int, k: int, p: MeixnerParams) -> np.ndarray:
    """(M_0(k), ..., M_{n_max}(k)) by upward three-term recursion in n.

    Seeded with M_0 = 1 and the closed-form M_1.  Once n_max reaches the
    decay regime (past the turning index) the recursion amplifies rounding
    noise like e^{2 theta (n - n_turn)}, so it is then carried out at an
    internally raised precision sized to that amplification and rounded back
    to doubles.
    """
    n_max = _check_index(n_max, "n_max")
    k = _check_index(k, "k")
    if n_max == 0:
        return np.array([1.0])
    n_turn = turning_index(k, p)
    if n_max + 8 <= n_turn:
        out = np.empty(n_max + 1)
        out[0] = 1.0
        out[1] = _m1_closed_form(k, p)
        z = z_of_k(k, p)
        cosh_t = math.cosh(p.theta)
        for n in range(1, n_max):
            a_n = (n + p.mu) * cosh_t
            b_nm1 = -0.5 * math.sqrt(n * (n + 2.0 * p.mu - 1.0))
            b_n = -0.5 * math.sqrt((n + 1.0) * (n + 2.0 * p.mu))
            out[n + 1] = ((z - a_n) * out[n] - b_nm1 * out[n - 1]) / b_n
        return out
    digits = 30 + int(math.ceil(2.0 * p.theta * max(0.0, n_max - n_turn + 8) / _LN10)) + 10
    with mpmath.workdps(digits):
        mu = mpmath.mpf(p.mu)
        theta = mpmath.mpf(p.theta)
        z = (k + mu) * mpmath.sinh(theta)
        cosh_t = mpmath.cosh(theta)
        vals = [mpmath.mpf(1),
                mpmath.sqrt(2 * mu) * mpmath.e ** (-theta)
                * (1 + k * (1 - mpmath.e ** (2 * theta)) / (2 * mu))]
        for n in range(1, n_max):
            a_n = (n + mu) * cosh_t
            b_nm1 = -mpmath.sqrt(n * (n + 2 * mu - 1)) / 2
            b_n = -mpmath.sqrt((n + 1) * (n + 2 * mu)) / 2
            vals.append(((z - a_n) * vals[n] - b_nm1 * vals[n - 1]) / b_n)
        return np.array([float(v) for v in vals])
