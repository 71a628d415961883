"""Closed-form error bounds for initial training and full retraining.

All evaluators are pure functions of :class:`BoundInputs`.  Each additive
term is built from its logarithm; a term whose value would fall below
``UNDERFLOW_FLOOR`` is reported as exactly 0 and the report is flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

UNDERFLOW_FLOOR = 1e-300
_LOG_FLOOR = math.log(UNDERFLOW_FLOOR)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BoundInputs:
    n: int
    d: int
    p: float
    gamma: float
    lambda_min: float = 1.0
    lambda_max: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not (0.0 <= self.p < 0.5):
            raise ValueError(f"p must satisfy 0 <= p < 1/2, got {self.p}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not (0.0 < self.lambda_min <= self.lambda_max):
            raise ValueError("need 0 < lambda_min <= lambda_max")

    @classmethod
    def from_problem(cls, spec, noise, n):
        return cls(int(n), spec.d, noise.flip_probability, spec.gamma, spec.lambda_min, spec.lambda_max)

    @property
    def gap(self):
        """1 - 2p."""
        return 1.0 - 2.0 * self.p


@dataclass(frozen=True)
class BoundReport:
    raw: float
    clamped: float
    vacuous: bool
    underflow: bool = False
    precondition_violated: bool = False


def _exp_floor(log_value):
    """exp(log_value), with values under the floor returned as (0.0, True)."""
    if log_value < _LOG_FLOOR:
        return 0.0, True
    try:
        return math.exp(log_value), False
    except OverflowError:
        return math.inf, False


def _sum_terms(log_terms):
    total, underflow = 0.0, False
    for lt in log_terms:
        v, u = _exp_floor(lt)
        total += v
        underflow |= u
    return total, underflow


def _upper(raw, underflow=False, precondition_violated=False):
    return BoundReport(raw, min(raw, 1.0), raw > 1.0, underflow, precondition_violated)


def _lower(raw, underflow=False):
    return BoundReport(raw, min(max(raw, 0.0), 1.0), raw < 0.0, underflow)


def _check_sigma(sigma_norm):
    if not sigma_norm > 0.0:
        raise ValueError("sigma_norm must be positive")


def alpha0_lower(inputs, inner, sigma_norm):
    """Lower bound on P(theta_0 misclassifies x) for a fixed test point x."""
    _check_sigma(sigma_norm)
    k = 1.0 + math.sqrt(inputs.n) * inputs.gap
    log_raw = -math.log(2.0 * _SQRT_2PI) - 5.0 * k * k * inner * inner / (sigma_norm * sigma_norm)
    return _lower(*_exp_floor(log_raw))


def alpha0_upper(inputs, inner, sigma_norm):
    """Upper bound on P(theta_0 misclassifies x) for a fixed test point x."""
    _check_sigma(sigma_norm)
    g2 = inputs.gap ** 2
    raw, uf = _sum_terms(
        (
            math.log(0.5) - inputs.n * g2 * inner * inner / (8.0 * sigma_norm * sigma_norm),
            math.log(2.0) - inputs.n * g2 / 32.0,
        )
    )
    return _upper(raw, uf)


@dataclass(frozen=True)
class Err0Bounds:
    lower: BoundReport
    upper: BoundReport


def err0_bounds(inputs):
    """Population error bounds for initial training."""
    n, d, g2 = inputs.n, inputs.d, inputs.gap ** 2
    g4 = inputs.gamma ** 4
    k = 1.0 + math.sqrt(n) * inputs.gap
    lower = _lower(
        *_exp_floor(
            math.log(-math.expm1(-d / 16.0) / (4.0 * _SQRT_2PI))
            - 160.0 * k * k * g4 / (inputs.lambda_min ** 2 * d)
        )
    )
    upper = _upper(
        *_sum_terms(
            (
                math.log(0.5) - n * g2 * g4 / (16.0 * inputs.lambda_max ** 2 * d),
                -d / 8.0,
                math.log(2.0) - n * g2 / 32.0,
            )
        )
    )
    return Err0Bounds(lower, upper)


def sample_complexity_initial(delta, inputs):
    """Training-set size that guarantees accuracy above 1 - delta (real; round up)."""
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return 8.0 * inputs.lambda_max ** 2 * math.log(1.0 / delta) / inputs.gap ** 2 * inputs.d / inputs.gamma ** 4


def sample_complexity_lower_curve(delta, d, p, c=1.0):
    """Order-curve c (1 - delta) d / (1 - 2p)^2 of the minimax sample-size lower bound."""
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if not (0.0 <= p < 0.5):
        raise ValueError(f"p must satisfy 0 <= p < 1/2, got {p}")
    if not c > 0.0:
        raise ValueError("c must be positive")
    return c * (1.0 - delta) * d / (1.0 - 2.0 * p) ** 2


@dataclass(frozen=True)
class RetrainAux:
    q_prime: float
    p_prime: float
    preconditions_met: bool
    q_prime_underflow: bool = False


def retrain_aux(inputs):
    """Auxiliary quantities q', p' of the retraining bound and its preconditions."""
    n, d, gamma, lmax = inputs.n, inputs.d, inputs.gamma, inputs.lambda_max
    if n < 1:
        raise ValueError("retraining bounds need n >= 1")
    q_prime, uf = _exp_floor(-n * inputs.gap * gamma ** 2 / (40.0 * lmax))
    p_prime = (1.0 + 3.0 * gamma ** 4 / (8.0 * lmax ** 2 * n * d)) * inputs.p
    met = (
        n / d > 4.0 * lmax / (gamma ** 2 * inputs.gap)
        and n * d > gamma ** 4 / lmax ** 2
        and d >= 7
    )
    return RetrainAux(q_prime, p_prime, met, uf)


def _log_blowup_term(inputs, aux):
    # log of (n/2) (exp(-(g^4 / (8 lmax^2)) (1 - 2p') n/d) + e^{-d/16}) e^{d/n}
    n, d = inputs.n, inputs.d
    a = -(inputs.gamma ** 4 / (8.0 * inputs.lambda_max ** 2)) * (1.0 - 2.0 * aux.p_prime) * n / d
    return math.log(n / 2.0) + d / n + _logaddexp(a, -d / 16.0)


def _logaddexp(a, b):
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def alpha1_upper(inputs, inner, sigma_norm):
    """Upper bound on P(theta_1 misclassifies x) for a fixed test point x.

    Evaluated even when the retraining preconditions fail; the report is
    then flagged ``precondition_violated``.
    """
    if inner == 0.0 and sigma_norm == 0.0:
        raise ValueError("inner and sigma_norm cannot both be zero")
    if sigma_norm < 0.0:
        raise ValueError("sigma_norm must be nonnegative")
    aux = retrain_aux(inputs)
    n = inputs.n
    inner2 = inner * inner
    raw, uf = _sum_terms(
        (
            math.log(2.0) - n * (1.0 - 2.0 * aux.q_prime) ** 2 * inner2 / (64.0 * (inner2 + sigma_norm ** 2)),
            math.log(4.0) - n * inputs.gap ** 2 / 32.0,
            _log_blowup_term(inputs, aux),
        )
    )
    return _upper(raw, uf, not aux.preconditions_met)


def err1_upper_terms(inputs):
    """The four additive terms of the retraining population-error bound, in order."""
    aux = retrain_aux(inputs)
    n, d = inputs.n, inputs.d
    g4 = inputs.gamma ** 4
    logs = (
        math.log(2.0) - n * (1.0 - 2.0 * aux.q_prime) ** 2 * g4 / (64.0 * (g4 + 2.0 * inputs.lambda_max ** 2 * d)),
        math.log(2.0) - d / 8.0,
        math.log(4.0) - n * inputs.gap ** 2 / 32.0,
        _log_blowup_term(inputs, aux),
    )
    return tuple(_exp_floor(lt)[0] for lt in logs), logs, aux


def err1_upper(inputs):
    """Population error upper bound for full retraining."""
    _, logs, aux = err1_upper_terms(inputs)
    raw, uf = _sum_terms(logs)
    return _upper(raw, uf, not aux.preconditions_met)


@dataclass(frozen=True)
class Window:
    n_low: float
    n_high: float
    inside: bool


def retraining_helps_window(inputs, c1=1.0, c2=1.0):
    """Range of n where retraining is expected to beat initial training.

    With ``A = lambda_min^2 d / (gamma^4 (1 - 2p)^2)`` the window is
    ``[c1 A log(max(A, e)), c2 A d]``; the constants are not known, so they
    are caller configuration.
    """
    if not (c1 > 0.0 and c2 > 0.0):
        raise ValueError("window constants must be positive")
    a = inputs.lambda_min ** 2 * inputs.d / (inputs.gamma ** 4 * inputs.gap ** 2)
    n_low = c1 * a * math.log(max(a, math.e))
    n_high = c2 * a * inputs.d
    return Window(n_low, n_high, n_low <= inputs.n <= n_high)


BOUNDS_CSV_HEADER = (
    "n,d,p,gamma,lambda_min,lambda_max,"
    "err0_lower_raw,err0_lower_clamped,err0_lower_vacuous,"
    "err0_upper_raw,err0_upper_clamped,err0_upper_vacuous,"
    "err1_upper_raw,err1_upper_clamped,err1_upper_vacuous,err1_preconditions_met,"
    "q_prime,p_prime,window_low,window_high,inside_window"
)


def bound_table_row(inputs, c1=1.0, c2=1.0):
    """One CSV row (as a list of strings) matching :data:`BOUNDS_CSV_HEADER`."""
    e0 = err0_bounds(inputs)
    cells = [inputs.n, inputs.d, inputs.p, inputs.gamma, inputs.lambda_min, inputs.lambda_max]
    for rep in (e0.lower, e0.upper):
        cells += [rep.raw, rep.clamped, rep.vacuous]
    if inputs.n >= 1:
        aux = retrain_aux(inputs)
        e1 = err1_upper(inputs)
        cells += [e1.raw, e1.clamped, e1.vacuous, aux.preconditions_met, aux.q_prime, aux.p_prime]
    else:
        cells += ["", "", "", "", "", ""]
    w = retraining_helps_window(inputs, c1, c2)
    cells += [w.n_low, w.n_high, w.inside]
    return [_fmt(c) for c in cells]


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
