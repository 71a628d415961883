"""Population error of a linear classifier, exactly and by simulation.

Conditioned on the margin variable ``u``, the signed score of a fresh
sample is ``(1 + u) <mu, theta> + N(0, |Sigma^{1/2} theta|^2)``, so the
misclassification probability reduces to a one-dimensional expectation

    err(theta) = E_u[ Phi(-(1 + u) <mu, theta> / |Sigma^{1/2} theta|) ].

The result does not depend on the class prior because both classes give
the same conditional score distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import integrate, special

from . import _kernels
from .datagen import HalfNormal, PointMass, Uniform, canonical_mu, sample_features
from .linear import LinearClassifier

GAUSS_LEGENDRE_NODES = 64
MC_CHUNK_ROWS = 1 << 15


@dataclass(frozen=True)
class Exact:
    pass


@dataclass(frozen=True)
class MonteCarlo:
    num_samples: int
    seed: int


@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    stderr: float
    method: Union[Exact, MonteCarlo]

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"error estimate {self.value} outside [0, 1]")
        if self.stderr < 0.0:
            raise ValueError("stderr must be nonnegative")

    @property
    def accuracy(self):
        return 1.0 - self.value


def std_normal_cdf(t):
    """Phi(t); accepts scalars or arrays."""
    out = special.ndtr(t)
    return float(out) if np.ndim(out) == 0 else out


def std_normal_ccdf(t):
    """1 - Phi(t), evaluated as Phi(-t) so large t keeps full relative precision."""
    return std_normal_cdf(np.negative(t))


@lru_cache(maxsize=8)
def _legendre(num_nodes):
    nodes, weights = np.polynomial.legendre.leggauss(num_nodes)
    return nodes, weights


def margin_projection(spec, classifier):
    """Return ``(<mu, theta>, |Sigma^{1/2} theta|)`` in the canonical basis."""
    w = classifier.weights
    if w.shape[0] != spec.d:
        raise ValueError(f"classifier has d={w.shape[0]}, spec has d={spec.d}")
    inner = spec.gamma * float(w[0])
    sigma_norm = math.sqrt(float(np.sum(spec.spectrum * w[1:] ** 2)))
    return inner, sigma_norm


def expected_tail(margin_dist, ratio, num_nodes=GAUSS_LEGENDRE_NODES):
    """E_u[Phi(-(1 + u) * ratio)] for the given margin distribution."""
    if isinstance(margin_dist, PointMass):
        return std_normal_cdf(-(1.0 + margin_dist.value) * ratio)
    if isinstance(margin_dist, Uniform):
        nodes, weights = _legendre(num_nodes)
        half = 0.5 * (margin_dist.high - margin_dist.low)
        u = margin_dist.low + half * (nodes + 1.0)
        return float(0.5 * np.sum(weights * special.ndtr(-(1.0 + u) * ratio)))
    if isinstance(margin_dist, HalfNormal):
        sigma = margin_dist.sigma

        # substitute u = sigma * v so the weight is the standard half-normal density
        def integrand(v):
            return special.ndtr(-(1.0 + sigma * v) * ratio) * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * v * v)

        value, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
        return float(min(max(value, 0.0), 1.0))
    raise TypeError(f"unsupported margin distribution {margin_dist!r}")


def _error_from_projection(inner, sigma_norm, margin_dist):
    if sigma_norm == 0.0:
        if inner == 0.0:
            raise ValueError("zero classifier has no defined error")
        return ErrorEstimate(0.0 if inner > 0.0 else 1.0, 0.0, Exact())
    return ErrorEstimate(expected_tail(margin_dist, inner / sigma_norm), 0.0, Exact())


def exact_error(spec, classifier):
    """Misclassification probability of ``classifier`` on a fresh clean sample."""
    inner, sigma_norm = margin_projection(spec, classifier)
    return _error_from_projection(inner, sigma_norm, spec.margin_dist)


def exact_error_general(mu, covariance, theta, margin_dist):
    """Same as :func:`exact_error` for an arbitrary basis.

    ``covariance`` must annihilate ``mu``; nothing here checks that.
    """
    theta = np.asarray(theta, dtype=np.float64)
    inner = float(np.dot(mu, theta))
    sigma_norm = math.sqrt(max(float(theta @ np.asarray(covariance) @ theta), 0.0))
    return _error_from_projection(inner, sigma_norm, margin_dist)


def monte_carlo_error(spec, classifier, num_samples, seed):
    """Fraction of ``num_samples`` fresh clean samples misclassified by ``classifier``."""
    if int(num_samples) != num_samples or num_samples < 1:
        raise ValueError(f"num_samples must be a positive integer, got {num_samples}")
    if classifier.d != spec.d:
        raise ValueError(f"classifier has d={classifier.d}, spec has d={spec.d}")
    num_samples = int(num_samples)
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    label_rng, margin_rng, noise_rng = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3))
    wrong = 0
    remaining = num_samples
    while remaining:
        m = min(remaining, MC_CHUNK_ROWS)
        X, y = sample_features(spec, m, label_rng, margin_rng, noise_rng)
        wrong += _kernels.count_misclassified(X, y, classifier.weights)
        remaining -= m
    v = wrong / num_samples
    return ErrorEstimate(v, math.sqrt(v * (1.0 - v) / num_samples), MonteCarlo(num_samples, int(seed)))


@dataclass(frozen=True)
class ConsensusDiagnostics:
    acc_pred_full: float
    acc_given_full: float
    acc_pred_consensus: Optional[float]  # None when the consensus set is empty
    consensus_fraction: float


def consensus_diagnostics(dataset, report):
    """Accuracies of predicted and given labels against the true labels."""
    y = dataset.true_labels
    pred = report.predicted_labels
    if pred.shape != y.shape:
        raise ValueError("report was not produced from this dataset")
    agree = pred == dataset.noisy_labels
    k = int(np.count_nonzero(agree))
    return ConsensusDiagnostics(
        acc_pred_full=float(np.mean(pred == y)),
        acc_given_full=float(np.mean(dataset.noisy_labels == y)),
        acc_pred_consensus=float(np.mean(pred[agree] == y[agree])) if k else None,
        consensus_fraction=k / dataset.n,
    )


def mu_classifier(spec):
    """The ground-truth separator as a classifier."""
    return LinearClassifier(canonical_mu(spec))
