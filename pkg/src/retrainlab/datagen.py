"""Margin-endowed Gaussian mixture sampler and label-noise channels.

Data is generated in the canonical basis: the class mean direction is
``gamma * e_1`` and the covariance is diagonal with a zero first entry, so
the feature noise never touches the mean direction.

Random draws for a dataset come from four independent substreams spawned
from one ``numpy.random.SeedSequence(seed)``, consumed in this order:

0. class labels (one uniform per row),
1. margin variables ``u`` (one draw per row),
2. Gaussian feature noise (``n x d`` standard normals, row-major; column 0
   is drawn and then discarded),
3. label flips (one uniform per row).

Every substream is consumed sequentially, so the first ``k`` rows of an
``n``-row dataset equal the ``k``-row dataset for the same seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


# --- margin distributions -------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not (0.0 <= self.low < self.high):
            raise ValueError(f"Uniform margin needs 0 <= low < high, got [{self.low}, {self.high}]")

    def sample(self, rng, n):
        return rng.uniform(self.low, self.high, size=n)

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True)
class PointMass:
    """Degenerate margin ``u = value``; only meant for closed-form test oracles."""

    value: float

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError(f"PointMass margin must be >= 0, got {self.value}")

    def sample(self, rng, n):
        # consume one uniform per row so the substream layout matches other margins
        rng.random(n)
        return np.full(n, float(self.value))

    @property
    def mean(self):
        return float(self.value)


@dataclass(frozen=True)
class HalfNormal:
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError(f"HalfNormal margin needs sigma > 0, got {self.sigma}")

    def sample(self, rng, n):
        return np.abs(rng.standard_normal(n)) * self.sigma

    @property
    def mean(self):
        return self.sigma * math.sqrt(2.0 / math.pi)


MarginDist = Union[Uniform, PointMass, HalfNormal]


# --- problem and noise specs ----------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    """Generative model ``x = y (1 + u) mu + Sigma^{1/2} z`` in the canonical basis.

    ``covariance_spectrum`` holds the ``d - 1`` eigenvalues of ``Sigma`` on
    the subspace orthogonal to ``mu``; ``None`` means all ones.
    """

    d: int
    gamma: float
    margin_dist: MarginDist = field(default_factory=lambda: Uniform(0.0, 4.0))
    covariance_spectrum: tuple[float, ...] | None = None
    prior_pos: float = 0.5

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if not (0.0 < self.prior_pos < 1.0):
            raise ValueError(f"prior_pos must lie in (0, 1), got {self.prior_pos}")
        if not isinstance(self.margin_dist, (Uniform, PointMass, HalfNormal)):
            raise TypeError(f"unsupported margin distribution {self.margin_dist!r}")
        if self.covariance_spectrum is not None:
            spectrum = tuple(float(v) for v in self.covariance_spectrum)
            if len(spectrum) != self.d - 1:
                raise ValueError(
                    f"covariance_spectrum needs d - 1 = {self.d - 1} entries, got {len(spectrum)}"
                )
            if any(not (v > 0.0 and math.isfinite(v)) for v in spectrum):
                raise ValueError("covariance_spectrum entries must be positive and finite")
            object.__setattr__(self, "covariance_spectrum", spectrum)

    @property
    def spectrum(self):
        """Eigenvalues of Sigma orthogonal to mu, as an array of length ``d - 1``."""
        if self.covariance_spectrum is None:
            return np.ones(self.d - 1)
        return np.asarray(self.covariance_spectrum, dtype=np.float64)

    @property
    def lambda_min(self):
        return float(self.spectrum.min())

    @property
    def lambda_max(self):
        return float(self.spectrum.max())

    @property
    def uses_test_margin(self):
        """True when the margin is the PointMass testing aid."""
        return isinstance(self.margin_dist, PointMass)


@dataclass(frozen=True)
class FlipProbability:
    p: float

    def __post_init__(self):
        if not (0.0 <= self.p < 0.5):
            raise ValueError(f"flip probability must satisfy 0 <= p < 1/2, got p = {self.p}")


@dataclass(frozen=True)
class RandomizedResponse:
    """Randomized response over ``num_classes`` labels with privacy level ``epsilon``.

    The true label is kept with probability ``e^eps / (e^eps + C - 1)``.
    """

    epsilon: float
    num_classes: int = 2

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if int(self.num_classes) != self.num_classes or self.num_classes < 2:
            raise ValueError(f"num_classes must be an integer >= 2, got {self.num_classes}")


@dataclass(frozen=True)
class NoiseSpec:
    kind: Union[FlipProbability, RandomizedResponse]

    @classmethod
    def flip(cls, p):
        return cls(FlipProbability(p))

    @classmethod
    def randomized_response(cls, epsilon, num_classes=2):
        return cls(RandomizedResponse(epsilon, num_classes))

    @property
    def flip_probability(self):
        """Probability that a given label differs from the true label."""
        kind = self.kind
        if isinstance(kind, FlipProbability):
            return float(kind.p)
        # (C - 1) / (e^eps + C - 1), written with e^-eps to avoid overflow
        wrong = (kind.num_classes - 1) * math.exp(-kind.epsilon)
        return wrong / (1.0 + wrong)


def randomized_response_flip_probability(epsilon):
    """Binary randomized-response flip probability ``1 / (e^eps + 1)``."""
    return NoiseSpec.randomized_response(epsilon, 2).flip_probability


# --- datasets -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    true_labels: np.ndarray
    noisy_labels: np.ndarray
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.true_labels, dtype=np.float64)
        yh = np.array(self.noisy_labels, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("features must be an n x d matrix")
        n = X.shape[0]
        if n < 1:
            raise ValueError("a dataset needs at least one row")
        if y.shape != (n,) or yh.shape != (n,):
            raise ValueError("label tracks must have the same length as features")
        for name, labels in (("true_labels", y), ("noisy_labels", yh)):
            if not np.all(np.abs(labels) == 1.0):
                raise ValueError(f"{name} must take values in {{+1, -1}}")
        for arr in (X, y, yh):
            arr.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "true_labels", y)
        object.__setattr__(self, "noisy_labels", yh)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def with_noisy_labels(self, labels):
        return Dataset(self.features, self.true_labels, labels, self.flags)

    def subset(self, index):
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.features[index], self.true_labels[index], self.noisy_labels[index], self.flags)

    def concat(self, other):
        return Dataset(
            np.vstack([self.features, other.features]),
            np.concatenate([self.true_labels, other.true_labels]),
            np.concatenate([self.noisy_labels, other.noisy_labels]),
            self.flags,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.true_labels, other.true_labels)
            and np.array_equal(self.noisy_labels, other.noisy_labels)
        )

    __hash__ = None


def canonical_mu(spec):
    """Class-mean direction ``gamma * e_1``."""
    mu = np.zeros(spec.d)
    mu[0] = spec.gamma
    return mu


def _streams(seed):
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(4)]


def sample_features(spec, n, label_rng, margin_rng, noise_rng):
    """Draw ``(X, y)`` for ``n`` rows from the three given generators."""
    y = np.where(label_rng.random(n) < spec.prior_pos, 1.0, -1.0)
    u = spec.margin_dist.sample(margin_rng, n)
    X = noise_rng.standard_normal((n, spec.d))
    X[:, 1:] *= np.sqrt(spec.spectrum)
    X[:, 0] = y * (1.0 + u) * spec.gamma
    return X, y


def sample_dataset(spec, noise, n, seed):
    """Sample ``n`` rows and pass the labels through the noise channel.

    Deterministic in ``(spec, noise, n, seed)``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    label_rng, margin_rng, noise_rng, flip_rng = _streams(seed)
    X, y = sample_features(spec, n, label_rng, margin_rng, noise_rng)
    flips = flip_rng.random(n) < noise.flip_probability
    noisy = np.where(flips, -y, y)
    flags = ("point_mass_margin",) if spec.uses_test_margin else ()
    return Dataset(X, y, noisy, flags)


def flip_fraction(dataset):
    return float(np.mean(dataset.noisy_labels != dataset.true_labels))


def write_dataset_csv(dataset, path):
    """Write ``row,y_true,y_noisy,x_0,...,x_{d-1}`` with round-trip float precision."""
    header = ["row", "y_true", "y_noisy"] + [f"x_{j}" for j in range(dataset.d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(dataset.n):
            writer.writerow(
                [i, int(dataset.true_labels[i]), int(dataset.noisy_labels[i])]
                + [repr(float(v)) for v in dataset.features[i]]
            )


def read_dataset_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = np.array(rows[1:], dtype=np.float64)
    return Dataset(body[:, 3:], body[:, 1], body[:, 2])
