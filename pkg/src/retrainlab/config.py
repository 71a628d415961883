"""Plain-text experiment configuration.

One ``key = value`` pair per line, keys dotted by section (``spec.d``,
``noise.p``, ``grid.n``).  ``#`` starts a comment.  Lists are comma
separated.  Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import math

from .bounds import BoundInputs
from .datagen import HalfNormal, NoiseSpec, PointMass, ProblemSpec, Uniform
from .experiments import ExactTest, MonteCarloTest, SweepGrid

DEFAULT_SEED = 42

KNOWN_KEYS = {
    "seed",
    "spec.d",
    "spec.gamma",
    "spec.gamma_sq",
    "spec.margin",
    "spec.margin_low",
    "spec.margin_high",
    "spec.margin_value",
    "spec.margin_sigma",
    "spec.covariance_spectrum",
    "spec.noise_variance",
    "spec.prior_pos",
    "noise.p",
    "noise.epsilon",
    "noise.classes",
    "data.n",
    "grid.n",
    "grid.d",
    "grid.p",
    "grid.epsilon",
    "grid.gamma",
    "grid.lambda_min",
    "grid.lambda_max",
    "sweep.trials",
    "sweep.strategies",
    "sweep.keep_fraction",
    "sweep.test",
    "sweep.test_samples",
    "window.c1",
    "window.c2",
    "phase.level",
}


class ConfigError(ValueError):
    pass


def _as_int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


class Config:
    def __init__(self, values):
        unknown = sorted(set(values) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        self.values = dict(values)

    # --- loading ---

    @classmethod
    def parse(cls, text):
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"line {lineno}: empty key")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = value
        return cls(values)

    @classmethod
    def load(cls, path):
        """Read a config file, or the ``config`` block of a run manifest (``.json``)."""
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if path.endswith(".json"):
            try:
                manifest = json.loads(text)
                return cls({k: str(v) for k, v in manifest["config"].items()})
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"{path} is not a run manifest: {exc}") from exc
        return cls.parse(text)

    def to_text(self):
        return "".join(f"{k} = {self.values[k]}\n" for k in sorted(self.values))

    # --- typed access ---

    def has(self, key):
        return key in self.values

    def get_str(self, key, default=None):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        return self.values[key]

    def get_float(self, key, default=None):
        raw = self.get_str(key, None if default is None else repr(float(default)))
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
        if not math.isfinite(value):
            raise ConfigError(f"{key}: value must be finite")
        return value

    def get_int(self, key, default=None):
        raw = self.get_str(key, None if default is None else str(int(default)))
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return int(value)

    def get_list(self, key, convert=float, default=None):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return tuple(default)
        items = [s.strip() for s in self.values[key].split(",") if s.strip()]
        if not items:
            raise ConfigError(f"{key}: empty list")
        try:
            return tuple(_as_int(s) if convert is int else convert(s) for s in items)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse list {self.values[key]!r}") from None

    # --- domain objects ---

    def seed(self, override=None):
        if override is not None:
            return int(override)
        return self.get_int("seed", DEFAULT_SEED)

    def margin_dist(self):
        kind = self.get_str("spec.margin", "uniform").lower()
        try:
            if kind == "uniform":
                return Uniform(self.get_float("spec.margin_low", 0.0), self.get_float("spec.margin_high", 4.0))
            if kind in ("point_mass", "pointmass"):
                return PointMass(self.get_float("spec.margin_value", 0.0))
            if kind in ("half_normal", "halfnormal"):
                return HalfNormal(self.get_float("spec.margin_sigma", 1.0))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"spec.margin: unknown distribution {kind!r} (uniform, point_mass, half_normal)")

    def gamma(self):
        if self.has("spec.gamma") and self.has("spec.gamma_sq"):
            raise ConfigError("give only one of spec.gamma and spec.gamma_sq")
        if self.has("spec.gamma_sq"):
            g2 = self.get_float("spec.gamma_sq")
            if g2 <= 0:
                raise ConfigError("spec.gamma_sq must be positive")
            return math.sqrt(g2)
        return self.get_float("spec.gamma")

    def problem(self):
        d = self.get_int("spec.d")
        spectrum = None
        if self.has("spec.covariance_spectrum"):
            spectrum = self.get_list("spec.covariance_spectrum")
        elif self.has("spec.noise_variance"):
            spectrum = (self.get_float("spec.noise_variance"),) * max(d - 1, 0)
        try:
            return ProblemSpec(d, self.gamma(), self.margin_dist(), spectrum, self.get_float("spec.prior_pos", 0.5))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid model: {exc}") from exc

    def noise(self):
        has_p, has_eps = self.has("noise.p"), self.has("noise.epsilon")
        if has_p == has_eps:
            raise ConfigError("give exactly one of noise.p and noise.epsilon")
        try:
            if has_p:
                return NoiseSpec.flip(self.get_float("noise.p"))
            return NoiseSpec.randomized_response(self.get_float("noise.epsilon"), self.get_int("noise.classes", 2))
        except ValueError as exc:
            raise ConfigError(f"invalid label noise: {exc} (the model needs flip probability p < 1/2)") from exc

    def test_mode(self):
        kind = self.get_str("sweep.test", "exact").lower()
        if kind == "exact":
            return ExactTest()
        if kind in ("monte_carlo", "montecarlo", "mc"):
            m = self.get_int("sweep.test_samples", 100000)
            if m < 1:
                raise ConfigError("sweep.test_samples must be >= 1")
            return MonteCarloTest(m)
        raise ConfigError(f"sweep.test: expected exact or monte_carlo, got {kind!r}")

    def _noise_variance(self):
        if self.has("spec.covariance_spectrum"):
            raise ConfigError("grids support only a uniform spectrum; use spec.noise_variance")
        return self.get_float("spec.noise_variance", 1.0)

    def sweep_grid(self, seed):
        has_p, has_eps = self.has("grid.p"), self.has("grid.epsilon")
        if has_p == has_eps:
            raise ConfigError("give exactly one of grid.p and grid.epsilon")
        for p in self.get_list("grid.p", default=()) if has_p else ():
            if not (0.0 <= p < 0.5):
                raise ConfigError(f"grid.p: flip probability {p} violates the model constraint p < 1/2")
        try:
            return SweepGrid(
                n_axis=self.get_list("grid.n", int),
                d_axis=self.get_list("grid.d", int),
                gamma_axis=self.get_list("grid.gamma"),
                p_axis=self.get_list("grid.p") if has_p else (),
                epsilon_axis=self.get_list("grid.epsilon") if has_eps else (),
                margin_dist=self.margin_dist(),
                noise_variance=self._noise_variance(),
                prior_pos=self.get_float("spec.prior_pos", 0.5),
                strategies=self.get_list("sweep.strategies", str, ("initial", "full")),
                test_mode=self.test_mode(),
                master_seed=seed,
                keep_fraction=self.get_float("sweep.keep_fraction", 0.5),
                window_c1=self.get_float("window.c1", 1.0),
                window_c2=self.get_float("window.c2", 1.0),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid sweep grid: {exc}") from exc

    def bound_grid(self):
        lam = self.get_float("spec.noise_variance", 1.0)
        lmin = self.get_float("grid.lambda_min", lam)
        lmax = self.get_float("grid.lambda_max", lam)
        if self.has("grid.epsilon"):
            ps = tuple(NoiseSpec.randomized_response(e).flip_probability for e in self.get_list("grid.epsilon"))
        else:
            ps = self.get_list("grid.p")
        out = []
        try:
            for n in self.get_list("grid.n", int):
                for d in self.get_list("grid.d", int):
                    for p in ps:
                        for g in self.get_list("grid.gamma"):
                            out.append(BoundInputs(n, d, p, g, lmin, lmax))
        except ValueError as exc:
            raise ConfigError(f"invalid bound grid: {exc}") from exc
        return out
