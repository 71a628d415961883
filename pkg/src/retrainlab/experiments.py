"""Seeded trial runner, parameter sweeps and the two canned experiments.

Seeds
-----
Every trial draws its training set from a 64-bit substream seed derived
from ``(master_seed, trial_index, cell_index)`` with SplitMix64 mixing::

    s = mix(master_seed)
    s = mix(s ^ mix(trial_index + K1))
    s = mix(s ^ mix(cell_index + K2))

where ``mix`` is the SplitMix64 finaliser and ``K1``/``K2`` are fixed odd
constants.  Inside a sweep the cell index is a 64-bit BLAKE2b digest of the
cell's coordinates ``(n, d, noise, gamma)``, not its position, so a cell's
trials do not change when other cells are added, removed or reordered.  Monte Carlo test sets use ``mix(s ^ K3)`` so that all
strategies of one trial see the same test points.  Because every seed is
fixed before any work starts, a sweep gives the same report regardless of
thread count or completion order.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union
from xml.sax.saxutils import escape

import numpy as np
from scipy import stats

from .bounds import BoundInputs, err0_bounds, err1_upper, retraining_helps_window
from .datagen import NoiseSpec, ProblemSpec, Uniform, flip_fraction, sample_dataset
from .evaluation import (
    ConsensusDiagnostics,
    consensus_diagnostics,
    exact_error,
    monte_carlo_error,
)
from .linear import EmptyConsensusError, fit_initial, retrain_confidence, retrain_consensus, retrain_full

STRATEGIES = ("initial", "full", "consensus", "confidence")

_MASK64 = 0xFFFFFFFFFFFFFFFF
_K_TRIAL = 0x9E3779B97F4A7C15
_K_CELL = 0xD1B54A32D192ED03
_K_TEST = 0x8CB92BA72F3D8DD7


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def substream_seed(master_seed, trial_index, cell_index=0):
    s = splitmix64(int(master_seed) & _MASK64)
    s = splitmix64(s ^ splitmix64((int(trial_index) + _K_TRIAL) & _MASK64))
    return splitmix64(s ^ splitmix64((int(cell_index) + _K_CELL) & _MASK64))


def cell_key(n, d, noise, gamma):
    """Position-independent 64-bit identifier of a sweep cell."""
    kind = noise.kind
    text = f"n={int(n)};d={int(d)};noise={type(kind).__name__}{tuple(vars(kind).values())!r};gamma={float(gamma)!r}"
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def test_seed(trial_seed):
    return splitmix64(trial_seed ^ _K_TEST)


# --- trials ---------------------------------------------------------------


@dataclass(frozen=True)
class ExactTest:
    pass


@dataclass(frozen=True)
class MonteCarloTest:
    num_samples: int


TestMode = Union[ExactTest, MonteCarloTest]


@dataclass(frozen=True)
class TrialConfig:
    spec: ProblemSpec
    noise: NoiseSpec
    n_train: int
    test_mode: TestMode = ExactTest()
    strategies: tuple[str, ...] = ("initial", "full")
    master_seed: int = 42
    trial_index: int = 0
    cell_index: int = 0
    keep_fraction: float = 0.5

    def __post_init__(self):
        strategies = tuple(dict.fromkeys(("initial",) + tuple(self.strategies)))
        unknown = set(strategies) - set(STRATEGIES)
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")
        object.__setattr__(self, "strategies", strategies)
        if int(self.n_train) != self.n_train or self.n_train < 1:
            raise ValueError("n_train must be a positive integer")

    @property
    def seed(self):
        return substream_seed(self.master_seed, self.trial_index, self.cell_index)


@dataclass(frozen=True)
class TrialResult:
    errors: dict  # strategy -> ErrorEstimate, or None when the strategy had no classifier
    diagnostics: Optional[ConsensusDiagnostics]
    flip_fraction: float
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    def error_value(self, strategy):
        est = self.errors.get(strategy)
        return None if est is None else est.value


def _evaluate(config, classifier, seed):
    try:
        if isinstance(config.test_mode, MonteCarloTest):
            return monte_carlo_error(config.spec, classifier, config.test_mode.num_samples, test_seed(seed))
        return exact_error(config.spec, classifier)
    except ValueError:
        # zero classifier; recorded as a missing value
        return None


def run_trial(config):
    """Sample one training set, fit every requested strategy and score it."""
    start = time.perf_counter()
    seed = config.seed
    data = sample_dataset(config.spec, config.noise, config.n_train, seed)
    initial = fit_initial(data)
    classifiers = {"initial": initial}
    full_report = None
    for name in config.strategies:
        if name == "full":
            full_report = retrain_full(data, initial)
            classifiers[name] = full_report.classifier
        elif name == "consensus":
            try:
                classifiers[name] = retrain_consensus(data, initial).classifier
            except EmptyConsensusError:
                classifiers[name] = None
        elif name == "confidence":
            classifiers[name] = retrain_confidence(data, initial, config.keep_fraction).classifier
    if full_report is None:
        full_report = retrain_full(data, initial)
    errors = {
        name: (None if clf is None else _evaluate(config, clf, seed))
        for name, clf in classifiers.items()
    }
    return TrialResult(
        errors=errors,
        diagnostics=consensus_diagnostics(data, full_report),
        flip_fraction=flip_fraction(data),
        seed=seed,
        wall_time=time.perf_counter() - start,
    )


# --- aggregation and paired tests -----------------------------------------


@dataclass(frozen=True)
class StrategySummary:
    trials: int
    count: int  # trials with a defined error
    mean_err: float
    std_err: float  # sample standard deviation across trials
    std_err_of_mean: float
    errors: tuple

    @property
    def mean_acc(self):
        return 1.0 - self.mean_err


def summarize(values, trials):
    vals = np.array([v for v in values if v is not None], dtype=np.float64)
    k = vals.size
    if k == 0:
        return StrategySummary(trials, 0, math.nan, math.nan, math.nan, tuple(values))
    sd = float(np.std(vals, ddof=1)) if k > 1 else 0.0
    return StrategySummary(trials, k, float(np.mean(vals)), sd, sd / math.sqrt(k), tuple(values))


@dataclass(frozen=True)
class PairedGap:
    """Mean accuracy gain of one strategy over another across paired trials."""

    mean: float
    std: float
    count: int
    p_value: float  # one-sided, H1: mean gain > 0

    def half_width(self, level=0.99):
        if self.count < 2:
            return math.inf
        return float(stats.t.ppf(0.5 + level / 2.0, self.count - 1)) * self.std / math.sqrt(self.count)


def paired_gap(base_errors, other_errors):
    """Paired one-sided t-test on ``acc(other) - acc(base)``.

    Differences are taken as ``err(base) - err(other)`` so tiny errors do not
    cancel against 1.  Trials where either error is missing are dropped.
    """
    diffs = np.array(
        [b - o for b, o in zip(base_errors, other_errors) if b is not None and o is not None],
        dtype=np.float64,
    )
    k = diffs.size
    if k == 0:
        return PairedGap(math.nan, math.nan, 0, math.nan)
    mean = float(np.mean(diffs))
    sd = float(np.std(diffs, ddof=1)) if k > 1 else 0.0
    if k < 2 or sd == 0.0:
        p = 0.0 if mean > 0.0 else 1.0
    else:
        p = float(stats.ttest_1samp(diffs, 0.0, alternative="greater").pvalue)
    return PairedGap(mean, sd, k, p)


# --- sweeps ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian grid over (n, d, noise, gamma) with shared model settings.

    Give the noise axis either as flip probabilities (``p_axis``) or as
    binary randomized-response levels (``epsilon_axis``).
    """

    n_axis: tuple
    d_axis: tuple
    gamma_axis: tuple
    p_axis: tuple = ()
    epsilon_axis: tuple = ()
    margin_dist: object = field(default_factory=lambda: Uniform(0.0, 4.0))
    noise_variance: float = 1.0  # every eigenvalue of Sigma off the mu direction
    prior_pos: float = 0.5
    strategies: tuple = ("initial", "full")
    test_mode: TestMode = ExactTest()
    master_seed: int = 42
    keep_fraction: float = 0.5
    window_c1: float = 1.0
    window_c2: float = 1.0

    def __post_init__(self):
        for name in ("n_axis", "d_axis", "gamma_axis", "p_axis", "epsilon_axis"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if bool(self.p_axis) == bool(self.epsilon_axis):
            raise ValueError("give exactly one of p_axis or epsilon_axis")
        if not (self.n_axis and self.d_axis and self.gamma_axis):
            raise ValueError("sweep axes must be nonempty")
        object.__setattr__(self, "strategies", tuple(dict.fromkeys(("initial",) + tuple(self.strategies))))

    @property
    def noise_axis(self):
        if self.p_axis:
            return tuple(NoiseSpec.flip(p) for p in self.p_axis)
        return tuple(NoiseSpec.randomized_response(e) for e in self.epsilon_axis)

    def cells(self):
        """(cell_index, n, d, noise, gamma) in row-major order over n, d, noise, gamma."""
        combos = itertools.product(self.n_axis, self.d_axis, self.noise_axis, self.gamma_axis)
        return [(i, n, d, noise, g) for i, (n, d, noise, g) in enumerate(combos)]

    def problem(self, d, gamma):
        spectrum = None if self.noise_variance == 1.0 else (self.noise_variance,) * (d - 1)
        return ProblemSpec(int(d), float(gamma), self.margin_dist, spectrum, self.prior_pos)


@dataclass(frozen=True)
class CellReport:
    index: int
    n: int
    d: int
    p: float
    gamma: float
    noise: NoiseSpec
    trials: tuple
    summaries: dict
    err0_lower: object
    err0_upper: object
    err1_upper: object
    window: object

    def gap(self, base="initial", other="full"):
        return paired_gap(self.summaries[base].errors, self.summaries[other].errors)


@dataclass(frozen=True)
class SweepReport:
    grid: SweepGrid
    trials_per_cell: int
    cells: tuple

    @property
    def seeds(self):
        return [t.seed for c in self.cells for t in c.trials]


def _cell_report(grid, index, n, d, noise, gamma, results):
    spec = grid.problem(d, gamma)
    summaries = {
        s: summarize([r.error_value(s) for r in results], len(results)) for s in grid.strategies
    }
    inputs = BoundInputs.from_problem(spec, noise, n)
    e0 = err0_bounds(inputs)
    return CellReport(
        index=index,
        n=int(n),
        d=int(d),
        p=noise.flip_probability,
        gamma=float(gamma),
        noise=noise,
        trials=tuple(results),
        summaries=summaries,
        err0_lower=e0.lower,
        err0_upper=e0.upper,
        err1_upper=err1_upper(inputs),
        window=retraining_helps_window(inputs, grid.window_c1, grid.window_c2),
    )


def _resolve_threads(threads):
    if threads is None or threads == 0:
        return os.cpu_count() or 1
    return max(1, int(threads))


def run_sweep(grid, trials_per_cell=50, threads=1):
    """Run ``trials_per_cell`` trials in every grid cell and aggregate them."""
    if trials_per_cell < 1:
        raise ValueError("trials_per_cell must be >= 1")
    cells = grid.cells()
    configs = [
        TrialConfig(
            spec=grid.problem(d, gamma),
            noise=noise,
            n_train=int(n),
            test_mode=grid.test_mode,
            strategies=grid.strategies,
            master_seed=grid.master_seed,
            trial_index=t,
            cell_index=cell_key(n, d, noise, gamma),
            keep_fraction=grid.keep_fraction,
        )
        for ci, n, d, noise, gamma in cells
        for t in range(trials_per_cell)
    ]
    seeds = [c.seed for c in configs]
    if len(set(seeds)) != len(seeds):
        raise RuntimeError("substream seed collision inside one sweep")
    workers = _resolve_threads(threads)
    if workers == 1:
        results = [run_trial(c) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, configs))
    reports = []
    for k, (ci, n, d, noise, gamma) in enumerate(cells):
        chunk = results[k * trials_per_cell : (k + 1) * trials_per_cell]
        reports.append(_cell_report(grid, ci, n, d, noise, gamma, chunk))
    return SweepReport(grid, trials_per_cell, tuple(reports))


SWEEP_CSV_HEADER = (
    "n,d,p,gamma,strategy,trials,mean_err,std_err_of_mean,mean_acc,"
    "bound_err0_lower,bound_err0_upper,bound_err1_upper,window_low,window_high,inside_window"
)


def _f(x):
    return repr(float(x))


def sweep_rows(report):
    for cell in report.cells:
        for strategy, s in cell.summaries.items():
            yield [
                str(cell.n),
                str(cell.d),
                _f(cell.p),
                _f(cell.gamma),
                strategy,
                str(s.count),
                _f(s.mean_err),
                _f(s.std_err_of_mean),
                _f(s.mean_acc),
                _f(cell.err0_lower.clamped),
                _f(cell.err0_upper.clamped),
                _f(cell.err1_upper.clamped),
                _f(cell.window.n_low),
                _f(cell.window.n_high),
                "true" if cell.window.inside else "false",
            ]


def write_sweep_csv(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER.split(","))
        writer.writerows(sweep_rows(report))


# --- illustration ---------------------------------------------------------

FIGURE1_D = 50
FIGURE1_P = 0.4
FIGURE1_N = 300
FIGURE1_GAMMA_SQ = {"large_sep": 0.5, "small_sep": 0.3}
# single-run test accuracies reported for the two panels
FIGURE1_REFERENCE = {"large_sep": (0.89, 0.9767), "small_sep": (0.68, 0.68)}

FIGURE1_SUMMARY_HEADER = (
    "config,gamma_sq,trials,mean_acc_initial,std_acc_initial,mean_acc_full,std_acc_full,"
    "mean_gap,gap_p_value,reference_acc_initial,reference_acc_full"
)


def figure1_grid(gamma_sq, master_seed=42, strategies=("initial", "full")):
    return SweepGrid(
        n_axis=(FIGURE1_N,),
        d_axis=(FIGURE1_D,),
        gamma_axis=(math.sqrt(gamma_sq),),
        p_axis=(FIGURE1_P,),
        margin_dist=Uniform(0.0, 4.0),
        strategies=strategies,
        master_seed=master_seed,
    )


@dataclass(frozen=True)
class Figure1Result:
    large_sep: SweepReport
    small_sep: SweepReport

    def summary_rows(self):
        rows = []
        for name in ("large_sep", "small_sep"):
            cell = getattr(self, name).cells[0]
            ini, full = cell.summaries["initial"], cell.summaries["full"]
            gap = cell.gap("initial", "full")
            ref_ini, ref_full = FIGURE1_REFERENCE[name]
            rows.append(
                [
                    name,
                    _f(FIGURE1_GAMMA_SQ[name]),
                    str(ini.count),
                    _f(ini.mean_acc),
                    _f(ini.std_err),
                    _f(full.mean_acc),
                    _f(full.std_err),
                    _f(gap.mean),
                    _f(gap.p_value),
                    _f(ref_ini),
                    _f(ref_full),
                ]
            )
        return rows


def reproduce_figure1(master_seed=42, trials=50, threads=1):
    """Both panels of the two-Gaussian retraining illustration, exact error."""
    return Figure1Result(
        large_sep=run_sweep(figure1_grid(FIGURE1_GAMMA_SQ["large_sep"], master_seed), trials, threads),
        small_sep=run_sweep(figure1_grid(FIGURE1_GAMMA_SQ["small_sep"], master_seed), trials, threads),
    )


def write_figure1_outputs(result, out_dir):
    paths = {}
    for name in ("large_sep", "small_sep"):
        path = os.path.join(out_dir, f"figure1_{name}.csv")
        write_sweep_csv(getattr(result, name), path)
        paths[name] = path
    summary = os.path.join(out_dir, "figure1_summary.csv")
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIGURE1_SUMMARY_HEADER.split(","))
        writer.writerows(result.summary_rows())
    paths["summary"] = summary
    return paths


# --- phase diagram --------------------------------------------------------


@dataclass(frozen=True)
class GapPoint:
    n: int
    mean_gap: float
    half_width: float
    p_value: float
    inside_window: bool


@dataclass(frozen=True)
class PhaseDiagram:
    report: SweepReport
    points: tuple
    n_low: float
    n_high: float
    level: float


def phase_diagram(
    d,
    p,
    gamma,
    n_axis,
    trials,
    margin_dist=None,
    master_seed=42,
    threads=1,
    c1=1.0,
    c2=1.0,
    level=0.99,
    test_mode=ExactTest(),
):
    """Mean accuracy gain of full retraining over initial training along ``n_axis``."""
    if not n_axis:
        raise ValueError("n_axis must be nonempty")
    grid = SweepGrid(
        n_axis=tuple(int(n) for n in n_axis),
        d_axis=(int(d),),
        gamma_axis=(float(gamma),),
        p_axis=(float(p),),
        margin_dist=margin_dist if margin_dist is not None else Uniform(0.0, 4.0),
        strategies=("initial", "full"),
        test_mode=test_mode,
        master_seed=master_seed,
        window_c1=c1,
        window_c2=c2,
    )
    report = run_sweep(grid, trials, threads)
    points = []
    for cell in report.cells:
        g = cell.gap("initial", "full")
        points.append(GapPoint(cell.n, g.mean, g.half_width(level), g.p_value, cell.window.inside))
    w = report.cells[0].window
    return PhaseDiagram(report, tuple(points), w.n_low, w.n_high, level)


PHASE_CSV_HEADER = "n,mean_gap,half_width,p_value,inside_window,window_low,window_high"


def write_phase_csv(phase, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PHASE_CSV_HEADER.split(","))
        for pt in phase.points:
            writer.writerow(
                [pt.n, _f(pt.mean_gap), _f(pt.half_width), _f(pt.p_value),
                 "true" if pt.inside_window else "false", _f(phase.n_low), _f(phase.n_high)]
            )


def phase_svg(phase, width=640, height=400):
    """Accuracy gap vs. log10(n) with the analytic window shaded."""
    left, right, top, bottom = 70, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom
    ns = [pt.n for pt in phase.points]
    lo = math.floor(math.log10(min(ns + [phase.n_low])))
    hi = math.ceil(math.log10(max(ns + [phase.n_high])))
    if hi == lo:
        hi += 1
    ys = [pt.mean_gap for pt in phase.points]
    bands = [pt.half_width for pt in phase.points if math.isfinite(pt.half_width)]
    ymax = max([abs(y) for y in ys] + [b + abs(y) for y, b in zip(ys, bands)] + [1e-3])
    ymin, ymax = -ymax * 1.1, ymax * 1.1

    def sx(n):
        return left + pw * (math.log10(n) - lo) / (hi - lo)

    def sy(v):
        return top + ph * (ymax - v) / (ymax - ymin)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    wx0 = max(left, sx(max(phase.n_low, 10.0 ** lo)))
    wx1 = min(left + pw, sx(max(phase.n_high, 10.0 ** lo)))
    if wx1 > wx0:
        out.append(
            f'<rect x="{wx0:.2f}" y="{top}" width="{wx1 - wx0:.2f}" height="{ph}" '
            'fill="#cfe8cf" stroke="none"><title>retraining window</title></rect>'
        )
    out.append(f'<line x1="{left}" y1="{sy(0):.2f}" x2="{left + pw}" y2="{sy(0):.2f}" stroke="#888" stroke-dasharray="4 3"/>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for e in range(lo, hi + 1):
        x = sx(10.0 ** e)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 20}" font-size="12" text-anchor="middle">1e{e}</text>')
    for v in (ymin, 0.0, ymax):
        out.append(f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" font-size="11" text-anchor="end">{v:.3g}</text>')
    pts = [(sx(pt.n), sy(pt.mean_gap), pt) for pt in phase.points]
    for x, y, pt in pts:
        if math.isfinite(pt.half_width):
            out.append(
                f'<line x1="{x:.2f}" y1="{sy(pt.mean_gap - pt.half_width):.2f}" x2="{x:.2f}" '
                f'y2="{sy(pt.mean_gap + pt.half_width):.2f}" stroke="#1f5fa8"/>'
            )
    if pts:
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y, _ in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="#1f5fa8" stroke-width="2"/>')
        for x, y, pt in pts:
            label = escape(f"n={pt.n} gap={pt.mean_gap:.4g} p={pt.p_value:.3g}")
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.5" fill="#1f5fa8"><title>{label}</title></circle>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-size="13" text-anchor="middle">training set size n (log scale)</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.2f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.2f})">acc(retrained) - acc(initial)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_phase_svg(phase, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(phase_svg(phase))
