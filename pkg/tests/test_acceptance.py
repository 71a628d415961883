"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL] criterion N`` line (also repeated
in the terminal summary) before asserting.
"""

import math
import time

import numpy as np
import pytest
from test_bounds import GOLDEN, REL, rel_close

from retrainlab import experiments as ex
from retrainlab.bounds import BoundInputs, alpha0_upper, err0_bounds, err1_upper, retrain_aux, retraining_helps_window
from retrainlab.datagen import HalfNormal, NoiseSpec, ProblemSpec, Uniform, canonical_mu, sample_dataset
from retrainlab.evaluation import exact_error, exact_error_general, monte_carlo_error
from retrainlab.linear import LinearClassifier, fit_initial

SEED = 42


@pytest.fixture(scope="module")
def figure1():
    start = time.perf_counter()
    result = ex.reproduce_figure1(master_seed=SEED, trials=50)
    return result, time.perf_counter() - start


def _panel(result, name):
    cell = getattr(result, name).cells[0]
    return cell.summaries["initial"].mean_acc, cell.summaries["full"].mean_acc, cell.gap("initial", "full")


def test_criterion_1_figure1_large_separation(figure1, record_criterion):
    result, elapsed = figure1
    ini, full, gap = _panel(result, "large_sep")
    ok = (
        abs(ini - 0.89) <= 0.04
        and abs(full - 0.9767) <= 0.04
        and gap.mean >= 0.05
        and gap.p_value < 0.01
        and elapsed < 60.0
    )
    detail = (
        f"50 trials: initial {ini:.4f} (target 0.89 +- 0.04), full {full:.4f} (target 0.9767 +- 0.04), "
        f"gap {gap.mean:.4f} (need >= 0.05), p = {gap.p_value:.2e}, runtime {elapsed:.1f} s (both panels, need < 60)"
    )
    assert record_criterion(1, "illustration, large separation", ok, detail)


def test_criterion_2_figure1_small_separation(figure1, record_criterion):
    result, _ = figure1
    ini, full, gap = _panel(result, "small_sep")
    ok = abs(ini - 0.68) <= 0.04 and abs(full - 0.68) <= 0.04 and abs(gap.mean) <= 0.02
    detail = (
        f"50 trials: initial {ini:.4f}, full {full:.4f} (both target 0.68 +- 0.04), "
        f"gap {gap.mean:.4f} (need |gap| <= 0.02)"
    )
    assert record_criterion(2, "illustration, small separation", ok, detail)


def test_criterion_3_exact_error_oracle(record_criterion):
    rng = np.random.default_rng(SEED)
    spec = ProblemSpec(10, 1.0, Uniform(0.0, 4.0), tuple(np.linspace(0.5, 2.0, 9)))
    worst = 0.0
    for k in range(20):
        clf = LinearClassifier(rng.standard_normal(10))
        exact = exact_error(spec, clf).value
        mc = monte_carlo_error(spec, clf, 10**5, 1000 + k)
        stderr = max(mc.stderr, 1.0 / 10**5)
        worst = max(worst, abs(exact - mc.value) / stderr)
    err_mu = exact_error(spec, LinearClassifier(canonical_mu(spec))).value
    perp = np.zeros(10)
    perp[1:] = rng.standard_normal(9)
    err_perp = exact_error(spec, LinearClassifier(perp)).value
    ok = worst <= 4.0 and err_mu == 0.0 and abs(err_perp - 0.5) <= 1e-8
    detail = f"max |exact - MC| / stderr = {worst:.2f} (need <= 4), err(mu) = {err_mu}, err(perp) = {err_perp!r}"
    assert record_criterion(3, "exact-error oracle", ok, detail)


def test_criterion_4_initial_consistency(record_criterion):
    spec = ProblemSpec(50, math.sqrt(0.5), Uniform(0.0, 4.0))
    ratios = []
    for s in range(10):
        data = sample_dataset(spec, NoiseSpec.flip(0.4), 10**5, ex.substream_seed(SEED, s))
        theta = fit_initial(data).weights
        ratios.append(float(theta @ canonical_mu(spec)) / spec.gamma**2)
    mean = float(np.mean(ratios))
    ok = abs(mean - 0.6) <= 0.02
    detail = f"mean <theta0, mu>/gamma^2 over 10 seeds = {mean:.4f} (target 0.6 +- 0.02), per-seed sd {np.std(ratios, ddof=1):.4f}"
    assert record_criterion(4, "initial-classifier consistency", ok, detail)


def test_criterion_5_bound_sandwich(record_criterion):
    d, p, gamma = 100, 0.4, 1.0
    spec = ProblemSpec(d, gamma, Uniform(0.0, 4.0))
    parts, ok = [], True
    for n in (10**4, 3 * 10**4, 10**5):
        bounds = err0_bounds(BoundInputs(n, d, p, gamma))
        assert not bounds.upper.vacuous and not bounds.lower.vacuous
        errs = []
        for s in range(10):
            seed = ex.substream_seed(SEED, s, n)
            clf = fit_initial(sample_dataset(spec, NoiseSpec.flip(p), n, seed))
            errs.append(monte_carlo_error(spec, clf, 10**5, ex.splitmix64(seed)).value)
        mean = float(np.mean(errs))
        sigma = float(np.std(errs, ddof=1)) / math.sqrt(len(errs))
        inside = bounds.lower.clamped - 4 * sigma <= mean <= bounds.upper.clamped + 4 * sigma
        ok &= inside
        parts.append(f"n={n}: {bounds.lower.clamped:.3g} <= {mean:.4f} <= {bounds.upper.clamped:.4f} (4 sigma = {4 * sigma:.1e})")
    assert record_criterion(5, "bound sandwich", ok, "; ".join(parts))


# unit sub-gaussian norm, the scale the analysis assumes for the margin variable
WINDOW_MARGIN = HalfNormal(math.sqrt(3.0 / 8.0))


def test_criterion_6_retraining_window(record_criterion):
    d, p, gamma = 100, 0.45, 1.0
    w = retraining_helps_window(BoundInputs(1, d, p, gamma))
    n_in = int(math.ceil(w.n_low))
    n_below = int(round(w.n_low / 10))
    ph = ex.phase_diagram(d, p, gamma, [n_below, n_in], 50, margin_dist=WINDOW_MARGIN, master_seed=SEED)
    below, inside = ph.points
    helps_inside = inside.inside_window and inside.mean_gap > 0 and inside.p_value < 0.01
    quiet_below = below.p_value >= 0.01
    ok = helps_inside and quiet_below
    detail = (
        f"window [{w.n_low:.4g}, {w.n_high:.4g}]; n={n_in}: gap {inside.mean_gap:.2e}, p = {inside.p_value:.2e} "
        f"(need p < 0.01); n={n_below}: gap {below.mean_gap:.2e}, p = {below.p_value:.2e} (need p >= 0.01)"
    )
    assert record_criterion(6, "retraining-helps window", ok, detail)


def test_criterion_7_consensus_ordering(illustration_spec, noise04, record_criterion):
    pred_cons, pred_full, given_full = [], [], []
    for t in range(50):
        r = ex.run_trial(ex.TrialConfig(illustration_spec, noise04, 300, master_seed=SEED, trial_index=t))
        diag = r.diagnostics
        pred_full.append(diag.acc_pred_full)
        given_full.append(diag.acc_given_full)
        if diag.acc_pred_consensus is not None:
            pred_cons.append(diag.acc_pred_consensus)
    a, b, c = np.mean(pred_cons), np.mean(pred_full), np.mean(given_full)
    ok = a - b >= 0.03 and b - c >= 0.03
    detail = (
        f"50 trials: consensus {a:.4f} > full predicted {b:.4f} > given {c:.4f}; "
        f"gaps {a - b:+.4f}, {b - c:+.4f} (each need >= 0.03)"
    )
    assert record_criterion(7, "consensus ordering", ok, detail)


def test_criterion_8_golden_values(record_criterion):
    got = {
        "alpha0_upper": alpha0_upper(BoundInputs(10**5, 3, 0.4, 1.0), 0.1, 1.0).raw,
        "err0_upper": err0_bounds(BoundInputs(10**5, 100, 0.4, 1.0)).upper.raw,
        "q_prime": retrain_aux(BoundInputs(10**5, 100, 0.4, 1.0)).q_prime,
        "p_prime": retrain_aux(BoundInputs(10**5, 100, 0.4, 1.0)).p_prime,
        "err1_upper": err1_upper(BoundInputs(10**5, 100, 0.45, 1.0)).raw,
        "err1_q_prime": retrain_aux(BoundInputs(10**5, 100, 0.45, 1.0)).q_prime,
    }
    rel = {k: abs(v - GOLDEN[k]) / abs(GOLDEN[k]) for k, v in got.items()}
    ok = all(rel_close(v, GOLDEN[k]) for k, v in got.items())
    detail = f"max relative error {max(rel.values()):.1e} over {len(rel)} values (need <= {REL:.0e})"
    assert record_criterion(8, "formula golden values", ok, detail)


def _property_checks():
    rng = np.random.default_rng(SEED)
    failures = []

    # margin invariant: y <x, mu> >= gamma^2 on every sample
    for margin in (Uniform(0.0, 4.0), HalfNormal(0.7)):
        spec = ProblemSpec(12, 0.8, margin, tuple(rng.uniform(0.5, 2.0, 11)))
        data = sample_dataset(spec, NoiseSpec.flip(0.3), 2000, 1)
        if not np.all(data.true_labels * (data.features @ canonical_mu(spec)) >= spec.gamma**2 * (1 - 1e-12)):
            failures.append("margin")

    # sign-scaling invariance: err(c theta) = err(theta) for c > 0, err(-theta) = 1 - err(theta)
    spec = ProblemSpec(8, 0.7, Uniform(0.0, 4.0), tuple(rng.uniform(0.5, 2.0, 7)))
    for _ in range(20):
        theta = rng.standard_normal(8)
        e = exact_error(spec, LinearClassifier(theta)).value
        if abs(exact_error(spec, LinearClassifier(3.7 * theta)).value - e) > 1e-12:
            failures.append("scaling")
        if abs(exact_error(spec, LinearClassifier(-theta)).value - (1.0 - e)) > 1e-8:
            failures.append("sign")

    # rotation invariance
    for _ in range(20):
        theta = rng.standard_normal(8)
        q, r = np.linalg.qr(rng.standard_normal((8, 8)))
        q = q * np.sign(np.diag(r))
        cov = np.diag(np.concatenate([[0.0], spec.spectrum]))
        rot = exact_error_general(q @ canonical_mu(spec), q @ cov @ q.T, q @ theta, spec.margin_dist).value
        if abs(rot - exact_error(spec, LinearClassifier(theta)).value) > 1e-8:
            failures.append("rotation")

    # prior independence of the population error
    theta = LinearClassifier(rng.standard_normal(8))
    for prior in (0.1, 0.5, 0.9):
        moved = ProblemSpec(8, 0.7, Uniform(0.0, 4.0), spec.covariance_spectrum, prior)
        if exact_error(moved, theta).value != exact_error(spec, theta).value:
            failures.append("prior")

    # determinism: bit-identical reruns
    cfg = ex.TrialConfig(spec, NoiseSpec.flip(0.3), 500, strategies=ex.STRATEGIES, trial_index=5)
    if ex.run_trial(cfg) != ex.run_trial(cfg) or sample_dataset(spec, NoiseSpec.flip(0.3), 100, 3) != sample_dataset(
        spec, NoiseSpec.flip(0.3), 100, 3
    ):
        failures.append("determinism")

    # parallel / serial equivalence
    grid = ex.SweepGrid(n_axis=(80, 160), d_axis=(8,), gamma_axis=(0.7, 1.0), p_axis=(0.2, 0.35), strategies=ex.STRATEGIES)
    if ex.run_sweep(grid, 4, threads=1) != ex.run_sweep(grid, 4, threads=4):
        failures.append("parallel")
    return failures


def test_criterion_9_property_suites(record_criterion):
    failures = _property_checks()
    ok = not failures
    detail = "margin, sign-scaling, rotation, prior, determinism, parallel/serial" + (
        "" if ok else f"; failed: {sorted(set(failures))}"
    )
    assert record_criterion(9, "property suites", ok, detail)
