"""Acceptance suite: one PASS/FAIL line per criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import time

import numpy as np
import pytest

from photon_discrim.classifiers import NaiveBayesModel, delta_step, nb_classify
from photon_discrim.harness import (
    AccuracyReport,
    SweepConfig,
    centroid_distance,
    export_projection,
    run_sweep,
    separation_ratio,
    tv_distance,
    width_sweep,
)
from photon_discrim.nets import init_cnn, init_mnn, numerical_gradient
from photon_discrim.dataset import Standardizer
from photon_discrim.stats import CANONICAL_NBARS, SourceKind, pmf, sample_counts
from photon_discrim.trace import PulseShape, count_photons, synthesize_trace

from oracles import bayes_ceiling

pytestmark = pytest.mark.slow


def _slope(m, acc):
    return float(np.polyfit(np.asarray(m, dtype=float), np.asarray(acc, dtype=float), 1)[0])


def _monotone_detail(report, classifier):
    """(ok, text) for slope > 0 at every nbar and non-decreasing m=160 accuracy."""
    slopes, top = [], []
    for nbar in CANONICAL_NBARS:
        m, acc = report.curve(classifier, nbar)
        slopes.append(_slope(m, acc))
        top.append(float(acc[m == 160][0]))
    ok = all(s > 0 for s in slopes) and all(b >= a for a, b in zip(top, top[1:]))
    text = "slopes " + ", ".join(f"{s:.2e}" for s in slopes) + "; m=160 " + ", ".join(f"{a:.4f}" for a in top)
    return ok, text


def test_c1_distribution_fidelity(criterion):
    worst_tv, worst_time = 0.0, 0.0
    for nbar in CANONICAL_NBARS:
        for source in SourceKind:
            start = time.perf_counter()
            counts = sample_counts(source, nbar, 1_000_000, seed=source.index).counts
            hist = np.bincount(counts) / counts.size
            theory = np.array([pmf(source, n, nbar) for n in range(hist.size)])
            # mass beyond the observed maximum is part of the distance too
            tv = tv_distance(hist, theory) + 0.5 * (1.0 - theory.sum())
            worst_time = max(worst_time, time.perf_counter() - start)
            worst_tv = max(worst_tv, tv)
    ok = criterion(
        "1 distribution fidelity",
        worst_tv < 0.005 and worst_time < 10.0,
        f"max TV {worst_tv:.2e} (< 0.005), max {worst_time:.2f} s per source (< 10 s)",
    )
    assert ok


@pytest.fixture(scope="module")
def nb_curve():
    cfg = SweepConfig(nbar_list=[0.40], m_list=[10, 160], classifiers=["nb"], n_subsets_per_class=1000)
    start = time.perf_counter()
    report = run_sweep(cfg, write=False)
    return report, time.perf_counter() - start


def test_c2_naive_bayes_m10(criterion, nb_curve):
    report, elapsed = nb_curve
    acc = report.curve("nb", 0.40)[1][0]
    ceiling = bayes_ceiling(0.40, 10)
    ok = criterion(
        "2 naive Bayes, nbar=0.40 m=10",
        abs(acc - 0.72) <= 0.05 and elapsed < 60,
        f"accuracy {acc:.4f} (target 0.72 +- 0.05); exact Bayes-optimal ceiling {ceiling:.4f}; {elapsed:.1f} s",
    )
    assert ok


def test_c2_naive_bayes_m160(criterion, nb_curve):
    report, elapsed = nb_curve
    acc = report.curve("nb", 0.40)[1][1]
    ok = criterion(
        "2 naive Bayes, nbar=0.40 m=160",
        abs(acc - 0.88) <= 0.05 and elapsed < 60,
        f"accuracy {acc:.4f} (target 0.88 +- 0.05); {elapsed:.1f} s",
    )
    assert ok


@pytest.fixture(scope="module")
def default_report(default_sweep):
    path, elapsed = default_sweep
    return AccuracyReport.from_csv(path), elapsed


def test_c3_adaline_curve(criterion, default_report):
    report, elapsed = default_report
    m, acc = report.curve("adaline", 0.40)
    lo, hi = float(acc[m == 10][0]), float(acc[m == 160][0])
    ok = criterion(
        "3 ADALINE curve",
        0.56 <= lo <= 0.70 and hi > 0.88 and elapsed < 300,
        f"m=10 {lo:.4f} in [0.56, 0.70]; m=160 {hi:.4f} > 0.88; full grid {elapsed:.1f} s (< 300 s)",
    )
    assert ok


@pytest.mark.parametrize("classifier", ["adaline", "nb"])
def test_c4_monotonicity_linear(criterion, default_report, classifier):
    ok, text = _monotone_detail(default_report[0], classifier)
    assert criterion(f"4 monotonicity, {classifier}", ok, text)


@pytest.fixture(scope="module")
def nets_report(tmp_path_factory):
    cfg = SweepConfig(
        classifiers=["cnn", "mnn"],
        repetitions=2,
        output_dir=str(tmp_path_factory.mktemp("nets")),
    )
    return run_sweep(cfg)


@pytest.mark.parametrize("classifier", ["mnn", "cnn"])
def test_c4_monotonicity_nets(criterion, nets_report, classifier):
    ok, text = _monotone_detail(nets_report, classifier)
    assert criterion(f"4 monotonicity, {classifier}", ok, text)


def test_c5_separability(criterion):
    by_nbar = [centroid_distance(export_projection(nb, 60, 1000, seed=5)) for nb in CANONICAL_NBARS]
    by_m = [centroid_distance(export_projection(0.77, m, 1000, seed=5)) for m in (10, 60, 160, 600)]
    ratios = [separation_ratio(export_projection(0.77, m, 1000, seed=5)) for m in (10, 60, 160, 600)]
    ok = all(b > a for a, b in zip(by_nbar, by_nbar[1:])) and all(b > a for a, b in zip(by_m, by_m[1:]))
    criterion(
        "5 separability",
        ok,
        "centroid distance across nbar "
        + ", ".join(f"{d:.4f}" for d in by_nbar)
        + "; across M "
        + ", ".join(f"{d:.4f}" for d in by_m)
        + " (analytic limit 0.1536 for every M); separation ratio across M "
        + ", ".join(f"{r:.2f}" for r in ratios),
    )
    assert ok


def test_c6_oracles(criterion):
    import mpmath

    rng = np.random.default_rng(6)

    # (a) log-space naive Bayes vs direct products in high precision
    worst_a = 0.0
    for _ in range(300):
        nbar = float(rng.choice(CANONICAL_NBARS))
        counts = rng.integers(0, 7, size=int(rng.integers(1, 21)))
        nb = mpmath.mpf(nbar)
        pc = mpmath.fprod(mpmath.exp(-nb) * nb**int(k) / mpmath.factorial(int(k)) for k in counts)
        pt = mpmath.fprod(nb**int(k) / (nb + 1) ** (int(k) + 1) for k in counts)
        direct = abs(float(mpmath.log(pc) - mpmath.log(pt)))
        _, margin = nb_classify(counts, NaiveBayesModel(nbar))
        worst_a = max(worst_a, abs(margin - direct) / max(direct, 1e-300))
    ok_a = worst_a <= 1e-10

    # (b) delta step vs finite-difference gradient of 1/2 (d - y)^2
    worst_b = 0.0
    for _ in range(200):
        w, x = rng.normal(size=7), rng.dirichlet(np.ones(7))
        b, d, eps = float(rng.normal()), float(rng.choice([-1.0, 1.0])), 1e-6
        theta = np.append(w, b)

        def loss(t):
            return 0.5 * (d - (t[:7] @ x + t[7])) ** 2

        numeric = np.array([(loss(theta + eps * e) - loss(theta - eps * e)) / (2 * eps) for e in np.eye(8)])
        w2, b2 = delta_step(w, b, x, d, 1.0)
        analytic = theta - np.append(w2, b2)
        scale = np.maximum(np.abs(numeric), 1e-8)
        worst_b = max(worst_b, float(np.max(np.abs(analytic - numeric) / scale)))
    ok_b = worst_b <= 1e-6

    # (c) backprop vs central differences, 3 seeds per network
    ok_c = True
    for seed in range(3):
        X = np.random.default_rng(seed).dirichlet(np.ones(7), size=6)
        y = np.arange(6) % 2
        for model in (init_mnn(10, seed, Standardizer.fit(X)), init_cnn(seed, Standardizer.fit(X))):
            if model.kind == "cnn":
                for name in model.params:
                    if name.endswith("_b"):
                        model.params[name] += 0.05
            _, analytic = model.loss_and_grad(X, y)
            numeric = numerical_gradient(model, X, y)
            ok_c &= all(np.allclose(analytic[k], numeric[k], rtol=1e-5, atol=1e-8) for k in analytic)

    # (d) trace round trip over 10^4 bins
    counts = sample_counts(SourceKind.THERMAL, 0.77, 10_000, seed=6)
    trace = synthesize_trace(counts, PulseShape(noise_sigma=0.02), seed=7)
    ok_d = bool(np.array_equal(count_photons(trace).counts, counts.counts))

    ok = criterion(
        "6 oracle equivalences",
        ok_a and ok_b and ok_c and ok_d,
        f"(a) NB max rel err {worst_a:.1e}; (b) delta max rel err {worst_b:.1e}; "
        f"(c) gradient checks {'pass' if ok_c else 'fail'}; (d) trace round trip {'exact' if ok_d else 'mismatch'}",
    )
    assert ok


def test_c7_width_sweep(criterion):
    parts, ok = [], True
    for nbar in (0.40, 0.77):
        rows = {w: acc for w, acc, _ in width_sweep(nbar, 160, widths=(10, 200), repetitions=3, seed=7)}
        ok &= rows[10] >= rows[200] - 0.02
        parts.append(f"nbar={nbar}: width 10 {rows[10]:.4f} vs width 200 {rows[200]:.4f}")
    assert criterion("7 MNN width sweep", ok, "; ".join(parts))


def test_c8_determinism(criterion, default_sweep, tmp_path):
    from photon_discrim.cli import main

    first, _ = default_sweep
    assert main(["sweep", "--seed", "0", "--out", str(tmp_path)]) == 0
    second = tmp_path / "accuracy_report.csv"
    same = first.read_bytes() == second.read_bytes()
    assert criterion("8 determinism", same, f"default sweep run twice, CSVs {'identical' if same else 'differ'}")
