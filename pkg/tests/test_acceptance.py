"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with the measured values.

Run with ``pytest tests/test_acceptance.py -v -s`` to see every line.
Criterion 9 needs externally produced YouTube-Spam matrices (see README)
and is skipped when the files are absent.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

from falabel import (
    FAParams,
    FitConfig,
    LabelMatrix,
    SyntheticSpec,
    bayes_oracle,
    ci_posterior,
    evaluate,
    fit_ci_em,
    fit_fa_em,
    fit_fa_vi,
    generate,
    imbalance_index,
    load_gold_labels,
    load_label_matrix,
    log_likelihood,
    majority_vote,
    posterior_moments,
    predict,
    robustness_sweep,
    train_label_model,
)
from falabel.cli import main as cli_main
from falabel.fa_core import _em_step

MASTER_SEED = 123


def report(num: int, description: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {num:02d} [{status}] {description}{suffix}")


def imbalanced_world():
    """Abstention-heavy, 10%-positive benchmark shared by criteria 5 and 6."""
    accuracies = tuple(np.linspace(0.7, 0.9, 9))
    propensities = (0.3,) * 9
    train, train_gold = generate(
        SyntheticSpec(n=5000, m=9, class_prior=0.1, accuracies=accuracies,
                      propensities=propensities, seed=MASTER_SEED)
    )
    test, test_gold = generate(
        SyntheticSpec(n=2000, m=9, class_prior=0.1, accuracies=accuracies,
                      propensities=propensities, seed=MASTER_SEED + 1)
    )
    spec_test = SyntheticSpec(
        n=2000, m=9, class_prior=0.1, accuracies=accuracies,
        propensities=propensities, seed=MASTER_SEED + 1,
    )
    return train, train_gold, test, test_gold, spec_test


def test_criterion_01_posterior_matches_quadrature():
    """100 random single-factor models: posterior moments vs dense-grid
    quadrature of p(z | row), within 1e-4; under 30 s."""
    rng = np.random.default_rng(MASTER_SEED)
    start = time.perf_counter()
    z = np.arange(-8.0, 8.0 + 1e-3, 1e-3)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 4))
        params = FAParams(
            W=rng.uniform(-1.5, 1.5, size=(m, 1)),
            c=rng.uniform(-1.0, 1.0, size=m),
            psi=rng.uniform(0.3, 2.0, size=m),
            k=1,
            m=m,
        )
        row = (rng.standard_normal() * params.W[:, 0] + params.c
               + rng.standard_normal(m) * np.sqrt(params.psi))
        log_w = norm.logpdf(z)
        for j in range(m):
            log_w = log_w + norm.logpdf(
                row[j], loc=params.W[j, 0] * z + params.c[j], scale=np.sqrt(params.psi[j])
            )
        w = np.exp(log_w - log_w.max())
        w /= w.sum()
        q_mean = float((w * z).sum())
        q_var = float((w * (z - q_mean) ** 2).sum())
        moments = posterior_moments(params, row[None, :])
        worst = max(
            worst,
            abs(moments.mean[0, 0] - q_mean),
            abs(moments.cov[0, 0] - q_var),
        )
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 30.0
    report(1, "posterior moments match quadrature", ok,
           f"max |diff|={worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-4
    assert elapsed < 30.0


def test_criterion_02_em_monotone_and_stationary():
    """25 matrices (20 random, 5 degenerate): trace never drops more than
    1e-9 and one extra EM step improves by less than tol."""
    rng = np.random.default_rng(MASTER_SEED + 2)
    matrices = []
    for _ in range(20):
        n = int(rng.integers(20, 120))
        m = int(rng.integers(2, 8))
        matrices.append(rng.integers(-1, 2, size=(n, m)))
    # degenerate cases: constant columns and heavy all-abstain blocks
    matrices.append(np.ones((30, 3), dtype=int))
    matrices.append(np.full((30, 3), -1, dtype=int))
    mix = rng.integers(-1, 2, size=(40, 4))
    mix[:, 0] = 1
    matrices.append(mix)
    heavy = rng.integers(-1, 2, size=(50, 5))
    heavy[:40] = -1
    matrices.append(heavy)
    two_const = rng.integers(-1, 2, size=(25, 4))
    two_const[:, 1] = 0
    two_const[:, 3] = 0
    matrices.append(two_const)

    cfg = FitConfig()
    worst_drop = 0.0
    worst_step = -np.inf
    for values in matrices:
        matrix = LabelMatrix(
            values=values, lf_names=tuple(f"lf{i}" for i in range(values.shape[1]))
        )
        params, rep = fit_fa_em(matrix, cfg)
        diffs = np.diff(rep.ll_trace)
        if diffs.size:
            worst_drop = max(worst_drop, float(-diffs.min()))
        Xc = matrix.values.astype(float) - params.c
        W2, psi2 = _em_step(Xc, params.W, params.psi, cfg.psi_floor)
        extra = FAParams(W=W2, c=params.c, psi=psi2, k=cfg.k, m=matrix.m)
        improvement = log_likelihood(extra, matrix) - log_likelihood(params, matrix)
        worst_step = max(worst_step, improvement)
    ok = worst_drop <= 1e-9 and worst_step < cfg.tol
    report(2, "EM trace monotone and stationary at convergence", ok,
           f"max drop={worst_drop:.2e}, extra-step gain={worst_step:.2e}")
    assert worst_drop <= 1e-9
    assert worst_step < cfg.tol


def criterion3_data():
    rng = np.random.default_rng(MASTER_SEED + 3)
    W_true = np.array([[1.0], [0.5]])
    psi_true = np.array([0.1, 0.1])
    X = rng.standard_normal((10000, 1)) @ W_true.T
    X += rng.standard_normal((10000, 2)) * np.sqrt(psi_true)
    sigma_true = W_true @ W_true.T + np.diag(psi_true)
    return X, sigma_true


def test_criterion_03_covariance_recovery():
    """FA fit on 10,000 draws from a known model recovers the generating
    covariance within 5% relative Frobenius error; under 10 s."""
    X, sigma_true = criterion3_data()
    start = time.perf_counter()
    params, _ = fit_fa_em(X)
    elapsed = time.perf_counter() - start
    rel_err = np.linalg.norm(params.sigma() - sigma_true) / np.linalg.norm(sigma_true)
    ok = rel_err < 0.05 and elapsed < 10.0
    report(3, "covariance recovery on synthetic Gaussian draws", ok,
           f"rel err={rel_err:.4f}, {elapsed:.1f}s")
    assert rel_err < 0.05
    assert elapsed < 10.0


def test_criterion_04_vi_em_agreement():
    """Variational and EM routes land on the same objective within 1e-3 per row."""
    X, _ = criterion3_data()
    _, em_rep = fit_fa_em(X)
    _, vi_rep = fit_fa_vi(X)
    gap = abs(vi_rep.final_log_likelihood - em_rep.final_log_likelihood)
    bound = 1e-3 * X.shape[0]
    ok = gap < bound
    report(4, "VI and EM objectives agree", ok, f"|gap|={gap:.4f} < {bound}")
    assert gap < bound


def test_criterion_05_imbalance_resilience():
    """Factor label model vs baselines on the abstention-heavy 10%-positive
    benchmark: accuracy must reach majority vote and 90% of the Bayes oracle.

    Known to fail: abstention here is independent of the class, so the
    score distribution has no dominant atom at the training median and the
    median split predicts about half the rows positive regardless of the
    true 10% prior, capping accuracy near 0.5 + prior.  The mean and
    Youden rules land lower still (measured 0.68 and 0.59 vs majority's
    0.91), so no supported threshold closes the gap.  The criterion is
    asserted as stated rather than weakened.
    """
    train, _, test, test_gold, spec_test = imbalanced_world()
    start = time.perf_counter()
    model = train_label_model(train, FitConfig(seed=MASTER_SEED))
    fa_acc = evaluate(predict(model, test).labels, test_gold).accuracy
    mv_acc = evaluate(majority_vote(test), test_gold).accuracy
    oracle_acc = evaluate(bayes_oracle(spec_test, test), test_gold).accuracy
    elapsed = time.perf_counter() - start
    ok = fa_acc >= mv_acc and fa_acc >= 0.9 * oracle_acc and elapsed < 60.0
    report(5, "imbalance resilience vs majority vote and Bayes oracle", ok,
           f"fa={fa_acc:.3f}, majority={mv_acc:.3f}, oracle={oracle_acc:.3f}, {elapsed:.1f}s")
    assert elapsed < 60.0
    assert fa_acc >= mv_acc, (
        f"factor-model accuracy {fa_acc:.3f} below majority vote {mv_acc:.3f}"
    )
    assert fa_acc >= 0.9 * oracle_acc, (
        f"factor-model accuracy {fa_acc:.3f} below 0.9 x oracle {oracle_acc:.3f}"
    )


def test_criterion_06_training_size_robustness():
    """Mean factor-model accuracy over 5 subsamples of 10 training rows
    stays within 5 points of the 1,000-row figure on the same benchmark."""
    train, _, test, test_gold, _ = imbalanced_world()
    result = robustness_sweep(
        train, test, test_gold, sizes=(10, 1000), repeats=5,
        seed=MASTER_SEED, methods=("fa-em",),
    )
    summary = {row["size"]: row["accuracy_mean"] for row in result.summary()}
    gap = abs(summary[10] - summary[1000])
    ok = gap <= 0.05
    report(6, "accuracy stable from 10 to 1000 training rows", ok,
           f"acc@10={summary[10]:.3f}, acc@1000={summary[1000]:.3f}, gap={gap:.3f}")
    assert gap <= 0.05, f"accuracy gap {gap:.3f} exceeds 5 points"


def test_criterion_07_baseline_oracles():
    """CI posterior equals two-class enumeration to 1e-12 (m <= 3); the
    synthetic Bayes oracle equals enumeration exactly (m <= 4)."""
    rng = np.random.default_rng(MASTER_SEED + 7)
    worst_ci = 0.0
    for m in (1, 2, 3):
        matrix = LabelMatrix(
            values=rng.integers(-1, 2, size=(100, m)),
            lf_names=tuple(f"lf{i}" for i in range(m)),
        )
        params, _ = fit_ci_em(matrix, seed=int(rng.integers(0, 2**31)))
        fast = ci_posterior(params, matrix)
        for i, row in enumerate(matrix.values):
            joint = []
            for y in (0, 1):
                p = params.class_prior if y == 1 else 1.0 - params.class_prior
                for j, entry in enumerate(row):
                    p *= params.emissions[j, y, int(entry) + 1]
                joint.append(p)
            brute = joint[1] / (joint[0] + joint[1])
            worst_ci = max(worst_ci, abs(fast[i] - brute))

    mismatches = 0
    for m in (1, 2, 3, 4):
        spec = SyntheticSpec(
            n=400, m=m, class_prior=float(rng.uniform(0.1, 0.9)),
            accuracies=tuple(rng.uniform(0.55, 0.99, size=m)),
            propensities=tuple(rng.uniform(0.2, 1.0, size=m)),
            seed=int(rng.integers(0, 2**31)),
        )
        matrix, _ = generate(spec)
        fast = bayes_oracle(spec, matrix)
        for i, row in enumerate(matrix.values):
            joint = []
            for y in (0, 1):
                p = spec.class_prior if y == 1 else 1.0 - spec.class_prior
                for j, entry in enumerate(row):
                    a, q = spec.accuracies[j], spec.propensities[j]
                    if entry == -1:
                        p *= 1.0 - q
                    elif entry == y:
                        p *= q * a
                    else:
                        p *= q * (1.0 - a)
                joint.append(p)
            brute = 1 if joint[1] > joint[0] else 0
            mismatches += int(brute != fast[i])
    ok = worst_ci < 1e-12 and mismatches == 0
    report(7, "baseline posteriors match brute-force enumeration", ok,
           f"max CI diff={worst_ci:.2e}, oracle mismatches={mismatches}")
    assert worst_ci < 1e-12
    assert mismatches == 0


def test_criterion_08_metric_correctness():
    """evaluate() matches an independent counting oracle on 1,000 random
    instances; the imbalance index reproduces the 218/2,483 split."""
    rng = np.random.default_rng(MASTER_SEED + 8)
    failures = 0
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        pred = rng.integers(0, 2, size=n)
        gold = rng.integers(0, 2, size=n)
        r = evaluate(pred, gold)
        tp = int(((pred == 1) & (gold == 1)).sum())
        fp = int(((pred == 1) & (gold == 0)).sum())
        tn = int(((pred == 0) & (gold == 0)).sum())
        fn = int(((pred == 0) & (gold == 1)).sum())
        if (r.tp, r.fp, r.tn, r.fn, r.n) != (tp, fp, tn, fn, n):
            failures += 1
    gold = np.concatenate([np.ones(218, dtype=int), np.zeros(2483, dtype=int)])
    index = imbalance_index(gold)
    ok = failures == 0 and abs(index - 0.8386) <= 1e-4
    report(8, "metrics match counting oracle; imbalance index correct", ok,
           f"failures={failures}, index={index:.6f}")
    assert failures == 0
    assert abs(index - 0.8386) <= 1e-4


def spam_data_dir() -> Path:
    return Path(os.environ.get(
        "FALABEL_SPAM_DIR", Path(__file__).resolve().parent.parent / "data" / "youtube_spam"
    ))


def test_criterion_09_external_spam_matrices():
    """With user-supplied YouTube-Spam matrices (9 LFs, 1,586 train / 250
    test rows) the default pipeline reaches 0.86 +/- 0.03 test accuracy.
    Skipped when the files are absent."""
    data_dir = spam_data_dir()
    train_path = data_dir / "L_train.csv"
    test_path = data_dir / "L_test.csv"
    gold_path = data_dir / "y_test.csv"
    if not (train_path.is_file() and test_path.is_file() and gold_path.is_file()):
        report(9, "external YouTube-Spam reproduction", True, "SKIPPED: files absent")
        pytest.skip(f"YouTube-Spam matrices not present under {data_dir}")
    train = load_label_matrix(train_path)
    test = load_label_matrix(test_path)
    gold = load_gold_labels(gold_path)
    model = train_label_model(train, FitConfig(seed=MASTER_SEED))
    acc = evaluate(predict(model, test).labels, gold).accuracy
    ok = abs(acc - 0.86) <= 0.03
    report(9, "external YouTube-Spam reproduction", ok, f"accuracy={acc:.3f}")
    assert abs(acc - 0.86) <= 0.03


def test_criterion_10_cli_determinism(tmp_path):
    """fit, predict and sweep produce byte-identical outputs across two runs."""
    accuracies = tuple(np.linspace(0.7, 0.9, 5))
    train, _ = generate(SyntheticSpec(
        n=300, m=5, class_prior=0.4, accuracies=accuracies,
        propensities=(0.8,) * 5, seed=MASTER_SEED,
    ))
    test, gold = generate(SyntheticSpec(
        n=150, m=5, class_prior=0.4, accuracies=accuracies,
        propensities=(0.8,) * 5, seed=MASTER_SEED + 1,
    ))
    from falabel import save_gold_labels, save_label_matrix

    train_path, test_path, gold_path = (
        tmp_path / "train.csv", tmp_path / "test.csv", tmp_path / "gold.csv"
    )
    save_label_matrix(train, train_path)
    save_label_matrix(test, test_path)
    save_gold_labels(gold, gold_path)

    outputs = {"model": [], "pred": [], "sweep": []}
    for run in ("a", "b"):
        model_path = tmp_path / f"model_{run}.json"
        pred_path = tmp_path / f"pred_{run}.csv"
        sweep_path = tmp_path / f"sweep_{run}.csv"
        assert cli_main(["fit", str(train_path), "--out", str(model_path), "--seed", "123"]) == 0
        assert cli_main(["predict", str(model_path), str(test_path), "--out", str(pred_path)]) == 0
        assert cli_main(
            ["sweep", str(train_path), str(test_path), str(gold_path),
             "--sizes", "10,20", "--repeats", "2", "--seed", "123", "--out", str(sweep_path)]
        ) == 0
        outputs["model"].append(model_path.read_bytes())
        outputs["pred"].append(pred_path.read_bytes())
        outputs["sweep"].append(sweep_path.read_bytes())
    ok = all(pair[0] == pair[1] for pair in outputs.values())
    report(10, "CLI outputs byte-identical across reruns", ok)
    for name, pair in outputs.items():
        assert pair[0] == pair[1], f"{name} output differs between runs"
