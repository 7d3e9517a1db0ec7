"""Binary classification metrics, the class-imbalance index, and the
training-size robustness sweep."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ci_baseline import ci_posterior, fit_ci_em, majority_vote
from .errors import ValidationError
from .fa_core import FitConfig
from .label_model import Predictions, predict, train_label_model
from .labelling import GoldLabels, LabelMatrix

SWEEP_METHODS = ("fa-em", "fa-vi", "ci-em", "majority")
DEFAULT_SWEEP_SIZES = (10, 20, 30, 40, 50, 60)


@dataclass(frozen=True)
class MetricsReport:
    """Standard binary metrics with positive class 1.

    Metrics whose denominator is zero are reported as 0.0 and listed in
    ``undefined``.
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int
    n: int
    undefined: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "n": self.n,
            "undefined": list(self.undefined),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _label_array(labels, what: str) -> np.ndarray:
    if isinstance(labels, Predictions):
        labels = labels.labels
    elif isinstance(labels, GoldLabels):
        labels = labels.values
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1:
        raise ValidationError(f"{what} must be a 1-d vector, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValidationError(f"{what} entries must be in {{0, 1}}")
    return arr


def evaluate(pred, gold) -> MetricsReport:
    """Confusion counts and accuracy/precision/recall/F1.

    ``pred`` may be a Predictions object or a 0/1 vector; ``gold`` a
    GoldLabels (its mask, when present, restricts the evaluation to
    labelled rows) or a 0/1 vector.
    """
    pred_arr = _label_array(pred, "predictions")
    mask = gold.mask if isinstance(gold, GoldLabels) else None
    gold_arr = _label_array(gold, "gold labels")
    if pred_arr.shape != gold_arr.shape:
        raise ValidationError(
            f"length mismatch: {pred_arr.shape[0]} predictions vs {gold_arr.shape[0]} gold labels"
        )
    if mask is not None:
        pred_arr = pred_arr[mask]
        gold_arr = gold_arr[mask]
    if gold_arr.size == 0:
        raise ValidationError("cannot evaluate on empty input")

    tp = int(((pred_arr == 1) & (gold_arr == 1)).sum())
    fp = int(((pred_arr == 1) & (gold_arr == 0)).sum())
    tn = int(((pred_arr == 0) & (gold_arr == 0)).sum())
    fn = int(((pred_arr == 0) & (gold_arr == 1)).sum())
    n = gold_arr.size

    undefined = []
    accuracy = (tp + tn) / n
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    return MetricsReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        n=n,
        undefined=tuple(undefined),
    )


def imbalance_index(gold) -> float:
    """Class imbalance as |n_pos - n_neg| / (n_pos + n_neg), in [0, 1]."""
    if isinstance(gold, GoldLabels):
        values = gold.labelled_values()
    else:
        values = _label_array(gold, "gold labels")
    if values.size == 0:
        raise ValidationError("cannot compute imbalance of empty input")
    n_pos = int((values == 1).sum())
    n_neg = int((values == 0).sum())
    return abs(n_pos - n_neg) / (n_pos + n_neg)


@dataclass(frozen=True)
class SweepRecord:
    method: str
    size: int
    repeat: int
    metrics: MetricsReport


@dataclass(frozen=True)
class SweepResult:
    """Per-repeat sweep records in deterministic (size, method, repeat) order."""

    records: tuple[SweepRecord, ...]
    sizes: tuple[int, ...]
    methods: tuple[str, ...]
    repeats: int
    seed: int

    def summary(self) -> list[dict]:
        """Mean and std accuracy per (method, size); one row per pair."""
        rows = []
        for method in self.methods:
            for size in self.sizes:
                accs = [
                    r.metrics.accuracy
                    for r in self.records
                    if r.method == method and r.size == size
                ]
                rows.append(
                    {
                        "method": method,
                        "size": size,
                        "accuracy_mean": float(np.mean(accs)),
                        "accuracy_std": float(np.std(accs)),
                        "repeats": len(accs),
                    }
                )
        return rows

    def to_csv(self) -> str:
        lines = ["method,size,repeat,accuracy,precision,recall,f1"]
        for r in self.records:
            m = r.metrics
            lines.append(
                f"{r.method},{r.size},{r.repeat},"
                f"{m.accuracy!r},{m.precision!r},{m.recall!r},{m.f1!r}"
            )
        return "\n".join(lines) + "\n"


def _run_method(
    method: str,
    train: LabelMatrix,
    test: LabelMatrix,
    cfg: FitConfig,
    threshold_kind: str,
    seed: int,
) -> np.ndarray:
    if method in ("fa-em", "fa-vi"):
        model = train_label_model(
            train, cfg, threshold_kind=threshold_kind, route=method.split("-")[1]
        )
        return predict(model, test).labels
    if method == "ci-em":
        params, _ = fit_ci_em(train, max_iter=cfg.max_iter, tol=cfg.tol, seed=seed)
        return (ci_posterior(params, test) > 0.5).astype(np.int64)
    if method == "majority":
        return majority_vote(test)
    raise ValidationError(f"unknown method {method!r}, expected one of {SWEEP_METHODS}")


def robustness_sweep(
    train: LabelMatrix,
    test: LabelMatrix,
    gold_test: GoldLabels,
    sizes: tuple[int, ...] = DEFAULT_SWEEP_SIZES,
    repeats: int = 5,
    seed: int = 123,
    methods: tuple[str, ...] = ("fa-em", "ci-em", "majority"),
    cfg: FitConfig | None = None,
    threshold_kind: str = "median",
) -> SweepResult:
    """Accuracy of each method as the training set shrinks.

    For every (size, repeat) pair a subsample of training rows is drawn
    without replacement; all methods see the identical subsample and are
    evaluated on the fixed test set.  Subsampling reseeds deterministically
    from the master seed, so results are bit-reproducible.
    """
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    if not sizes:
        raise ValidationError("at least one size is required")
    for size in sizes:
        if size < 2:
            raise ValidationError(f"sizes must be >= 2 to fit models, got {size}")
        if size > train.n:
            raise ValidationError(f"size {size} exceeds available training rows ({train.n})")
    for method in methods:
        if method not in SWEEP_METHODS:
            raise ValidationError(f"unknown method {method!r}, expected one of {SWEEP_METHODS}")
    if gold_test.n != test.n:
        raise ValidationError("test gold labels must match the test matrix row count")
    if cfg is None:
        cfg = FitConfig(seed=seed)

    # one spawned seed per (size, repeat) cell, shared across methods
    children = np.random.SeedSequence(seed).spawn(len(sizes) * repeats)
    subsamples: dict[tuple[int, int], tuple[np.ndarray, int]] = {}
    for si, size in enumerate(sizes):
        for rep in range(repeats):
            child = children[si * repeats + rep]
            rng = np.random.default_rng(child)
            idx = np.sort(rng.choice(train.n, size=size, replace=False))
            subsamples[(size, rep)] = (idx, int(child.generate_state(1)[0]))

    records = []
    for size in sizes:
        for method in methods:
            for rep in range(repeats):
                idx, cell_seed = subsamples[(size, rep)]
                sub = LabelMatrix(values=train.values[idx], lf_names=train.lf_names)
                cell_cfg = FitConfig(
                    k=cfg.k,
                    max_iter=cfg.max_iter,
                    tol=cfg.tol,
                    psi_floor=cfg.psi_floor,
                    seed=cell_seed,
                    init=cfg.init,
                )
                labels = _run_method(method, sub, test, cell_cfg, threshold_kind, cell_seed)
                records.append(
                    SweepRecord(
                        method=method,
                        size=size,
                        repeat=rep,
                        metrics=evaluate(labels, gold_test),
                    )
                )
    return SweepResult(
        records=tuple(records),
        sizes=tuple(sizes),
        methods=tuple(methods),
        repeats=repeats,
        seed=seed,
    )


def save_report(report: MetricsReport, path) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")
