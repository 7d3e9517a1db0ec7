"""Binary pseudo-labeling from a fitted factor model.

The first latent factor scores every row; a threshold chosen on the
training factor (median by default, or its mean, or a Youden-optimal cut
on a labelled dev split) dichotomizes the scores into {0, 1}.  Because
the factor's sign is arbitrary, an orientation step anchors the positive
class to the half of the factor that correlates with positive votes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import ValidationError
from .fa_core import (
    FAParams,
    FitConfig,
    fit_fa_em,
    fit_fa_vi,
    params_from_dict,
    posterior_moments,
)
from .labelling import ABSTAIN, GoldLabels, LabelMatrix

THRESHOLD_KINDS = ("median", "mean", "cdf_youden")


@dataclass(frozen=True)
class LabelModel:
    """A deployable pseudo-labeler: factor model + threshold + orientation.

    ``threshold_value`` lives in raw (pre-orientation) latent units for the
    median/mean kinds and in CDF units for cdf_youden.  ``train_factor_mean``
    and ``train_factor_std`` are moments of the oriented training scores,
    used by the CDF transform at prediction time.
    """

    params: FAParams
    threshold_kind: str
    threshold_value: float
    train_factor_mean: float
    train_factor_std: float
    orientation: int

    def __post_init__(self):
        if self.threshold_kind not in THRESHOLD_KINDS:
            raise ValidationError(
                f"threshold_kind must be one of {THRESHOLD_KINDS}, got {self.threshold_kind!r}"
            )
        if not np.isfinite(self.threshold_value):
            raise ValidationError("threshold_value must be finite")
        if not self.train_factor_std > 0:
            raise ValidationError("train_factor_std must be > 0")
        if self.orientation not in (1, -1):
            raise ValidationError(f"orientation must be +1 or -1, got {self.orientation}")


@dataclass(frozen=True)
class Predictions:
    """Binary labels plus the oriented factor scores that produced them."""

    labels: np.ndarray  # (n,) in {0, 1}
    scores: np.ndarray  # (n,) oriented first-factor values


def orient_factor(z_train: np.ndarray, matrix: LabelMatrix) -> int:
    """Decide which half of the factor is the positive class.

    Correlates the factor with the per-row mean of non-abstain votes
    (votes are 0/1, so higher mean = more positive votes); rows that
    abstain everywhere are excluded.  Returns +1 on non-negative or
    undefined correlation, -1 otherwise.
    """
    z_train = np.asarray(z_train, dtype=float)
    if z_train.shape[0] != matrix.n:
        raise ValidationError("factor vector length must match the matrix row count")
    voted = matrix.values != ABSTAIN
    has_vote = voted.any(axis=1)
    if has_vote.sum() < 2:
        return 1
    with np.errstate(invalid="ignore", divide="ignore"):
        vote_mean = np.where(voted, matrix.values, 0).sum(axis=1)[has_vote] / voted.sum(axis=1)[has_vote]
    z = z_train[has_vote]
    if np.std(z) == 0 or np.std(vote_mean) == 0:
        return 1
    corr = float(np.corrcoef(z, vote_mean)[0, 1])
    if np.isnan(corr):
        return 1
    return 1 if corr >= 0 else -1


def _latent_threshold(kind: str, z_raw: np.ndarray) -> float:
    """Threshold on the raw training factor; even-count medians average the middle pair."""
    if kind == "median":
        return float(np.median(z_raw))
    if kind == "mean":
        return float(np.mean(z_raw))
    raise ValidationError(f"no latent threshold for kind {kind!r}")


def youden_threshold(scores: np.ndarray, gold: np.ndarray) -> tuple[float, float]:
    """Cut maximizing Youden's J = TPR - FPR under the rule ``score > t``.

    Candidates are every observed score plus one cut below the minimum
    (predict-all-positive); among maximizers the smallest cut wins.

    Returns
    -------
    (threshold, j_statistic)
    """
    scores = np.asarray(scores, dtype=float)
    gold = np.asarray(gold, dtype=int)
    if scores.shape != gold.shape:
        raise ValidationError("scores and gold labels must have equal length")
    n_pos = int((gold == 1).sum())
    n_neg = int((gold == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("Youden threshold requires both classes in the dev labels")
    candidates = np.concatenate([[scores.min() - 1.0], np.unique(scores)])
    best_t, best_j = candidates[0], -np.inf
    for t in candidates:
        pred = scores > t
        tpr = (pred & (gold == 1)).sum() / n_pos
        fpr = (pred & (gold == 0)).sum() / n_neg
        j = tpr - fpr
        if j > best_j:
            best_j, best_t = j, t
    return float(best_t), float(best_j)


def build_label_model(
    params: FAParams,
    train: LabelMatrix,
    threshold_kind: str = "median",
    dev: tuple[LabelMatrix, GoldLabels] | None = None,
) -> LabelModel:
    """Turn fitted factor parameters into a pseudo-labeler.

    Scores the training matrix with the first factor, orients it, and
    selects the threshold: the median or mean of the raw training factor,
    or a Youden-optimal cut on CDF-transformed dev scores (which requires
    ``dev``, a labelled split kept separate from any test data).
    """
    if threshold_kind not in THRESHOLD_KINDS:
        raise ValidationError(
            f"threshold_kind must be one of {THRESHOLD_KINDS}, got {threshold_kind!r}"
        )
    if threshold_kind == "cdf_youden" and dev is None:
        raise ValidationError("threshold_kind 'cdf_youden' requires a labelled dev set")

    z_raw = posterior_moments(params, train).mean[:, 0]
    orientation = orient_factor(z_raw, train)
    oriented = orientation * z_raw
    train_mean = float(oriented.mean())
    train_std = float(oriented.std())
    if not train_std > 0:
        train_std = 1.0  # degenerate factor; CDF transform collapses to 0.5

    if threshold_kind == "cdf_youden":
        dev_matrix, dev_gold = dev
        if dev_gold.n != dev_matrix.n:
            raise ValidationError("dev gold labels must match the dev matrix row count")
        dev_scores = orientation * posterior_moments(params, dev_matrix).mean[:, 0]
        dev_cdf = norm.cdf((dev_scores - train_mean) / train_std)
        if dev_gold.mask is not None:
            dev_cdf = dev_cdf[dev_gold.mask]
        threshold_value, _ = youden_threshold(dev_cdf, dev_gold.labelled_values())
    else:
        threshold_value = _latent_threshold(threshold_kind, z_raw)

    return LabelModel(
        params=params,
        threshold_kind=threshold_kind,
        threshold_value=threshold_value,
        train_factor_mean=train_mean,
        train_factor_std=train_std,
        orientation=orientation,
    )


def train_label_model(
    train: LabelMatrix,
    cfg: FitConfig = FitConfig(),
    threshold_kind: str = "median",
    dev: tuple[LabelMatrix, GoldLabels] | None = None,
    route: str = "em",
) -> LabelModel:
    """Fit the factor model ("em" or "vi" route) and build the pseudo-labeler."""
    if route == "em":
        params, _ = fit_fa_em(train, cfg)
    elif route == "vi":
        params, _ = fit_fa_vi(train, cfg)
    else:
        raise ValidationError(f"route must be 'em' or 'vi', got {route!r}")
    return build_label_model(params, train, threshold_kind=threshold_kind, dev=dev)


def predict(model: LabelModel, matrix: LabelMatrix) -> Predictions:
    """Score rows with the oriented first factor and threshold them.

    Ties at the threshold resolve to label 0.  For the median/mean kinds
    the stored raw-unit threshold is orientation-adjusted before the
    comparison; for cdf_youden the oriented score is first standardized by
    the training-factor moments and pushed through the normal CDF.
    """
    moments = posterior_moments(model.params, matrix)
    scores = model.orientation * moments.mean[:, 0]
    if model.threshold_kind == "cdf_youden":
        u = norm.cdf((scores - model.train_factor_mean) / model.train_factor_std)
        labels = u > model.threshold_value
    else:
        labels = scores > model.orientation * model.threshold_value
    return Predictions(labels=labels.astype(np.int64), scores=scores)


def export_factors(
    model: LabelModel,
    matrix: LabelMatrix,
    gold: GoldLabels | None = None,
    path=None,
) -> str:
    """CSV of up to the first two factors, scores and predictions.

    Columns: factor1[,factor2],score,label_pred[,label_gold].  Returns the
    CSV text; also writes it when ``path`` is given.
    """
    if gold is not None and gold.n != matrix.n:
        raise ValidationError(
            f"gold labels have {gold.n} rows but the matrix has {matrix.n}"
        )
    moments = posterior_moments(model.params, matrix)
    preds = predict(model, matrix)
    n_factors = min(model.params.k, 2)
    header = [f"factor{i + 1}" for i in range(n_factors)] + ["score", "label_pred"]
    if gold is not None:
        header.append("label_gold")
    lines = [",".join(header)]
    for i in range(matrix.n):
        row = [repr(float(moments.mean[i, f])) for f in range(n_factors)]
        row.append(repr(float(preds.scores[i])))
        row.append(str(int(preds.labels[i])))
        if gold is not None:
            row.append(str(int(gold.values[i])))
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def save_predictions(preds: Predictions, path) -> None:
    """Predictions CSV: columns index,score,label."""
    lines = ["index,score,label"]
    for i, (score, label) in enumerate(zip(preds.scores, preds.labels)):
        lines.append(f"{i},{float(score)!r},{int(label)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_label_model(model: LabelModel, path) -> None:
    """Serialize as the factor-parameter JSON plus the decision-rule fields."""
    payload = {
        "k": model.params.k,
        "m": model.params.m,
        "W": [[float(v) for v in row] for row in model.params.W],
        "c": [float(v) for v in model.params.c],
        "psi": [float(v) for v in model.params.psi],
        "threshold_kind": model.threshold_kind,
        "threshold_value": float(model.threshold_value),
        "orientation": int(model.orientation),
        "train_mean": float(model.train_factor_mean),
        "train_std": float(model.train_factor_std),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def label_model_from_dict(payload: dict) -> LabelModel:
    params = params_from_dict(payload)
    try:
        return LabelModel(
            params=params,
            threshold_kind=payload["threshold_kind"],
            threshold_value=float(payload["threshold_value"]),
            train_factor_mean=float(payload["train_mean"]),
            train_factor_std=float(payload["train_std"]),
            orientation=int(payload["orientation"]),
        )
    except KeyError as exc:
        raise ValidationError(f"label model file missing field {exc}") from None


def load_label_model(path) -> LabelModel:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"label model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return label_model_from_dict(payload)
