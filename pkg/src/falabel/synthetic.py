"""Synthetic labelling matrices with known ground truth.

Rows draw a Bernoulli class label; each LF independently abstains with
probability 1 - propensity and otherwise votes the true class with its
accuracy.  Because the generative law is known, an exact MAP predictor
(the Bayes oracle) upper-bounds what any label model can achieve on the
generated data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .labelling import ABSTAIN, GoldLabels, LabelMatrix


@dataclass(frozen=True)
class SyntheticSpec:
    """Generative configuration: class prior, per-LF accuracies and propensities.

    ``accuracies[j]`` is P(correct vote | LF j votes), in (0.5, 1];
    ``propensities[j]`` is P(LF j votes), in (0, 1].  Noise is symmetric
    across classes and abstention is independent of the class.
    """

    n: int
    m: int
    class_prior: float
    accuracies: tuple[float, ...]
    propensities: tuple[float, ...]
    seed: int = 123

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ValidationError(f"m must be >= 1, got {self.m}")
        if not 0.0 < self.class_prior < 1.0:
            raise ValidationError(f"class_prior must be in (0, 1), got {self.class_prior}")
        accuracies = tuple(float(a) for a in self.accuracies)
        propensities = tuple(float(q) for q in self.propensities)
        if len(accuracies) != self.m:
            raise ValidationError(f"need {self.m} accuracies, got {len(accuracies)}")
        if len(propensities) != self.m:
            raise ValidationError(f"need {self.m} propensities, got {len(propensities)}")
        for j, a in enumerate(accuracies):
            if not 0.5 < a <= 1.0:
                raise ValidationError(f"accuracy {a} for LF {j} not in (0.5, 1]")
        for j, q in enumerate(propensities):
            if not 0.0 < q <= 1.0:
                raise ValidationError(f"propensity {q} for LF {j} not in (0, 1]")
        object.__setattr__(self, "accuracies", accuracies)
        object.__setattr__(self, "propensities", propensities)

    @property
    def lf_names(self) -> tuple[str, ...]:
        return tuple(f"lf{j + 1}" for j in range(self.m))


def generate(spec: SyntheticSpec) -> tuple[LabelMatrix, GoldLabels]:
    """Draw (matrix, gold) deterministically from the spec's seed."""
    rng = np.random.default_rng(spec.seed)
    acc = np.asarray(spec.accuracies)
    prop = np.asarray(spec.propensities)
    y = (rng.random(spec.n) < spec.class_prior).astype(np.int64)
    correct = rng.random((spec.n, spec.m)) < acc[None, :]
    votes = np.where(correct, y[:, None], 1 - y[:, None])
    fires = rng.random((spec.n, spec.m)) < prop[None, :]
    values = np.where(fires, votes, ABSTAIN)
    return (
        LabelMatrix(values=values, lf_names=spec.lf_names),
        GoldLabels(values=y),
    )


def bayes_oracle(spec: SyntheticSpec, matrix: LabelMatrix) -> np.ndarray:
    """Exact MAP labels under the true generative parameters.

    Abstains multiply both class likelihoods by the same propensity
    factor, so only the prior and the vote terms enter the posterior
    log-odds.  Exact ties resolve to label 0.
    """
    if matrix.m != spec.m:
        raise ValidationError(
            f"matrix has {matrix.m} columns but the spec has m={spec.m}"
        )
    acc = np.asarray(spec.accuracies)
    log_odds_vote = np.log(acc) - np.log1p(-acc)  # log(a / (1 - a))
    values = matrix.values
    contrib = np.where(
        values == 1, log_odds_vote[None, :], np.where(values == 0, -log_odds_vote[None, :], 0.0)
    )
    log_odds = np.log(spec.class_prior) - np.log1p(-spec.class_prior) + contrib.sum(axis=1)
    return (log_odds > 0).astype(np.int64)


def save_spec(spec: SyntheticSpec, path) -> None:
    payload = {
        "n": spec.n,
        "m": spec.m,
        "class_prior": spec.class_prior,
        "accuracies": list(spec.accuracies),
        "propensities": list(spec.propensities),
        "seed": spec.seed,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_spec(path) -> SyntheticSpec:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"synthetic spec file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return SyntheticSpec(
            n=int(payload["n"]),
            m=int(payload["m"]),
            class_prior=float(payload["class_prior"]),
            accuracies=tuple(payload["accuracies"]),
            propensities=tuple(payload["propensities"]),
            seed=int(payload.get("seed", 123)),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed spec: {exc}") from exc
