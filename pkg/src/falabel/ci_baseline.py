"""Comparison baselines: a conditionally-independent label model and majority vote.

The CI model is a two-component mixture: a latent Bernoulli class y
generates each LF's output independently through a per-LF categorical
over the three emissions (-1 abstain, 0 negative, 1 positive).  It is
fit by EM on the unlabelled matrix; the exact Bayes posterior over y
then scores each row.  Majority vote needs no fitting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError, ValidationError
from .fa_core import FitReport
from .labelling import ABSTAIN, LabelMatrix

EMISSION_VALUES = (-1, 0, 1)
PROB_FLOOR = 1e-6
TIE_POLICIES = ("negative", "positive", "abstain_as_negative")


@dataclass(frozen=True)
class CIParams:
    """Mixture parameters: class prior and per-LF emission tables.

    ``emissions[j, y, v]`` is P(LF j emits EMISSION_VALUES[v] | class y).
    Every (j, y) slice sums to 1 and no probability sits below PROB_FLOOR.
    """

    class_prior: float
    emissions: np.ndarray  # (m, 2, 3)

    def __post_init__(self):
        if not 0.0 < self.class_prior < 1.0:
            raise ValidationError(f"class_prior must be in (0, 1), got {self.class_prior}")
        emissions = np.asarray(self.emissions, dtype=float).copy()
        if emissions.ndim != 3 or emissions.shape[1:] != (2, 3):
            raise ValidationError(
                f"emissions must have shape (m, 2, 3), got {emissions.shape}"
            )
        if not np.isfinite(emissions).all():
            raise ValidationError("emissions contain non-finite values")
        if (emissions < PROB_FLOOR).any():
            raise ValidationError(f"emission probabilities must be >= {PROB_FLOOR}")
        sums = emissions.sum(axis=2)
        if not np.allclose(sums, 1.0, atol=1e-12, rtol=0.0):
            raise ValidationError("each emission distribution must sum to 1 within 1e-12")
        emissions.flags.writeable = False
        object.__setattr__(self, "emissions", emissions)

    @property
    def m(self) -> int:
        return self.emissions.shape[0]


def _one_hot(values: np.ndarray) -> np.ndarray:
    """(n, m, 3) indicator of each entry's emission symbol."""
    return np.stack([values == v for v in EMISSION_VALUES], axis=2).astype(float)


def _log_class_scores(E: np.ndarray, class_prior: float, emissions: np.ndarray) -> np.ndarray:
    """(n, 2) array of log P(y) + log P(row | y)."""
    log_em = np.log(emissions)  # (m, 2, 3)
    per_row = np.einsum("njv,jyv->ny", E, log_em)
    return per_row + np.log([1.0 - class_prior, class_prior])


def fit_ci_em(
    matrix: LabelMatrix,
    max_iter: int = 1000,
    tol: float = 1e-4,
    seed: int = 123,
) -> tuple[CIParams, FitReport]:
    """EM for the mixture-of-products model with a latent Bernoulli class.

    Responsibilities start from a majority-vote soft assignment plus a
    seeded jitter to break symmetry; probabilities are floored at
    PROB_FLOOR and renormalized after every M-step.  After convergence
    the classes are canonicalized so the component whose emissions better
    match vote value 1 (higher average P(emit 1 | class)) is class 1.
    """
    if matrix.n < 2:
        raise ValidationError(f"CI fitting requires n >= 2 rows, got {matrix.n}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    if not tol > 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    n, m = matrix.n, matrix.m
    E = _one_hot(matrix.values)

    rng = np.random.default_rng(seed)
    mv = majority_vote(matrix, tie_policy="negative")
    r1 = np.where(mv == 1, 0.7, 0.3) + rng.uniform(-0.05, 0.05, size=n)
    r1 = np.clip(r1, 0.05, 0.95)

    def m_step(resp1: np.ndarray) -> tuple[float, np.ndarray]:
        resp = np.stack([1.0 - resp1, resp1], axis=1)  # (n, 2)
        prior = float(np.clip(resp1.mean(), PROB_FLOOR, 1.0 - PROB_FLOOR))
        counts = np.einsum("ny,njv->jyv", resp, E)
        totals = resp.sum(axis=0)[None, :, None]
        emissions = counts / totals
        # floor by mixing with uniform: keeps every probability >= PROB_FLOOR
        # and each distribution summing to exactly 1
        emissions = (1.0 - 3.0 * PROB_FLOOR) * emissions + PROB_FLOOR
        return prior, emissions

    prior, emissions = m_step(r1)
    trace: list[float] = []
    previous = -np.inf
    converged = False
    for it in range(max_iter):
        scores = _log_class_scores(E, prior, emissions)
        ll = float(logsumexp(scores, axis=1).sum())
        if not np.isfinite(ll):
            raise NumericalError(f"non-finite likelihood at iteration {it + 1}")
        trace.append(ll)
        if ll - previous < tol and it > 0:
            converged = True
            break
        previous = ll
        r1 = np.exp(scores[:, 1] - logsumexp(scores, axis=1))
        prior, emissions = m_step(r1)

    # canonicalize: class 1 = component with the higher mean P(emit 1 | class)
    if emissions[:, 0, 2].mean() > emissions[:, 1, 2].mean():
        prior = 1.0 - prior
        emissions = emissions[:, ::-1, :].copy()

    params = CIParams(class_prior=prior, emissions=emissions)
    report = FitReport(
        iterations=len(trace),
        final_log_likelihood=trace[-1],
        ll_trace=tuple(trace),
        converged=converged,
        route="em",
    )
    return params, report


def ci_posterior(params: CIParams, matrix: LabelMatrix) -> np.ndarray:
    """Exact Bayes posterior P(y=1 | row) for every row."""
    if matrix.m != params.m:
        raise ValidationError(
            f"matrix has {matrix.m} columns but the model expects {params.m}"
        )
    E = _one_hot(matrix.values)
    scores = _log_class_scores(E, params.class_prior, params.emissions)
    return np.exp(scores[:, 1] - logsumexp(scores, axis=1))


def majority_vote(matrix: LabelMatrix, tie_policy: str = "negative") -> np.ndarray:
    """Per-row majority of the non-abstain votes.

    ``negative`` sends ties and all-abstain rows to 0, ``positive`` to 1;
    ``abstain_as_negative`` counts each abstain as a vote for 0 first and
    resolves any remaining tie to 0.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValidationError(f"tie_policy must be one of {TIE_POLICIES}, got {tie_policy!r}")
    pos = (matrix.values == 1).sum(axis=1)
    if tie_policy == "abstain_as_negative":
        neg = (matrix.values == 0).sum(axis=1) + (matrix.values == ABSTAIN).sum(axis=1)
        tie_label = 0
    else:
        neg = (matrix.values == 0).sum(axis=1)
        tie_label = 1 if tie_policy == "positive" else 0
    return np.where(pos > neg, 1, np.where(neg > pos, 0, tie_label)).astype(np.int64)


def save_ci_params(params: CIParams, path) -> None:
    """JSON with the explicit emission tables, ordered abstain/negative/positive."""
    payload = {
        "class_prior": float(params.class_prior),
        "emission_values": list(EMISSION_VALUES),
        "emissions": [
            [[float(p) for p in dist] for dist in lf_table] for lf_table in params.emissions
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def ci_params_from_dict(payload: dict) -> CIParams:
    if tuple(payload.get("emission_values", EMISSION_VALUES)) != EMISSION_VALUES:
        raise ValidationError(f"emission_values must be {list(EMISSION_VALUES)}")
    try:
        return CIParams(
            class_prior=float(payload["class_prior"]),
            emissions=np.array(payload["emissions"], dtype=float),
        )
    except KeyError as exc:
        raise ValidationError(f"CI model file missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed CI model file: {exc}") from exc


def load_ci_params(path) -> CIParams:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"CI model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return ci_params_from_dict(payload)
