"""Factor Analysis on labelling matrices.

The generative model treats each row x of the matrix as a linear map of a
low-dimensional Gaussian factor z:

    x = W z + c + eps,    z ~ N(0, I_k),    eps ~ N(0, diag(psi))

so the marginal over rows is N(c, Sigma) with Sigma = W W^T + diag(psi).
The bias c is fixed at the column means (its closed-form maximum-likelihood
value); W and psi are fitted either by expectation-maximization or by
coordinate-ascent variational inference on the evidence lower bound.

Fitting accepts a :class:`~falabel.labelling.LabelMatrix` (entries cast to
the reals -1.0/0.0/1.0) or any (n, m) float array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError
from .labelling import LabelMatrix

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class FitConfig:
    """Knobs shared by both fitting routes.

    Parameters
    ----------
    k : int
        Latent dimension (one factor suffices for dichotomization; two
        supports joint-plot exports).
    max_iter : int
        Iteration cap.
    tol : float
        Absolute objective improvement below which the fit stops.
    psi_floor : float
        Lower clamp applied to the noise variances every update; prevents
        zero-variance collapse on constant columns.
    seed : int
        Drives the random initialization route only.
    init : str
        "svd" seeds W from the top-k singular vectors of the centered data
        scaled by their singular values; "random" draws W from N(0, 0.01).
    """

    k: int = 1
    max_iter: int = 1000
    tol: float = 1e-4
    psi_floor: float = 1e-6
    seed: int = 123
    init: str = "svd"

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be > 0, got {self.tol}")
        if not self.psi_floor > 0:
            raise ValidationError(f"psi_floor must be > 0, got {self.psi_floor}")
        if self.init not in ("svd", "random"):
            raise ValidationError(f"init must be 'svd' or 'random', got {self.init!r}")


@dataclass(frozen=True)
class FAParams:
    """Fitted Factor Analysis parameters.

    Attributes
    ----------
    W : ndarray, shape (m, k)
        Loading matrix.
    c : ndarray, shape (m,)
        Bias (column means of the training data).
    psi : ndarray, shape (m,)
        Diagonal noise variances, all strictly positive.
    """

    W: np.ndarray
    c: np.ndarray
    psi: np.ndarray
    k: int
    m: int

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float).copy()
        c = np.asarray(self.c, dtype=float).copy()
        psi = np.asarray(self.psi, dtype=float).copy()
        if W.ndim != 2:
            raise ValidationError(f"W must be 2-dimensional, got shape {W.shape}")
        m, k = W.shape
        if (k, m) != (self.k, self.m):
            raise ValidationError(
                f"W shape {W.shape} inconsistent with declared m={self.m}, k={self.k}"
            )
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.k > self.m:
            raise ValidationError(
                f"k exceeds number of labelling functions (k={self.k}, m={self.m})"
            )
        if c.shape != (m,):
            raise ValidationError(f"c must have shape ({m},), got {c.shape}")
        if psi.shape != (m,):
            raise ValidationError(f"psi must have shape ({m},), got {psi.shape}")
        for name, arr in (("W", W), ("c", c), ("psi", psi)):
            if not np.isfinite(arr).all():
                raise ValidationError(f"{name} contains non-finite values")
        if not (psi > 0).all():
            raise ValidationError(f"psi entries must be > 0, got min {psi.min()}")
        for arr in (W, c, psi):
            arr.flags.writeable = False
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "psi", psi)

    def sigma(self) -> np.ndarray:
        """Model covariance Sigma = W W^T + diag(psi)."""
        return self.W @ self.W.T + np.diag(self.psi)


@dataclass(frozen=True)
class PosteriorMoments:
    """Posterior factor moments: per-row means and the shared covariance G."""

    mean: np.ndarray  # (n, k)
    cov: np.ndarray  # (k, k)


@dataclass(frozen=True)
class FitReport:
    """Optimization trace of a fit.

    ``final_log_likelihood`` holds the route's objective: the Gaussian
    log-likelihood for "em" and the evidence lower bound for "vi".
    """

    iterations: int
    final_log_likelihood: float
    ll_trace: tuple[float, ...] = field(repr=False)
    converged: bool
    route: str

    def __post_init__(self):
        if self.route not in ("em", "vi"):
            raise ValidationError(f"route must be 'em' or 'vi', got {self.route!r}")
        if self.iterations != len(self.ll_trace):
            raise ValidationError("iterations must equal the trace length")


def _as_float_matrix(data, what: str = "data") -> np.ndarray:
    if isinstance(data, LabelMatrix):
        return data.values.astype(float)
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{what} must be a 2-d array, got shape {arr.shape}")
    return arr


def _init_params(Xc: np.ndarray, cfg: FitConfig) -> tuple[np.ndarray, np.ndarray]:
    n, m = Xc.shape
    col_var = (Xc**2).mean(axis=0)
    if cfg.init == "svd":
        _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
        W = Vt[: cfg.k].T * (s[: cfg.k] / np.sqrt(n))
    else:
        rng = np.random.default_rng(cfg.seed)
        W = rng.normal(0.0, 0.1, size=(m, cfg.k))
    psi = np.maximum(col_var - (W**2).sum(axis=1), cfg.psi_floor)
    return W, psi


def _em_step(
    Xc: np.ndarray, W: np.ndarray, psi: np.ndarray, psi_floor: float
) -> tuple[np.ndarray, np.ndarray]:
    """One EM update of (W, psi) on centered data.

    E-step: G = (I + W^T Psi^-1 W)^-1 and per-row posterior means
    M = Xc Psi^-1 W G.  M-step: W maximizes the expected complete-data
    log-likelihood given the moments; psi picks up the residual diagonal
    variance and is clamped at ``psi_floor``.
    """
    n, m = Xc.shape
    k = W.shape[1]
    precision = 1.0 / psi
    G = np.linalg.inv(np.eye(k) + (W.T * precision) @ W)
    M = Xc @ (precision[:, None] * W) @ G
    XtM = Xc.T @ M
    Ezz = n * G + M.T @ M
    W_new = np.linalg.solve(Ezz.T, XtM.T).T
    psi_new = (Xc**2).sum(axis=0) / n - np.einsum("jk,jk->j", XtM, W_new) / n
    psi_new = np.maximum(psi_new, psi_floor)
    return W_new, psi_new


def _gaussian_ll(Xc: np.ndarray, W: np.ndarray, psi: np.ndarray) -> float:
    n, m = Xc.shape
    sigma = W @ W.T + np.diag(psi)
    try:
        L = scipy.linalg.cholesky(sigma, lower=True)
    except scipy.linalg.LinAlgError:
        smallest = float(np.linalg.eigvalsh(sigma).min())
        raise NumericalError(
            f"covariance not positive definite (smallest eigenvalue {smallest:.6e})"
        ) from None
    z = scipy.linalg.solve_triangular(L, Xc.T, lower=True)
    logdet = 2.0 * float(np.log(np.diag(L)).sum())
    return float(-0.5 * np.sum(z**2) - 0.5 * n * (m * LOG_2PI + logdet))


def _check_fit_input(X: np.ndarray, cfg: FitConfig) -> None:
    n, m = X.shape
    if n < 2:
        raise ValidationError(f"fitting requires n >= 2 rows, got {n}")
    if cfg.k > m:
        raise ValidationError(
            f"k exceeds number of labelling functions (k={cfg.k}, m={m})"
        )
    if not np.isfinite(X).all():
        raise ValidationError("input matrix contains non-finite values")


def fit_fa_em(data, cfg: FitConfig = FitConfig()) -> tuple[FAParams, FitReport]:
    """Fit the Factor Analysis model by expectation-maximization.

    Parameters
    ----------
    data : LabelMatrix or (n, m) array
        Observations; labelling matrices are read as reals in {-1, 0, 1}.
    cfg : FitConfig
        Latent dimension, initialization, and stopping rule.

    Returns
    -------
    (FAParams, FitReport)
        Fitted parameters (c fixed at the column means) and the
        log-likelihood trace, which is non-decreasing up to the psi clamp.
    """
    X = _as_float_matrix(data)
    _check_fit_input(X, cfg)
    n, m = X.shape
    c = X.mean(axis=0)
    Xc = X - c
    W, psi = _init_params(Xc, cfg)
    trace: list[float] = []
    previous = -np.inf
    converged = False
    for it in range(cfg.max_iter):
        W, psi = _em_step(Xc, W, psi, cfg.psi_floor)
        ll = _gaussian_ll(Xc, W, psi)
        if not np.isfinite(ll):
            raise NumericalError(f"non-finite log-likelihood at iteration {it + 1}")
        trace.append(ll)
        if ll - previous < cfg.tol and it > 0:
            converged = True
            break
        previous = ll
    params = FAParams(W=W, c=c, psi=psi, k=cfg.k, m=m)
    report = FitReport(
        iterations=len(trace),
        final_log_likelihood=trace[-1],
        ll_trace=tuple(trace),
        converged=converged,
        route="em",
    )
    return params, report


def _vi_estep(
    Xc: np.ndarray, W: np.ndarray, psi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Optimal mean-field Gaussian posterior given (W, psi).

    Means coincide with the exact posterior means; the diagonal variances
    are 1 / diag(I + W^T Psi^-1 W), shared across rows.  With k = 1 the
    family contains the exact posterior, so no variational gap remains.
    """
    n, m = Xc.shape
    k = W.shape[1]
    precision = 1.0 / psi
    H = np.eye(k) + (W.T * precision) @ W  # posterior precision
    M = np.linalg.solve(H, (Xc @ (precision[:, None] * W)).T).T
    v_row = 1.0 / np.diag(H)
    V = np.broadcast_to(v_row, (n, k)).copy()
    return M, V


def _elbo(
    Xc: np.ndarray, W: np.ndarray, psi: np.ndarray, M: np.ndarray, V: np.ndarray
) -> float:
    n, m = Xc.shape
    precision = 1.0 / psi
    R = Xc - M @ W.T
    fit_term = -0.5 * float((R**2 @ precision).sum())
    smear_term = -0.5 * float(V.sum(axis=0) @ ((W**2).T @ precision))
    noise_term = -0.5 * n * float((LOG_2PI + np.log(psi)).sum())
    prior_term = -0.5 * float((M**2).sum() + V.sum())
    entropy_term = 0.5 * float(np.log(V).sum()) + 0.5 * M.size
    return fit_term + smear_term + noise_term + prior_term + entropy_term


def fit_fa_vi(data, cfg: FitConfig = FitConfig()) -> tuple[FAParams, FitReport]:
    """Fit the Factor Analysis model by maximizing the evidence lower bound.

    Coordinate ascent alternates the closed-form mean-field update of the
    per-row Gaussian posteriors q(z_i) with point updates of (W, psi).
    Each block maximizes the bound exactly, so the trace is monotone.  At
    k = 1 the variational family contains the exact posterior and the
    final bound matches the marginal log-likelihood.
    """
    X = _as_float_matrix(data)
    _check_fit_input(X, cfg)
    n, m = X.shape
    c = X.mean(axis=0)
    Xc = X - c
    W, psi = _init_params(Xc, cfg)
    trace: list[float] = []
    previous = -np.inf
    converged = False
    for it in range(cfg.max_iter):
        M, V = _vi_estep(Xc, W, psi)
        XtM = Xc.T @ M
        Ezz = np.diag(V.sum(axis=0)) + M.T @ M
        W = np.linalg.solve(Ezz.T, XtM.T).T
        psi = (Xc**2).sum(axis=0) / n - np.einsum("jk,jk->j", XtM, W) / n
        psi = np.maximum(psi, cfg.psi_floor)
        bound = _elbo(Xc, W, psi, M, V)
        if not np.isfinite(bound):
            raise NumericalError(f"non-finite evidence bound at iteration {it + 1}")
        trace.append(bound)
        if bound - previous < cfg.tol and it > 0:
            converged = True
            break
        previous = bound
    params = FAParams(W=W, c=c, psi=psi, k=cfg.k, m=m)
    report = FitReport(
        iterations=len(trace),
        final_log_likelihood=trace[-1],
        ll_trace=tuple(trace),
        converged=converged,
        route="vi",
    )
    return params, report


def posterior_moments(params: FAParams, data) -> PosteriorMoments:
    """Exact posterior moments of the factor for every row.

    Returns
    -------
    PosteriorMoments
        ``cov`` is G = (I + W^T Psi^-1 W)^-1, shared by all rows;
        ``mean`` row i is G W^T Psi^-1 (x_i - c).
    """
    X = _as_float_matrix(data)
    if X.shape[1] != params.m:
        raise ValidationError(
            f"matrix has {X.shape[1]} columns but the model expects {params.m}"
        )
    if not (params.psi > 0).all():
        raise ValidationError("psi entries must be strictly positive")
    precision = 1.0 / params.psi
    G = np.linalg.inv(np.eye(params.k) + (params.W.T * precision) @ params.W)
    mean = (X - params.c) @ (precision[:, None] * params.W) @ G
    return PosteriorMoments(mean=mean, cov=G)


def log_likelihood(params: FAParams, data) -> float:
    """Gaussian log-likelihood of the rows under N(c, W W^T + diag(psi))."""
    X = _as_float_matrix(data)
    if X.shape[1] != params.m:
        raise ValidationError(
            f"matrix has {X.shape[1]} columns but the model expects {params.m}"
        )
    return _gaussian_ll(X - params.c, params.W, params.psi)


def save_params(params: FAParams, path) -> None:
    """Serialize to JSON with full-precision floats."""
    payload = {
        "k": params.k,
        "m": params.m,
        "W": [[float(v) for v in row] for row in params.W],
        "c": [float(v) for v in params.c],
        "psi": [float(v) for v in params.psi],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def params_from_dict(payload: dict) -> FAParams:
    try:
        return FAParams(
            W=np.array(payload["W"], dtype=float),
            c=np.array(payload["c"], dtype=float),
            psi=np.array(payload["psi"], dtype=float),
            k=int(payload["k"]),
            m=int(payload["m"]),
        )
    except KeyError as exc:
        raise ValidationError(f"model file missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model file: {exc}") from exc


def load_params(path) -> FAParams:
    """Load and re-validate parameters saved by :func:`save_params`."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return params_from_dict(payload)
