"""Batch proposal engine: GP surrogate on the composition simplex.

The surrogate is an RBF-kernel Gaussian process with hyperparameters picked
by log-marginal-likelihood over a fixed logarithmic grid (fully reproducible,
no gradient machinery). Acquisition is upper-confidence-bound mu + beta*sigma;
batches are chosen greedily from a random pool with a pairwise distance
penalty so the 96 proposals stay diverse.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .domain import Recipe
from .errors import SingularKernel

__all__ = [
    "AcquisitionConfig",
    "SurrogateModel",
    "sample_simplex",
    "fit",
    "predict",
    "acquire",
    "propose_batch",
]

Seed = Union[int, np.random.SeedSequence, np.random.Generator]

LENGTH_SCALE_GRID = tuple(np.geomspace(0.05, 2.0, 7))
SIGNAL_VAR_GRID = tuple(np.geomspace(0.1, 10.0, 5))
NOISE_VAR_GRID = (1e-6, 1e-4, 1e-2)

MIN_NOISE_VAR = 1e-6
_DEGENERATE_VAR = 1e-12


@dataclass(frozen=True)
class AcquisitionConfig:
    """Knobs for batch proposal: exploration weight and pool diversity."""

    beta: float
    pool_size: int = 5000
    diversity_radius: float = 0.05
    penalty_weight: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.diversity_radius <= 0:
            raise ValueError("diversity radius must be positive")


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    """Fitted GP: training data, kernel parameters, cached factorization."""

    X: np.ndarray
    y: np.ndarray
    length_scale: float
    signal_var: float
    noise_var: float
    y_mean: float
    y_std: float
    chol: np.ndarray
    alpha: np.ndarray
    log_marginal_likelihood: float

    @property
    def n_train(self) -> int:
        return len(self.X)


def _as_rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_simplex(n: int, d: int, seed: Seed) -> np.ndarray:
    """n points drawn uniformly on the (d-1)-simplex, rows summing to one."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = _as_rng(seed)
    x = rng.dirichlet(np.ones(d), size=n)
    return x / x.sum(axis=1, keepdims=True)


def _check_simplex(X: np.ndarray, tol: float = 1e-6) -> None:
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if X.min() < -tol or np.abs(X.sum(axis=1) - 1.0).max() > tol:
        raise ValueError("training inputs must lie on the simplex")


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d2, 0.0)


def _kernel(D2: np.ndarray, length_scale: float, signal_var: float) -> np.ndarray:
    return signal_var * np.exp(-D2 / (2.0 * length_scale**2))


def fit(X: np.ndarray, y: np.ndarray,
        length_scale: Optional[float] = None,
        signal_var: Optional[float] = None,
        noise_var: Optional[float] = None) -> SurrogateModel:
    """Fit the GP, selecting unpinned hyperparameters by grid-search MLE.

    Targets are standardized internally (skipped when their variance is
    degenerate, in which case residuals around the mean are fitted). Raises
    SingularKernel when no grid point factorizes, which happens only for
    duplicated points with conflicting targets even at the largest noise.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(X) != len(y) or len(y) < 2:
        raise ValueError("need at least two matching training points")
    _check_simplex(X)

    y_mean = float(y.mean())
    var = float(y.var())
    y_std = math.sqrt(var) if var >= _DEGENERATE_VAR else 1.0
    z = (y - y_mean) / y_std

    n = len(z)
    D2 = _sq_dists(X, X)
    ls_grid = LENGTH_SCALE_GRID if length_scale is None else (float(length_scale),)
    sv_grid = SIGNAL_VAR_GRID if signal_var is None else (float(signal_var),)
    # Grid-fitted models keep noise at or above the jitter floor; an explicitly
    # pinned value is honored exactly (pinning 0 surfaces genuine singularity).
    nv_grid = NOISE_VAR_GRID if noise_var is None else (float(noise_var),)

    best = None
    for ls in ls_grid:
        K0 = _kernel(D2, ls, 1.0)
        for sv in sv_grid:
            for nv in nv_grid:
                K = sv * K0 + nv * np.eye(n)
                try:
                    L = cholesky(K, lower=True)
                except np.linalg.LinAlgError:
                    continue
                alpha = cho_solve((L, True), z)
                lml = (-0.5 * float(z @ alpha)
                       - float(np.log(np.diag(L)).sum())
                       - 0.5 * n * math.log(2.0 * math.pi))
                if best is None or lml > best[0]:
                    best = (lml, ls, sv, nv, L, alpha)
    if best is None:
        raise SingularKernel(
            "kernel matrix is not positive definite at any grid point; "
            "check for duplicate inputs with conflicting targets"
        )
    lml, ls, sv, nv, L, alpha = best
    return SurrogateModel(
        X=X, y=y, length_scale=ls, signal_var=sv, noise_var=nv,
        y_mean=y_mean, y_std=y_std, chol=L, alpha=alpha,
        log_marginal_likelihood=lml,
    )


def predict(model: SurrogateModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and observation stddev at x (a point or a batch)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xq = x[None, :] if single else x
    Ks = _kernel(_sq_dists(Xq, model.X), model.length_scale, model.signal_var)
    mu_z = Ks @ model.alpha
    v = solve_triangular(model.chol, Ks.T, lower=True)
    var_z = model.signal_var + model.noise_var - np.sum(v**2, axis=0)
    sigma_z = np.sqrt(np.maximum(var_z, 0.0))
    mu = mu_z * model.y_std + model.y_mean
    sigma = sigma_z * model.y_std
    if single:
        return float(mu[0]), float(sigma[0])
    return mu, sigma


def acquire(model: SurrogateModel, x: np.ndarray, beta: float) -> Union[float, np.ndarray]:
    """Upper-confidence-bound acquisition mu + beta*sigma."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    mu, sigma = predict(model, x)
    return mu + beta * sigma


def propose_batch(model: SurrogateModel, config: AcquisitionConfig, batch_size: int,
                  seed: Seed, keys: Sequence[str]) -> list[Recipe]:
    """Greedy diverse batch from a random candidate pool.

    Each pick maximizes acquisition minus a penalty that grows as the
    candidate approaches already-selected points within the diversity radius.
    Deterministic given the seed.
    """
    if batch_size > config.pool_size:
        raise ValueError("batch_size must not exceed the pool size")
    d = model.X.shape[1]
    if len(keys) != d:
        raise ValueError(f"got {len(keys)} keys for {d}-dimensional model")
    pool = sample_simplex(config.pool_size, d, seed)
    acq = np.asarray(acquire(model, pool, config.beta), dtype=float)

    penalties = np.zeros(config.pool_size)
    chosen: list[int] = []
    scores = acq.copy()
    for _ in range(batch_size):
        j = int(np.argmax(scores))
        chosen.append(j)
        dist = np.sqrt(np.sum((pool - pool[j]) ** 2, axis=1))
        penalties += np.maximum(0.0, 1.0 - dist / config.diversity_radius)
        scores = acq - config.penalty_weight * penalties
        scores[chosen] = -np.inf
    return [Recipe.from_vector(keys, pool[j]) for j in chosen]
