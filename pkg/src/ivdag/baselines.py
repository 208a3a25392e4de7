"""Variance-ordering baselines.

``sortnregress`` orders nodes by marginal variance and Lasso-regresses each
node on all of its lower-variance predecessors. Its output therefore follows
a total order and is acyclic by construction. It exists to measure how much
of a dataset's structure is recoverable from variance ordering alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import observational_rows
from .errors import DegenerateDataError, InvalidInputError


@dataclass(frozen=True)
class InformationCriterion:
    """Pick lambda per node by ``n log(RSS/n) + k log(n)`` along the Lasso path."""
    n_lambdas: int = 100
    eps: float = 1e-4


@dataclass(frozen=True)
class FixedLambda:
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise InvalidInputError("lambda must be nonnegative")


PenaltyRule = InformationCriterion | FixedLambda


@dataclass(frozen=True)
class SortnregressConfig:
    penalty_rule: PenaltyRule = InformationCriterion()


def varsortability_cutoff(w: float, gamma: float) -> bool:
    """True iff the two-node chain with weight ``w`` and source/sink noise
    variance ratio ``gamma`` has increasing marginal variance along the edge."""
    if gamma <= 0:
        raise InvalidInputError("gamma must be positive")
    if gamma <= 1:
        return True
    return abs(w) >= math.sqrt(1.0 - 1.0 / gamma)


def lasso_cd(X: np.ndarray, y: np.ndarray, lam: float, beta0: np.ndarray | None = None,
             tol: float = 1e-10, max_sweeps: int = 10_000) -> np.ndarray:
    """Cyclic coordinate descent for ``(1/(2n))||y - X b||^2 + lam ||b||_1``."""
    n, d = X.shape
    beta = np.zeros(d) if beta0 is None else beta0.astype(float).copy()
    col_sq = np.einsum("ij,ij->j", X, X) / n
    resid = y - X @ beta
    for _ in range(max_sweeps):
        max_step = 0.0
        for j in range(d):
            if col_sq[j] == 0:
                continue
            old = beta[j]
            rho = X[:, j] @ resid / n + col_sq[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if new != old:
                resid -= X[:, j] * (new - old)
                beta[j] = new
                max_step = max(max_step, abs(new - old) * math.sqrt(col_sq[j]))
        if max_step < tol:
            break
    return beta


def lasso_path(X: np.ndarray, y: np.ndarray, n_lambdas: int = 100, eps: float = 1e-4
               ) -> tuple[np.ndarray, np.ndarray]:
    """Warm-started path on a log grid from ``lambda_max`` down to ``eps * lambda_max``,
    followed by the unpenalized solution (lambda = 0)."""
    n = X.shape[0]
    lam_max = float(np.max(np.abs(X.T @ y)) / n)
    if lam_max == 0:
        lams = np.zeros(1)
    else:
        lams = np.append(np.geomspace(lam_max, eps * lam_max, n_lambdas), 0.0)
    coefs = np.zeros((lams.size, X.shape[1]))
    beta = np.zeros(X.shape[1])
    for i, lam in enumerate(lams):
        if lam < lam_max:  # at lam_max the solution is exactly zero
            beta = lasso_cd(X, y, lam, beta)
        coefs[i] = beta
    return lams, coefs


def bic_select(X: np.ndarray, y: np.ndarray, lams: np.ndarray, coefs: np.ndarray) -> int:
    """Index along the path minimizing ``n log(RSS/n) + |active| log n``; ties go to
    the larger penalty (earlier index)."""
    n = X.shape[0]
    best, best_score = 0, np.inf
    for i, beta in enumerate(coefs):
        rss = float(np.sum((y - X @ beta) ** 2))
        score = n * math.log(max(rss, np.finfo(float).tiny) / n) + np.count_nonzero(beta) * math.log(n)
        if score < best_score - 1e-12:
            best, best_score = i, score
    return best


def variance_order(X: np.ndarray) -> np.ndarray:
    """Node indices by increasing sample variance; ties keep the lower index first."""
    return np.argsort(np.var(X, axis=0), kind="stable")


def sortnregress(X, config: SortnregressConfig | None = None) -> np.ndarray:
    """Weighted adjacency estimate from variance ordering plus per-node Lasso.

    Each regression includes an intercept (both sides are centered first).
    ``X`` may be a matrix or a dataset; datasets are reduced to their
    observational rows.

    Raises:
        DegenerateDataError: a column is constant.
    """
    rule = (config or SortnregressConfig()).penalty_rule
    X = np.asarray(observational_rows(X), dtype=float)
    if X.ndim != 2:
        raise InvalidInputError("sortnregress expects a 2-D sample matrix")
    n, p = X.shape
    if n < 2:
        raise InvalidInputError("sortnregress needs at least 2 samples")
    if np.any(np.ptp(X, axis=0) == 0):
        raise DegenerateDataError("sortnregress: constant column")
    Xc = X - X.mean(axis=0)
    order = variance_order(Xc)
    W = np.zeros((p, p))
    for pos in range(1, p):
        target, preds = order[pos], order[:pos]
        A, y = Xc[:, preds], Xc[:, target]
        if isinstance(rule, FixedLambda):
            beta = lasso_cd(A, y, rule.value)
        else:
            lams, coefs = lasso_path(A, y, rule.n_lambdas, rule.eps)
            beta = coefs[bic_select(A, y, lams, coefs)]
        W[preds, target] = beta
    return W
