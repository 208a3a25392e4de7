"""Smooth losses and their gradients.

Direct forms (``*_value``/``*_grad``) work on residual matrices and are the
reference definitions. :func:`build_loss` returns the equivalent closure used
by the solver, which works on per-regime Gram matrices so that each
evaluation costs O(p^3) regardless of sample size.

Every gradient has its diagonal set to zero: self-loops are structurally
excluded and never optimized.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import InterventionalDataset, observational_rows
from .errors import InvalidInputError, SingularProfileError
from .graph import mask_intervention
from .variance import OmegaEstimate


class Method(str, enum.Enum):
    DOTEARS = "dotears"
    LEAST_SQUARES = "notears"
    NOTEARS_INTERVENTIONAL = "notears-iv"
    GOLEM_PROFILE = "golem-nv"

    @property
    def interventional(self) -> bool:
        return self in (Method.DOTEARS, Method.NOTEARS_INTERVENTIONAL)


@dataclass(frozen=True)
class ObjectiveSpec:
    method: Method
    lambda1: float = 0.1
    omega: OmegaEstimate | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.lambda1 < 0:
            raise InvalidInputError("lambda1 must be nonnegative")
        if self.method is Method.DOTEARS and self.omega is None:
            raise InvalidInputError("dotears requires an omega estimate")

    def with_lambda(self, lambda1: float) -> "ObjectiveSpec":
        return ObjectiveSpec(self.method, lambda1, self.omega)


def _omega_values(omega, p: int) -> np.ndarray:
    if omega is None:
        return np.ones(p)
    values = omega.values if isinstance(omega, OmegaEstimate) else np.asarray(omega, dtype=float)
    if values.shape != (p,) or np.any(values <= 0):
        raise InvalidInputError(f"omega must hold {p} positive values")
    return values


def _zero_diag(G: np.ndarray) -> np.ndarray:
    np.fill_diagonal(G, 0.0)
    return G


# -- dotears -------------------------------------------------------------------

def regime_column_terms(W, X, k: int, omega=None) -> np.ndarray:
    """Per-column ``||(X - X W^(k))_j||^2 / omega_j`` for one regime."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise InvalidInputError(f"regime {k} has no samples")
    R = X - X @ mask_intervention(W, k)
    return np.sum(R * R, axis=0) / _omega_values(omega, X.shape[1])


def regime_loss(W, X, k: int, omega=None) -> float:
    """Unnormalized per-regime loss ``(1/n_k) sum_j ||R_j||^2 / omega_j``."""
    return float(regime_column_terms(W, X, k, omega).sum() / np.shape(X)[0])


def dotears_terms(W, data: InterventionalDataset, omega) -> dict[int, np.ndarray]:
    """Regime -> per-column weighted squared residual sums."""
    return {k: regime_column_terms(W, X, k, omega) for k, X in data}


def dotears_value(W, data: InterventionalDataset, omega) -> float:
    """``(1/p) sum_k (1/(2 n_k)) ||(X_k - X_k W^(k)) Omega^{-1/2}||_F^2``.

    The leading factor is 1/p even though there are p+1 regime terms; it is a
    constant and does not move the minimizer.
    """
    total = 0.0
    for k, X in data:
        total += regime_column_terms(W, X, k, omega).sum() / (2.0 * X.shape[0])
    return total / data.p


def dotears_grad(W, data: InterventionalDataset, omega) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    inv = 1.0 / _omega_values(omega, data.p)
    G = np.zeros_like(W)
    for k, X in data:
        R = X - X @ mask_intervention(W, k)
        contrib = -(X.T @ R) * inv / X.shape[0]
        if k:
            contrib[:, k - 1] = 0.0
        G += contrib
    return _zero_diag(G / data.p)


# -- observational losses --------------------------------------------------------

def least_squares_value(W, X) -> float:
    """``(1/(2n)) ||X - X W||_F^2``."""
    X = np.asarray(X, dtype=float)
    R = X - X @ np.asarray(W, dtype=float)
    return float(np.sum(R * R) / (2.0 * X.shape[0]))


def least_squares_grad(W, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    R = X - X @ np.asarray(W, dtype=float)
    return _zero_diag(-(X.T @ R) / X.shape[0])


def golem_profile_value(W, X) -> float:
    """``(1/2) sum_j log ||(X - X W)_j||^2``, the profile likelihood over a
    diagonal noise covariance."""
    X = np.asarray(X, dtype=float)
    R = X - X @ np.asarray(W, dtype=float)
    sq = np.sum(R * R, axis=0)
    if np.any(sq <= 0):
        raise SingularProfileError("zero residual column in profile likelihood")
    return float(0.5 * np.sum(np.log(sq)))


def golem_profile_grad(W, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    R = X - X @ np.asarray(W, dtype=float)
    sq = np.sum(R * R, axis=0)
    if np.any(sq <= 0):
        raise SingularProfileError("zero residual column in profile likelihood")
    return _zero_diag(-(X.T @ R) / sq)


def l1_norm(W) -> float:
    """Sum of absolute off-diagonal entries."""
    A = np.abs(np.asarray(W, dtype=float))
    return float(A.sum() - np.trace(A))


# -- solver-facing closures ------------------------------------------------------

LossFn = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


def _dotears_gram_loss(data: InterventionalDataset, omega_values: np.ndarray) -> LossFn:
    p = data.p
    inv = 1.0 / omega_values
    total = np.zeros((p, p))
    own = np.zeros((p, p, p))  # own[j]: Gram of the regime intervening on column j
    const = np.zeros(p)
    for k, X in data:
        G = X.T @ X / X.shape[0]
        total += G
        if k:
            own[k - 1] = G
            const[k - 1] = G[k - 1, k - 1]
    ident = np.eye(p)

    def loss(W: np.ndarray) -> tuple[float, np.ndarray]:
        M = ident - W
        AM = total @ M - np.einsum("jab,bj->aj", own, M)
        quad = np.einsum("aj,aj->j", M, AM)
        value = 0.5 * float(np.sum(inv * (quad + const))) / p
        grad = -(AM * inv) / p
        return value, _zero_diag(grad)

    return loss


def _least_squares_gram_loss(X: np.ndarray) -> LossFn:
    G = X.T @ X / X.shape[0]
    ident = np.eye(G.shape[0])

    def loss(W: np.ndarray) -> tuple[float, np.ndarray]:
        GM = G @ (ident - W)
        value = 0.5 * float(np.einsum("aj,aj->", ident - W, GM))
        return value, _zero_diag(-GM)

    return loss


def _golem_gram_loss(X: np.ndarray) -> LossFn:
    G = X.T @ X
    ident = np.eye(G.shape[0])

    def loss(W: np.ndarray) -> tuple[float, np.ndarray]:
        M = ident - W
        GM = G @ M
        sq = np.einsum("aj,aj->j", M, GM)
        if np.any(sq <= 0):
            raise SingularProfileError("zero residual column in profile likelihood")
        return 0.5 * float(np.sum(np.log(sq))), _zero_diag(-GM / sq)

    return loss


def build_loss(spec: ObjectiveSpec, data) -> LossFn:
    """Closure ``W -> (value, grad)`` of the smooth part of ``spec``'s objective.

    Interventional methods need an :class:`InterventionalDataset`.
    Observational methods accept a matrix or a dataset (see
    :func:`ivdag.data.observational_rows`).
    """
    method = spec.method
    if method.interventional:
        if not isinstance(data, InterventionalDataset):
            data = InterventionalDataset.observational(data)
        omega = spec.omega if method is Method.DOTEARS else None
        return _dotears_gram_loss(data, _omega_values(omega, data.p))
    X = observational_rows(data)
    if method is Method.LEAST_SQUARES:
        return _least_squares_gram_loss(X)
    return _golem_gram_loss(X)


def smooth_value(spec: ObjectiveSpec, W, data) -> float:
    """Unpenalized loss of ``spec``'s method through the direct definitions."""
    method = spec.method
    if method.interventional:
        if not isinstance(data, InterventionalDataset):
            data = InterventionalDataset.observational(data)
        omega = spec.omega if method is Method.DOTEARS else None
        return dotears_value(W, data, omega)
    X = observational_rows(data)
    if method is Method.LEAST_SQUARES:
        return least_squares_value(W, X)
    return golem_profile_value(W, X)
