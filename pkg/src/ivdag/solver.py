"""Augmented-Lagrangian fitting under the acyclicity constraint.

Each outer iteration minimizes

    F(W) + lambda * sum(W+ + W-) + (rho / 2) h(W)^2 + mu h(W),   W = W+ - W-

over ``W+, W- >= 0`` with L-BFGS-B (bound-constrained limited-memory BFGS),
which makes the l1 term linear and yields exact zeros. ``mu`` is the
multiplier of ``h(W) = 0``; ``rho`` grows geometrically whenever an inner
solve fails to shrink ``h`` by ``progress_ratio``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as sopt

from .errors import InvalidInputError, SolverDivergedError
from .graph import postprocess
from .numerics import acyclicity
from .objective import ObjectiveSpec, build_loss

log = logging.getLogger(__name__)


class FitStatus(str, enum.Enum):
    CONVERGED = "converged"
    RHO_EXHAUSTED = "rho_exhausted"
    ITER_BUDGET = "iter_budget"


@dataclass(frozen=True)
class FitConfig:
    lambda1: float | None = None  # overrides ObjectiveSpec.lambda1 when set
    h_tol: float = 1e-8
    rho_init: float = 1.0
    rho_max: float = 1e16
    rho_growth: float = 10.0
    progress_ratio: float = 0.25
    max_outer: int = 100
    inner_max_iter: int = 500
    inner_grad_tol: float = 1e-7
    w_init: np.ndarray | None = field(default=None, compare=False)
    post_threshold: float | None = None

    def __post_init__(self):
        if self.h_tol <= 0:
            raise InvalidInputError("h_tol must be positive")
        if self.rho_growth <= 1:
            raise InvalidInputError("rho_growth must exceed 1")
        if not 0 < self.progress_ratio < 1:
            raise InvalidInputError("progress_ratio must lie in (0, 1)")
        if self.lambda1 is not None and self.lambda1 < 0:
            raise InvalidInputError("lambda1 must be nonnegative")


@dataclass
class FitResult:
    W_hat: np.ndarray
    h_final: float
    outer_iters: int
    inner_iters_total: int
    objective_final: float
    status: FitStatus
    W_raw: np.ndarray | None = None
    removed_edges: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is FitStatus.CONVERGED


class _Augmented:
    """Augmented objective on the doubled variable ``x = [vec(W+), vec(W-)]``."""

    def __init__(self, loss, p: int, lambda1: float):
        self.loss = loss
        self.p = p
        self.lambda1 = lambda1
        self.rho = 1.0
        self.mu = 0.0
        self.last_finite = np.zeros((p, p))

    def weights(self, x: np.ndarray) -> np.ndarray:
        d = self.p * self.p
        return (x[:d] - x[d:]).reshape(self.p, self.p)

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        W = self.weights(x)
        # line-search trial points may overflow; they are rejected as +inf below
        with np.errstate(over="ignore", invalid="ignore"):
            f, gf = self.loss(W)
            h, gh = acyclicity(W)
            value = f + 0.5 * self.rho * h * h + self.mu * h + self.lambda1 * x.sum()
        if not np.isfinite(value):
            return np.inf, np.zeros_like(x)
        self.last_finite = W
        g = (gf + (self.rho * h + self.mu) * gh).ravel()
        return value, np.concatenate((g + self.lambda1, -g + self.lambda1))


def fit(data, spec: ObjectiveSpec, config: FitConfig | None = None) -> FitResult:
    """Estimate a weighted DAG for ``spec`` on ``data``.

    Raises:
        SolverDivergedError: the augmented objective became non-finite; the
            error carries the last finite iterate.
        SingularProfileError: propagated from the profile-likelihood loss.
    """
    config = config or FitConfig()
    lambda1 = spec.lambda1 if config.lambda1 is None else config.lambda1
    loss = build_loss(spec, data)
    p = data.p if hasattr(data, "p") else np.shape(data)[1]
    aug = _Augmented(loss, p, lambda1)
    aug.rho = config.rho_init

    offdiag = [(0.0, 0.0) if i == j else (0.0, None) for i in range(p) for j in range(p)]
    bounds = offdiag + offdiag
    options = {"maxiter": config.inner_max_iter, "gtol": config.inner_grad_tol}

    if config.w_init is None:
        x = np.zeros(2 * p * p)
    else:
        W0 = np.array(config.w_init, dtype=float)
        np.fill_diagonal(W0, 0.0)
        x = np.concatenate((np.maximum(W0, 0).ravel(), np.maximum(-W0, 0).ravel()))

    h = np.inf
    inner_total = 0
    status = FitStatus.ITER_BUDGET
    outer = 0
    for outer in range(1, config.max_outer + 1):
        while True:
            sol = sopt.minimize(aug, x, method="L-BFGS-B", jac=True, bounds=bounds, options=options)
            inner_total += int(sol.nit)
            if not np.isfinite(sol.fun):
                raise SolverDivergedError("augmented objective is not finite", aug.last_finite.copy())
            x_new = sol.x
            h_new = acyclicity(aug.weights(x_new))[0]
            if h_new > config.progress_ratio * h and aug.rho < config.rho_max:
                aug.rho *= config.rho_growth
            else:
                break
        x, h = x_new, h_new
        aug.mu += aug.rho * h
        log.debug("outer %d: h=%.3e rho=%.1e mu=%.3e", outer, h, aug.rho, aug.mu)
        if h <= config.h_tol:
            status = FitStatus.CONVERGED
            break
        if aug.rho >= config.rho_max:
            status = FitStatus.RHO_EXHAUSTED
            break

    W = aug.weights(x).copy()
    np.fill_diagonal(W, 0.0)
    objective = loss(W)[0] + lambda1 * float(np.abs(W).sum())
    result = FitResult(W_hat=W, h_final=float(h), outer_iters=outer, inner_iters_total=inner_total,
                       objective_final=float(objective), status=status)
    if config.post_threshold is not None:
        result.W_raw = W
        result.W_hat, result.removed_edges = postprocess(W, config.post_threshold)
    return result
