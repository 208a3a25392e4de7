"""Comparison of estimated graphs against the generating truth.

SHD convention: every unordered node pair contributes at most 1. A pair
whose edge state (absent, i->j, j->i, or both) differs between the two
graphs costs 1, so a reversed edge counts once rather than as a deletion
plus an insertion.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError
from .graph import postprocess


def _pair(a, b, binary: bool) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")
    if binary:
        return a != 0, b != 0
    return a.astype(float), b.astype(float)


def shd(est, truth) -> int:
    """Structural Hamming distance over unordered pairs (reversal costs 1)."""
    A, B = _pair(est, truth, binary=True)
    differs = (A != B) | (A.T != B.T)
    return int(np.triu(differs, k=1).sum())


def l1_distance(W_est, W_true) -> float:
    """Entrywise sum of absolute differences."""
    A, B = _pair(W_est, W_true, binary=False)
    return float(np.abs(A - B).sum())


def precision_recall(est, truth) -> tuple[float | None, float | None]:
    """Directed-edge precision and recall; ``None`` where the ratio is undefined."""
    A, B = _pair(est, truth, binary=True)
    tp = int((A & B).sum())
    called, true = int(A.sum()), int(B.sum())
    return (tp / called if called else None, tp / true if true else None)


def orientation_accuracy(W_est, W_true) -> float | None:
    """Fraction of true edges i->j with ``|w_ij| > |w_ji|`` in the estimate."""
    A, B = _pair(W_est, W_true, binary=False)
    edges = np.argwhere(B != 0)
    if edges.size == 0:
        return None
    hits = sum(bool(abs(A[i, j]) > abs(A[j, i])) for i, j in edges)
    return hits / len(edges)


@dataclass(frozen=True)
class EvalReport:
    shd: int
    l1: float
    precision: float | None
    recall: float | None
    n_true_edges: int
    n_called_edges: int
    threshold_used: float
    orientation: float | None = None

    def __post_init__(self):
        if (self.precision is None) != (self.n_called_edges == 0):
            raise InvalidInputError("precision is undefined exactly when no edges are called")
        if (self.recall is None) != (self.n_true_edges == 0):
            raise InvalidInputError("recall is undefined exactly when the truth has no edges")

    def as_row(self) -> dict:
        return asdict(self)


def evaluate(W_est, W_true, tau: float = 0.0) -> EvalReport:
    """Threshold ``W_est`` at ``tau`` (breaking any leftover cycles) and score it.

    SHD, precision and recall use the cleaned support; ``l1`` compares the
    cleaned weights against ``W_true``; orientation uses the raw estimate.
    """
    if not math.isfinite(tau) or tau < 0:
        raise InvalidInputError("threshold must be a nonnegative finite number")
    W_clean, _ = postprocess(W_est, tau)
    W_true = np.asarray(W_true, dtype=float)
    prec, rec = precision_recall(W_clean, W_true)
    return EvalReport(
        shd=shd(W_clean, W_true),
        l1=l1_distance(W_clean, W_true),
        precision=prec,
        recall=rec,
        n_true_edges=int(np.count_nonzero(W_true)),
        n_called_edges=int(np.count_nonzero(W_clean)),
        threshold_used=float(tau),
        orientation=orientation_accuracy(W_est, W_true),
    )
