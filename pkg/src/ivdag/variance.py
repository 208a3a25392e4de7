"""Marginal estimate of the exogenous noise variances from intervened columns."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import InterventionalDataset
from .errors import DatasetParseError, DegenerateDataError, InvalidInputError, MissingRegimeError

log = logging.getLogger(__name__)


class OmegaSource(enum.Enum):
    ESTIMATED = "estimated"
    IDENTITY = "identity"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class OmegaEstimate:
    """Diagonal of the noise covariance, one positive value per node."""

    values: np.ndarray
    source: OmegaSource = OmegaSource.EXPLICIT

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size == 0 or not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise InvalidInputError("omega values must be positive and finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def identity(cls, p: int) -> "OmegaEstimate":
        return cls(np.ones(p), OmegaSource.IDENTITY)

    @property
    def p(self) -> int:
        return self.values.size

    def scaled(self, c: float) -> "OmegaEstimate":
        return OmegaEstimate(self.values * c, self.source)


def estimate_omega(data: InterventionalDataset, *, fallback_identity: bool = False) -> OmegaEstimate:
    """Unbiased sample variance of column i within regime i, for every node i.

    The sample mean is subtracted. A node without its regime raises
    :class:`MissingRegimeError` unless ``fallback_identity`` is set, in which
    case its entry is 1.0 and a warning is logged.
    """
    values = np.ones(data.p)
    estimated = 0
    for node in range(1, data.p + 1):
        X = data.regimes.get(node)
        if X is None or X.shape[0] < 2:
            if not fallback_identity:
                raise MissingRegimeError(node)
            log.warning("node %d: no usable interventional regime, using variance 1.0", node)
            continue
        var = float(np.var(X[:, node - 1], ddof=1))
        if not var > 0:
            raise DegenerateDataError(f"node {node}: intervened column is constant")
        values[node - 1] = var
        estimated += 1
    source = OmegaSource.ESTIMATED if estimated else OmegaSource.IDENTITY
    return OmegaEstimate(values, source)


def split_for_omega(data: InterventionalDataset, fraction: float
                    ) -> tuple[InterventionalDataset, InterventionalDataset]:
    """Split each interventional regime into an omega part and a fitting part.

    The first ``ceil(fraction * n_k)`` rows of regime k (k >= 1) are reserved
    for estimating its variance; the rest, plus all of regime 0, are returned
    for fitting. Rows are exchangeable, so no shuffling is done.
    """
    if not 0 < fraction < 1:
        raise InvalidInputError("split fraction must lie strictly between 0 and 1")
    omega_part, fit_part = {}, {}
    for k, X in data:
        if k == 0:
            fit_part[k] = X
            continue
        m = math.ceil(fraction * X.shape[0])
        if m < 2 or m >= X.shape[0]:
            raise InvalidInputError(f"regime {k} too small to split at fraction {fraction}")
        omega_part[k], fit_part[k] = X[:m], X[m:]
    if not omega_part:
        raise InvalidInputError("no interventional regimes to split")
    return InterventionalDataset(data.p, omega_part), InterventionalDataset(data.p, fit_part)


def write_omega(omega: OmegaEstimate, path) -> None:
    Path(path).write_text("\t".join(repr(float(v)) for v in omega.values) + "\n")


def read_omega(path) -> OmegaEstimate:
    text = Path(path).read_text().strip()
    try:
        values = [float(x) for x in text.split("\t")]
    except ValueError as exc:
        raise DatasetParseError(f"bad omega file {path}: {exc}", 1) from None
    return OmegaEstimate(np.array(values), OmegaSource.EXPLICIT)
