"""The multi-regime dataset container."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterventionalDataset:
    """Samples grouped by regime.

    ``regimes`` maps a regime index (0 = observational, k = single-node
    intervention on 1-based node k) to an ``n_k x p`` array. Keys are kept in
    increasing order so iteration, and therefore any reduction over regimes,
    is deterministic.
    """

    p: int
    regimes: dict[int, np.ndarray]

    def __post_init__(self):
        if self.p < 1:
            raise InvalidInputError("p must be at least 1")
        if not self.regimes:
            raise InvalidInputError("no regimes")
        ordered = {}
        for k in sorted(self.regimes):
            X = np.array(self.regimes[k], dtype=float)
            if not 0 <= k <= self.p:
                raise InvalidInputError(f"regime index {k} out of range 0..{self.p}")
            if X.ndim != 2 or X.shape[1] != self.p:
                raise InvalidInputError(f"regime {k} must have shape (n, {self.p}), got {X.shape}")
            if X.shape[0] == 0:
                raise InvalidInputError(f"regime {k} has no samples")
            if not np.all(np.isfinite(X)):
                raise InvalidInputError(f"regime {k} has non-finite entries")
            X.setflags(write=False)
            ordered[int(k)] = X
        object.__setattr__(self, "regimes", ordered)

    @classmethod
    def observational(cls, X) -> "InterventionalDataset":
        X = np.asarray(X, dtype=float)
        return cls(p=X.shape[1], regimes={0: X})

    def __iter__(self):
        return iter(self.regimes.items())

    def __len__(self):
        return len(self.regimes)

    @property
    def sample_counts(self) -> dict[int, int]:
        return {k: X.shape[0] for k, X in self.regimes.items()}

    @property
    def n_total(self) -> int:
        return sum(self.sample_counts.values())

    def pooled(self) -> np.ndarray:
        return np.vstack(list(self.regimes.values()))

    def subset(self, rows: dict[int, np.ndarray]) -> "InterventionalDataset":
        """Dataset restricted to the given row indices per regime (empty regimes dropped)."""
        return InterventionalDataset(
            self.p, {k: self.regimes[k][idx] for k, idx in rows.items() if len(idx)})


def observational_rows(data) -> np.ndarray:
    """Single data matrix for methods that only model observational data.

    Arrays pass through. For a dataset, regime 0 is used when present and
    other regimes are discarded with a warning; with no regime 0 every row is
    pooled, also with a warning.
    """
    if not isinstance(data, InterventionalDataset):
        X = np.asarray(data, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError("data matrix must be two-dimensional")
        return X
    if len(data) == 1 and 0 in data.regimes:
        return data.regimes[0]
    if 0 in data.regimes:
        log.warning("observational method: using the %d regime-0 rows, ignoring %d interventional rows",
                    data.regimes[0].shape[0], data.n_total - data.regimes[0].shape[0])
        return data.regimes[0]
    log.warning("observational method: no regime-0 rows, pooling all %d rows", data.n_total)
    return data.pooled()
