"""Random DAGs and linear-SEM sampling under single-node interventions.

Randomness is derived from ``numpy.random.SeedSequence`` with an explicit
spawn key, so every piece of a simulation has its own independent stream:

    (replicate, Stream.GRAPH)                   DAG structure and weights
    (replicate, Stream.SIGMA)                   exogenous standard deviations
    (replicate, stream, regime, node)           Gaussian noise of one column
    (replicate, stream, regime, p)              per-regime draws (c_k)

``stream`` is one of the data streams in :class:`Stream`. Draws for one
(regime, node) never depend on how many other regimes, nodes or replicates
are sampled, or in which order, which keeps parallel sweeps reproducible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np

from .data import InterventionalDataset
from .errors import InvalidInputError
from .graph import topological_order


class Stream(enum.IntEnum):
    GRAPH = 0
    SIGMA = 1
    INTERVENTIONAL = 2
    OBSERVATIONAL = 3
    CV_INTERVENTIONAL = 4
    CV_OBSERVATIONAL = 5


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def derive(ss: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(k) for k in key))


def generator(ss: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(ss))


# -- intervention models -----------------------------------------------------

@dataclass(frozen=True)
class Hard:
    """Target loses its parents; its noise sd becomes sigma_k / alpha."""


@dataclass(frozen=True)
class Soft:
    """Parental contribution to the target is kept, scaled by sqrt(pi)."""
    pi: float

    def __post_init__(self):
        if not 0 <= self.pi < 1:
            raise InvalidInputError("soft intervention requires 0 <= pi < 1")


@dataclass(frozen=True)
class AlphaPerturbed:
    """Hard intervention whose noise sd is sigma_k / (c_k alpha), c_k ~ U[c_lo, c_hi]."""
    c_lo: float = 0.8
    c_hi: float = 1.2

    def __post_init__(self):
        if not 0 < self.c_lo <= self.c_hi:
            raise InvalidInputError("alpha perturbation requires 0 < c_lo <= c_hi")


@dataclass(frozen=True)
class FixedShift:
    """Target drawn from Normal(mean, variance), ignoring parents and sigma_k."""
    mean: float = 2.0
    variance: float = 1.0

    def __post_init__(self):
        if self.variance <= 0:
            raise InvalidInputError("fixed-shift variance must be positive")


InterventionModel = Union[Hard, Soft, AlphaPerturbed, FixedShift]

_MODEL_KINDS = {"hard": Hard, "soft": Soft, "alpha_perturbed": AlphaPerturbed, "fixed_shift": FixedShift}


def model_to_dict(model: InterventionModel) -> dict:
    kind = next(name for name, cls in _MODEL_KINDS.items() if isinstance(model, cls))
    return {"kind": kind, **asdict(model)}


def model_from_dict(d: dict) -> InterventionModel:
    d = dict(d)
    kind = d.pop("kind", "hard")
    if kind not in _MODEL_KINDS:
        raise InvalidInputError(f"unknown intervention model {kind!r}")
    return _MODEL_KINDS[kind](**d)


# -- topologies and scenarios ------------------------------------------------

@dataclass(frozen=True)
class ER:
    r: float


@dataclass(frozen=True)
class SF:
    z: int


@dataclass(frozen=True)
class Explicit:
    weights: tuple[tuple[float, ...], ...]

    @classmethod
    def from_matrix(cls, W) -> "Explicit":
        return cls(tuple(tuple(float(x) for x in row) for row in np.asarray(W, dtype=float)))

    def matrix(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)


Topology = Union[ER, SF, Explicit]


@dataclass(frozen=True)
class ScenarioConfig:
    """Generative description of one simulation scenario.

    ``weight_range`` is the magnitude interval of edge weights (signs are a
    fair coin). ``sigma_range`` bounds the exogenous standard deviations,
    unless ``sigmas`` fixes them explicitly. ``n_obs`` is the size of the
    separate purely observational dataset (0 to skip it); ``n_k`` is the
    per-regime size of the interventional dataset.
    """

    topology: Topology
    p: int
    weight_range: tuple[float, float] = (0.5, 2.0)
    sigma_range: tuple[float, float] = (0.5, 2.0)
    alpha: float = 4.0
    intervention: InterventionModel = field(default_factory=Hard)
    n_obs: int = 0
    n_k: int = 100
    seed: int = 0
    sigmas: tuple[float, ...] | None = None
    name: str = ""

    def __post_init__(self):
        topo = self.topology
        if isinstance(topo, ER) and not 0 <= topo.r <= 1:
            raise InvalidInputError("ER edge probability must lie in [0, 1]")
        if isinstance(topo, SF) and topo.z < 1:
            raise InvalidInputError("SF edges per node must be at least 1")
        if isinstance(topo, Explicit) and topo.matrix().shape != (self.p, self.p):
            raise InvalidInputError("explicit topology does not match p")
        lo, hi = self.weight_range
        if not 0 < lo <= hi:
            raise InvalidInputError("weight_range must satisfy 0 < lo <= hi")
        lo, hi = self.sigma_range
        if not 0 < lo <= hi:
            raise InvalidInputError("sigma_range must satisfy 0 < lo <= hi")
        if self.alpha <= 0:
            raise InvalidInputError("alpha must be positive")
        if self.n_k < 2:
            raise InvalidInputError("n_k must be at least 2")
        if self.n_obs < 0:
            raise InvalidInputError("n_obs must be nonnegative")
        if self.sigmas is not None and (len(self.sigmas) != self.p or min(self.sigmas) <= 0):
            raise InvalidInputError("sigmas must be p positive standard deviations")

    def to_dict(self) -> dict:
        topo = self.topology
        if isinstance(topo, ER):
            t = {"kind": "ER", "r": topo.r}
        elif isinstance(topo, SF):
            t = {"kind": "SF", "z": topo.z}
        else:
            t = {"kind": "explicit", "weights": [list(r) for r in topo.weights]}
        return {
            "name": self.name,
            "topology": t,
            "p": self.p,
            "weight_range": list(self.weight_range),
            "sigma_range": list(self.sigma_range),
            "sigmas": None if self.sigmas is None else list(self.sigmas),
            "alpha": self.alpha,
            "intervention": model_to_dict(self.intervention),
            "n_obs": self.n_obs,
            "n_k": self.n_k,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        t = dict(d["topology"])
        kind = t.pop("kind")
        if kind == "ER":
            topo = ER(float(t["r"]))
        elif kind == "SF":
            topo = SF(int(t["z"]))
        elif kind == "explicit":
            topo = Explicit.from_matrix(t["weights"])
        else:
            raise InvalidInputError(f"unknown topology kind {kind!r}")
        p = int(d.get("p", len(topo.weights) if isinstance(topo, Explicit) else 0))
        sigmas = d.get("sigmas")
        return cls(
            topology=topo,
            p=p,
            weight_range=tuple(d.get("weight_range", (0.5, 2.0))),
            sigma_range=tuple(d.get("sigma_range", (0.5, 2.0))),
            alpha=float(d.get("alpha", 4.0)),
            intervention=model_from_dict(d.get("intervention", {"kind": "hard"})),
            n_obs=int(d.get("n_obs", 0)),
            n_k=int(d.get("n_k", 100)),
            seed=int(d.get("seed", 0)),
            sigmas=None if sigmas is None else tuple(float(s) for s in sigmas),
            name=d.get("name", ""),
        )


# -- sampling ----------------------------------------------------------------

def _signed_weights(rng: np.random.Generator, p: int, weight_range) -> np.ndarray:
    mags = rng.uniform(weight_range[0], weight_range[1], size=(p, p))
    signs = np.where(rng.random((p, p)) < 0.5, -1.0, 1.0)
    return mags * signs


def _barabasi_albert(rng: np.random.Generator, p: int, z: int) -> np.ndarray:
    """Preferential-attachment support, edges from earlier to later nodes."""
    B = np.zeros((p, p), dtype=bool)
    degree = np.zeros(p)
    for t in range(1, p):
        if t <= z:
            parents = np.arange(t)
        else:
            parents = rng.choice(t, size=z, replace=False, p=degree[:t] / degree[:t].sum())
        B[parents, t] = True
        degree[parents] += 1
        degree[t] += len(parents)
    return B


def sample_dag(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Weighted adjacency matrix whose support is a DAG.

    ER(r) places independent edges on the strict upper triangle of a random
    node permutation. SF(z) grows a Barabási–Albert graph (z edges per new
    node, earlier -> later) and then relabels nodes by a random permutation.
    """
    p = config.p
    topo = config.topology
    if isinstance(topo, Explicit):
        W = topo.matrix()
        if topological_order(W != 0)[0] is None:
            raise InvalidInputError("explicit topology is cyclic")
        return W
    perm = rng.permutation(p)
    if isinstance(topo, ER):
        upper = np.triu(rng.random((p, p)) < topo.r, k=1)
    else:
        upper = _barabasi_albert(rng, p, topo.z)
    B = np.zeros((p, p), dtype=bool)
    B[np.ix_(perm, perm)] = upper
    return np.where(B, _signed_weights(rng, p, config.weight_range), 0.0)


def sample_sigmas(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    if config.sigmas is not None:
        return np.array(config.sigmas, dtype=float)
    return rng.uniform(config.sigma_range[0], config.sigma_range[1], size=config.p)


def sample_regime(W0, sigmas, k: int, n: int, alpha: float, model: InterventionModel,
                  rng: np.random.Generator | np.random.SeedSequence) -> np.ndarray:
    """Draw ``n`` samples of regime ``k`` by ancestral sampling.

    With a ``SeedSequence`` each column gets its own child stream keyed by the
    0-based node index (and slot ``p`` for the per-regime c_k draw). With a
    ``Generator``, an ``n x p`` standard-normal block is drawn first, then c_k.
    """
    W0 = np.asarray(W0, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    p = W0.shape[0]
    if not 0 <= k <= p:
        raise IndexError(f"regime index {k} out of range 0..{p}")
    if np.any(sigmas <= 0):
        raise InvalidInputError("sigmas must be positive")
    order, cycle = topological_order(W0 != 0)
    if order is None:
        raise InvalidInputError(f"W0 has a directed cycle through nodes {sorted(cycle)}")

    if isinstance(rng, np.random.SeedSequence):
        Z = np.empty((n, p))
        for j in range(p):
            Z[:, j] = generator(derive(rng, j)).standard_normal(n)
        extra = generator(derive(rng, p))
    else:
        Z = rng.standard_normal((n, p))
        extra = rng

    target = k - 1
    X = np.zeros((n, p))
    for j in order:
        if j != target:
            X[:, j] = X @ W0[:, j] + sigmas[j] * Z[:, j]
        elif isinstance(model, Hard):
            X[:, j] = (sigmas[j] / alpha) * Z[:, j]
        elif isinstance(model, Soft):
            X[:, j] = math.sqrt(model.pi) * (X @ W0[:, j]) + (sigmas[j] / alpha) * Z[:, j]
        elif isinstance(model, AlphaPerturbed):
            c = extra.uniform(model.c_lo, model.c_hi)
            X[:, j] = (sigmas[j] / (c * alpha)) * Z[:, j]
        elif isinstance(model, FixedShift):
            X[:, j] = model.mean + math.sqrt(model.variance) * Z[:, j]
        else:
            raise InvalidInputError(f"unknown intervention model {model!r}")
    return X


@dataclass(frozen=True)
class SimulatedData:
    interventional: InterventionalDataset
    observational: InterventionalDataset | None
    W0: np.ndarray
    sigmas: np.ndarray


def draw_truth(config: ScenarioConfig, replicate: int = 0) -> tuple[np.ndarray, np.ndarray]:
    W0 = sample_dag(config, generator(seed_sequence(config.seed, replicate, Stream.GRAPH)))
    sigmas = sample_sigmas(config, generator(seed_sequence(config.seed, replicate, Stream.SIGMA)))
    return W0, sigmas


def draw_interventional(config: ScenarioConfig, W0, sigmas, replicate: int = 0,
                        stream: Stream = Stream.INTERVENTIONAL) -> InterventionalDataset:
    regimes = {
        k: sample_regime(W0, sigmas, k, config.n_k, config.alpha, config.intervention,
                         seed_sequence(config.seed, replicate, stream, k))
        for k in range(config.p + 1)
    }
    return InterventionalDataset(config.p, regimes)


def draw_observational(config: ScenarioConfig, W0, sigmas, replicate: int = 0,
                       stream: Stream = Stream.OBSERVATIONAL) -> InterventionalDataset | None:
    if config.n_obs == 0:
        return None
    X = sample_regime(W0, sigmas, 0, config.n_obs, config.alpha, config.intervention,
                      seed_sequence(config.seed, replicate, stream, 0))
    return InterventionalDataset.observational(X)


def sample_dataset(config: ScenarioConfig, replicate: int = 0) -> SimulatedData:
    """Truth plus the interventional (regimes 0..p, ``n_k`` rows each) and
    optional observational (``n_obs`` rows) datasets for one replicate."""
    W0, sigmas = draw_truth(config, replicate)
    return SimulatedData(
        interventional=draw_interventional(config, W0, sigmas, replicate),
        observational=draw_observational(config, W0, sigmas, replicate),
        W0=W0,
        sigmas=sigmas,
    )
