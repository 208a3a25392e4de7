"""Experiment orchestration: cross-validation, simulation sweeps, sensitivity suites.

A sweep expands into tasks, one per (scenario, replicate). Each task
simulates its data, fits every requested method, and evaluates each fit at
every requested threshold. Tasks are independent and seeded only by the
sweep seed and their own indices, so results do not depend on scheduling.
Rows are written in task order with a trailing ``timestamp`` column, which
is the only non-reproducible field.
"""
from __future__ import annotations

import csv
import datetime as _dt
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .baselines import SortnregressConfig, sortnregress
from .data import InterventionalDataset, observational_rows
from .errors import (DegenerateDataError, InvalidInputError, SingularProfileError,
                     SolverDivergedError, StratificationError)
from .metrics import evaluate
from .objective import Method, ObjectiveSpec, smooth_value
from .simgen import (Explicit, InterventionModel, ScenarioConfig, Stream, draw_interventional,
                     draw_observational, draw_truth, model_from_dict, model_to_dict, seed_sequence)
from .solver import FitConfig, fit
from .variance import estimate_omega

log = logging.getLogger(__name__)

METHODS = ("dotears", "notears", "notears-iv", "golem-nv", "sortnregress")
_OBSERVATIONAL = ("notears", "golem-nv", "sortnregress")
RESULT_COLUMNS = ("scenario", "replicate", "method", "lambda", "threshold", "shd", "l1",
                  "precision", "recall", "n_true_edges", "n_called_edges", "orientation",
                  "h_final", "status", "timestamp")

# Failures that are recorded as result rows instead of aborting a sweep.
FIT_FAILURES = (SolverDivergedError, SingularProfileError, DegenerateDataError, np.linalg.LinAlgError)


# -- cross-validation ------------------------------------------------------------

@dataclass(frozen=True)
class CvSpec:
    """K-fold selection of the l1 weight.

    ``fresh_draw`` only matters inside simulation sweeps: CV then runs on an
    independently simulated dataset of the same design instead of the data
    used for the final fit.
    """
    folds: int = 5
    lambda_grid: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0)
    fresh_draw: bool = False

    def __post_init__(self):
        if self.folds < 2:
            raise InvalidInputError("CV needs at least 2 folds")
        if not self.lambda_grid or min(self.lambda_grid) < 0:
            raise InvalidInputError("lambda grid must be nonempty and nonnegative")
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))

    @classmethod
    def from_dict(cls, d: dict) -> "CvSpec":
        return cls(folds=int(d.get("folds", 5)),
                   lambda_grid=tuple(d.get("lambda_grid", cls.lambda_grid)),
                   fresh_draw=bool(d.get("fresh_draw", False)))


@dataclass(frozen=True)
class CvResult:
    best_lambda: float
    lambdas: tuple[float, ...]
    mean_scores: tuple[float, ...]
    fold_scores: tuple[tuple[float, ...], ...]

    def rows(self) -> list[dict]:
        return [{"lambda": lam, "mean_score": m, **{f"fold{i + 1}": s for i, s in enumerate(folds)}}
                for lam, m, folds in zip(self.lambdas, self.mean_scores, self.fold_scores)]


def fold_assignment(data: InterventionalDataset, folds: int, seed: int = 0) -> dict[int, np.ndarray]:
    """Per-regime fold labels: each regime is shuffled and dealt into ``folds``
    near-equal parts independently of the others."""
    labels = {}
    for k, X in data:
        n = X.shape[0]
        if n < folds:
            raise StratificationError(f"regime {k} has {n} rows, fewer than {folds} folds")
        perm = np.random.default_rng(seed_sequence(seed, k)).permutation(n)
        lab = np.empty(n, dtype=int)
        lab[perm] = np.arange(n) % folds
        labels[k] = lab
    return labels


def _fold_spec(method: Method, lambda1: float, train: InterventionalDataset) -> ObjectiveSpec:
    omega = estimate_omega(train) if method is Method.DOTEARS else None
    return ObjectiveSpec(method, lambda1, omega)


def kfold_cv(data, template: ObjectiveSpec | Method | str, cv: CvSpec | None = None,
             fit_config: FitConfig | None = None, seed: int = 0) -> CvResult:
    """Choose ``lambda`` by stratified K-fold CV.

    For every fold the noise variances (dotears only) are estimated on the
    training part, the model is fit on the training part, and the score is the
    method's own unpenalized loss on the held-out part, using the training
    variances. The lowest mean score wins; ties go to the smaller ``lambda``.
    A fit that fails scores ``inf``.
    """
    cv = cv or CvSpec()
    method = template.method if isinstance(template, ObjectiveSpec) else Method(template)
    if not isinstance(data, InterventionalDataset) or not method.interventional:
        data = InterventionalDataset.observational(observational_rows(data))
    fit_config = replace(fit_config or FitConfig(), lambda1=None)

    labels = fold_assignment(data, cv.folds, seed)
    splits = []
    for f in range(cv.folds):
        train = data.subset({k: np.flatnonzero(lab != f) for k, lab in labels.items()})
        test = data.subset({k: np.flatnonzero(lab == f) for k, lab in labels.items()})
        splits.append((train, test))

    lambdas = tuple(sorted(cv.lambda_grid))
    table = []
    for lam in lambdas:
        scores = []
        for train, test in splits:
            spec = _fold_spec(method, lam, train)
            try:
                W = fit(train, spec, fit_config).W_hat
                scores.append(float(smooth_value(spec, W, test)))
            except FIT_FAILURES as exc:
                log.warning("CV fit failed at lambda=%g: %s", lam, exc)
                scores.append(math.inf)
        table.append(tuple(scores))
    means = tuple(float(np.mean(s)) for s in table)
    best = lambdas[int(np.argmin(means))]  # argmin returns the first, i.e. smallest, lambda on ties
    return CvResult(best, lambdas, means, tuple(table))


# -- sweep specification -----------------------------------------------------------

_THREE_NODE_EDGES = {
    "chain": ((0, 1), (1, 2)),
    "collider": ((0, 2), (1, 2)),
    "fork": ((0, 1), (0, 2)),
}


@dataclass(frozen=True)
class TwoNode:
    """``X1 -w-> X2`` with noise variances ``(gamma, 1)``."""
    w_grid: tuple[float, ...]
    gamma_grid: tuple[float, ...]
    replicates: int = 25
    n_k: int = 1000
    alpha: float = 4.0


@dataclass(frozen=True)
class ThreeNode:
    """Chain, collider or fork with equal weights and noise variances ``(gamma, 1, 1)``."""
    topology: str
    w_grid: tuple[float, ...]
    gamma_grid: tuple[float, ...]
    replicates: int = 25
    n_k: int = 1000
    alpha: float = 4.0

    def __post_init__(self):
        if self.topology not in _THREE_NODE_EDGES:
            raise InvalidInputError(f"unknown three-node topology {self.topology!r}")


@dataclass(frozen=True)
class RandomGraph:
    scenarios: tuple[ScenarioConfig, ...]
    replicates: int = 10


@dataclass(frozen=True)
class Sensitivity:
    """Each base scenario under each intervention model, sharing seeds across
    models so that variants differ only in the intervened columns."""
    scenarios: tuple[ScenarioConfig, ...]
    models: tuple[InterventionModel, ...]
    replicates: int = 10


SweepKind = TwoNode | ThreeNode | RandomGraph | Sensitivity


@dataclass(frozen=True)
class SweepSpec:
    """A full sweep.

    ``thresholds`` lists every tau each fit is evaluated at; a threshold study
    is a sweep with several of them. ``cv``, when set, replaces ``lambda1`` by
    a per-task CV choice for the gradient-based methods.
    """
    kind: SweepKind
    methods: tuple[str, ...] = ("dotears", "notears", "notears-iv", "golem-nv")
    seed: int = 0
    lambda1: float = 0.1
    thresholds: tuple[float, ...] = (0.0,)
    cv: CvSpec | None = None
    fit_config: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise InvalidInputError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if not self.methods:
            raise InvalidInputError("sweep needs at least one method")
        if not self.thresholds or min(self.thresholds) < 0:
            raise InvalidInputError("thresholds must be nonempty and nonnegative")
        if self.lambda1 < 0:
            raise InvalidInputError("lambda must be nonnegative")
        kind = self.kind
        if kind.replicates < 1:
            raise InvalidInputError("replicates must be at least 1")
        if isinstance(kind, (TwoNode, ThreeNode)) and (not kind.w_grid or not kind.gamma_grid):
            raise InvalidInputError("w and gamma grids must be nonempty")
        if isinstance(kind, (RandomGraph, Sensitivity)) and not kind.scenarios:
            raise InvalidInputError("sweep needs at least one scenario")
        if isinstance(kind, Sensitivity) and not kind.models:
            raise InvalidInputError("sensitivity sweep needs at least one intervention model")


def sweep_from_dict(d: dict) -> SweepSpec:
    """Build a :class:`SweepSpec` from its JSON form (see the README)."""
    kind_name = d.get("kind")
    grids = {"w_grid": tuple(d.get("w_grid", ())), "gamma_grid": tuple(d.get("gamma_grid", ()))}
    if kind_name == "two_node":
        kind = TwoNode(**grids, replicates=int(d.get("replicates", 25)),
                       n_k=int(d.get("n_k", 1000)), alpha=float(d.get("alpha", 4.0)))
    elif kind_name == "three_node":
        kind = ThreeNode(d.get("topology", "chain"), **grids, replicates=int(d.get("replicates", 25)),
                         n_k=int(d.get("n_k", 1000)), alpha=float(d.get("alpha", 4.0)))
    elif kind_name in ("random_graph", "threshold_study"):
        kind = RandomGraph(tuple(ScenarioConfig.from_dict(s) for s in d.get("scenarios", ())),
                           replicates=int(d.get("replicates", 10)))
    elif kind_name == "sensitivity":
        kind = Sensitivity(tuple(ScenarioConfig.from_dict(s) for s in d.get("scenarios", ())),
                           tuple(model_from_dict(m) for m in d.get("models", ())),
                           replicates=int(d.get("replicates", 10)))
    else:
        raise InvalidInputError(f"unknown sweep kind {kind_name!r}")
    thresholds = d.get("tau_grid") if kind_name == "threshold_study" else d.get("thresholds", [0.0])
    fit_cfg = FitConfig(**d["fit_config"]) if "fit_config" in d else FitConfig()
    return SweepSpec(
        kind=kind,
        methods=tuple(d.get("methods", SweepSpec.methods)),
        seed=int(d.get("seed", 0)),
        lambda1=float(d.get("lambda", 0.1)),
        thresholds=tuple(float(t) for t in thresholds),
        cv=CvSpec.from_dict(d["cv"]) if d.get("cv") else None,
        fit_config=fit_cfg,
    )


def _small_scenario(name: str, W, gamma: float, n_k: int, alpha: float) -> ScenarioConfig:
    W = np.asarray(W, dtype=float)
    p = W.shape[0]
    return ScenarioConfig(topology=Explicit.from_matrix(W), p=p, alpha=alpha, n_k=n_k,
                          n_obs=(p + 1) * n_k, sigmas=(math.sqrt(gamma),) + (1.0,) * (p - 1),
                          name=name)


def expand_scenarios(spec: SweepSpec) -> list[tuple[ScenarioConfig, int]]:
    """Concrete scenarios paired with the index their seed is derived from.

    Scenario seeds are drawn from the sweep seed. Sensitivity variants of one
    base scenario share its seed index.
    """
    kind = spec.kind
    out: list[tuple[ScenarioConfig, int]] = []
    if isinstance(kind, (TwoNode, ThreeNode)):
        for w in kind.w_grid:
            for g in kind.gamma_grid:
                if isinstance(kind, TwoNode):
                    W = [[0.0, w], [0.0, 0.0]]
                    name = f"two_node_w{w:g}_g{g:g}"
                else:
                    W = np.zeros((3, 3))
                    for i, j in _THREE_NODE_EDGES[kind.topology]:
                        W[i, j] = w
                    name = f"{kind.topology}_w{w:g}_g{g:g}"
                out.append((_small_scenario(name, W, g, kind.n_k, kind.alpha), len(out)))
    elif isinstance(kind, RandomGraph):
        for i, sc in enumerate(kind.scenarios):
            out.append((sc, i))
    else:
        for i, sc in enumerate(kind.scenarios):
            for model in kind.models:
                label = model_to_dict(model)
                tag = "_".join(f"{k}{v:g}" if isinstance(v, float) else str(v) for k, v in label.items()
                               if k != "kind")
                name = f"{sc.name or f'scenario{i}'}_{label['kind']}{('_' + tag) if tag else ''}"
                out.append((replace(sc, intervention=model, name=name), i))
    seeded = []
    for sc, seed_index in out:
        seed = int(seed_sequence(spec.seed, seed_index).generate_state(1)[0])
        if sc.n_obs == 0 and any(m in _OBSERVATIONAL for m in spec.methods):
            sc = replace(sc, n_obs=(sc.p + 1) * sc.n_k)  # matched total sample size
        seeded.append((replace(sc, seed=seed, name=sc.name or f"scenario{seed_index}"), seed_index))
    return seeded


def replicates_of(spec: SweepSpec) -> int:
    return spec.kind.replicates


# -- execution ------------------------------------------------------------------

@dataclass(frozen=True)
class _Task:
    scenario: ScenarioConfig
    replicate: int
    methods: tuple[str, ...]
    lambda1: float
    thresholds: tuple[float, ...]
    cv: CvSpec | None
    fit_config: FitConfig


def fit_method(method: str, interventional: InterventionalDataset,
               observational: InterventionalDataset | None, lambda1: float,
               fit_config: FitConfig | None = None):
    """Fit one method; observational methods use ``observational`` when given.

    Returns ``(W_hat, h_final, status)``.
    """
    obs = observational if observational is not None else interventional
    if method == "sortnregress":
        return sortnregress(obs, SortnregressConfig()), 0.0, "ok"
    m = Method(method)
    data = interventional if m.interventional else obs
    omega = estimate_omega(interventional) if m is Method.DOTEARS else None
    result = fit(data, ObjectiveSpec(m, lambda1, omega), replace(fit_config or FitConfig(), lambda1=None))
    return result.W_hat, result.h_final, result.status.value


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def _run_task(task: _Task) -> list[dict]:
    with threadpool_limits(limits=1):
        return _run_task_inner(task)


def _run_task_inner(task: _Task) -> list[dict]:
    sc, rep = task.scenario, task.replicate
    W0, sigmas = draw_truth(sc, rep)
    iv = draw_interventional(sc, W0, sigmas, rep)
    obs = draw_observational(sc, W0, sigmas, rep)
    if task.cv is not None and task.cv.fresh_draw:
        cv_iv = draw_interventional(sc, W0, sigmas, rep, Stream.CV_INTERVENTIONAL)
        cv_obs = draw_observational(sc, W0, sigmas, rep, Stream.CV_OBSERVATIONAL)
    else:
        cv_iv, cv_obs = iv, obs

    rows = []
    for method in task.methods:
        lam = None if method == "sortnregress" else task.lambda1
        base = {"scenario": sc.name, "replicate": rep, "method": method}
        try:
            if task.cv is not None and method != "sortnregress":
                m = Method(method)
                cv_data = cv_iv if m.interventional else (cv_obs if cv_obs is not None else cv_iv)
                lam = kfold_cv(cv_data, m, task.cv, task.fit_config, seed=sc.seed + rep).best_lambda
            W, h, status = fit_method(method, iv, obs, lam if lam is not None else 0.0, task.fit_config)
        except FIT_FAILURES as exc:
            log.warning("%s replicate %d %s failed: %s", sc.name, rep, method, exc)
            for tau in task.thresholds:
                rows.append({**base, "lambda": lam, "threshold": tau,
                             "status": f"error:{type(exc).__name__}"})
            continue
        for tau in task.thresholds:
            rep_ = evaluate(W, W0, tau)
            rows.append({**base, "lambda": lam, "threshold": tau, "shd": rep_.shd, "l1": rep_.l1,
                         "precision": rep_.precision, "recall": rep_.recall,
                         "n_true_edges": rep_.n_true_edges, "n_called_edges": rep_.n_called_edges,
                         "orientation": rep_.orientation, "h_final": h, "status": status})
    return rows


def _tasks(spec: SweepSpec) -> list[_Task]:
    return [_Task(sc, rep, spec.methods, spec.lambda1, spec.thresholds, spec.cv, spec.fit_config)
            for sc, _ in expand_scenarios(spec) for rep in range(replicates_of(spec))]


def iter_results(spec: SweepSpec, jobs: int = 1) -> Iterable[dict]:
    """Result rows in deterministic (scenario, replicate, method, threshold) order."""
    tasks = _tasks(spec)
    if jobs <= 1:
        for task in tasks:
            yield from _run_task(task)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for rows in pool.map(_run_task, tasks):
            yield from rows


def write_results(rows: Iterable[dict], path) -> int:
    """Write rows to CSV with the fixed column set; returns the row count."""
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
            writer.writerow([_fmt(row.get(c)) for c in RESULT_COLUMNS[:-1]] + [stamp])
            count += 1
    return count


def run_sweep(spec: SweepSpec, out_path, jobs: int = 1) -> int:
    """Run ``spec`` and write its CSV to ``out_path``; returns the number of rows."""
    n = write_results(iter_results(spec, jobs), out_path)
    log.info("wrote %d rows to %s", n, out_path)
    return n


def run_sensitivity(scenarios: Sequence[ScenarioConfig], models: Sequence[InterventionModel],
                    out_path, *, replicates: int = 10, jobs: int = 1, **sweep_kwargs) -> int:
    """Sensitivity suite: every scenario under every intervention model."""
    spec = SweepSpec(kind=Sensitivity(tuple(scenarios), tuple(models), replicates), **sweep_kwargs)
    return run_sweep(spec, out_path, jobs)


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

