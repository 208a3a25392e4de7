"""Learning weighted DAGs from observational plus single-node interventional data."""
from .baselines import SortnregressConfig, sortnregress, varsortability_cutoff
from .data import InterventionalDataset
from .graph import is_acyclic, postprocess, threshold
from .metrics import EvalReport, evaluate, l1_distance, precision_recall, shd
from .numerics import acyclicity, matrix_exp
from .objective import Method, ObjectiveSpec
from .simgen import (ER, SF, AlphaPerturbed, Explicit, FixedShift, Hard, ScenarioConfig, Soft,
                     sample_dataset)
from .solver import FitConfig, FitResult, FitStatus, fit
from .variance import OmegaEstimate, estimate_omega

__version__ = "0.1.0"

__all__ = [
    "AlphaPerturbed", "ER", "EvalReport", "Explicit", "FitConfig", "FitResult", "FitStatus",
    "FixedShift", "Hard", "InterventionalDataset", "Method", "ObjectiveSpec", "OmegaEstimate",
    "SF", "ScenarioConfig", "Soft", "SortnregressConfig", "acyclicity", "estimate_omega",
    "evaluate", "fit", "is_acyclic", "l1_distance", "matrix_exp", "postprocess",
    "precision_recall", "sample_dataset", "shd", "sortnregress", "threshold",
    "varsortability_cutoff",
]
