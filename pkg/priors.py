"""
Structure Priors
Prior mass over the eleven CI models, from causal-graph counts or a weights file
"""
import logging
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from errors import PriorFileError
from models import CiModel, GraphCountTable, N_MODELS, PriorLabel, StructurePrior

logger = logging.getLogger(__name__)

# Causal graphs over (X1, X2, X3) consistent with each CI model. "BK" columns
# forbid arrowheads into X1 (the marker comes first).
GRAPH_COUNTS = GraphCountTable(
    dag=(6, 1, 1, 1, 3, 3, 3, 2, 2, 2, 1),
    dag_bk=(2, 1, 0, 1, 1, 1, 1, 2, 1, 1, 1),
    dmag=(19, 3, 3, 3, 5, 5, 5, 3, 3, 3, 1),
    dmag_bk=(3, 2, 0, 2, 1, 1, 1, 3, 1, 1, 1),
)

COUNT_FAMILIES = (PriorLabel.DAG, PriorLabel.DAG_BK, PriorLabel.DMAG, PriorLabel.DMAG_BK)

# CLI spelling -> prior family
PRIOR_NAMES = {
    "dag": PriorLabel.DAG,
    "dag-bk": PriorLabel.DAG_BK,
    "dmag": PriorLabel.DMAG,
    "dmag-bk": PriorLabel.DMAG_BK,
    "uniform-models": PriorLabel.UNIFORM_MODELS,
}


def prior_from_weights(weights: Sequence[float], label: PriorLabel = PriorLabel.CUSTOM) -> StructurePrior:
    """Normalize eleven non-negative weights into a prior"""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (N_MODELS,):
        raise PriorFileError(f"Need {N_MODELS} weights, got {weights.size}")
    if not np.all(np.isfinite(weights)):
        raise PriorFileError("Prior weights must be finite")
    if np.any(weights < 0):
        bad = CiModel(int(np.flatnonzero(weights < 0)[0])).name
        raise PriorFileError(f"Negative prior weight for {bad}")
    total = weights.sum()
    if total == 0:
        raise PriorFileError("All prior weights are zero")
    return StructurePrior(prob=tuple(float(w) for w in weights / total), label=label)


def prior_from_counts(family: PriorLabel) -> StructurePrior:
    """Uniform prior over causal graphs, pushed onto their CI models"""
    if family not in COUNT_FAMILIES:
        raise ValueError(f"{family} has no graph-count column")
    return prior_from_weights(GRAPH_COUNTS.column(family), label=family)


def uniform_model_prior() -> StructurePrior:
    return StructurePrior(prob=(1.0 / N_MODELS,) * N_MODELS, label=PriorLabel.UNIFORM_MODELS)


def prior_from_file(path: Union[str, Path]) -> StructurePrior:
    """
    Read a custom prior: one `model_id<TAB>weight` line per model, M0..M10,
    each exactly once.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, sep="\t", header=None, names=["model", "weight"], dtype={"model": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise PriorFileError(f"Cannot read prior file {path}: {e}")

    weights = [None] * N_MODELS
    for row in frame.itertuples(index=False):
        try:
            model = CiModel.parse(str(row.model))
        except ValueError as e:
            raise PriorFileError(f"{path}: {e}")
        if weights[model] is not None:
            raise PriorFileError(f"{path}: {model.name} listed twice")
        try:
            weights[model] = float(row.weight)
        except (TypeError, ValueError):
            raise PriorFileError(f"{path}: weight for {model.name} is not a number: {row.weight!r}")

    missing = [CiModel(i).name for i, w in enumerate(weights) if w is None or np.isnan(w)]
    if missing:
        raise PriorFileError(f"{path}: no weight for {', '.join(missing)}")

    prior = prior_from_weights(weights, label=PriorLabel.CUSTOM)
    logger.info(f"Loaded custom prior from {path}")
    return prior


def write_prior(prior: StructurePrior, path: Union[str, Path]) -> None:
    frame = pd.DataFrame({"model": [m.name for m in CiModel], "weight": prior.prob})
    frame.to_csv(path, sep="\t", header=False, index=False, float_format="%.17g")


def resolve_prior(name: str) -> StructurePrior:
    """
    Map a CLI prior name to a prior. Accepts the keys of PRIOR_NAMES and
    `custom:<path>`.
    """
    if name.startswith("custom:"):
        return prior_from_file(name[len("custom:"):])
    if name not in PRIOR_NAMES:
        choices = ", ".join(list(PRIOR_NAMES) + ["custom:<path>"])
        raise ValueError(f"Unknown prior '{name}' (choose from {choices})")
    family = PRIOR_NAMES[name]
    if family == PriorLabel.UNIFORM_MODELS:
        return uniform_model_prior()
    return prior_from_counts(family)
