"""
Data Models
Typed records shared by the scoring, scanning, simulation and evaluation code
"""
from datetime import datetime, timezone
from enum import Enum, IntEnum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import CORRELATION_SLACK, DET_FLOOR
from errors import ConstantColumnError, DimensionMismatchError, OutOfRangeError

N_MODELS = 11


# ============================================================================
# Conditional-independence models
# ============================================================================

class CiPattern(str, Enum):
    FULL = "full"
    ACAUSAL = "acausal"
    CAUSAL = "causal"
    INDEPENDENT = "independent"
    EMPTY = "empty"


class CiModel(IntEnum):
    """The eleven CI models over (X1, X2, X3), in their fixed table order"""
    M0 = 0
    M1 = 1
    M2 = 2
    M3 = 3
    M4 = 4
    M5 = 5
    M6 = 6
    M7 = 7
    M8 = 8
    M9 = 9
    M10 = 10

    @property
    def pattern(self) -> CiPattern:
        return _MODEL_INFO[self][0]

    @property
    def variables(self) -> Tuple[int, ...]:
        """
        Variables (1-based) that parameterize the model:
        acausal -> the independent pair (a, b);
        causal -> (a, b, c) for a _||_ b | c;
        independent -> (isolated,)
        """
        return _MODEL_INFO[self][1]

    @property
    def description(self) -> str:
        return _MODEL_INFO[self][2]

    @classmethod
    def parse(cls, label: str) -> "CiModel":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise ValueError(f"Unknown model id '{label}', expected M0..M10")


_MODEL_INFO = {
    CiModel.M0: (CiPattern.FULL, (), "X1 - X2 - X3 (no independence)"),
    CiModel.M1: (CiPattern.ACAUSAL, (1, 2), "X1 _||_ X2"),
    CiModel.M2: (CiPattern.ACAUSAL, (2, 3), "X2 _||_ X3"),
    CiModel.M3: (CiPattern.ACAUSAL, (3, 1), "X3 _||_ X1"),
    CiModel.M4: (CiPattern.CAUSAL, (1, 2, 3), "X1 _||_ X2 | X3"),
    CiModel.M5: (CiPattern.CAUSAL, (2, 3, 1), "X2 _||_ X3 | X1"),
    CiModel.M6: (CiPattern.CAUSAL, (3, 1, 2), "X3 _||_ X1 | X2"),
    CiModel.M7: (CiPattern.INDEPENDENT, (1,), "X1 _||_ (X2, X3)"),
    CiModel.M8: (CiPattern.INDEPENDENT, (2,), "X2 _||_ (X3, X1)"),
    CiModel.M9: (CiPattern.INDEPENDENT, (3,), "X3 _||_ (X1, X2)"),
    CiModel.M10: (CiPattern.EMPTY, (), "X1 _||_ X2 _||_ X3"),
}


# ============================================================================
# Scoring inputs and outputs
# ============================================================================

class AnalysisConfig(BaseModel):
    """Prior degrees of freedom and data handling for one analysis"""
    model_config = ConfigDict(frozen=True)

    nu: int = Field(default=4, ge=3, description="Inverse Wishart degrees of freedom")
    center_data: bool = Field(default=True, description="Mean-center columns before correlating")


class CorrelationTriplet(BaseModel):
    """Pairwise sample correlations of (X1, X2, X3) plus the sample count"""
    model_config = ConfigDict(frozen=True)

    r12: float
    r13: float
    r23: float
    n: int = Field(..., ge=1)

    @field_validator("r12", "r13", "r23")
    @classmethod
    def _clamp(cls, value: float) -> float:
        if not np.isfinite(value) or abs(value) > 1.0 + CORRELATION_SLACK:
            raise OutOfRangeError(f"Correlation {value!r} lies outside [-1, 1]")
        return float(min(1.0, max(-1.0, value)))

    @property
    def determinant(self) -> float:
        r12, r13, r23 = self.r12, self.r13, self.r23
        return 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23

    @property
    def is_regular(self) -> bool:
        return (
            self.determinant > DET_FLOOR
            and max(abs(self.r12), abs(self.r13), abs(self.r23)) < 1.0
        )

    def matrix(self) -> np.ndarray:
        return np.array([
            [1.0, self.r12, self.r13],
            [self.r12, 1.0, self.r23],
            [self.r13, self.r23, 1.0],
        ])


class BayesFactorVector(BaseModel):
    """Natural-log Bayes factors of every model against M0"""
    model_config = ConfigDict(frozen=True)

    log_bf: Tuple[float, ...]

    @field_validator("log_bf")
    @classmethod
    def _check(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(value) != N_MODELS:
            raise ValueError(f"Expected {N_MODELS} log Bayes factors, got {len(value)}")
        if value[0] != 0.0:
            raise ValueError("log_bf[M0] must be exactly 0")
        return value

    def __getitem__(self, model: CiModel) -> float:
        return self.log_bf[int(model)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.log_bf, dtype=float)

    def log10(self) -> np.ndarray:
        return self.as_array() / np.log(10.0)


class PosteriorVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    prob: Tuple[float, ...]

    @field_validator("prob")
    @classmethod
    def _check(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(value) != N_MODELS:
            raise ValueError(f"Expected {N_MODELS} probabilities, got {len(value)}")
        if min(value) < 0.0 or max(value) > 1.0:
            raise ValueError("Posterior probabilities must lie in [0, 1]")
        if abs(sum(value) - 1.0) > 1e-12:
            raise ValueError(f"Posterior sums to {sum(value)!r}, not 1")
        return value

    def __getitem__(self, model: CiModel) -> float:
        return self.prob[int(model)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.prob, dtype=float)


# ============================================================================
# Priors over CI models
# ============================================================================

class PriorLabel(str, Enum):
    DAG = "DAG"
    DAG_BK = "DAG_BK"
    DMAG = "DMAG"
    DMAG_BK = "DMAG_BK"
    UNIFORM_MODELS = "UNIFORM_MODELS"
    CUSTOM = "CUSTOM"


class StructurePrior(BaseModel):
    """Prior mass over the eleven CI models"""
    model_config = ConfigDict(frozen=True)

    prob: Tuple[float, ...]
    label: PriorLabel

    @field_validator("prob")
    @classmethod
    def _check(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(value) != N_MODELS:
            raise ValueError(f"Expected {N_MODELS} prior weights, got {len(value)}")
        if min(value) < 0.0:
            raise ValueError("Prior weights must be non-negative")
        if abs(sum(value) - 1.0) > 1e-12:
            raise ValueError(f"Prior sums to {sum(value)!r}, not 1")
        return value

    def __getitem__(self, model: CiModel) -> float:
        return self.prob[int(model)]

    def log_prob(self) -> np.ndarray:
        """Log prior with -inf where the prior is exactly zero"""
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.prob, dtype=float))


class GraphCountTable(BaseModel):
    """Number of causal graphs over three variables per CI model"""
    model_config = ConfigDict(frozen=True)

    dag: Tuple[int, ...]
    dag_bk: Tuple[int, ...]
    dmag: Tuple[int, ...]
    dmag_bk: Tuple[int, ...]

    @field_validator("dag", "dag_bk", "dmag", "dmag_bk")
    @classmethod
    def _check(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(value) != N_MODELS or min(value) < 0:
            raise ValueError(f"Count columns need {N_MODELS} non-negative entries")
        return value

    def column(self, family: PriorLabel) -> Tuple[int, ...]:
        columns = {
            PriorLabel.DAG: self.dag,
            PriorLabel.DAG_BK: self.dag_bk,
            PriorLabel.DMAG: self.dmag,
            PriorLabel.DMAG_BK: self.dmag_bk,
        }
        if family not in columns:
            raise ValueError(f"No graph counts tabulated for {family.value}")
        return columns[family]


# ============================================================================
# Datasets, correlations and scan results
# ============================================================================

class VariableRole(str, Enum):
    MARKER = "marker"
    TRAIT = "trait"


class Dataset(BaseModel):
    """Samples x variables matrix with a role and a name per column"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    roles: Tuple[VariableRole, ...]
    names: Tuple[str, ...]

    @model_validator(mode="after")
    def _check(self) -> "Dataset":
        if self.values.ndim != 2:
            raise DimensionMismatchError("Dataset values must be a 2-D matrix")
        n, p = self.values.shape
        if len(self.roles) != p or len(self.names) != p:
            raise DimensionMismatchError(
                f"{p} columns but {len(self.roles)} roles and {len(self.names)} names"
            )
        if n < 3:
            raise DimensionMismatchError(f"Need at least 3 samples, got {n}")
        spread = np.ptp(self.values, axis=0)
        for index in np.flatnonzero(spread == 0.0):
            raise ConstantColumnError(f"Column '{self.names[index]}' is constant")
        return self

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def marker_columns(self) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.roles) if r == VariableRole.MARKER], dtype=int)

    @property
    def trait_columns(self) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.roles) if r == VariableRole.TRAIT], dtype=int)

    @property
    def marker_names(self) -> Tuple[str, ...]:
        return tuple(self.names[i] for i in self.marker_columns)

    @property
    def trait_names(self) -> Tuple[str, ...]:
        return tuple(self.names[i] for i in self.trait_columns)


class CorrelationStore(BaseModel):
    """Precomputed trait-trait and marker-trait correlations, shared read-only"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trait_trait: np.ndarray
    marker_trait: np.ndarray
    n: int = Field(..., ge=1)
    marker_names: Tuple[str, ...]
    trait_names: Tuple[str, ...]

    @model_validator(mode="after")
    def _check(self) -> "CorrelationStore":
        n_markers, n_traits = len(self.marker_names), len(self.trait_names)
        if self.trait_trait.shape != (n_traits, n_traits):
            raise DimensionMismatchError("trait_trait must be traits x traits")
        if self.marker_trait.shape != (n_markers, n_traits):
            raise DimensionMismatchError("marker_trait must be markers x traits")
        return self


class FilterMode(str, Enum):
    ALL = "all"
    TOP_K = "top-k"
    MARKER_MAP = "marker-map"


class ScanFilter(BaseModel):
    """Which markers are tried for each regulator trait"""
    model_config = ConfigDict(frozen=True)

    mode: FilterMode = FilterMode.ALL
    top_k: Optional[int] = Field(default=None, ge=1)
    marker_map: Optional[Dict[int, Tuple[int, ...]]] = None

    @model_validator(mode="after")
    def _check(self) -> "ScanFilter":
        if self.mode == FilterMode.TOP_K and self.top_k is None:
            raise ValueError("top-k filter needs top_k")
        if self.mode == FilterMode.MARKER_MAP and self.marker_map is None:
            raise ValueError("marker-map filter needs marker_map")
        return self


class RegulationMatrix(BaseModel):
    """
    prob[i, j]: best chain posterior for trait i regulating trait j
    best_marker[i, j]: marker index attaining it (-1 when no regular triplet)
    Diagonal entries are unused.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    prob: np.ndarray
    best_marker: np.ndarray
    trait_names: Tuple[str, ...]
    marker_names: Tuple[str, ...]

    @property
    def n_traits(self) -> int:
        return len(self.trait_names)


class ScanSummary(BaseModel):
    triplets_scanned: int = 0
    skipped_singular: int = 0
    pairs: int = 0
    pairs_without_triplet: int = 0
    wall_time_s: float = 0.0
    threads: int = 1


# ============================================================================
# Simulation
# ============================================================================

class GeneratingModel(str, Enum):
    CHAIN = "chain"
    INDEPENDENT = "independent"
    FULL = "full"

    @property
    def edges(self) -> Tuple[str, ...]:
        return {
            GeneratingModel.CHAIN: ("12", "23"),
            GeneratingModel.INDEPENDENT: ("12", "13"),
            GeneratingModel.FULL: ("12", "23", "13"),
        }[self]


class X1Kind(str, Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"


class TripletGenerator(BaseModel):
    """Three-variable linear SEM; missing coefficients are zero"""
    model_config = ConfigDict(frozen=True)

    model: GeneratingModel
    x1_kind: X1Kind = X1Kind.GAUSSIAN
    coefficients: Dict[str, float] = Field(default_factory=dict)
    bernoulli_p: float = Field(default=0.5, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check(self) -> "TripletGenerator":
        extra = set(self.coefficients) - set(self.model.edges)
        if extra:
            raise ValueError(f"{self.model.value} model has no edge(s) {sorted(extra)}")
        return self

    def coefficient(self, edge: str) -> float:
        return float(self.coefficients.get(edge, 0.0))


class GrnSpec(BaseModel):
    """
    Ground-truth regulatory network: t = B t + l + e with B strictly lower
    triangular, so B[i, j] != 0 means trait j regulates trait i.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_genes: int = Field(..., ge=1)
    B: np.ndarray
    marker_p: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "GrnSpec":
        if self.B.shape != (self.n_genes, self.n_genes):
            raise DimensionMismatchError("B must be n_genes x n_genes")
        if np.any(np.triu(self.B) != 0.0):
            raise ValueError("B must be strictly lower triangular")
        if self.marker_p.shape != (self.n_genes,):
            raise DimensionMismatchError("Need one marker probability per gene")
        if np.any((self.marker_p < 0.1) | (self.marker_p > 0.5)):
            raise ValueError("Marker probabilities must lie in [0.1, 0.5]")
        return self

    @property
    def edge_set(self) -> Tuple[Tuple[int, int], ...]:
        """(regulator, target) pairs, 0-based"""
        targets, sources = np.nonzero(self.B)
        return tuple(sorted((int(s), int(t)) for t, s in zip(targets, sources)))


# ============================================================================
# Evaluation
# ============================================================================

class ScoredEdges(BaseModel):
    """Predicted probability and true label for every ordered trait pair"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pairs: Tuple[Tuple[int, int], ...]
    prob: np.ndarray
    label: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "ScoredEdges":
        if not (len(self.pairs) == self.prob.shape[0] == self.label.shape[0]):
            raise DimensionMismatchError("pairs, prob and label must align")
        if any(i == j for i, j in self.pairs):
            raise ValueError("Self-pairs are not scored")
        if np.any((self.prob < 0.0) | (self.prob > 1.0)):
            raise ValueError("Predicted probabilities must lie in [0, 1]")
        if not np.all(np.isin(self.label, (0, 1))):
            raise ValueError("Labels must be 0 or 1")
        return self


class Curve(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: str
    thresholds: np.ndarray
    x: np.ndarray
    y: np.ndarray
    area: float


class MetricSummary(BaseModel):
    auc_roc: float
    auprc: float
    brier: float
    prevalence: float
    n_pairs: int


# ============================================================================
# Run bookkeeping
# ============================================================================

class RunManifest(BaseModel):
    """Everything needed to reproduce one CLI run"""
    subcommand: str
    flags: Dict[str, Any]
    seed: Optional[int] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    input_digests: Dict[str, str] = Field(default_factory=dict)
    tool_version: str
    created_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
