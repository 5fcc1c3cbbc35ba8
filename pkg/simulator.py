"""
Synthetic Data
Three-variable consistency experiments and the marker-driven regulatory network SEM
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from bfcs_core import causal_chain_probability, log_bayes_factors, posterior, triplet_from_data
from errors import BfcsError, TooManyEdgesError
from models import (
    AnalysisConfig,
    Dataset,
    GrnSpec,
    StructurePrior,
    TripletGenerator,
    VariableRole,
    X1Kind,
)
from utils.tables import read_frame, write_frame

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int], np.random.Generator]

EXPERIMENT_COLUMNS = ["model", "x1_kind", "n", "rep", "chain_posterior", "reason"]

# Data files keep full precision so a rescan reproduces in-memory results
DATA_FLOAT_FORMAT = "%.17g"


def _rng(seed: Seed) -> np.random.Generator:
    """PCG64 generator; an existing Generator is used as-is"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ============================================================================
# Three-variable generators
# ============================================================================

def draw_generator(template: TripletGenerator, seed: Seed) -> TripletGenerator:
    """Fresh standard-normal edge strengths (and Bernoulli p in [0.1, 0.9])"""
    rng = _rng(seed)
    coefficients = {edge: float(rng.standard_normal()) for edge in template.model.edges}
    p = float(rng.uniform(0.1, 0.9)) if template.x1_kind == X1Kind.BERNOULLI else template.bernoulli_p
    return template.model_copy(update={"coefficients": coefficients, "bernoulli_p": p})


def sample_triplet_data(gen: TripletGenerator, n: int, seed: Seed) -> np.ndarray:
    """(n x 3) samples of X1 -> X2 (-> X3), with X1 Gaussian or Bernoulli"""
    if n < 1:
        raise ValueError(f"Sample count must be positive, got {n}")
    rng = _rng(seed)
    if gen.x1_kind == X1Kind.BERNOULLI:
        x1 = rng.binomial(1, gen.bernoulli_p, size=n).astype(float)
    else:
        x1 = rng.standard_normal(n)
    x2 = gen.coefficient("12") * x1 + rng.standard_normal(n)
    x3 = gen.coefficient("23") * x2 + gen.coefficient("13") * x1 + rng.standard_normal(n)
    return np.column_stack([x1, x2, x3])


def partial_correlation(r_ab: float, r_ac: float, r_bc: float) -> float:
    """Correlation of a and b given c"""
    return (r_ab - r_ac * r_bc) / np.sqrt((1.0 - r_ac ** 2) * (1.0 - r_bc ** 2))


def _run_repetition(
    slot: int,
    template: TripletGenerator,
    rep: int,
    sizes: Sequence[int],
    prior: StructurePrior,
    cfg: AnalysisConfig,
    seed: int,
) -> List[tuple]:
    # One configuration per repetition, reused across every sample size
    rng = np.random.default_rng([seed, rep, slot])
    gen = draw_generator(template, rng)
    rows = []
    for n in sizes:
        data = sample_triplet_data(gen, n, rng)
        try:
            bf = log_bayes_factors(triplet_from_data(data, cfg), cfg)
            chain = causal_chain_probability(posterior(bf, prior))
            rows.append((template.model.value, template.x1_kind.value, n, rep, chain, ""))
        except BfcsError as e:
            logger.warning(f"{template.model.value} rep {rep} n={n}: {e}")
            rows.append((template.model.value, template.x1_kind.value, n, rep, np.nan, str(e)))
    return rows


def run_consistency_experiment(
    models: Sequence[TripletGenerator],
    sizes: Sequence[int],
    reps: int,
    prior: StructurePrior,
    cfg: Optional[AnalysisConfig] = None,
    seed: int = 0,
    threads: int = 1,
) -> pd.DataFrame:
    """
    Chain posterior p(X1 -> X2 -> X3 | D) per (model, n, repetition), long
    format. Draws that cannot be scored stay in the table with a reason.
    """
    if reps < 1:
        raise ValueError(f"Need at least one repetition, got {reps}")
    cfg = cfg or AnalysisConfig()
    tasks = [(slot, template, rep) for slot, template in enumerate(models) for rep in range(reps)]

    def run(task):
        slot, template, rep = task
        return _run_repetition(slot, template, rep, sizes, prior, cfg, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, tasks))
    else:
        chunks = [run(t) for t in tasks]

    table = pd.DataFrame([row for chunk in chunks for row in chunk], columns=EXPERIMENT_COLUMNS)
    for template in models:
        logger.info(
            f"Consistency run: {template.model.value}/{template.x1_kind.value}, "
            f"{reps} reps x {len(sizes)} sizes"
        )
    return table


def summarize_experiment(table: pd.DataFrame) -> pd.DataFrame:
    """Median and quartiles of the chain posterior per model, X1 kind and n"""
    grouped = table.groupby(["model", "x1_kind", "n"], sort=False)["chain_posterior"]
    summary = pd.DataFrame({
        "median": grouped.median(),
        "q1": grouped.quantile(0.25),
        "q3": grouped.quantile(0.75),
        "scored": grouped.count(),
        "missing": grouped.apply(lambda s: int(s.isna().sum())),
    })
    summary["iqr"] = summary["q3"] - summary["q1"]
    return summary.reset_index()


# ============================================================================
# Regulatory network
# ============================================================================

def generate_grn(n_genes: int, n_edges: int, seed: Seed) -> GrnSpec:
    """
    Random acyclic network: edge positions uniform over the strictly lower
    triangle, standard-normal strengths, marker p ~ U(0.1, 0.5).
    """
    max_edges = n_genes * (n_genes - 1) // 2
    if n_edges < 0 or n_edges > max_edges:
        raise TooManyEdgesError(f"{n_genes} genes allow 0..{max_edges} edges, got {n_edges}")
    rng = _rng(seed)
    rows, cols = np.tril_indices(n_genes, k=-1)
    chosen = rng.choice(rows.size, size=n_edges, replace=False)
    B = np.zeros((n_genes, n_genes))
    B[rows[chosen], cols[chosen]] = rng.standard_normal(n_edges)
    marker_p = rng.uniform(0.1, 0.5, size=n_genes)
    return GrnSpec(n_genes=n_genes, B=B, marker_p=marker_p)


def sample_grn_arrays(spec: GrnSpec, n: int, seed: Seed) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Markers l, traits t and noise e, each (n x genes), for t = B t + l + e.
    B is strictly lower triangular, so t is solved by one forward pass.
    """
    rng = _rng(seed)
    genes = spec.n_genes
    markers = rng.binomial(1, spec.marker_p, size=(n, genes)).astype(float)
    noise = rng.standard_normal((n, genes))
    traits = np.zeros((n, genes))
    for i in range(genes):
        traits[:, i] = traits[:, :i] @ spec.B[i, :i] + markers[:, i] + noise[:, i]
    return markers, traits, noise


def marker_names(genes: int) -> Tuple[str, ...]:
    return tuple(f"L{i + 1}" for i in range(genes))


def trait_names(genes: int) -> Tuple[str, ...]:
    return tuple(f"T{i + 1}" for i in range(genes))


def sample_grn_data(spec: GrnSpec, n: int, seed: Seed) -> Dataset:
    markers, traits, _ = sample_grn_arrays(spec, n, seed)
    genes = spec.n_genes
    return Dataset(
        values=np.hstack([markers, traits]),
        roles=(VariableRole.MARKER,) * genes + (VariableRole.TRAIT,) * genes,
        names=marker_names(genes) + trait_names(genes),
    )


# ============================================================================
# Files
# ============================================================================

def write_dataset(d: Dataset, expression_path: Union[str, Path], genotype_path: Union[str, Path]) -> None:
    for columns, path in ((d.trait_columns, expression_path), (d.marker_columns, genotype_path)):
        frame = pd.DataFrame(d.values[:, columns], columns=[d.names[c] for c in columns])
        frame.to_csv(path, sep="\t", index=False, float_format=DATA_FLOAT_FORMAT)


def write_grn(spec: GrnSpec, edges_path: Union[str, Path], marker_p_path: Union[str, Path]) -> None:
    """Ground truth as `source target coefficient` plus per-marker probabilities"""
    names = trait_names(spec.n_genes)
    edges = pd.DataFrame(
        [(names[s], names[t], float(spec.B[t, s])) for s, t in spec.edge_set],
        columns=["source", "target", "coefficient"],
    )
    write_frame(edges, edges_path)
    write_frame(
        pd.DataFrame({"marker": marker_names(spec.n_genes), "probability": spec.marker_p}),
        marker_p_path,
    )


def read_grn_edges(path: Union[str, Path]) -> Set[Tuple[str, str]]:
    frame = read_frame(path)
    return {(str(s), str(t)) for s, t in zip(frame["source"], frame["target"])}
