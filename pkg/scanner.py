"""
Triplet Scanner
Scores L_k -> T_i -> T_j for every marker and ordered trait pair, keeps the best marker

Correlations are computed once; each (marker, trait, trait) triplet then
costs three lookups and a fixed number of formulas. Work is split into
blocks of pairs that share the regulator trait, so the block layout (and
every reported number) is the same whatever the thread count.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from bfcs_core import (
    CHAIN_MODEL,
    causal_chain_probability,
    correlation_determinant,
    evidence_constants,
    log_bayes_factor_table,
    log_bayes_factors,
    posterior,
    posterior_table,
    sample_correlations,
)
from config import DET_FLOOR, SCAN_BLOCK
from errors import (
    ConstantColumnError,
    DataError,
    DimensionMismatchError,
    EmptyScanError,
    NumericalError,
)
from models import (
    AnalysisConfig,
    CorrelationStore,
    CorrelationTriplet,
    Dataset,
    FilterMode,
    RegulationMatrix,
    ScanFilter,
    ScanSummary,
    StructurePrior,
    VariableRole,
)
from utils.tables import read_frame, read_numeric_table, write_frame

logger = logging.getLogger(__name__)

REGULATION_COLUMNS = ["regulator", "target", "probability", "best_marker"]


# ============================================================================
# Loading and correlations
# ============================================================================

def load_dataset(
    expression_path: Union[str, Path],
    genotype_path: Union[str, Path],
    center: bool = True,
) -> Dataset:
    """
    Merge a genotype table (markers) and an expression table (traits).
    Samples are aligned by row order.
    """
    traits, trait_names = read_numeric_table(expression_path)
    markers, marker_names = read_numeric_table(genotype_path)

    if traits.shape[0] != markers.shape[0]:
        raise DimensionMismatchError(
            f"{expression_path} has {traits.shape[0]} samples but "
            f"{genotype_path} has {markers.shape[0]}"
        )
    clash = set(trait_names) & set(marker_names)
    if clash:
        raise DataError(f"Column names used in both files: {', '.join(sorted(clash))}")

    for values, names, path in ((markers, marker_names, genotype_path), (traits, trait_names, expression_path)):
        constant = np.flatnonzero(np.ptp(values, axis=0) == 0.0)
        if constant.size:
            raise ConstantColumnError(f"{path}: column '{names[constant[0]]}' is constant")

    values = np.hstack([markers, traits])
    if center:
        values = values - values.mean(axis=0)

    dataset = Dataset(
        values=values,
        roles=(VariableRole.MARKER,) * len(marker_names) + (VariableRole.TRAIT,) * len(trait_names),
        names=marker_names + trait_names,
    )
    logger.info(
        f"Loaded {dataset.n} samples: {len(marker_names)} markers, {len(trait_names)} traits"
    )
    return dataset


def compute_correlations(d: Dataset, cfg: Optional[AnalysisConfig] = None) -> CorrelationStore:
    """All trait-trait and marker-trait Pearson correlations, computed once"""
    cfg = cfg or AnalysisConfig()
    traits = d.values[:, d.trait_columns]
    markers = d.values[:, d.marker_columns]
    return CorrelationStore(
        trait_trait=sample_correlations(traits, center=cfg.center_data),
        marker_trait=sample_correlations(markers, traits, center=cfg.center_data),
        n=d.n,
        marker_names=d.marker_names,
        trait_names=d.trait_names,
    )


def read_marker_map(path: Union[str, Path], store: CorrelationStore) -> Dict[int, Tuple[int, ...]]:
    """`trait<TAB>marker` lines -> trait index -> candidate marker indices"""
    frame = pd.read_csv(path, sep="\t", header=None, names=["trait", "marker"], dtype=str)
    trait_index = {name: i for i, name in enumerate(store.trait_names)}
    marker_index = {name: k for k, name in enumerate(store.marker_names)}
    mapping: Dict[int, set] = {}
    for row in frame.itertuples(index=False):
        if row.trait not in trait_index:
            raise DataError(f"{path}: unknown trait '{row.trait}'")
        if row.marker not in marker_index:
            raise DataError(f"{path}: unknown marker '{row.marker}'")
        mapping.setdefault(trait_index[row.trait], set()).add(marker_index[row.marker])
    return {i: tuple(sorted(ks)) for i, ks in mapping.items()}


# ============================================================================
# Scanning
# ============================================================================

class TripletScanner:
    """Runs the marker/trait/trait sweep over a shared CorrelationStore"""

    def __init__(
        self,
        store: CorrelationStore,
        prior: StructurePrior,
        cfg: Optional[AnalysisConfig] = None,
        scan_filter: Optional[ScanFilter] = None,
        threads: int = 1,
        block_size: int = SCAN_BLOCK,
    ):
        self.store = store
        self.prior = prior
        self.cfg = cfg or AnalysisConfig()
        self.scan_filter = scan_filter or ScanFilter()
        self.threads = max(1, int(threads))
        self.block_size = max(1, int(block_size))
        # Only depend on (n, nu): computed once per scan
        self.consts = evidence_constants(store.n, self.cfg)
        self.summary = ScanSummary(threads=self.threads)

    def markers_for(self, trait: int) -> np.ndarray:
        """Candidate markers for regulator `trait`, ascending"""
        n_markers = len(self.store.marker_names)
        f = self.scan_filter
        if f.mode == FilterMode.ALL:
            return np.arange(n_markers)
        if f.mode == FilterMode.TOP_K:
            strength = np.abs(self.store.marker_trait[:, trait])
            order = np.argsort(-strength, kind="stable")[: f.top_k]
            return np.sort(order)
        return np.asarray(sorted(f.marker_map.get(trait, ())), dtype=int)

    def _partitions(self) -> List[Tuple[int, np.ndarray, np.ndarray]]:
        n_traits = len(self.store.trait_names)
        parts = []
        for i in range(n_traits):
            markers = self.markers_for(i)
            targets = np.array([j for j in range(n_traits) if j != i], dtype=int)
            width = max(1, self.block_size // max(1, markers.size))
            for start in range(0, targets.size, width):
                parts.append((i, markers, targets[start:start + width]))
        return parts

    def _score_block(self, i: int, markers: np.ndarray, targets: np.ndarray):
        """Best chain posterior over `markers` for pairs (i, j), j in targets"""
        if markers.size == 0:
            return i, targets, np.zeros(targets.size), np.full(targets.size, -1), 0, 0

        mt, tt = self.store.marker_trait, self.store.trait_trait
        r12 = mt[markers, i][:, None]
        r13 = mt[np.ix_(markers, targets)]
        r23 = tt[i, targets][None, :]

        regular = (
            (correlation_determinant(r12, r13, r23) > DET_FLOOR)
            & (np.abs(r12) < 1.0) & (np.abs(r13) < 1.0) & (np.abs(r23) < 1.0)
        )
        table = log_bayes_factor_table(r12, r13, r23, self.consts)
        chain = posterior_table(table, self.prior)[..., CHAIN_MODEL]
        chain = np.where(regular, chain, -np.inf)

        # argmax keeps the first maximum, i.e. the smallest marker index
        best_pos = np.argmax(chain, axis=0)
        best = chain[best_pos, np.arange(targets.size)]
        found = np.isfinite(best)
        prob = np.where(found, best, 0.0)
        best_marker = np.where(found, markers[best_pos], -1)
        scanned = int(chain.size)
        return i, targets, prob, best_marker, scanned, scanned - int(regular.sum())

    def scan(self) -> RegulationMatrix:
        started = time.perf_counter()
        n_traits = len(self.store.trait_names)
        prob = np.full((n_traits, n_traits), np.nan)
        best_marker = np.full((n_traits, n_traits), -1, dtype=int)

        parts = self._partitions()
        logger.debug(f"Scanning {len(parts)} work unit(s) of at most {self.block_size} triplets")
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(lambda p: self._score_block(*p), parts))
        else:
            results = [self._score_block(*p) for p in parts]

        scanned = skipped = 0
        for i, targets, p, k, n_scanned, n_skipped in results:
            prob[i, targets] = p
            best_marker[i, targets] = k
            scanned += n_scanned
            skipped += n_skipped

        if scanned == skipped:
            raise EmptyScanError(f"No regular triplet among {scanned} scanned")

        off_diagonal = ~np.eye(n_traits, dtype=bool)
        self.summary = ScanSummary(
            triplets_scanned=scanned,
            skipped_singular=skipped,
            pairs=int(off_diagonal.sum()),
            pairs_without_triplet=int((best_marker[off_diagonal] < 0).sum()),
            wall_time_s=time.perf_counter() - started,
            threads=self.threads,
        )
        logger.info(
            f"Scan finished: {scanned} triplets, {skipped} singular skipped, "
            f"{self.summary.wall_time_s:.2f}s on {self.threads} thread(s)"
        )
        if self.summary.pairs_without_triplet:
            logger.warning(f"{self.summary.pairs_without_triplet} pair(s) had no regular triplet")

        return RegulationMatrix(
            prob=prob,
            best_marker=best_marker,
            trait_names=self.store.trait_names,
            marker_names=self.store.marker_names,
        )

    def naive_scan(self) -> RegulationMatrix:
        """One triplet at a time through the scalar API; slow, used as a cross-check"""
        n_traits = len(self.store.trait_names)
        prob = np.full((n_traits, n_traits), np.nan)
        best_marker = np.full((n_traits, n_traits), -1, dtype=int)
        for i in range(n_traits):
            for j in range(n_traits):
                if i == j:
                    continue
                best, arg = -np.inf, -1
                for k in self.markers_for(i):
                    t = CorrelationTriplet(
                        r12=self.store.marker_trait[k, i],
                        r13=self.store.marker_trait[k, j],
                        r23=self.store.trait_trait[i, j],
                        n=self.store.n,
                    )
                    try:
                        p = causal_chain_probability(posterior(log_bayes_factors(t, self.cfg), self.prior))
                    except NumericalError:
                        continue
                    if p > best:
                        best, arg = p, int(k)
                prob[i, j] = best if arg >= 0 else 0.0
                best_marker[i, j] = arg
        return RegulationMatrix(
            prob=prob,
            best_marker=best_marker,
            trait_names=self.store.trait_names,
            marker_names=self.store.marker_names,
        )


def scan(
    store: CorrelationStore,
    prior: StructurePrior,
    cfg: Optional[AnalysisConfig] = None,
    scan_filter: Optional[ScanFilter] = None,
    threads: int = 1,
) -> RegulationMatrix:
    return TripletScanner(store, prior, cfg, scan_filter, threads=threads).scan()


# ============================================================================
# Output
# ============================================================================

def regulation_frame(m: RegulationMatrix) -> pd.DataFrame:
    """Long format, highest probability first"""
    rows = []
    for i in range(m.n_traits):
        for j in range(m.n_traits):
            if i == j:
                continue
            k = int(m.best_marker[i, j])
            rows.append((
                m.trait_names[i],
                m.trait_names[j],
                float(m.prob[i, j]),
                m.marker_names[k] if k >= 0 else None,
            ))
    frame = pd.DataFrame(rows, columns=REGULATION_COLUMNS)
    return frame.sort_values("probability", ascending=False, kind="stable").reset_index(drop=True)


def write_regulation_matrix(m: RegulationMatrix, path: Union[str, Path]) -> None:
    write_frame(regulation_frame(m), path)
    logger.info(f"Wrote {m.n_traits * (m.n_traits - 1)} regulation probabilities to {path}")


def read_regulation_table(path: Union[str, Path]) -> pd.DataFrame:
    frame = read_frame(path)
    missing = set(REGULATION_COLUMNS) - set(frame.columns)
    if missing:
        raise DataError(f"{path} lacks column(s) {', '.join(sorted(missing))}")
    return frame
