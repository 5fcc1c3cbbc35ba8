"""
BFCS Scoring Core
Closed-form Bayes factors and posteriors for the eleven three-variable CI models

All evidence arithmetic is done in log space: |R|^((n+nu)/2) underflows long
before n reaches the sizes used in practice.
"""
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from errors import ConfigError, ConstantColumnError, DegeneratePriorError, SingularCorrelationError
from models import (
    AnalysisConfig,
    BayesFactorVector,
    CiModel,
    CiPattern,
    CorrelationTriplet,
    PosteriorVector,
    StructurePrior,
)

CHAIN_MODEL = CiModel.M6


# ============================================================================
# f(n, nu) and g(n, nu)
# ============================================================================

def log_f(n: int, nu: int) -> float:
    """ln((n + nu - 2) / (nu - 2))"""
    if nu < 3:
        raise ConfigError(f"nu must be at least 3, got {nu}")
    if n < 0:
        raise ConfigError(f"Sample count must be non-negative, got {n}")
    return float(np.log1p(n / (nu - 2.0)))


def log_g(n: int, nu: int) -> float:
    """
    ln[Gamma((n+nu)/2) Gamma((nu-1)/2) / (Gamma((n+nu-1)/2) Gamma(nu/2))]

    Uses log-gamma throughout so that n in the millions stays representable.
    """
    if nu < 2:
        raise ConfigError(f"nu must be at least 2, got {nu}")
    if n < 0:
        raise ConfigError(f"Sample count must be non-negative, got {n}")
    m = n + nu
    return float(
        (gammaln(m / 2.0) - gammaln(nu / 2.0))
        + (gammaln((nu - 1.0) / 2.0) - gammaln((m - 1.0) / 2.0))
    )


def log_g_approx(n: int, nu: int) -> float:
    """Square-root approximation of g; kept for comparison only"""
    return 0.5 * float(np.log((2.0 * n + 2.0 * nu - 3.0) / (2.0 * nu - 3.0)))


class EvidenceConstants(NamedTuple):
    """Terms that depend only on (n, nu), shared by every triplet of a run"""
    log_f: float
    log_g: float
    half: float        # (n + nu) / 2
    half_minus: float  # (n + nu - 1) / 2


def evidence_constants(n: int, cfg: Optional[AnalysisConfig] = None) -> EvidenceConstants:
    cfg = cfg or AnalysisConfig()
    return EvidenceConstants(
        log_f=log_f(n, cfg.nu),
        log_g=log_g(n, cfg.nu),
        half=(n + cfg.nu) / 2.0,
        half_minus=(n + cfg.nu - 1.0) / 2.0,
    )


# ============================================================================
# Bayes factors
# ============================================================================

def correlation_determinant(r12, r13, r23):
    return 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23


def log_bayes_factor_table(r12, r13, r23, consts: EvidenceConstants) -> np.ndarray:
    """
    Log Bayes factors against M0 for arrays of correlations.

    Inputs broadcast against each other; the result has one extra trailing
    axis of length 11 in CiModel order. Only the four canonical formulas are
    written out, every other model is the same formula on relabeled
    variables. Entries for singular triplets are not meaningful; callers
    mask them.
    """
    r12, r13, r23 = np.broadcast_arrays(
        np.asarray(r12, dtype=float), np.asarray(r13, dtype=float), np.asarray(r23, dtype=float)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        log_det = np.log(correlation_determinant(r12, r13, r23))
        log_one_minus = {
            frozenset((1, 2)): np.log1p(-r12 * r12),
            frozenset((1, 3)): np.log1p(-r13 * r13),
            frozenset((2, 3)): np.log1p(-r23 * r23),
        }

    lf, lg, half, half_minus = consts
    columns = []
    for model in CiModel:
        pattern, variables = model.pattern, model.variables
        if pattern == CiPattern.FULL:
            columns.append(np.zeros_like(log_det))
        elif pattern == CiPattern.EMPTY:
            columns.append(lf + lg + half * log_det)
        elif pattern == CiPattern.INDEPENDENT:
            rest = frozenset((1, 2, 3)) - {variables[0]}
            columns.append(lf + half * (log_det - log_one_minus[rest]))
        elif pattern == CiPattern.CAUSAL:
            a, b, c = variables
            columns.append(
                lg + half * (log_det - log_one_minus[frozenset((a, c))] - log_one_minus[frozenset((b, c))])
            )
        else:
            columns.append(lf - lg + half_minus * log_one_minus[frozenset(variables)])
    return np.stack(columns, axis=-1)


def log_bayes_factors(t: CorrelationTriplet, cfg: Optional[AnalysisConfig] = None) -> BayesFactorVector:
    """All eleven log Bayes factors of a regular triplet"""
    if not t.is_regular:
        raise SingularCorrelationError(
            f"Correlation matrix is singular (det(R) = {t.determinant:.3g}, "
            f"r12={t.r12}, r13={t.r13}, r23={t.r23})"
        )
    table = log_bayes_factor_table(t.r12, t.r13, t.r23, evidence_constants(t.n, cfg))
    return BayesFactorVector(log_bf=tuple(float(v) for v in table))


# ============================================================================
# Posteriors
# ============================================================================

def posterior(bf: BayesFactorVector, prior: StructurePrior) -> PosteriorVector:
    """p(M_j | D) proportional to B_j p(M_j), normalized with log-sum-exp"""
    terms = bf.as_array() + prior.log_prob()
    total = logsumexp(terms)
    if not np.isfinite(total):
        raise DegeneratePriorError("Every model with prior mass has zero evidence")
    return PosteriorVector(prob=tuple(float(p) for p in np.exp(terms - total)))


def posterior_table(log_bf: np.ndarray, prior: StructurePrior) -> np.ndarray:
    """Vectorized posterior over the trailing model axis of a log-BF table"""
    terms = log_bf + prior.log_prob()
    total = logsumexp(terms, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        return np.exp(terms - total)


def causal_chain_probability(post: PosteriorVector) -> float:
    """
    Posterior of X1 -> X2 -> X3. Under a prior with the background knowledge
    that X1 comes first, the "X3 _||_ X1 | X2" class holds only that chain.
    """
    return float(post[CHAIN_MODEL])


def most_probable_model(post: PosteriorVector) -> CiModel:
    return CiModel(int(np.argmax(post.as_array())))


# ============================================================================
# Relabeling and data helpers
# ============================================================================

def model_permutation(perm: Sequence[int]) -> Tuple[int, ...]:
    """
    Model index map induced by relabeling variable v as perm[v - 1].

    Entry j is the model that M_j turns into; the Bayes factor of M_j on a
    triplet equals that of the mapped model on the relabeled triplet.
    """
    image = {v: perm[v - 1] for v in (1, 2, 3)}
    if sorted(image.values()) != [1, 2, 3]:
        raise ConfigError(f"{tuple(perm)} is not a permutation of (1, 2, 3)")

    def key(model: CiModel):
        pattern, variables = model.pattern, model.variables
        if pattern == CiPattern.ACAUSAL:
            return pattern, frozenset(image[v] for v in variables)
        if pattern == CiPattern.CAUSAL:
            return pattern, image[variables[2]]
        if pattern == CiPattern.INDEPENDENT:
            return pattern, image[variables[0]]
        return pattern, None

    lookup = {}
    for model in CiModel:
        pattern, variables = model.pattern, model.variables
        if pattern == CiPattern.ACAUSAL:
            lookup[(pattern, frozenset(variables))] = int(model)
        elif pattern == CiPattern.CAUSAL:
            lookup[(pattern, variables[2])] = int(model)
        elif pattern == CiPattern.INDEPENDENT:
            lookup[(pattern, variables[0])] = int(model)
        else:
            lookup[(pattern, None)] = int(model)
    return tuple(lookup[key(model)] for model in CiModel)


def permute_triplet(t: CorrelationTriplet, perm: Sequence[int]) -> CorrelationTriplet:
    """Relabel variable v as perm[v - 1]"""
    original = {frozenset((1, 2)): t.r12, frozenset((1, 3)): t.r13, frozenset((2, 3)): t.r23}
    moved = {frozenset(perm[v - 1] for v in pair): r for pair, r in original.items()}
    return CorrelationTriplet(
        r12=moved[frozenset((1, 2))],
        r13=moved[frozenset((1, 3))],
        r23=moved[frozenset((2, 3))],
        n=t.n,
    )


def _standardize(values: np.ndarray, center: bool, names: Optional[Sequence[str]] = None) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    # checked on the raw columns: centering leaves rounding residue on constants
    flat = np.ptp(values, axis=0) == 0.0 if center else ~np.any(values, axis=0)
    if np.any(flat):
        index = int(np.flatnonzero(flat)[0])
        label = names[index] if names is not None else f"#{index}"
        raise ConstantColumnError(f"Column {label} has zero variance")
    if center:
        values = values - values.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", values, values))
    return values / norms


def sample_correlations(a: np.ndarray, b: Optional[np.ndarray] = None, center: bool = True) -> np.ndarray:
    """
    Pearson correlations between the columns of a (and b). Without centering
    this is the normalized scatter matrix of the raw columns.
    """
    za = _standardize(a, center)
    if b is None:
        r = za.T @ za
        np.fill_diagonal(r, 1.0)
    else:
        r = za.T @ _standardize(b, center)
    return np.clip(r, -1.0, 1.0)


def triplet_from_data(values: np.ndarray, cfg: Optional[AnalysisConfig] = None) -> CorrelationTriplet:
    """Correlation triplet of an (n x 3) data matrix"""
    cfg = cfg or AnalysisConfig()
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != 3:
        raise ConfigError(f"Expected an (n x 3) matrix, got shape {values.shape}")
    r = sample_correlations(values, center=cfg.center_data)
    return CorrelationTriplet(r12=r[0, 1], r13=r[0, 2], r23=r[1, 2], n=values.shape[0])

