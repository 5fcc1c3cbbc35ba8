"""ROC / precision-recall curves, Brier score and prediction-truth joins."""

import numpy as np
import pandas as pd
import pytest

from errors import DegenerateLabelsError, LabelMismatchError
from evaluation import (
    brier_score,
    evaluate,
    pr_curve,
    roc_curve,
    scored_edges_from_matrix,
    scored_edges_from_tables,
    summary_line,
    write_curve,
    write_summary,
)
from models import GrnSpec, PriorLabel, ScoredEdges
from priors import prior_from_counts
from scanner import compute_correlations, scan
from simulator import generate_grn, sample_grn_data


def scored(prob, label):
    n = len(prob)
    pairs = tuple((k, k + 1) for k in range(n))
    return ScoredEdges(pairs=pairs, prob=np.asarray(prob, dtype=float), label=np.asarray(label, dtype=int))


@pytest.fixture
def toy():
    return scored([0.9, 0.8, 0.8, 0.1], [1, 0, 1, 0])


def prediction_table(traits, prob):
    rows = [(a, b, prob.get((a, b), 0.0), "L1") for a in traits for b in traits if a != b]
    return pd.DataFrame(rows, columns=["regulator", "target", "probability", "best_marker"])


# -----------------------------------------------------------------------
# Curves
# -----------------------------------------------------------------------


class TestRoc:

    def test_hand_computed(self, toy):
        curve = roc_curve(toy)
        np.testing.assert_allclose(curve.x, [0.0, 0.0, 0.5, 1.0])
        np.testing.assert_allclose(curve.y, [0.0, 0.5, 1.0, 1.0])
        np.testing.assert_allclose(curve.thresholds, [np.inf, 0.9, 0.8, 0.1])
        assert curve.area == pytest.approx(0.875)

    def test_perfect_separation(self):
        assert roc_curve(scored([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])).area == 1.0

    def test_reversed(self):
        assert roc_curve(scored([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0])).area == 0.0

    def test_all_tied_is_chance(self):
        assert roc_curve(scored([0.5] * 6, [1, 0, 1, 0, 0, 0])).area == pytest.approx(0.5)

    def test_random_scores(self):
        rng = np.random.default_rng(0)
        s = scored(rng.uniform(size=20_000), rng.integers(0, 2, size=20_000))
        assert roc_curve(s).area == pytest.approx(0.5, abs=0.02)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        prob = rng.uniform(size=500)
        label = (rng.uniform(size=500) < prob).astype(int)
        assert roc_curve(scored(prob, label)).area == roc_curve(scored(prob ** 3, label)).area

    def test_needs_both_classes(self):
        with pytest.raises(DegenerateLabelsError):
            roc_curve(scored([0.2, 0.4], [1, 1]))
        with pytest.raises(DegenerateLabelsError):
            roc_curve(scored([0.2, 0.4], [0, 0]))


class TestPrecisionRecall:

    def test_hand_computed(self, toy):
        curve = pr_curve(toy)
        np.testing.assert_allclose(curve.x, [0.5, 1.0, 1.0])
        np.testing.assert_allclose(curve.y, [1.0, 2 / 3, 0.5])
        assert curve.area == pytest.approx(5 / 6)

    def test_perfect_separation(self):
        assert pr_curve(scored([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])).area == 1.0

    def test_constant_scores_give_prevalence(self):
        curve = pr_curve(scored([0.3] * 8, [1, 0, 0, 1, 0, 0, 0, 0]))
        assert curve.x.tolist() == [1.0]
        assert curve.y.tolist() == [0.25]
        assert curve.area == pytest.approx(0.25)

    def test_needs_a_positive(self):
        with pytest.raises(DegenerateLabelsError):
            pr_curve(scored([0.2, 0.4], [0, 0]))


class TestBrier:

    def test_extremes(self):
        assert brier_score(scored([1.0, 0.0, 1.0], [1, 0, 1])) == 0.0
        assert brier_score(scored([0.0, 1.0, 0.0], [1, 0, 1])) == 1.0

    def test_toy(self, toy):
        assert brier_score(toy) == pytest.approx((0.01 + 0.64 + 0.04 + 0.01) / 4)

    def test_prevalence_is_best_constant(self):
        label = np.array([1, 0, 0, 0, 1, 0, 0, 0, 0, 0])
        best = brier_score(scored(np.full(10, 0.2), label))
        for p in np.linspace(0.0, 1.0, 41):
            assert brier_score(scored(np.full(10, p), label)) >= best - 1e-15


# -----------------------------------------------------------------------
# Joining predictions with ground truth
# -----------------------------------------------------------------------


class TestJoin:

    def test_from_tables(self):
        traits = ("T1", "T2", "T3")
        predictions = prediction_table(traits, {("T1", "T2"): 0.9, ("T2", "T3"): 0.6})
        s, order = scored_edges_from_tables(predictions, {("T1", "T2")})
        assert order == traits
        assert len(s.pairs) == 6
        assert s.label.sum() == 1
        assert s.prob[s.pairs.index((0, 1))] == 0.9

    def test_missing_pair_is_named(self):
        traits = ("T1", "T2", "T3")
        predictions = prediction_table(traits, {})
        predictions = predictions[~((predictions["regulator"] == "T3") & (predictions["target"] == "T1"))]
        with pytest.raises(LabelMismatchError, match="T3 -> T1"):
            scored_edges_from_tables(predictions, {("T1", "T2")})

    def test_duplicate_pair(self):
        predictions = prediction_table(("T1", "T2"), {})
        predictions = pd.concat([predictions, predictions.iloc[:1]])
        with pytest.raises(LabelMismatchError, match="twice"):
            scored_edges_from_tables(predictions, set())

    def test_truth_outside_trait_set(self):
        predictions = prediction_table(("T1", "T2"), {})
        with pytest.raises(LabelMismatchError):
            scored_edges_from_tables(predictions, {("T1", "T9")}, traits=("T1", "T2"))

    def test_unscored_prediction(self):
        predictions = prediction_table(("T1", "T2", "T3"), {})
        with pytest.raises(LabelMismatchError, match="unknown pair"):
            scored_edges_from_tables(predictions, set(), traits=("T1", "T2"))

    def test_from_matrix(self, dmag_bk):
        spec = generate_grn(6, 4, seed=3)
        m = scan(compute_correlations(sample_grn_data(spec, 200, seed=4)), dmag_bk)
        s = scored_edges_from_matrix(m, spec)
        assert len(s.pairs) == 30
        assert s.label.sum() == 4
        for (i, j), p in zip(s.pairs, s.prob):
            assert p == m.prob[i, j]

    def test_from_matrix_size_mismatch(self, dmag_bk):
        m = scan(compute_correlations(sample_grn_data(generate_grn(5, 2, seed=1), 100, seed=2)), dmag_bk)
        with pytest.raises(LabelMismatchError):
            scored_edges_from_matrix(m, GrnSpec(n_genes=4, B=np.zeros((4, 4)), marker_p=np.full(4, 0.3)))


# -----------------------------------------------------------------------
# Summary and files
# -----------------------------------------------------------------------


class TestSummary:

    def test_perfect(self):
        summary = evaluate(scored([1.0, 1.0, 0.0, 0.0], [1, 1, 0, 0]))
        assert (summary.auc_roc, summary.auprc, summary.brier) == (1.0, 1.0, 0.0)
        assert summary.prevalence == 0.5
        assert summary.n_pairs == 4

    def test_summary_line(self, toy):
        line = summary_line(evaluate(toy))
        assert line == "auc_roc=0.875\tauprc=0.833333\tbrier=0.175"

    def test_files(self, tmp_path, toy):
        write_curve(roc_curve(toy), tmp_path / "roc.tsv")
        write_curve(pr_curve(toy), tmp_path / "pr.tsv")
        write_summary(evaluate(toy), tmp_path / "summary.tsv")

        roc = pd.read_csv(tmp_path / "roc.tsv", sep="\t")
        assert list(roc.columns) == ["threshold", "x", "y"]
        assert len(roc) == 4
        pr = pd.read_csv(tmp_path / "pr.tsv", sep="\t")
        assert pr["y"].round(6).tolist() == [1.0, 0.666667, 0.5]
        summary = pd.read_csv(tmp_path / "summary.tsv", sep="\t")
        assert summary.loc[0, "auc_roc"] == 0.875


# -----------------------------------------------------------------------
# Regulatory network benchmark
# -----------------------------------------------------------------------


@pytest.mark.slow
class TestGrnBenchmark:

    def scan_network(self, edges, samples, seed, prior):
        spec = generate_grn(100, edges, seed=seed)
        m = scan(compute_correlations(sample_grn_data(spec, samples, seed=seed + 1000)), prior, threads=4)
        return spec, m

    def run(self, samples, seed, prior, edges=51):
        spec, m = self.scan_network(edges, samples, seed, prior)
        return evaluate(scored_edges_from_matrix(m, spec))

    def test_sparse_calibration(self, dmag_bk):
        brier = [self.run(100, seed, dmag_bk).brier for seed in range(5)]
        assert 0.0 <= np.mean(brier) <= 0.035

    def test_sparse_ranking_with_more_samples(self, dmag_bk):
        summary = self.run(1000, 11, dmag_bk)
        assert summary.auc_roc > 0.8
        assert summary.auprc > summary.prevalence

    def test_dense_network_is_harder(self, dmag_bk):
        sparse = self.run(1000, 11, dmag_bk)
        dense = self.run(1000, 11, dmag_bk, edges=491)
        assert dense.prevalence == pytest.approx(491 / 9900)
        assert dense.auprc > dense.prevalence
        assert dense.auc_roc < sparse.auc_roc
        assert dense.brier > sparse.brier

    def test_dense_dmag_below_dag(self):
        # the marker-first DMAG prior never has less mass off the chain than the DAG one
        dag, dmag = prior_from_counts(PriorLabel.DAG_BK), prior_from_counts(PriorLabel.DMAG_BK)
        brier = {"dag": [], "dmag": []}
        for seed in range(3):
            spec, m_dag = self.scan_network(491, 100, seed, dag)
            _, m_dmag = self.scan_network(491, 100, seed, dmag)
            off = ~np.eye(100, dtype=bool)
            assert np.all(m_dmag.prob[off] <= m_dag.prob[off] + 1e-12)
            brier["dag"].append(evaluate(scored_edges_from_matrix(m_dag, spec)).brier)
            brier["dmag"].append(evaluate(scored_edges_from_matrix(m_dmag, spec)).brier)
        assert np.mean(brier["dmag"]) < np.mean(brier["dag"])
