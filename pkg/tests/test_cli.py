"""End-to-end runs through the command line entry point."""

import logging

import numpy as np
import pandas as pd
import pytest

from bfcs_core import triplet_from_data
from errors import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from main import main
from models import PriorLabel
from priors import prior_from_counts
from scanner import compute_correlations, load_dataset, scan, write_regulation_matrix
from simulator import write_dataset
from utils.manifest import read_manifest

IDENTITY_BF = [1.0, 1.5, 1.5, 1.5, 4 / 3, 4 / 3, 4 / 3, 2.0, 2.0, 2.0, 8 / 3]


@pytest.fixture
def scan_inputs(tmp_path, small_dataset):
    expression, genotype = tmp_path / "expression.tsv", tmp_path / "genotype.tsv"
    write_dataset(small_dataset, expression, genotype)
    return expression, genotype


def write_predictions(path, traits, positives):
    rows = [(a, b, 1.0 if (a, b) in positives else 0.0, "L1") for a in traits for b in traits if a != b]
    pd.DataFrame(rows, columns=["regulator", "target", "probability", "best_marker"]).to_csv(path, sep="\t", index=False)


def write_truth(path, edges):
    pd.DataFrame(sorted(edges), columns=["source", "target"]).to_csv(path, sep="\t", index=False)


# -----------------------------------------------------------------------
# triplet
# -----------------------------------------------------------------------


class TestTriplet:

    def test_identity_bayes_factors(self, tmp_path, capsys):
        out = tmp_path / "report.tsv"
        code = main(["triplet", "--r12", "0", "--r13", "0", "--r23", "0", "--n", "2",
                     "--prior", "uniform-models", "--out", str(out)])
        assert code == EXIT_OK
        report = pd.read_csv(out, sep="\t")
        np.testing.assert_allclose(10 ** report["log10_bf"], IDENTITY_BF, rtol=1e-5)
        assert report["model"].tolist() == [f"M{i}" for i in range(11)]
        assert "p(X1 -> X2 -> X3 | D)" in capsys.readouterr().out

        manifest = read_manifest(f"{out}.manifest.json")
        assert manifest.subcommand == "triplet"
        assert manifest.config["prior"] == PriorLabel.UNIFORM_MODELS.value

    def test_singular(self):
        code = main(["triplet", "--r12", "0.6", "--r13", "0.8", "--r23", "0.96", "--n", "50"])
        assert code == EXIT_NUMERICAL

    def test_out_of_range(self):
        assert main(["triplet", "--r12", "1.5", "--r13", "0", "--r23", "0", "--n", "50"]) == EXIT_NUMERICAL

    def test_data_file_matches_correlations(self, tmp_path):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((80, 3))
        data[:, 1] += data[:, 0]
        data[:, 2] += 0.5 * data[:, 1]
        pd.DataFrame(data, columns=["a", "b", "c"]).to_csv(
            tmp_path / "data.tsv", sep="\t", index=False, float_format="%.17g"
        )
        t = triplet_from_data(data)

        assert main(["triplet", "--data", str(tmp_path / "data.tsv"), "--out", str(tmp_path / "a.tsv")]) == EXIT_OK
        assert main(["triplet", "--r12", repr(t.r12), "--r13", repr(t.r13), "--r23", repr(t.r23),
                     "--n", "80", "--out", str(tmp_path / "b.tsv")]) == EXIT_OK
        pd.testing.assert_frame_equal(
            pd.read_csv(tmp_path / "a.tsv", sep="\t"), pd.read_csv(tmp_path / "b.tsv", sep="\t")
        )

    def test_data_file_with_constant_column(self, tmp_path):
        (tmp_path / "data.tsv").write_text("a\tb\tc\n" + "".join(f"0.1\t{k}\t{k * k}\n" for k in range(7)))
        assert main(["triplet", "--data", str(tmp_path / "data.tsv")]) == EXIT_DATA

    def test_incomplete_correlations(self):
        assert main(["triplet", "--r12", "0.2"]) == EXIT_USAGE

    def test_unknown_prior(self):
        assert main(["triplet", "--r12", "0", "--r13", "0", "--r23", "0", "--n", "5", "--prior", "flat"]) == EXIT_USAGE

    def test_invalid_nu(self):
        assert main(["triplet", "--r12", "0", "--r13", "0", "--r23", "0", "--n", "5", "--nu", "2"]) == EXIT_USAGE

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


# -----------------------------------------------------------------------
# scan
# -----------------------------------------------------------------------


class TestScan:

    def test_matches_library(self, tmp_path, scan_inputs):
        expression, genotype = scan_inputs
        out = tmp_path / "regulation.tsv"
        assert main(["scan", "--expression", str(expression), "--genotype", str(genotype), "--out", str(out)]) == EXIT_OK

        store = compute_correlations(load_dataset(expression, genotype))
        write_regulation_matrix(scan(store, prior_from_counts(PriorLabel.DMAG_BK)), tmp_path / "library.tsv")
        assert out.read_text() == (tmp_path / "library.tsv").read_text()

    def test_thread_count(self, tmp_path, scan_inputs):
        expression, genotype = scan_inputs
        outputs = []
        for threads in ("1", "8"):
            out = tmp_path / f"regulation_{threads}.tsv"
            code = main(["scan", "--expression", str(expression), "--genotype", str(genotype),
                         "--threads", threads, "--out", str(out)])
            assert code == EXIT_OK
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_manifest_records_default_prior(self, tmp_path, scan_inputs):
        expression, genotype = scan_inputs
        out = tmp_path / "regulation.tsv"
        main(["scan", "--expression", str(expression), "--genotype", str(genotype), "--out", str(out)])
        manifest = read_manifest(f"{out}.manifest.json")
        assert manifest.flags["prior"] == "dmag-bk"
        assert manifest.config["prior"] == PriorLabel.DMAG_BK.value
        assert set(manifest.input_digests) == {str(expression), str(genotype)}

    def test_summary_on_stderr(self, tmp_path, scan_inputs, capsys):
        expression, genotype = scan_inputs
        main(["scan", "--expression", str(expression), "--genotype", str(genotype),
              "--top-k-markers", "2", "--out", str(tmp_path / "r.tsv")])
        assert "triplets=112 skipped_singular=0" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, scan_inputs):
        _, genotype = scan_inputs
        code = main(["scan", "--expression", str(tmp_path / "absent.tsv"), "--genotype", str(genotype),
                     "--out", str(tmp_path / "r.tsv")])
        assert code == EXIT_DATA

    def test_bad_cell(self, tmp_path, scan_inputs, caplog):
        expression, genotype = scan_inputs
        frame = pd.read_csv(expression, sep="\t")
        frame["T3"] = frame["T3"].astype(object)
        frame.loc[4, "T3"] = "n/a"
        frame.to_csv(expression, sep="\t", index=False)
        with caplog.at_level(logging.ERROR):
            code = main(["scan", "--expression", str(expression), "--genotype", str(genotype),
                         "--out", str(tmp_path / "r.tsv")])
        assert code == EXIT_DATA
        assert "T3" in caplog.text


# -----------------------------------------------------------------------
# simulate
# -----------------------------------------------------------------------


class TestSimulate:

    def test_grn_files(self, tmp_path):
        outdir = tmp_path / "grn"
        code = main(["simulate", "grn", "--genes", "100", "--edges", "51", "--samples", "100",
                     "--seed", "1", "--outdir", str(outdir)])
        assert code == EXIT_OK
        expression = pd.read_csv(outdir / "expression.tsv", sep="\t")
        genotype = pd.read_csv(outdir / "genotype.tsv", sep="\t")
        truth = pd.read_csv(outdir / "truth_edges.tsv", sep="\t")
        assert expression.shape == (100, 100)
        assert genotype.shape == (100, 100)
        assert len(truth) == 51
        assert read_manifest(outdir / "manifest.json").seed == 1

    def test_grn_same_seed_same_files(self, tmp_path):
        for name in ("a", "b"):
            main(["simulate", "grn", "--genes", "12", "--edges", "6", "--samples", "40",
                  "--seed", "9", "--outdir", str(tmp_path / name)])
        for file in ("expression.tsv", "genotype.tsv", "truth_edges.tsv", "marker_p.tsv"):
            assert (tmp_path / "a" / file).read_bytes() == (tmp_path / "b" / file).read_bytes()

    def test_grn_too_many_edges(self, tmp_path):
        code = main(["simulate", "grn", "--genes", "3", "--edges", "4", "--seed", "1", "--outdir", str(tmp_path)])
        assert code == EXIT_DATA

    def test_consistency_table(self, tmp_path):
        out = tmp_path / "consistency.tsv"
        code = main(["simulate", "consistency", "--sizes", "50,100", "--reps", "3", "--seed", "5", "--out", str(out)])
        assert code == EXIT_OK
        table = pd.read_csv(out, sep="\t")
        assert len(table) == 3 * 2 * 3
        assert set(table["model"]) == {"chain", "independent", "full"}
        assert (tmp_path / "consistency.summary.tsv").exists()
        assert read_manifest(f"{out}.manifest.json").seed == 5

    def test_generated_seed_is_recorded(self, tmp_path, capsys):
        out = tmp_path / "c.tsv"
        main(["simulate", "consistency", "--models", "chain", "--sizes", "50", "--reps", "2", "--out", str(out)])
        seed = read_manifest(f"{out}.manifest.json").seed
        assert isinstance(seed, int)
        assert f"Using generated seed {seed}" in capsys.readouterr().err

    def test_unknown_model(self, tmp_path):
        code = main(["simulate", "consistency", "--models", "cycle", "--reps", "2", "--seed", "1",
                     "--out", str(tmp_path / "c.tsv")])
        assert code == EXIT_USAGE


# -----------------------------------------------------------------------
# eval
# -----------------------------------------------------------------------


class TestEval:

    def test_perfect_predictions(self, tmp_path, capsys):
        traits = ("T1", "T2", "T3", "T4")
        truth = {("T1", "T2"), ("T2", "T4")}
        write_predictions(tmp_path / "pred.tsv", traits, truth)
        write_truth(tmp_path / "truth.tsv", truth)

        code = main(["eval", "--predictions", str(tmp_path / "pred.tsv"), "--truth", str(tmp_path / "truth.tsv"),
                     "--outdir", str(tmp_path / "metrics")])
        assert code == EXIT_OK
        assert "auc_roc=1\tauprc=1\tbrier=0" in capsys.readouterr().out
        for name in ("roc.tsv", "pr.tsv", "summary.tsv", "manifest.json"):
            assert (tmp_path / "metrics" / name).exists()

    def test_missing_pair(self, tmp_path, caplog):
        traits = ("T1", "T2", "T3")
        write_predictions(tmp_path / "pred.tsv", traits, set())
        frame = pd.read_csv(tmp_path / "pred.tsv", sep="\t")
        frame = frame[~((frame["regulator"] == "T2") & (frame["target"] == "T1"))]
        frame.to_csv(tmp_path / "pred.tsv", sep="\t", index=False)
        write_truth(tmp_path / "truth.tsv", {("T1", "T3")})

        with caplog.at_level(logging.ERROR):
            code = main(["eval", "--predictions", str(tmp_path / "pred.tsv"), "--truth", str(tmp_path / "truth.tsv"),
                         "--outdir", str(tmp_path / "metrics")])
        assert code == EXIT_DATA
        assert "T2 -> T1" in caplog.text

    def test_simulate_scan_eval(self, tmp_path, capsys):
        grn = tmp_path / "grn"
        assert main(["simulate", "grn", "--genes", "8", "--edges", "5", "--samples", "300",
                     "--seed", "3", "--outdir", str(grn)]) == EXIT_OK
        assert main(["scan", "--expression", str(grn / "expression.tsv"), "--genotype", str(grn / "genotype.tsv"),
                     "--out", str(tmp_path / "regulation.tsv")]) == EXIT_OK
        capsys.readouterr()
        assert main(["eval", "--predictions", str(tmp_path / "regulation.tsv"),
                     "--truth", str(grn / "truth_edges.tsv"), "--outdir", str(tmp_path / "metrics")]) == EXIT_OK
        summary = pd.read_csv(tmp_path / "metrics" / "summary.tsv", sep="\t")
        assert summary.loc[0, "n_pairs"] == 56
        assert 0.0 <= summary.loc[0, "brier"] <= 1.0
