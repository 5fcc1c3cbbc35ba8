#!/usr/bin/env python3
"""
BFCS - Command Line
triplet / scan / simulate {consistency,grn} / eval, each writing a run manifest
"""
import argparse
import logging
import secrets
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from bfcs_core import causal_chain_probability, log_bayes_factors, posterior, triplet_from_data
from config import DEFAULT_THREADS, LOG_LEVEL, VERSION
from errors import EXIT_DATA, EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE, BfcsError
from evaluation import evaluate, pr_curve, roc_curve, scored_edges_from_tables, summary_line, write_curve, write_summary
from models import AnalysisConfig, CiModel, CorrelationTriplet, FilterMode, ScanFilter, TripletGenerator
from priors import resolve_prior
from scanner import TripletScanner, compute_correlations, load_dataset, read_marker_map, read_regulation_table, write_regulation_matrix
from simulator import (
    generate_grn,
    read_grn_edges,
    run_consistency_experiment,
    sample_grn_data,
    summarize_experiment,
    write_dataset,
    write_grn,
)
from utils.manifest import build_manifest, write_manifest
from utils.tables import read_numeric_table, write_frame

logger = logging.getLogger(__name__)


# ============================================================================
# HELPER FUNCTIONS
# ============================================================================

def _analysis_config(args) -> AnalysisConfig:
    return AnalysisConfig(nu=args.nu, center_data=not args.no_center)


def _flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "handler"}


def _seed(args) -> int:
    """Explicit --seed, or a fresh one that is printed and recorded"""
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"Using generated seed {args.seed}", file=sys.stderr)
    return args.seed


def _csv_ints(text: str) -> List[int]:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _add_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--prior", default="dmag-bk",
                        help="dag, dag-bk, dmag, dmag-bk, uniform-models or custom:<path> (default dmag-bk)")
    parser.add_argument("--nu", type=int, default=4, help="Inverse Wishart degrees of freedom (default 4)")
    parser.add_argument("--no-center", action="store_true", help="Do not mean-center columns")


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_triplet(args) -> int:
    """Bayes factors and posterior for one triplet"""
    cfg = _analysis_config(args)
    prior = resolve_prior(args.prior)
    inputs = []

    if args.data is not None:
        values, _ = read_numeric_table(args.data)
        triplet = triplet_from_data(values, cfg)
        inputs.append(args.data)
    else:
        if None in (args.r12, args.r13, args.r23, args.n):
            raise ValueError("Give --data or all of --r12 --r13 --r23 --n")
        triplet = CorrelationTriplet(r12=args.r12, r13=args.r13, r23=args.r23, n=args.n)

    bf = log_bayes_factors(triplet, cfg)
    post = posterior(bf, prior)
    chain = causal_chain_probability(post)

    report = pd.DataFrame({
        "model": [m.name for m in CiModel],
        "description": [m.description for m in CiModel],
        "log10_bf": bf.log10(),
        "posterior": post.as_array(),
    })
    print(f"r12={triplet.r12:.6g} r13={triplet.r13:.6g} r23={triplet.r23:.6g} n={triplet.n} "
          f"nu={cfg.nu} prior={prior.label.value}")
    print(report.to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    print(f"p(X1 -> X2 -> X3 | D) = {chain:.6g}")

    if args.out:
        write_frame(report, args.out)
        manifest = build_manifest("triplet", _flags(args), config={**cfg.model_dump(), "prior": prior.label.value},
                                  inputs=inputs)
        write_manifest(manifest, f"{args.out}.manifest.json")
    return EXIT_OK


def cmd_scan(args) -> int:
    """Load -> correlations -> scan -> write"""
    cfg = _analysis_config(args)
    prior = resolve_prior(args.prior)
    dataset = load_dataset(args.expression, args.genotype, center=cfg.center_data)
    store = compute_correlations(dataset, cfg)

    if args.marker_map:
        scan_filter = ScanFilter(mode=FilterMode.MARKER_MAP, marker_map=read_marker_map(args.marker_map, store))
    elif args.top_k_markers:
        scan_filter = ScanFilter(mode=FilterMode.TOP_K, top_k=args.top_k_markers)
    else:
        scan_filter = ScanFilter()

    scanner = TripletScanner(store, prior, cfg, scan_filter, threads=args.threads)
    matrix = scanner.scan()
    write_regulation_matrix(matrix, args.out)

    summary = scanner.summary
    print(
        f"triplets={summary.triplets_scanned} skipped_singular={summary.skipped_singular} "
        f"wall_time={summary.wall_time_s:.3f}s",
        file=sys.stderr,
    )
    inputs = [args.expression, args.genotype] + ([args.marker_map] if args.marker_map else [])
    manifest = build_manifest(
        "scan",
        _flags(args),
        config={**cfg.model_dump(), "prior": prior.label.value, "filter": scan_filter.mode.value},
        inputs=inputs,
    )
    write_manifest(manifest, f"{args.out}.manifest.json")
    return EXIT_OK


def cmd_simulate_consistency(args) -> int:
    cfg = _analysis_config(args)
    prior = resolve_prior(args.prior)
    seed = _seed(args)
    models = [
        TripletGenerator(model=name.strip(), x1_kind=args.x1_kind)
        for name in args.models.split(",") if name.strip()
    ]
    table = run_consistency_experiment(
        models, _csv_ints(args.sizes), args.reps, prior, cfg, seed=seed, threads=args.threads
    )
    out = Path(args.out)
    write_frame(table, out)
    summary = summarize_experiment(table)
    write_frame(summary, out.with_suffix(".summary.tsv"))
    print(summary.to_string(index=False, float_format=lambda v: f"{v:.6g}"))

    manifest = build_manifest("simulate consistency", _flags(args), seed=seed,
                              config={**cfg.model_dump(), "prior": prior.label.value})
    write_manifest(manifest, f"{out}.manifest.json")
    return EXIT_OK


def cmd_simulate_grn(args) -> int:
    seed = _seed(args)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    spec = generate_grn(args.genes, args.edges, rng)
    dataset = sample_grn_data(spec, args.samples, rng)
    write_dataset(dataset, outdir / "expression.tsv", outdir / "genotype.tsv")
    write_grn(spec, outdir / "truth_edges.tsv", outdir / "marker_p.tsv")
    logger.info(f"Simulated {args.genes} genes, {len(spec.edge_set)} edges, {args.samples} samples in {outdir}")

    manifest = build_manifest("simulate grn", _flags(args), seed=seed)
    write_manifest(manifest, outdir / "manifest.json")
    return EXIT_OK


def cmd_eval(args) -> int:
    predictions = read_regulation_table(args.predictions)
    truth = read_grn_edges(args.truth)
    scored, _ = scored_edges_from_tables(predictions, truth)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = evaluate(scored)
    write_curve(roc_curve(scored), outdir / "roc.tsv")
    write_curve(pr_curve(scored), outdir / "pr.tsv")
    write_summary(summary, outdir / "summary.tsv")
    print(summary_line(summary))

    manifest = build_manifest("eval", _flags(args), inputs=[args.predictions, args.truth])
    write_manifest(manifest, outdir / "manifest.json")
    return EXIT_OK


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bfcs",
        description="Bayes factors of covariance structures for local causal discovery",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    triplet = sub.add_parser("triplet", help="Score one triplet")
    source = triplet.add_mutually_exclusive_group()
    source.add_argument("--data", type=str, help="Three-column TSV/CSV of samples")
    source.add_argument("--r12", type=float)
    triplet.add_argument("--r13", type=float)
    triplet.add_argument("--r23", type=float)
    triplet.add_argument("--n", type=int)
    triplet.add_argument("--out", type=str, help="Also write the report as TSV")
    _add_analysis_flags(triplet)
    triplet.set_defaults(handler=cmd_triplet)

    scan = sub.add_parser("scan", help="Regulation probabilities for all trait pairs")
    scan.add_argument("--expression", required=True)
    scan.add_argument("--genotype", required=True)
    scan.add_argument("--top-k-markers", type=int, default=None)
    scan.add_argument("--marker-map", type=str, default=None, help="trait<TAB>marker preselection file")
    scan.add_argument("--threads", type=int, default=DEFAULT_THREADS)
    scan.add_argument("--out", required=True)
    _add_analysis_flags(scan)
    scan.set_defaults(handler=cmd_scan)

    simulate = sub.add_parser("simulate", help="Synthetic experiments")
    kinds = simulate.add_subparsers(dest="experiment", required=True)

    consistency = kinds.add_parser("consistency", help="Chain posterior across sample sizes")
    consistency.add_argument("--models", default="chain,independent,full")
    consistency.add_argument("--sizes", default="100,1000,10000")
    consistency.add_argument("--reps", type=int, default=200)
    consistency.add_argument("--x1-kind", choices=["gaussian", "bernoulli"], default="gaussian")
    consistency.add_argument("--seed", type=int, default=None)
    consistency.add_argument("--threads", type=int, default=DEFAULT_THREADS)
    consistency.add_argument("--out", required=True)
    _add_analysis_flags(consistency)
    consistency.set_defaults(handler=cmd_simulate_consistency)

    grn = kinds.add_parser("grn", help="Marker-driven regulatory network data")
    grn.add_argument("--genes", type=int, default=100)
    grn.add_argument("--edges", type=int, default=51)
    grn.add_argument("--samples", type=int, default=100)
    grn.add_argument("--seed", type=int, default=None)
    grn.add_argument("--outdir", required=True)
    grn.set_defaults(handler=cmd_simulate_grn)

    ev = sub.add_parser("eval", help="ROC, precision-recall and Brier score")
    ev.add_argument("--predictions", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--outdir", required=True)
    ev.set_defaults(handler=cmd_eval)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.handler(args)
    except BfcsError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_DATA
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
