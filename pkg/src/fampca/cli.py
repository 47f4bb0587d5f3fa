"""Command-line pipeline around the library.

Subcommands:
    simulate     draw a stratified genotype dataset
    scale        row-standardize a genotype TSV
    relate       correlation graph, detected families
    scores       run one ancestry method
    evaluate     SWISS and RSE per component
    instability  replacement instability of family scores
    scree        per-individual scree curves, raw and smoothed
    report       render an SVG plot from CSV outputs
    bench        simulation-grid sweep with metric tables

Every subcommand writes its files into --out together with manifest.json
(seed, parameter hash, inputs, outputs) so a run can be replayed. All
writers are atomic and deterministic: identical seed and inputs give
byte-identical files. Exit codes: 0 success, 2 validation error, 3
numerical failure.
"""

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .errors import DimensionMismatch, InfeasibleDesign, NumericalError, ValidationError
from .evaluate import (
    DEFAULT_L,
    DEFAULT_SPAN,
    individual_scree,
    instability,
    rse,
    rse_mean,
    split_for_method,
    swiss,
    swiss_mean,
)
from .io import (
    RunManifest,
    atomic_write_text,
    read_config,
    read_family_file,
    read_genotypes,
    read_scaled_tsv,
    read_scores_csv,
    read_strata,
    read_values_csv,
    write_edges_csv,
    write_family_file,
    write_genotypes,
    write_manifest,
    write_matrix_csv,
    write_scaled_tsv,
    write_scores_csv,
    write_strata,
    write_table_csv,
    write_values_csv,
)
from .methods import DEFAULT_RIDGE, METHODS, AncestryResult, compute_scores
from .model import drop_monomorphic, scale_genotypes
from .relatedness import (
    DEFAULT_ETA,
    detect_families,
    pairwise_correlations,
    relatedness_graph,
    select_unrelated_set,
)
from .report import KINDS, PlotSpec, render
from .simulate import SimConfig, config_from_mapping, simulate_dataset

DESK_P = 5000
PAPER_P = 20000
BENCH_NS = (500, 1000, 2000)
BENCH_PROPS = (0.2, 0.5, 0.8)
BENCH_DESIGNS = ("balanced", "unbalanced")


def _config_hash(parameters):
    blob = json.dumps(parameters, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _finish(args, parameters, inputs, outputs, seed=None):
    manifest = RunManifest(
        subcommand=args.subcommand,
        version=__version__,
        seed=seed,
        config_hash=_config_hash(parameters),
        parameters=parameters,
        inputs=inputs,
        outputs=sorted(outputs) + ["manifest.json"],
    )
    write_manifest(manifest, os.path.join(args.out, "manifest.json"))


def _outpath(args, name):
    return os.path.join(args.out, name)


# === subcommands ===


def cmd_simulate(args):
    mapping = dict(read_config(args.config)) if args.config else {}
    overrides = {
        "n": args.n,
        "K": args.strata,
        "prop": args.prop,
        "n_f": args.family_size,
        "design": args.design,
        "p": args.p,
        "fst": args.fst,
        "rho": args.rho,
        "block": args.block,
        "maf_lo": args.maf_lo,
        "maf_hi": args.maf_hi,
        "mean_recombinations": args.recombinations,
    }
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    cfg = config_from_mapping(mapping, args.seed)
    sim = simulate_dataset(cfg)
    ids = sim.genotypes.individual_ids
    write_genotypes(sim.genotypes, _outpath(args, "genotypes.tsv"))
    write_family_file(sim.pedigree, ids, _outpath(args, "families.tsv"))
    write_strata([str(s) for s in sim.strata], ids, _outpath(args, "strata.csv"))
    _finish(
        args,
        asdict(cfg),
        {"config": args.config} if args.config else {},
        ["genotypes.tsv", "families.tsv", "strata.csv"],
        seed=args.seed,
    )


def cmd_scale(args):
    G = read_genotypes(args.genotypes)
    dropped = ()
    if args.drop_monomorphic:
        G, dropped = drop_monomorphic(G)
    S = scale_genotypes(G, missing_policy=args.missing)
    write_scaled_tsv(S, _outpath(args, "scaled.tsv"))
    _finish(
        args,
        {
            "missing": args.missing,
            "drop_monomorphic": bool(args.drop_monomorphic),
            "n_dropped": len(dropped),
        },
        {"genotypes": args.genotypes},
        ["scaled.tsv"],
    )


def cmd_relate(args):
    S = read_scaled_tsv(args.scaled)
    corr = pairwise_correlations(S)
    graph = relatedness_graph(corr, args.eta)
    fam = detect_families(corr, args.eta)
    write_family_file(fam, S.individual_ids, _outpath(args, "families.tsv"))
    write_edges_csv(graph.edges, S.individual_ids, _outpath(args, "edges.csv"))
    _finish(
        args,
        {"eta": args.eta},
        {"scaled": args.scaled},
        ["families.tsv", "edges.csv"],
    )


def cmd_scores(args):
    S = read_scaled_tsv(args.scaled)
    fam = read_family_file(args.families, S.individual_ids)
    res = compute_scores(
        S,
        fam,
        args.method,
        args.k,
        ridge=args.ridge,
        include_diagonal=args.include_diagonal,
    )
    write_scores_csv(res.individual_ids, res.scores, _outpath(args, "scores.csv"))
    write_values_csv(res.values, _outpath(args, "values.csv"))
    _finish(
        args,
        {
            "method": args.method,
            "k": args.k,
            "ridge": args.ridge,
            "include_diagonal": bool(args.include_diagonal),
        },
        {"scaled": args.scaled, "families": args.families},
        ["scores.csv", "values.csv"],
    )


def cmd_evaluate(args):
    ids, scores = read_scores_csv(args.scores)
    labels = read_strata(args.strata, ids)
    fam = read_family_file(args.families, ids)
    related, unrelated = split_for_method(fam, args.method)
    sw = swiss(scores, labels)
    rs = rse(scores, labels, related, unrelated)
    rows = [
        (args.method, l + 1, float(sw[l]), float(rs[l]))
        for l in range(scores.shape[1])
    ]
    write_table_csv(
        ("method", "component", "swiss", "rse"),
        rows,
        _outpath(args, "metrics.csv"),
    )
    _finish(
        args,
        {"method": args.method},
        {"scores": args.scores, "strata": args.strata, "families": args.families},
        ["metrics.csv"],
    )


def cmd_instability(args):
    S = read_scaled_tsv(args.scaled)
    fam = read_family_file(args.families, S.individual_ids)
    rep = instability(
        S, fam, args.method, L=args.components, gold_reading=args.gold_reading
    )
    write_values_csv(rep.values, _outpath(args, "instability.csv"))
    member_ids = [S.individual_ids[j] for j in rep.member_indices]
    header = ("individual_id",) + tuple(
        f"component_{l + 1}" for l in range(args.components)
    )
    for name, block in (("gold.csv", rep.gold), ("comparison.csv", rep.comparison)):
        rows = [
            (member_ids[r],) + tuple(float(v) for v in block[r])
            for r in range(block.shape[0])
        ]
        write_table_csv(header, rows, _outpath(args, name))
    _finish(
        args,
        {
            "method": args.method,
            "components": args.components,
            "gold_reading": args.gold_reading,
        },
        {"scaled": args.scaled, "families": args.families},
        ["instability.csv", "gold.csv", "comparison.csv"],
    )


def cmd_scree(args):
    ids, scores = read_scores_csv(args.scores)
    values = read_values_csv(args.values)
    if values.size != scores.shape[1]:
        raise DimensionMismatch(
            f"{scores.shape[1]} score columns but {values.size} values"
        )
    res = AncestryResult("scores", scores, values, tuple(ids))
    raw, smooth = individual_scree(res, span=args.span)
    header = ("individual_id",) + tuple(
        f"component_{l + 1}" for l in range(scores.shape[1])
    )
    for name, block in (("scree_raw.csv", raw), ("scree_smooth.csv", smooth)):
        rows = [
            (ids[j],) + tuple(float(v) for v in block[j]) for j in range(len(ids))
        ]
        write_table_csv(header, rows, _outpath(args, name))
    _finish(
        args,
        {"span": args.span},
        {"scores": args.scores, "values": args.values},
        ["scree_raw.csv", "scree_smooth.csv"],
    )


def cmd_report(args):
    spec = PlotSpec(
        kind=args.kind,
        scores=args.scores,
        strata=args.strata,
        families=args.families,
        table=args.table,
        x=args.x,
        y=args.y,
        highlight=args.highlight,
        title=args.title,
    )
    svg = render(spec)
    atomic_write_text(_outpath(args, "plot.svg"), svg)
    inputs = {
        name: getattr(args, name)
        for name in ("scores", "strata", "families", "table")
        if getattr(args, name) is not None
    }
    _finish(
        args,
        {
            "kind": args.kind,
            "x": args.x,
            "y": args.y,
            "highlight": args.highlight,
            "title": args.title,
        },
        inputs,
        ["plot.svg"],
    )


# === bench ===


def _nearest_feasible(n, prop, n_f):
    """Round n*prop to the nearest multiple of n_f; returns adjusted prop."""
    members = int(round(n * prop / n_f)) * n_f
    return members / n


def _bench_cell(design, n, prop, p, methods, k, rep_seeds, rows):
    """Run one grid cell; returns False if the design is infeasible."""
    for r, rep_seed in enumerate(rep_seeds):
        cfg = SimConfig(seed=rep_seed, n=n, prop=prop, design=design, p=p)
        try:
            sim = simulate_dataset(cfg)
        except InfeasibleDesign as e:
            print(
                f"bench: skipping {design} n={n} prop={prop:g}: {e}",
                file=sys.stderr,
            )
            return False
        G, _ = drop_monomorphic(sim.genotypes)
        S = scale_genotypes(G)
        labels = np.array([str(s) for s in sim.strata], dtype=object)
        fam = sim.pedigree
        fam_eval = (
            select_unrelated_set(fam, S) if "pcair" in methods else fam
        )
        for method in methods:
            use = fam_eval if method == "pcair" else fam
            res = compute_scores(S, use, method, k)
            related, unrelated = split_for_method(use, method)
            rows.append(
                (
                    design,
                    n,
                    prop,
                    method,
                    r + 1,
                    swiss_mean(res.scores, labels),
                    rse_mean(res.scores, labels, related, unrelated),
                )
            )
    return True


def cmd_bench(args):
    methods = (
        list(METHODS) if args.methods == "all" else args.methods.split(",")
    )
    for m in methods:
        if m not in METHODS:
            raise DimensionMismatch(
                f"unknown method {m!r}; choose from {', '.join(METHODS)}"
            )
    ns = [int(v) for v in args.n.split(",")] if args.n else list(BENCH_NS)
    props = (
        [float(v) for v in args.props.split(",")] if args.props else list(BENCH_PROPS)
    )
    designs = args.designs.split(",") if args.designs else list(BENCH_DESIGNS)
    p = PAPER_P if args.paper_scale else args.p

    cells = [
        (design, n, _nearest_feasible(n, prop, 3))
        for design in designs
        for n in ns
        for prop in props
    ]
    master = np.random.SeedSequence(args.seed)
    cell_seqs = master.spawn(len(cells))
    rows = []
    kept = []
    for (design, n, prop), seq in zip(cells, cell_seqs):
        rep_seeds = [
            int(child.generate_state(1, np.uint64)[0])
            for child in seq.spawn(args.replicates)
        ]
        if _bench_cell(design, n, prop, p, methods, args.k, rep_seeds, rows):
            kept.append((design, n, prop))

    header = ("design", "n", "prop", "method", "replicate", "swiss", "rse")
    write_table_csv(header, rows, _outpath(args, "bench.csv"))
    outputs = ["bench.csv"]

    if rows:
        means = {}
        for design, n, prop, method, _, sw, rs in rows:
            means.setdefault((design, n, prop, method), []).append((sw, rs))
        mean_rows = []
        for design, n, prop in kept:
            for method in methods:
                vals = np.array(means[(design, n, prop, method)])
                mean_rows.append(
                    (
                        design,
                        n,
                        prop,
                        method,
                        float(vals[:, 0].mean()),
                        float(vals[:, 1].mean()),
                    )
                )
        write_table_csv(
            ("design", "n", "prop", "method", "swiss", "rse"),
            mean_rows,
            _outpath(args, "bench_mean.csv"),
        )
        col_labels = [f"{d}:n{n}:p{prop:g}" for d, n, prop in kept]
        for metric, idx in (("swiss", 0), ("rse", 1)):
            matrix = [
                [
                    float(
                        np.mean([v[idx] for v in means[(d, n, prop, method)]])
                    )
                    for (d, n, prop) in kept
                ]
                for method in methods
            ]
            write_matrix_csv(
                methods, col_labels, matrix, _outpath(args, f"heatmap_{metric}.csv")
            )
        outputs += ["bench_mean.csv", "heatmap_swiss.csv", "heatmap_rse.csv"]

    _finish(
        args,
        {
            "methods": methods,
            "n": ns,
            "props": props,
            "designs": designs,
            "replicates": args.replicates,
            "p": p,
            "k": args.k,
        },
        {},
        outputs,
        seed=args.seed,
    )


# === parser ===


def _add_out(sub):
    sub.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fampca",
        description="Family-robust ancestry scores: simulate, score, evaluate.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sim = subs.add_parser("simulate", help="draw a stratified genotype dataset")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--config", help="flat key = value file")
    sim.add_argument("--n", type=int)
    sim.add_argument("--strata", type=int, help="number of strata K")
    sim.add_argument("--prop", type=float, help="fraction in families")
    sim.add_argument("--family-size", type=int, help="sibship size")
    sim.add_argument("--design", choices=("balanced", "unbalanced"))
    sim.add_argument("--p", type=int, help="number of SNPs")
    sim.add_argument("--fst", type=float)
    sim.add_argument("--rho", type=float, help="latent AR(1) coefficient")
    sim.add_argument("--block", type=int, help="latent block length")
    sim.add_argument("--maf-lo", type=float)
    sim.add_argument("--maf-hi", type=float)
    sim.add_argument("--recombinations", type=float, help="mean per meiosis")
    _add_out(sim)
    sim.set_defaults(func=cmd_simulate)

    sc = subs.add_parser("scale", help="row-standardize a genotype TSV")
    sc.add_argument("--genotypes", required=True)
    sc.add_argument(
        "--missing", choices=("mean_impute", "reject"), default="mean_impute"
    )
    sc.add_argument(
        "--drop-monomorphic",
        action="store_true",
        help="drop zero-variance SNPs instead of failing",
    )
    _add_out(sc)
    sc.set_defaults(func=cmd_scale)

    rel = subs.add_parser("relate", help="detect families from correlations")
    rel.add_argument("--scaled", required=True)
    rel.add_argument("--eta", type=float, default=DEFAULT_ETA)
    _add_out(rel)
    rel.set_defaults(func=cmd_relate)

    sco = subs.add_parser("scores", help="run one ancestry method")
    sco.add_argument("--scaled", required=True)
    sco.add_argument("--families", required=True)
    sco.add_argument("--method", choices=METHODS, required=True)
    sco.add_argument("--k", type=int, default=6, help="components to keep")
    sco.add_argument("--ridge", type=float, default=DEFAULT_RIDGE)
    sco.add_argument(
        "--include-diagonal",
        action="store_true",
        help="include diagonal entries in the substitution median",
    )
    _add_out(sco)
    sco.set_defaults(func=cmd_scores)

    ev = subs.add_parser("evaluate", help="SWISS and RSE per component")
    ev.add_argument("--scores", required=True)
    ev.add_argument("--strata", required=True)
    ev.add_argument("--families", required=True)
    ev.add_argument("--method", choices=METHODS, required=True)
    _add_out(ev)
    ev.set_defaults(func=cmd_evaluate)

    ins = subs.add_parser("instability", help="replacement instability")
    ins.add_argument("--scaled", required=True)
    ins.add_argument("--families", required=True)
    ins.add_argument("--method", choices=METHODS, required=True)
    ins.add_argument("--components", type=int, default=DEFAULT_L)
    ins.add_argument(
        "--gold-reading",
        choices=("row", "last-column"),
        default="row",
        help="how the gold run is read (last-column is audit-only)",
    )
    _add_out(ins)
    ins.set_defaults(func=cmd_instability)

    scr = subs.add_parser("scree", help="per-individual scree curves")
    scr.add_argument("--scores", required=True)
    scr.add_argument("--values", required=True)
    scr.add_argument("--span", type=float, default=DEFAULT_SPAN)
    _add_out(scr)
    scr.set_defaults(func=cmd_scree)

    rep = subs.add_parser("report", help="render an SVG plot")
    rep.add_argument("--kind", choices=KINDS, required=True)
    rep.add_argument("--scores")
    rep.add_argument("--strata")
    rep.add_argument("--families")
    rep.add_argument("--table", help="labeled matrix CSV for heatmaps")
    rep.add_argument("--x", type=int, default=1)
    rep.add_argument("--y", type=int, default=2)
    rep.add_argument("--highlight", help="'size-class' or a family id")
    rep.add_argument("--title")
    _add_out(rep)
    rep.set_defaults(func=cmd_report)

    ben = subs.add_parser("bench", help="simulation-grid sweep")
    ben.add_argument("--seed", type=int, required=True)
    ben.add_argument("--methods", default="all", help="'all' or a comma list")
    ben.add_argument("--n", help="comma list, default 500,1000,2000")
    ben.add_argument("--props", help="comma list, default 0.2,0.5,0.8")
    ben.add_argument("--designs", help="comma list, default balanced,unbalanced")
    ben.add_argument("--replicates", type=int, default=3)
    ben.add_argument("--k", type=int, default=5, help="components per method")
    scale_group = ben.add_mutually_exclusive_group()
    scale_group.add_argument("--p", type=int, default=DESK_P)
    scale_group.add_argument(
        "--paper-scale",
        action="store_true",
        help=f"use p = {PAPER_P} instead of the desk-scale default",
    )
    _add_out(ben)
    ben.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    try:
        args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
