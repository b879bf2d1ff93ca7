"""Command-line front end: generate, discover, eval, benchmark."""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from causa.benchmark import SweepSpec, run_sweep, summarize, write_results_csv, write_summary_csv
from causa.core import (
    DatasetError,
    GraphSchemaError,
    LagWindow,
    load_csv,
    parse_graph,
    save_csv,
    serialize_graph,
)
from causa.discovery import DiscoveryConfig, discover
from causa.estimators import DegenerateDataError, EstimatorConfig
from causa.metrics import score_graph
from causa.synth import ToySystemSpec, generate_toy

EXIT_USAGE = 2
EXIT_RUNTIME = 3

log = logging.getLogger("causa")


def _setup_logging():
    level = os.environ.get("CAUSA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


@click.group()
def main():
    """Filtered causal discovery for multivariate time series."""
    _setup_logging()


def _estimator_config(estimator, knn_k, surrogates, seed) -> EstimatorConfig:
    try:
        return EstimatorConfig(
            kind=estimator, knn_k=knn_k, surrogates=surrogates, seed=seed
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


@main.command()
@click.option("--system", type=click.Choice(["s1", "s2"]), required=True)
@click.option("--vars", "n_vars", type=int, default=7, show_default=True)
@click.option("--samples", type=int, default=1500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--extra-noise-vars", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".")
@click.option("--name", default=None, help="Basename for output files (default: system).")
def generate(system, n_vars, samples, seed, extra_noise_vars, out_dir, name):
    """Write <name>.csv and <name>.truth.json for a toy system."""
    try:
        spec = ToySystemSpec(
            system=system,
            n_vars=n_vars,
            n_samples=samples,
            seed=seed,
            extra_noise_vars=extra_noise_vars,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    data, truth = generate_toy(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = name or system
    save_csv(data, out / f"{base}.csv")
    (out / f"{base}.truth.json").write_bytes(serialize_graph(truth.graph, "json"))
    click.echo(f"wrote {out / (base + '.csv')} and {out / (base + '.truth.json')}")


@main.command("discover")
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["fpcmci", "pcmci"]), default="fpcmci", show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--tau-min", type=int, default=1, show_default=True)
@click.option("--tau-max", type=int, default=1, show_default=True)
@click.option("--estimator", type=click.Choice(["gaussian", "knn"]), default="gaussian", show_default=True)
@click.option("--knn-k", type=int, default=4, show_default=True)
@click.option("--surrogates", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-cond-dim", type=int, default=3, show_default=True)
@click.option("--max-parents", type=int, default=5, show_default=True)
@click.option("--delimiter", default=",", show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".")
@click.option("--emit-filter", is_flag=True, help="Also write the filter trace (fpcmci mode).")
def discover_cmd(
    input_csv,
    mode,
    alpha,
    tau_min,
    tau_max,
    estimator,
    knn_k,
    surrogates,
    seed,
    max_cond_dim,
    max_parents,
    delimiter,
    out_dir,
    emit_filter,
):
    """Run causal discovery on a CSV; writes graph.json, graph.dot, report.json."""
    est = _estimator_config(estimator, knn_k, surrogates, seed)
    try:
        window = LagWindow(tau_min, tau_max)
        cfg = DiscoveryConfig(
            alpha=alpha,
            window=window,
            max_conditioning_dim=max_cond_dim,
            max_parents_in_mci=max_parents,
            estimator=est,
            constrained=(mode == "fpcmci"),
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    try:
        data = load_csv(input_csv, delimiter=delimiter)
    except DatasetError as exc:
        raise click.UsageError(str(exc)) from None
    try:
        run = discover(data, cfg)
    except DegenerateDataError as exc:
        click.echo(f"estimation failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "graph.json").write_bytes(serialize_graph(run.graph, "json"))
    (out / "graph.dot").write_bytes(serialize_graph(run.graph, "dot"))
    report = {
        "mode": run.mode,
        "config": {
            "alpha": alpha,
            "tau_min": tau_min,
            "tau_max": tau_max,
            "estimator": estimator,
            "knn_k": knn_k,
            "surrogates": surrogates,
            "seed": seed,
            "max_conditioning_dim": max_cond_dim,
            "max_parents_in_mci": max_parents,
        },
        "stage_ms": run.stage_ms,
        "test_counts": run.test_counts,
        "n_edges": len(run.graph.edges),
        "nodes": sorted(run.graph.nodes),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    if emit_filter and run.filter_result is not None:
        (out / "filter.json").write_text(run.filter_result.to_json())
    click.echo(
        f"{run.mode}: {len(run.graph.edges)} edges over {len(run.graph.nodes)} nodes "
        f"({run.total_ms:.0f} ms)"
    )


def _format_ms(ms: float | None) -> str:
    if ms is None:
        return "-"
    seconds = ms / 1000.0
    if seconds < 60:
        return f"{seconds:.2f}s"
    return f"{int(seconds // 60)}'{seconds % 60:04.1f}\""


@main.command("eval")
@click.argument("graphs", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--truth", required=True, type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report JSON path.")
def eval_cmd(graphs, truth, out):
    """Score one or more estimated graphs against a ground-truth graph.

    Prints an SHD | F1-Score | Time table, one row per graph. Time is read
    from a report.json next to each graph when present.
    """
    try:
        truth_graph = parse_graph(Path(truth).read_bytes())
    except (FileNotFoundError, GraphSchemaError) as exc:
        raise click.UsageError(f"truth graph: {exc}") from None
    rows = []
    for path in graphs:
        try:
            est = parse_graph(Path(path).read_bytes())
        except (FileNotFoundError, GraphSchemaError) as exc:
            raise click.UsageError(f"{path}: {exc}") from None
        runtime_ms = None
        sibling = Path(path).parent / "report.json"
        if sibling.exists():
            try:
                rep = json.loads(sibling.read_text())
                runtime_ms = float(sum(rep.get("stage_ms", {}).values())) or None
            except (ValueError, TypeError):
                runtime_ms = None
        rows.append((Path(path).stem if len(graphs) > 1 else Path(path).parent.name or Path(path).stem,
                     score_graph(est, truth_graph, runtime_ms=runtime_ms)))
    label_w = max(len("graph"), *(len(lbl) for lbl, _ in rows))
    click.echo(f"{'':<{label_w}}  SHD  F1-Score  Time")
    for lbl, rep in rows:
        click.echo(
            f"{lbl:<{label_w}}  {rep.shd:>3d}  {rep.f1:>8.2f}  {_format_ms(rep.runtime_ms)}"
        )
    if out:
        payload = [{"graph": lbl, **rep.as_dict()} for lbl, rep in rows]
        Path(out).write_text(json.dumps(payload, indent=2) + "\n")


def _parse_var_range(text: str) -> tuple[int, int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
    else:
        lo = hi = text
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise click.UsageError(f"bad variable range {text!r}, expected e.g. 3..7") from None
    if lo_i > hi_i:
        raise click.UsageError(f"empty variable range {text!r}")
    return lo_i, hi_i


@main.command("benchmark")
@click.option("--system", type=click.Choice(["s1", "s2"]), required=True)
@click.option("--vars", "var_range", default="3..7", show_default=True, help="Range, e.g. 3..7.")
@click.option("--repeats", type=int, default=10, show_default=True)
@click.option("--samples", type=int, default=1500, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".")
def benchmark_cmd(system, var_range, repeats, samples, alpha, seed, jobs, out_dir):
    """Sweep variable counts and seeds, running both modes on each dataset.

    Writes a long-format results.csv (one row per run) and an aggregated
    summary.csv per (n_vars, mode).
    """
    lo, hi = _parse_var_range(var_range)
    if repeats < 1:
        raise click.UsageError("repeats must be >= 1")
    spec = SweepSpec(
        system=system,
        var_range=(lo, hi),
        repeats=repeats,
        n_samples=samples,
        alpha=alpha,
        base_seed=seed,
        jobs=jobs,
    )
    rows = run_sweep(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(rows, out / "results.csv")
    summary = summarize(rows)
    write_summary_csv(summary, out / "summary.csv")
    failures = sum(1 for r in rows if r.error)
    click.echo(f"{len(rows)} runs ({failures} failed); results in {out / 'results.csv'}")
    for rec in summary:
        click.echo(
            f"{rec['system']} n={rec['n_vars']} {rec['mode']:>6}: "
            f"SHD {rec['shd_mean']:.2f}±{rec['shd_sd']:.2f}  "
            f"F1 {rec['f1_mean']:.2f}±{rec['f1_sd']:.2f}  "
            f"time {rec['runtime_ms_mean']:.0f} ms"
        )


if __name__ == "__main__":
    main()
