"""Command-line interface: campaign lifecycle, benchmarks, service."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .bench import METHODS, export_weight_evolution, run_benchmark
from .campaign import Campaign, CampaignConfig, load_case, trace_to_csv
from .exceptions import SeqDiscError

_DC_SYNONYMS = {
    "bh": "bh", "dbh": "bh",
    "bf": "bf", "dbf": "bf",
    "daw": "aw",
    "uni": "uniform", "uniform": "uniform",
}
_MD_SYNONYMS = {"pi": "pi", "chi2": "chi2", "aic": "aic"}


def parse_cell(spec: str) -> tuple[str, str, str]:
    """Parse a dc/md[/method] cell spec such as 'aw:daw' or 'bh:pi:gp-t2'.

    Tokens may come in either order; 'aw' resolves to the design criterion
    when the other token is a discrimination criterion, and to AIC
    otherwise.
    """
    parts = spec.lower().split(":")
    method = "gp-t1"
    if parts and parts[-1] in METHODS:
        method = parts.pop()
    if len(parts) != 2:
        raise click.BadParameter(f"cell {spec!r} needs two criterion tokens")
    dc = md = None
    leftovers = []
    for tok in parts:
        if tok in _MD_SYNONYMS and md is None:
            md = _MD_SYNONYMS[tok]
        elif tok in _DC_SYNONYMS and tok != "aw" and dc is None:
            dc = _DC_SYNONYMS[tok]
        else:
            leftovers.append(tok)
    for tok in leftovers:
        if tok == "aw":
            if dc is None:
                dc = "aw"
            elif md is None:
                md = "aic"
        else:
            raise click.BadParameter(f"unknown criterion token {tok!r}")
    if dc is None or md is None:
        raise click.BadParameter(f"could not resolve cell {spec!r}")
    return dc, md, method


def _floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


@click.group()
def main():
    """Sequential design of experiments for model discrimination."""


@main.group()
def campaign():
    """Create and advance design campaigns."""


@campaign.command("init")
@click.option("--case", "case_id", required=True, type=click.Choice(["1", "2", "2-3"]))
@click.option("--dc", default="bh", help="design criterion: bh|bf|aw|uniform")
@click.option("--md", default="pi", help="discrimination criterion: pi|chi2|aic")
@click.option("--taylor", default=1, type=click.IntRange(1, 2))
@click.option("--n0", default=None, type=int, help="initial observation count")
@click.option("--budget", default=None, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--n-sim", default=None, type=int, help="simulated dataset size")
@click.option("--out", "out_path", required=True, type=click.Path())
def campaign_init(case_id, dc, md, taylor, n0, budget, seed, n_sim, out_path):
    """Create a campaign file with synthetic initial observations."""
    case = load_case(case_id)
    config = CampaignConfig(
        case=case_id,
        design_criterion=dc,
        md=md,
        taylor_order=taylor,
        budget=budget if budget is not None else case.budget_default,
        seed=seed,
        n0=n0 if n0 is not None else case.n0_default,
        n_sim=n_sim,
    )
    camp = Campaign(case, config)
    theta_rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    true_theta = case.sample_true_theta(theta_rng)
    camp.initialize(camp.sample_initial_data(true_theta))
    camp.save(out_path)
    click.echo(f"campaign written to {out_path} (status: {camp.status})")


@campaign.command("propose")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
def campaign_propose(in_path):
    """Print the next proposed experiment and record it in the file."""
    camp = Campaign.load(in_path)
    x_star, value = camp.propose()
    camp.save(in_path)
    click.echo("x* = " + ",".join(format(v, ".17g") for v in x_star))
    click.echo(f"criterion {camp.config.design_criterion} = {value:.6g}")


@campaign.command("observe")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--x", "x_text", required=True, help="comma-separated design point")
@click.option("--y", "y_text", required=True, help="comma-separated measurement")
def campaign_observe(in_path, x_text, y_text):
    """Append one measured observation and report updated probabilities."""
    camp = Campaign.load(in_path)
    camp.observe(_floats(x_text), _floats(y_text))
    camp.save(in_path)
    click.echo("pi = " + ",".join(format(v, ".6g") for v in camp.disc.posteriors))
    click.echo("w  = " + ",".join(format(v, ".6g") for v in camp.disc.weights))
    click.echo(f"status = {camp.status}")


@campaign.command("status")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
def campaign_status(in_path):
    """Show round, status and per-model statistics."""
    camp = Campaign.load(in_path)
    doc = {
        "round": camp.round_,
        "status": camp.status,
        "n_observations": len(camp.data),
        "models": [m.name for m in camp.case.models],
        "pi": camp.disc.posteriors.tolist(),
        "w": camp.disc.weights.tolist(),
        "chi2_pass": camp.disc.chi2_pass.tolist(),
        "winner": camp.disc.winner,
    }
    click.echo(json.dumps(doc, indent=2))


@campaign.command("export")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def campaign_export(in_path, out_path):
    """Write the observation trace as CSV."""
    camp = Campaign.load(in_path)
    trace_to_csv(camp, out_path)
    click.echo(f"trace written to {out_path}")


@main.group()
def bench():
    """Replicated closed-loop benchmarks."""


@bench.command("run")
@click.option("--case", "case_id", required=True, type=click.Choice(["1", "2", "2-3"]))
@click.option("--cells", required=True, help="comma-separated dc:md[:method] specs")
@click.option("--reps", default=100, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--weights-out", default=None, type=click.Path(),
              help="long-format Akaike weight evolution CSV")
def bench_run(case_id, cells, reps, seed, out_path, weights_out):
    """Run benchmark cells and print the metric table."""
    cell_list = [parse_cell(c) for c in cells.split(",")]

    def progress(dc, md, method, r, outcome):
        click.echo(f"  [{dc}:{md}:{method}] replicate {r}: {outcome}", err=True)

    result = run_benchmark(case_id, cell_list, reps, seed, progress=progress)
    click.echo(result.to_markdown())
    if out_path:
        doc = {
            "case": case_id,
            "replicates": reps,
            "seed": seed,
            "cells": {k: c.metrics() for k, c in result.cells.items()},
        }
        Path(out_path).write_text(json.dumps(doc, indent=2))
    if weights_out:
        traces = next(iter(result.cells.values())).traces
        export_weight_evolution(traces, weights_out)


@bench.command("table")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
def bench_table(in_path):
    """Render a saved benchmark result as a Markdown table."""
    doc = json.loads(Path(in_path).read_text())
    keys = list(doc["cells"])
    click.echo("| metric | " + " | ".join(keys) + " |")
    click.echo("|---" * (len(keys) + 1) + "|")
    for metric in ("A", "SE", "S", "F", "I"):
        vals = [format(doc["cells"][k][metric], ".2f") for k in keys]
        label = metric + (" [%]" if metric in ("S", "F", "I") else "")
        click.echo(f"| {label} | " + " | ".join(vals) + " |")


@main.command("serve")
@click.option("--store", "store_dir", required=True, type=click.Path(),
              envvar="SEQDISC_STORE")
@click.option("--port", default=8000, type=int)
@click.option("--host", default="127.0.0.1")
def serve(store_dir, port, host):
    """Run the campaign HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store_dir), host=host, port=port)


def run(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(exc.format_message(), err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except SeqDiscError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


def cli_entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    cli_entry()
