"""Command-line front door.

Every stage is invocable on its own so CI can fixture-test them in
isolation; ``run-all`` chains the non-gated stages. Commands are idempotent:
re-running a completed stage is a no-op. Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

import functools
import json
import sys
from pathlib import Path
from typing import Optional

import click

from . import virtlab
from .campaign import Campaign, CampaignConfig, Stage
from .domain import normalize_recipe
from .errors import ChromalabError, PreconditionFailed
from .miner import curation_digest

STAGE_COMMANDS = {"analyze": Stage.ANALYSIS, "retrieve": Stage.RETRIEVAL, "mine": Stage.MINING}


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ChromalabError as exc:
            click.echo(f"error [{exc.code}]: {exc}", err=True)
            sys.exit(1)
        except FileNotFoundError as exc:
            click.echo(f"error [not_found]: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _emit(data: dict, fmt: str, human: Optional[str] = None) -> None:
    if fmt == "json":
        click.echo(json.dumps(data, indent=2))
    else:
        click.echo(human if human is not None else json.dumps(data, indent=2))


def _load_config_file(path: Path, overrides: dict) -> CampaignConfig:
    """Read a config file, resolving relative paths against its location."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("corpus_path", "gateway_fixture", "world_path"):
        if raw.get(key):
            raw[key] = str((path.parent / raw[key]).resolve())
    return CampaignConfig.from_json_dict(raw)


@click.group()
def cli():
    """Campaign engine: literature-driven reagent discovery plus closed-loop
    batch optimization against a simulated colorimetric lab."""


@cli.command()
@click.option("--campaign", "campaign_dir", required=True, type=click.Path(path_type=Path))
@click.option("--config", "config_file", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--corpus", type=click.Path(path_type=Path), default=None,
              help="Override the corpus directory from the config file.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--threshold", type=float, default=None,
              help="Override both relevance thresholds.")
@click.option("--rounds", type=int, default=None, help="Override the round count.")
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@_handle_errors
def init(campaign_dir, config_file, corpus, seed, threshold, rounds, fmt):
    """Create a campaign directory from a config file."""
    if (campaign_dir / "state.json").exists():
        _emit({"id": campaign_dir.name, "status": "exists"}, fmt,
              f"campaign {campaign_dir.name} already initialized")
        return
    overrides = {
        "corpus_path": str(corpus.resolve()) if corpus else None,
        "master_seed": seed,
        "article_threshold": threshold,
        "candidate_threshold": threshold,
        "rounds": rounds,
    }
    config = _load_config_file(config_file, overrides)
    campaign = Campaign.create(campaign_dir, config)
    _emit({"id": campaign.campaign_id, "stage": campaign.state().stage}, fmt,
          f"initialized campaign {campaign.campaign_id} at stage {campaign.state().stage}")


def _stage_command(name: str, stage: str, help_text: str):
    @cli.command(name=name, help=help_text)
    @click.option("--campaign", "campaign_dir", required=True,
                  type=click.Path(exists=True, path_type=Path))
    @click.option("--workers", type=int, default=None)
    @click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
    @_handle_errors
    def command(campaign_dir, workers, fmt):
        campaign = Campaign.open(campaign_dir)
        state = campaign.state()
        have, want = Stage.ORDER.index(state.stage), Stage.ORDER.index(stage)
        if have > want:
            _emit({"stage": state.stage, "status": "already-done"}, fmt,
                  f"{name}: already complete (campaign is at stage {state.stage})")
            return
        if have < want:
            raise PreconditionFailed(
                f"campaign is at stage {state.stage}; run earlier stages first")
        new = campaign.advance(workers=workers)
        summary = {"stage": new.stage, "version": new.version}
        if name == "analyze":
            summary["keywords"] = list(new.keywords)
            human = "keywords: " + ", ".join(new.keywords)
        elif name == "retrieve":
            summary["articles_total"] = len(new.articles)
            summary["articles_selected"] = sum(1 for a in new.articles if a["selected"])
            human = (f"retrieved {summary['articles_total']} articles, "
                     f"{summary['articles_selected']} above threshold")
        else:
            summary["candidates"] = 0 if new.candidates is None else len(new.candidates)
            summary["mining_stats"] = new.mining_stats
            human = (f"mined {summary['candidates']} candidates "
                     f"(rejects: {new.mining_stats['rejects']})")
        _emit(summary, fmt, human)

    return command


_stage_command("analyze", Stage.ANALYSIS, "Turn the requirement into five search keywords.")
_stage_command("retrieve", Stage.RETRIEVAL, "Rank the corpus and score article relevance.")
_stage_command("mine", Stage.MINING, "Extract, validate, and aggregate candidate reagents.")


@cli.command()
@click.option("--campaign", "campaign_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--all", "show_all", is_flag=True, help="Include sub-threshold candidates.")
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@_handle_errors
def candidates(campaign_dir, show_all, fmt):
    """Print the curation digest of mined candidates."""
    campaign = Campaign.open(campaign_dir)
    state = campaign.state()
    config = campaign.config()
    if state.candidates is None:
        raise PreconditionFailed("no candidates mined yet; run the mine stage first")
    clist = state.candidates if show_all else \
        state.highlighted_candidates(config.candidate_threshold)
    text, listing = curation_digest(clist)
    _emit({"candidates": listing}, fmt, text.rstrip("\n"))


@cli.command()
@click.option("--campaign", "campaign_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--cas", "cas_codes", multiple=True)
@click.option("--role", "roles", multiple=True)
@click.option("--file", "selection_file", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON file with {selections: [{cas, role}]}.")
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@_handle_errors
def select(campaign_dir, cas_codes, roles, selection_file, fmt):
    """Submit the human reagent selection (pairs of --cas/--role, or --file)."""
    if selection_file is not None:
        with open(selection_file, encoding="utf-8") as fh:
            selections = json.load(fh)["selections"]
    else:
        if len(cas_codes) != len(roles) or not cas_codes:
            raise click.UsageError("provide matching --cas/--role pairs or --file")
        selections = [{"cas": c, "role": r} for c, r in zip(cas_codes, roles)]
    campaign = Campaign.open(campaign_dir)
    state = campaign.state()
    if state.stage in (Stage.EXECUTION, Stage.DONE) and state.selection:
        _emit({"stage": state.stage, "dimension": state.dimension, "status": "already-done"},
              fmt, f"selection already submitted ({len(state.selection)} reagents)")
        return
    new = campaign.submit_selection(selections)
    _emit({"stage": new.stage, "dimension": new.dimension,
           "selection": [{"cas": c, "role": r} for c, r in new.selection]}, fmt,
          f"selection accepted: {len(new.selection)} reagents, "
          f"search space dimension {new.dimension}")


@cli.command()
@click.option("--campaign", "campaign_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--rounds", "n_rounds", type=int, default=None,
              help="How many rounds to run (default: all remaining).")
@click.option("--beta", "beta_override", type=float, default=None,
              help="Override the exploration weight for these rounds.")
@click.option("--workers", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@_handle_errors
def run(campaign_dir, n_rounds, beta_override, workers, fmt):
    """Run optimization rounds against the virtual lab."""
    campaign = Campaign.open(campaign_dir)
    state = campaign.state()
    if state.stage == Stage.DONE:
        _emit({"stage": state.stage, "rounds_completed": len(state.rounds),
               "status": "already-done"}, fmt,
              f"all {len(state.rounds)} rounds already complete")
        return
    new = campaign.run(n_rounds=n_rounds, beta_override=beta_override)
    best = max((r.score for batch in new.rounds for r in batch), default=0.0)
    _emit({"stage": new.stage, "rounds_completed": len(new.rounds),
           "evaluations": sum(len(b) for b in new.rounds), "best_score": best}, fmt,
          f"{len(new.rounds)} rounds complete, "
          f"{sum(len(b) for b in new.rounds)} evaluations, best score {best:.4f}")


@cli.command()
@click.option("--campaign", "campaign_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@_handle_errors
def report(campaign_dir, fmt):
    """Write and print the round report."""
    doc = Campaign.open(campaign_dir).report()
    lines = [f"campaign {doc['campaign_id']}: {doc['rounds_completed']} rounds"]
    for entry in doc["rounds"]:
        lines.append(
            f"  round {entry['round']}: max {entry['score_max']:.4f}  "
            f"median {entry['score_median']:.4f}  near-zero {entry['fraction_near_zero']:.0%}")
    lines.append("best so far: " + ", ".join(f"{b:.4f}" for b in doc["best_so_far"]))
    if "calibration" in doc:
        lines.append(f"array calibration RMSE: {doc['calibration']['rmse_percent_rh']:.2f} %RH")
    _emit(doc, fmt, "\n".join(lines))


@cli.command()
@click.option("--recipe", "recipe_file", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="JSON file with {composition: {cas: amount}}.")
@click.option("--world", "world_file", type=click.Path(exists=True, path_type=Path),
              default=None)
@click.option("--seed", type=int, default=0)
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@_handle_errors
def simulate(recipe_file, world_file, seed, fmt):
    """One-off virtual lab evaluation of a recipe file."""
    with open(recipe_file, encoding="utf-8") as fh:
        raw = json.load(fh)
    recipe = normalize_recipe(raw["composition"])
    if world_file is not None:
        with open(world_file, encoding="utf-8") as fh:
            world = virtlab.WorldModel.from_json_dict(json.load(fh))
    else:
        world = virtlab.world_for_ingredients(list(recipe.composition), seed=seed)
    program = virtlab.default_program()
    curve = virtlab.simulate_curve(recipe, program, world, seed)
    breakdown = virtlab.extract_metrics(curve, program)
    value = virtlab.score(breakdown)
    out = breakdown.with_score(value).to_json_dict()
    _emit(out, fmt,
          f"amplitude {out['amplitude']:.4f}  response {out['response_time_s']:.1f}s  "
          f"reversibility {out['reversibility']:.3f}  sensitivity {out['sensitivity']:.5f}  "
          f"score {value:.4f}")


@cli.command(name="run-all")
@click.option("--campaign", "campaign_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--workers", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@_handle_errors
def run_all(campaign_dir, workers, fmt):
    """Chain the non-gated stages; continue through rounds once selected."""
    campaign = Campaign.open(campaign_dir)
    state = campaign.state()
    while state.stage in (Stage.ANALYSIS, Stage.RETRIEVAL, Stage.MINING):
        state = campaign.advance(workers=workers)
    if state.stage == Stage.FEEDBACK:
        _emit({"stage": state.stage}, fmt,
              "stopped at the feedback gate: review candidates and submit a selection")
        return
    if state.stage == Stage.EXECUTION:
        state = campaign.run()
    _emit({"stage": state.stage, "rounds_completed": len(state.rounds)}, fmt,
          f"campaign at stage {state.stage}, {len(state.rounds)} rounds complete")


@cli.command()
@click.option("--root", "root_dir", required=True, type=click.Path(path_type=Path),
              help="Directory holding campaign subdirectories.")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(root_dir, host, port):
    """Serve the HTTP API (and the dashboard's backend)."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(root_dir), host=host, port=port)


def main():
    cli()


if __name__ == "__main__":
    main()
