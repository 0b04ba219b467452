"""Command-line entry points: ingest, ask, serve, bench, export-feedback."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import bench as bench_mod
from .corpus import build_corpus_from_files
from .errors import FinqaError
from .ledger import FeedbackLedger, export_curated
from .service import Engine, load_config, serve


@click.group()
def main():
    """Question answering over tabular financial data with hallucination scoring."""


@main.command()
@click.argument("table", type=click.Path(exists=True))
@click.argument("manifest", type=click.Path(exists=True))
@click.option("-o", "--output", required=True, type=click.Path())
def ingest(table, manifest, output):
    """Build the chunk corpus from TABLE (CSV) and MANIFEST (JSON)."""
    try:
        corpus = build_corpus_from_files(table, manifest)
    except FinqaError as exc:
        raise click.ClickException(str(exc))
    corpus.to_json_file(output)
    click.echo(f"wrote {len(corpus.chunks)} chunks to {output} "
               f"(fingerprint {corpus.build_fingerprint[:12]})")


@main.command()
@click.argument("question")
@click.option("--backend", default=None, help="Backend id from the config registry.")
@click.option("--json", "as_json", is_flag=True, help="Print the full result as JSON.")
@click.option("--config", "config_path", default="finqa.json", type=click.Path(exists=True))
def ask(question, backend, as_json, config_path):
    """Answer QUESTION through the full pipeline."""
    engine = Engine(load_config(config_path))
    try:
        result = engine.ask(question, backend)
    except FinqaError as exc:
        raise click.ClickException(str(exc))
    result = {k: v for k, v in result.items() if k != "prompt"}
    if as_json:
        click.echo(json.dumps(result, indent=1))
        return
    click.echo(result["answer"])
    if "confidence" in result:
        q = result["quality"]
        pips = "".join(
            "+" if q[k] else "-"
            for k in ("contextual_pass", "numeric_pass", "uniqueness_pass", "grammatical_pass")
        )
        click.echo(f"[confidence: {result['confidence']}  checks: {pips}  "
                   f"chunks: {len(result['chunk_ids_used'])}]")


@main.command()
@click.option("--port", default=None, type=int)
@click.option("--config", "config_path", default="finqa.json", type=click.Path(exists=True))
def serve_cmd(port, config_path):
    """Run the HTTP service."""
    serve(load_config(config_path), port)


main.add_command(serve_cmd, name="serve")


@main.command(name="bench")
@click.argument("suite", type=click.Path(exists=True))
@click.option("--backends", default=None, help="Comma-separated backend ids (default: all).")
@click.option("--repeats", default=bench_mod.DEFAULT_REPEATS, type=int)
@click.option("--config", "config_path", default="finqa.json", type=click.Path(exists=True))
def bench(suite, backends, repeats, config_path):
    """Run the query suite SUITE against the configured backends."""
    engine = Engine(load_config(config_path))
    entries = bench_mod.load_suite(suite)
    ids = backends.split(",") if backends else engine.registry.ids()
    try:
        report = bench_mod.run_suite(engine, entries, ids, repeats)
    except FinqaError as exc:
        raise click.ClickException(str(exc))
    json_path, txt_path = bench_mod.render_report(report, engine.benchmark_dir)
    click.echo(txt_path.read_text(), nl=False)
    click.echo(f"report written to {json_path}")


@main.command(name="export-feedback")
@click.option("--min-rating", default=1, type=int)
@click.option("--min-confidence", default="Medium",
              type=click.Choice(["Low", "Medium", "High"]))
@click.option("-o", "--output", required=True, type=click.Path())
@click.option("--config", "config_path", default="finqa.json", type=click.Path(exists=True))
def export_feedback(min_rating, min_confidence, output, config_path):
    """Export the curated fine-tuning dataset from the feedback ledger."""
    config = load_config(config_path)
    ledger_path = config.get("ledger", "feedback.jsonl")
    base = Path(config["_base_dir"])
    ledger = FeedbackLedger(base / ledger_path)
    count = export_curated(ledger, output, min_rating, min_confidence)
    click.echo(f"wrote {count} records to {output}")


if __name__ == "__main__":
    sys.exit(main())
