"""Command-line entry point wiring every module into runnable workflows.

Subcommands: ingest | index | query | classify | evaluate | visualize |
mock-serve. Each file-writing command also drops a run_metadata.json
(config snapshot, version, seeds; no timestamps, no paths) so identical
configs reproduce byte-identical outputs. Errors exit with the per-class
codes from visrag.errors and print one machine-readable JSON line on
stderr.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, kb
from .config import ConfigError, RunConfig, apply_overrides, load_config, reproducibility_snapshot
from .core import RetrievalHit, Taxonomy
from .errors import VisragError
from .evaluate import (
    EvalReport,
    merge_report,
    prediction_metrics,
    report_emit,
    retrieval_topk_curves,
)
from .llm import make_client
from .mockserver import MockLlmServer, behavior_from_args
from .pca import pca_fit, pca_transform, scatter_emit
from .pipeline import Mode, classify_batch, load_template
from .store import HnswParams, build_index

INDEX_MANIFEST = "index_manifest.json"


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except VisragError as exc:
            sys.stderr.write(
                json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
            )
            sys.exit(exc.exit_code)
        except ConfigError as exc:
            raise click.UsageError(str(exc))

    return wrapper


def _engine_from_config(cfg: RunConfig):
    if cfg.engine == "hnsw":
        return HnswParams(
            m=cfg.hnsw_m,
            ef_construction=cfg.hnsw_ef_construction,
            ef_search=cfg.hnsw_ef_search,
            seed=cfg.hnsw_seed,
        )
    if cfg.engine == "exact":
        return "exact"
    raise click.UsageError(f"unknown engine {cfg.engine!r} (use exact or hnsw)")


def _load_taxonomy(cfg: RunConfig) -> Taxonomy:
    if cfg.taxonomy:
        return kb.load_taxonomy(cfg.taxonomy)
    return Taxonomy.default()


def _apply_manifest(cfg: RunConfig, store_dir, engine_flag) -> None:
    """When no engine flag was given, adopt the store's indexed engine."""
    manifest_path = Path(store_dir) / INDEX_MANIFEST
    if engine_flag is None and manifest_path.exists():
        manifest = json.loads(manifest_path.read_text("utf-8"))
        cfg.engine = manifest["engine"]
        if cfg.engine == "hnsw":
            params = manifest["params"]
            cfg.hnsw_m = params["m"]
            cfg.hnsw_ef_construction = params["ef_construction"]
            cfg.hnsw_ef_search = params["ef_search"]
            cfg.hnsw_seed = params["seed"]


def _build_from_store(cfg: RunConfig, store_dir):
    entries, taxonomy = kb.load_store(store_dir)
    index = build_index(entries, _engine_from_config(cfg), backend=cfg.hnsw_backend)
    return index, taxonomy


def _write_run_metadata(out_dir, command: str, cfg: RunConfig, **extra) -> None:
    payload = {
        "tool": "visrag",
        "version": __version__,
        "command": command,
        "config": reproducibility_snapshot(cfg),
    }
    payload.update(extra)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run_metadata.json").write_bytes(
        (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )


def _resolve_endpoint(cfg: RunConfig, endpoint_flag) -> None:
    if endpoint_flag is not None:
        cfg.llm_endpoint = endpoint_flag
    elif os.environ.get("VISRAG_LLM_ENDPOINT"):
        cfg.llm_endpoint = os.environ["VISRAG_LLM_ENDPOINT"]


engine_option = click.option(
    "--engine", type=click.Choice(["exact", "hnsw"]), default=None, help="Index engine."
)
hnsw_options = [
    click.option("--m", "hnsw_m", type=int, default=None, help="HNSW graph degree."),
    click.option("--ef-construction", "hnsw_ef_construction", type=int, default=None),
    click.option("--ef-search", "hnsw_ef_search", type=int, default=None),
    click.option("--seed", "hnsw_seed", type=int, default=None, help="Graph build seed."),
    click.option(
        "--backend",
        "hnsw_backend",
        type=click.Choice(["auto", "compiled", "python"]),
        default=None,
        help="HNSW kernel implementation.",
    ),
]


def with_options(*opts):
    def deco(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn

    return deco


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="INI config file; flags override file values.",
)
@click.pass_context
def main(ctx, config_path):
    """Retrieval-augmented visual classification engine."""
    try:
        ctx.obj = load_config(config_path) if config_path else RunConfig()
    except ConfigError as exc:
        raise click.UsageError(str(exc))


@main.command()
@click.option("--embeddings", required=True, type=click.Path(), help="Embedding file.")
@click.option("--metadata", required=True, type=click.Path(), help="Metadata JSONL.")
@click.option("--taxonomy", "taxonomy", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Store directory.")
@click.pass_obj
@handle_errors
def ingest(cfg, embeddings, metadata, taxonomy, out_dir):
    """Validate and persist a knowledge-base store directory."""
    apply_overrides(cfg, taxonomy=taxonomy)
    tax = _load_taxonomy(cfg)
    entries = kb.ingest(embeddings, metadata, tax)
    kb.save_store(entries, tax, out_dir)
    _write_run_metadata(out_dir, "ingest", cfg, n_entries=len(entries),
                        dim=int(entries[0].embedding.shape[0]))
    click.echo(f"ingested {len(entries)} entries (dim {entries[0].embedding.shape[0]}) -> {out_dir}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True, file_okay=False))
@with_options(engine_option, *hnsw_options)
@click.pass_obj
@handle_errors
def index(cfg, store_dir, engine, **flags):
    """Build the vector index and record its manifest in the store."""
    apply_overrides(cfg, engine=engine, **flags)
    idx, _ = _build_from_store(cfg, store_dir)
    manifest = {"engine": cfg.engine, "n": idx.count, "dim": idx.dim}
    if cfg.engine == "hnsw":
        manifest["params"] = {
            "m": cfg.hnsw_m,
            "ef_construction": cfg.hnsw_ef_construction,
            "ef_search": cfg.hnsw_ef_search,
            "seed": cfg.hnsw_seed,
        }
        manifest["backend"] = idx.hnsw_backend
    (Path(store_dir) / INDEX_MANIFEST).write_bytes(
        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )
    _write_run_metadata(store_dir, "index", cfg, **{"index": manifest})
    click.echo(f"indexed {idx.count} entries with engine {cfg.engine}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--embeddings", required=True, type=click.Path(), help="Query embedding file.")
@click.option("--row", type=int, default=0, show_default=True, help="Row to query with.")
@click.option("-k", "k", type=int, default=None, help="Neighbors to return.")
@with_options(engine_option, *hnsw_options)
@click.pass_obj
@handle_errors
def query(cfg, store_dir, embeddings, row, k, engine, **flags):
    """Print top-k hits for one embedding as JSON lines."""
    apply_overrides(cfg, engine=engine, k=k, **flags)
    _apply_manifest(cfg, store_dir, engine)
    idx, _ = _build_from_store(cfg, store_dir)
    matrix = kb.read_embedding_file(embeddings)
    if not (0 <= row < matrix.shape[0]):
        raise click.UsageError(f"row {row} out of range for {matrix.shape[0]} rows")
    for hit in idx.query(matrix[row], cfg.k):
        entry = idx.entry(hit.entry_id)
        click.echo(
            json.dumps(
                {
                    "rank": hit.rank,
                    "entry_id": hit.entry_id,
                    "similarity": hit.similarity,
                    "species": entry.species,
                    "category": entry.category,
                },
                ensure_ascii=False,
            )
        )


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--query-embeddings", required=True, type=click.Path())
@click.option("--query-metadata", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--mode", type=click.Choice([m.value for m in Mode]), default=None)
@click.option("-k", "k", type=int, default=None)
@click.option("--endpoint", default=None, help="LLM endpoint URL or mock:echo / mock:fixed:<text>.")
@click.option("--max-in-flight", "llm_in_flight", type=int, default=None)
@click.option("--max-tokens", "llm_max_tokens", type=int, default=None)
@click.option("--question", default=None)
@click.option("--template", default=None, type=click.Path(exists=True, dir_okay=False))
@with_options(engine_option, *hnsw_options)
@click.pass_obj
@handle_errors
def classify(cfg, store_dir, query_embeddings, query_metadata, out_dir, mode, k,
             endpoint, engine, **flags):
    """Classify a query set; writes predictions.jsonl."""
    apply_overrides(cfg, mode=mode, k=k, engine=engine, **flags)
    _resolve_endpoint(cfg, endpoint)
    _apply_manifest(cfg, store_dir, engine)
    idx, taxonomy = _build_from_store(cfg, store_dir)
    queries = kb.load_queries(query_embeddings, query_metadata, taxonomy)
    client = make_client(
        cfg.llm_endpoint,
        timeout=cfg.llm_timeout,
        retries=cfg.llm_retries,
        bearer_token=cfg.llm_bearer_token,
    )
    template = load_template(cfg.template)
    predictions = classify_batch(
        idx,
        client,
        queries,
        mode=Mode(cfg.mode),
        k=cfg.k,
        taxonomy=taxonomy,
        template=template,
        question=cfg.question,
        max_tokens=cfg.llm_max_tokens,
        max_in_flight=cfg.llm_in_flight,
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for sample, pred in zip(queries, predictions):
        lines.append(
            json.dumps(
                {
                    "id": sample.id,
                    "mode": pred.mode.value,
                    "raw_text": pred.raw_text,
                    "category": pred.category,
                    "species": pred.species,
                    "hits": [
                        {"entry_id": h.entry_id, "similarity": h.similarity}
                        for h in pred.hits
                    ],
                },
                ensure_ascii=False,
            )
        )
    (out_dir / "predictions.jsonl").write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    _write_run_metadata(
        out_dir, "classify", cfg,
        n_queries=len(queries),
        engine=idx.describe_engine(),
    )
    click.echo(f"classified {len(queries)} queries -> {out_dir / 'predictions.jsonl'}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--predictions", "predictions_path", type=click.Path(), default=None,
              help="predictions.jsonl from classify (final-prediction metrics).")
@click.option("--retrieval", is_flag=True, default=False,
              help="Score the retrieval step itself instead of predictions.")
@click.option("--query-embeddings", type=click.Path(), default=None)
@click.option("--query-metadata", type=click.Path(), default=None,
              help="Metadata JSONL carrying ground-truth labels.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("-k", "k", type=int, default=None, help="Deepest k for top-k curves.")
@with_options(engine_option, *hnsw_options)
@click.pass_obj
@handle_errors
def evaluate(cfg, store_dir, predictions_path, retrieval, query_embeddings,
             query_metadata, out_dir, k, engine, **flags):
    """Write an evaluation report (report.json + per_class.csv)."""
    apply_overrides(cfg, k=k, engine=engine, **flags)
    _apply_manifest(cfg, store_dir, engine)
    idx, taxonomy = _build_from_store(cfg, store_dir)
    entries_by_id = {e.id: e for e in idx.entries}
    if query_metadata is None:
        raise click.UsageError("--query-metadata with truth labels is required")
    truth_records = kb.read_metadata_file(query_metadata)
    truth_by_id = {r["id"]: r for r in truth_records}

    if retrieval:
        if query_embeddings is None:
            raise click.UsageError("--retrieval requires --query-embeddings")
        queries = kb.load_queries(query_embeddings, query_metadata, taxonomy)
        hits_per_query = [idx.query(q.embedding, cfg.k) for q in queries]
        truths_cat = [q.category for q in queries]
        if any(t is None for t in truths_cat):
            raise click.UsageError("every query needs a category truth label")
        truths_sp = [q.species for q in queries]
        cat_curve, sp_curve = retrieval_topk_curves(
            hits_per_query, truths_cat, truths_sp, entries_by_id,
            ks=range(1, cfg.k + 1),
        )
        report = EvalReport(
            topk_category=cat_curve,
            topk_species=sp_curve,
            n_samples=len(queries),
            run_metadata={
                "source": "retrieval",
                "k": cfg.k,
                "engine": idx.describe_engine(),
            },
        )
    else:
        if predictions_path is None:
            raise click.UsageError("provide --predictions or --retrieval")
        preds = []
        with open(predictions_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    preds.append(json.loads(line))
        truths_cat = []
        for p in preds:
            rec = truth_by_id.get(p["id"])
            if rec is None or not rec.get("category"):
                raise click.UsageError(f"no truth category for prediction id {p['id']!r}")
            truths_cat.append(rec["category"])
        report = prediction_metrics([p["category"] for p in preds], truths_cat, taxonomy)
        modes = sorted({p["mode"] for p in preds})
        max_hits = max((len(p.get("hits", [])) for p in preds), default=0)
        curves = ({}, {})
        if max_hits > 0:
            hits_per_query = [
                [
                    RetrievalHit(entry_id=h["entry_id"], similarity=h["similarity"], rank=i + 1)
                    for i, h in enumerate(p.get("hits", []))
                ]
                for p in preds
            ]
            truths_sp = [truth_by_id[p["id"]].get("species") for p in preds]
            curves = retrieval_topk_curves(
                hits_per_query, truths_cat, truths_sp, entries_by_id,
                ks=range(1, max_hits + 1),
            )
        report = merge_report(
            report,
            topk_category=curves[0],
            topk_species=curves[1],
            run_metadata={
                "source": "predictions",
                "modes": modes,
                "k": max_hits,
                "engine": idx.describe_engine(),
            },
        )
    paths = report_emit(report, out_dir)
    _write_run_metadata(out_dir, "evaluate", cfg, n_samples=report.n_samples)
    click.echo(f"report written -> {paths['json']}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--query-embeddings", type=click.Path(), default=None)
@click.option("--query-metadata", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--fit-on", "fit_on", type=click.Choice(["union", "store"]), default=None)
@click.pass_obj
@handle_errors
def visualize(cfg, store_dir, query_embeddings, query_metadata, out_dir, fit_on):
    """Project embeddings to 2-D and write coords.csv + scatter.svg."""
    apply_overrides(cfg, fit_on=fit_on)
    entries, taxonomy = kb.load_store(store_dir)
    ids = [e.id for e in entries]
    categories = [e.category for e in entries]
    splits = ["store"] * len(entries)
    matrix = np.stack([e.embedding for e in entries])
    if query_embeddings is not None and query_metadata is not None:
        queries = kb.load_queries(query_embeddings, query_metadata, taxonomy)
        ids += [q.id for q in queries]
        categories += [q.category or "Unlabeled" for q in queries]
        splits += ["test"] * len(queries)
        matrix = np.vstack([matrix, np.stack([q.embedding for q in queries])])
    fit_data = matrix if cfg.fit_on == "union" else matrix[: len(entries)]
    model = pca_fit(fit_data, n_components=2)
    coords = pca_transform(model, matrix)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scatter_emit(ids, coords, categories, splits,
                 out_dir / "coords.csv", out_dir / "scatter.svg")
    _write_run_metadata(
        out_dir, "visualize", cfg,
        n_points=len(ids),
        explained_variance=[float(v) for v in model.explained_variance],
    )
    click.echo(f"wrote {out_dir / 'coords.csv'} and {out_dir / 'scatter.svg'}")


@main.command("mock-serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--behavior", type=click.Choice(["echo", "fixed", "scripted"]),
              default="echo", show_default=True)
@click.option("--text", default="", help="Reply text for --behavior fixed.")
@click.option("--scripted-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON map of sha256(prompt) -> reply for --behavior scripted.")
@click.option("--fail-first", type=int, default=0, show_default=True,
              help="Fail the first N requests with 503 (retry testing).")
@handle_errors
def mock_serve(host, port, behavior, text, scripted_file, fail_first):
    """Run the deterministic protocol mock server (Ctrl-C to stop)."""
    scripted = None
    if scripted_file:
        scripted = json.loads(Path(scripted_file).read_text("utf-8"))
    server = MockLlmServer(
        behavior_from_args(behavior, text=text, scripted=scripted),
        host=host, port=port, fail_first=fail_first,
    )
    click.echo(f"mock LLM server listening on {server.url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()


if __name__ == "__main__":
    main()
