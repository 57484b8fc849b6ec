"""Command-line front door.

Exit codes: 0 ok, 1 I/O, 2 input/schema, 3 unsupported query.
"""

from __future__ import annotations

import base64
import json
import os
import sys
import time

import click
import numpy as np

from . import query_engine as qe
from .align_data import load_task, make_rotated_task, save_task, split_batches
from .alignment import AlignConfig, ProjectionHead, evaluate_retrieval, train_projection
from .errors import (
    FormatError,
    ParseError,
    PeriodError,
    SchemaError,
    StoreError,
    UnsupportedQueryError,
    VariableError,
    VistrError,
)
from .pipeline import Database, IngestConfig
from .refstore import VectorIndex, VisualizationReference
from .render import ChartImage, normalize_sketch
from .synth import planted_patterns_csv, random_walk_csv
from .table import FacetConfig, PhtConfig
from .vocab import load_default_vocabulary

EXIT_IO = 1
EXIT_INPUT = 2
EXIT_UNSUPPORTED = 3


def _fail(code: int, message: str, as_json: bool):
    if as_json:
        click.echo(json.dumps({"error": message}))
    else:
        click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _db_option(f):
    return click.option(
        "--db",
        "db_path",
        envvar="VISTR_DB",
        required=True,
        help="Store root directory (or set VISTR_DB).",
    )(f)


@click.group()
def main():
    """Time-series table reasoning over rendered chart references."""


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path())
@_db_option
@click.option("--threshold", default=1.0, show_default=True)
@click.option("--chart-types", default="line,bar,area", show_default=True)
@click.option("--min-facet-len", default=5, show_default=True)
@click.option("--pht-delta", type=float, default=None)
@click.option("--pht-lambda", type=float, default=None, help="Explicit PHT threshold (default: scale-free).")
@click.option("--table-id", default=None)
@click.option("--json", "as_json", is_flag=True)
def ingest(csv_path, db_path, threshold, chart_types, min_facet_len, pht_delta, pht_lambda, table_id, as_json):
    """Ingest a CSV table: smooth, segment, render, embed, prune, index."""
    try:
        with open(csv_path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        _fail(EXIT_IO, str(e), as_json)
    pht = None
    if pht_lambda is not None:
        pht = PhtConfig(delta=pht_delta or 0.0, lambda_=pht_lambda)
    cfg = IngestConfig(
        prune_threshold=threshold,
        chart_types=tuple(t.strip() for t in chart_types.split(",") if t.strip()),
        facet=FacetConfig(min_facet_len=min_facet_len),
        pht=pht,
    )
    try:
        result = Database(db_path).ingest_csv(data, table_id=table_id, cfg=cfg)
    except (ParseError, SchemaError) as e:
        _fail(EXIT_INPUT, str(e), as_json)
    except OSError as e:
        _fail(EXIT_IO, str(e), as_json)
    if as_json:
        click.echo(json.dumps(result.as_dict()))
    else:
        click.echo(
            f"ingested {result.table_id}: {result.rows} rows, "
            f"{result.refs_generated} refs generated, {result.refs_retained} retained"
        )


def _resolve_table(db: Database, table_id: str | None, as_json: bool) -> str:
    tables = db.list_tables()
    if table_id:
        if table_id not in tables:
            _fail(EXIT_INPUT, f"unknown table {table_id!r}; have {tables}", as_json)
        return table_id
    if len(tables) == 1:
        return tables[0]
    _fail(EXIT_INPUT, f"--table required; store has {len(tables)} tables", as_json)


@main.command()
@_db_option
@click.option("--table", "table_id", default=None)
@click.option("--text", default=None)
@click.option("--sketch", "sketch_path", type=click.Path(), default=None, help="PNG of user strokes.")
@click.option("-k", default=3, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def query(db_path, table_id, text, sketch_path, k, as_json):
    """Ask a question (text and/or sketch) against an ingested table."""
    db = Database(db_path)
    table_id = _resolve_table(db, table_id, as_json)
    try:
        table = db.load_table(table_id)
        store = db.load_store(table_id)
    except (StoreError, FormatError) as e:
        _fail(EXIT_IO, str(e), as_json)
    attachment = None
    if sketch_path:
        try:
            with open(sketch_path, "rb") as fh:
                attachment = normalize_sketch(ChartImage.from_png(fh.read()))
        except OSError as e:
            _fail(EXIT_IO, str(e), as_json)
    vocab = load_default_vocabulary()
    try:
        plan = qe.decompose(text, table, vocab, attachment=attachment, k=k)
        result = qe.execute(plan, store, table, vocab)
        answer = qe.fill(plan, result, vocab, table)
    except UnsupportedQueryError as e:
        _fail(EXIT_UNSUPPORTED, str(e), as_json)
    except (VariableError, PeriodError, VistrError) as e:
        _fail(EXIT_INPUT, str(e), as_json)
    if as_json:
        click.echo(
            json.dumps(
                {
                    "answer": answer,
                    "plan": plan.to_json_dict(),
                    "matches": [m.as_dict() for m in result.matches],
                    "verdict": result.verdict,
                }
            )
        )
    else:
        click.echo(answer)
        for m in result.matches:
            click.echo(f"  {m.variable}  {m.start_ts} .. {m.end_ts}  sim={m.similarity:.3f}  {m.trend_category or ''}")


@main.command()
@_db_option
@click.option("--table", "table_id", default=None)
@click.option("--var", "variable", required=True)
@click.option("--json", "as_json", is_flag=True)
def patterns(db_path, table_id, variable, as_json):
    """Show trend-pattern groups for a variable, most populated first."""
    db = Database(db_path)
    table_id = _resolve_table(db, table_id, as_json)
    try:
        store = db.load_store(table_id)
        groups = qe.pattern_groups(store, variable, load_default_vocabulary())
    except VariableError as e:
        _fail(EXIT_INPUT, str(e), as_json)
    except (StoreError, FormatError) as e:
        _fail(EXIT_IO, str(e), as_json)
    if as_json:
        click.echo(json.dumps({"variable": variable, "groups": groups}))
    else:
        for g in groups:
            click.echo(f"{g['category']:>20}  {g['count']:>5}")


@main.command(name="gen-synth")
@click.option("--kind", type=click.Choice(["random-walk", "planted-patterns"]), default="random-walk")
@click.option("--rows", default=1000, show_default=True)
@click.option("--vars", "n_vars", default=1, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--secondary-shape", default="valley", show_default=True,
              type=click.Choice(["valley", "two-valley", "peak"]))
@click.option("--out", "out_path", required=True, type=click.Path())
def gen_synth(kind, rows, n_vars, seed, secondary_shape, out_path):
    """Generate a deterministic synthetic CSV (and manifest for planted kinds)."""
    if rows < 2:
        _fail(EXIT_INPUT, "--rows must be >= 2", False)
    if kind == "random-walk":
        data = random_walk_csv(rows, n_vars=n_vars, seed=seed)
    else:
        data, manifest = planted_patterns_csv(rows=rows, seed=seed, secondary_shape=secondary_shape)
        with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1)
    try:
        with open(out_path, "wb") as fh:
            fh.write(data)
    except OSError as e:
        _fail(EXIT_IO, str(e), False)
    click.echo(f"wrote {out_path}")


def _write_report_figure(path, title, xs, series: dict, xlabel, ylabel):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, ys in series.items():
        ax.plot(xs, ys, marker="o", label=name)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


@main.command()
@click.option("--n", default=50_000, show_default=True)
@click.option("--dim", default=512, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "ann"]), default="exact", show_default=True)
@click.option("-k", default=3, show_default=True)
@click.option("--queries", default=100, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--report", "report_dir", type=click.Path(), default=None,
              help="Write latency CSV and figures here.")
@click.option("--json", "as_json", is_flag=True)
def bench(n, dim, mode, k, queries, seed, report_dir, as_json):
    """Benchmark retrieval latency (and recall@1 for approximate mode)."""
    if n == 0:
        click.echo(json.dumps({"n": 0}) if as_json else "empty benchmark")
        return
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((n, dim)).astype(np.float32)
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    refs = [
        VisualizationReference(
            ref_id=f"b{i:07d}", table_id="bench", variable="v", start_idx=i, end_idx=i + 1,
            start_ts="2020-01-01", end_ts="2020-01-02", chart_type="line", embedding=vecs[i],
        )
        for i in range(n)
    ]
    idx = VectorIndex(dim=dim, mode="exact" if mode == "exact" else "approximate")
    t0 = time.time()
    idx.insert(refs)
    build_s = time.time() - t0
    qs = rng.standard_normal((queries, dim)).astype(np.float32)
    qs /= np.linalg.norm(qs, axis=1, keepdims=True)
    lat = []
    hits = 0
    exact_top = None
    if mode == "ann":
        exact_top = [
            refs[int(np.argmax(vecs @ q))].ref_id for q in qs
        ]
    results = []
    for qi, q in enumerate(qs):
        t0 = time.time()
        r = idx.query(q, k=k)
        lat.append(time.time() - t0)
        results.append(r)
        if exact_top is not None and r and r[0][0] == exact_top[qi]:
            hits += 1
    lat_ms = np.array(lat) * 1000.0
    report = {
        "n": n, "dim": dim, "mode": mode, "k": k, "queries": queries,
        "build_seconds": round(build_s, 3),
        "p50_ms": float(np.percentile(lat_ms, 50)),
        "p95_ms": float(np.percentile(lat_ms, 95)),
    }
    if mode == "ann":
        report["recall_at_1"] = hits / queries
    if report_dir:
        os.makedirs(report_dir, exist_ok=True)
        with open(os.path.join(report_dir, "latency.csv"), "w", encoding="utf-8") as fh:
            fh.write("query,latency_ms\n")
            for i, ms in enumerate(lat_ms):
                fh.write(f"{i},{ms:.4f}\n")
        order = np.sort(lat_ms)
        _write_report_figure(
            os.path.join(report_dir, "latency.png"),
            f"{mode} retrieval latency (n={n})",
            np.linspace(0, 100, len(order)),
            {"latency": order},
            "percentile", "ms",
        )
    if as_json:
        click.echo(json.dumps(report))
    else:
        for key, val in report.items():
            click.echo(f"{key}: {val}")


@main.command(name="align-train")
@click.option("--data", "data_dir", type=click.Path(), required=True,
              help="Triplet directory; created with --gen if missing.")
@click.option("--gen", "generate", is_flag=True, help="Generate the rotated-embedding task first.")
@click.option("--seed", default=42, show_default=True)
@click.option("--per-category", default=30, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--lr", default=0.5, show_default=True)
@click.option("--alpha", default=2.0, show_default=True)
@click.option("--out", "head_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def align_train(data_dir, generate, seed, per_category, epochs, lr, alpha, head_path, as_json):
    """Train the linear projection head on a triplet directory."""
    if generate:
        save_task(data_dir, *make_rotated_task(seed=seed, per_category=per_category))
    try:
        charts, texts, sketches, labels = load_task(data_dir)
    except FormatError as e:
        _fail(EXIT_IO, str(e), as_json)
    train, _ = split_batches(charts, texts, sketches, labels)
    cfg = AlignConfig(margin_alpha=alpha, epochs=epochs, learning_rate=lr)
    head, trace = train_projection(train, cfg)
    head.save(head_path)
    out = {"epochs": epochs, "first_loss": trace[0], "final_loss": trace[-1], "head": head_path}
    if as_json:
        click.echo(json.dumps(out))
    else:
        click.echo(f"trained {epochs} epochs: loss {trace[0]:.4f} -> {trace[-1]:.4f}; saved {head_path}")


@main.command(name="align-eval")
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--head", "head_path", type=click.Path(), required=True)
@click.option("--report", "report_dir", type=click.Path(), default=None,
              help="Write per-category CSV and a figure here.")
@click.option("--json", "as_json", is_flag=True)
def align_eval(data_dir, head_path, report_dir, as_json):
    """Evaluate retrieval Acc / WF of a trained head on the test split."""
    try:
        charts, texts, sketches, labels = load_task(data_dir)
        head = ProjectionHead.load(head_path)
    except FormatError as e:
        _fail(EXIT_IO, str(e), as_json)
    _, test = split_batches(charts, texts, sketches, labels)
    metrics = evaluate_retrieval(test, head)
    if report_dir:
        os.makedirs(report_dir, exist_ok=True)
        with open(os.path.join(report_dir, "per_category.csv"), "w", encoding="utf-8") as fh:
            fh.write("category,precision,recall,f1\n")
            for name, p, r, f1 in metrics.per_category:
                fh.write(f"{name},{p:.4f},{r:.4f},{f1:.4f}\n")
        names = [c[0] for c in metrics.per_category]
        _write_report_figure(
            os.path.join(report_dir, "f1.png"),
            "per-category F1",
            range(len(names)),
            {"f1": [c[3] for c in metrics.per_category]},
            "category index", "F1",
        )
    if as_json:
        click.echo(json.dumps(metrics.as_dict()))
    else:
        click.echo(f"acc={metrics.acc:.4f} wf={metrics.wf:.4f}")


@main.command()
@_db_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--cors", default="", help="Comma-separated allowed origins.")
def serve(db_path, host, port, cors):
    """Run the HTTP JSON service."""
    import uvicorn

    from .api import ApiConfig, create_app

    os.makedirs(db_path, exist_ok=True)
    origins = [o.strip() for o in cors.split(",") if o.strip()]
    app = create_app(ApiConfig(store_root=db_path, cors_origins=origins))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
