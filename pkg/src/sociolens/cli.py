"""Operator commands: init, ingest, recluster, layout, label, export, serve, audit.

Every verb drives the same engine pathway the HTTP service uses, and respects
the per-dataset writer lock, so a CLI ingest racing a service ingest on one
dataset is rejected rather than queued. Exit code 0 means the verb succeeded.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click

from .config import Config, load_config
from .engine import Engine, PipelineError
from .layout import LayoutParams
from .model import Platform
from .store import StoreError, UnknownDatasetError

_CONFIG_HELP = "YAML config file (same schema as the service)."


def _load(ctx_config: Optional[str]) -> Config:
    return load_config(ctx_config) if ctx_config else load_config()


def _with_overrides(
    cfg: Config,
    threshold: Optional[float] = None,
    iterations: Optional[int] = None,
    k_topics: Optional[int] = None,
) -> Config:
    if threshold is not None:
        cfg = replace(cfg, threshold=threshold)
    if iterations is not None:
        layout = LayoutParams(
            **{
                **{f: getattr(cfg.layout, f) for f in cfg.layout.__dataclass_fields__},
                "iterations": iterations,
            }
        )
        cfg = replace(cfg, layout=layout)
    if k_topics is not None:
        cfg = replace(cfg, k_topics=k_topics)
    return cfg


def _open_engine(cfg: Config, dataset: str, root: Optional[str]) -> Engine:
    base = root or cfg.dataset_root
    try:
        return Engine.open(base, dataset, config=cfg.engine_config())
    except UnknownDatasetError as exc:
        raise click.ClickException(str(exc))


@click.group()
def main():
    """Social interaction analytics: ingest batches, cluster, lay out, query."""


@main.command()
@click.option("--dataset", required=True, help="Dataset id to create.")
@click.option(
    "--platform",
    required=True,
    type=click.Choice([p.value for p in Platform]),
    help="Source platform for every batch of this dataset.",
)
@click.option("--root", default=None, help="Datasets directory (default from config).")
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
def init(dataset: str, platform: str, root: Optional[str], config_path: Optional[str]):
    """Create an empty dataset directory."""
    cfg = _load(config_path)
    base = root or cfg.dataset_root
    try:
        Engine.create(base, dataset, Platform(platform), config=cfg.engine_config())
    except StoreError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"initialized {platform} dataset {dataset!r} under {base}")


@main.command()
@click.option("--dataset", required=True)
@click.option(
    "--input",
    "input_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Ingestion file, one record per line.",
)
@click.option("--seed", type=int, default=None, help="Pipeline seed (recorded either way).")
@click.option("--threshold", type=float, default=None, help="Label-matching overlap threshold.")
@click.option("--iterations", type=int, default=None, help="Layout iterations for this batch.")
@click.option("--root", default=None)
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
def ingest(
    dataset: str,
    input_path: str,
    seed: Optional[int],
    threshold: Optional[float],
    iterations: Optional[int],
    root: Optional[str],
    config_path: Optional[str],
):
    """Run the full batch pipeline on one input file and commit it."""
    cfg = _with_overrides(_load(config_path), threshold=threshold, iterations=iterations)
    engine = _open_engine(cfg, dataset, root)
    try:
        report = engine.ingest_path(input_path, seed=seed)
    except StoreError as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"batch {report.batch_id}: accepted {report.accepted}, rejected {report.rejected} "
        f"(seed {report.seed}, {report.duration_s:.2f}s)"
    )
    for reason, count in report.reject_reasons.items():
        click.echo(f"  reject [{count}x] {reason}")
    click.echo(
        f"graph: {report.node_count} users, {report.edge_count} edges; "
        f"{report.community_count} communities (Q={report.modularity:.4f})"
    )


@main.command()
@click.option("--dataset", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--k-topics", type=int, default=None, help="Also fit this many topics.")
@click.option("--root", default=None)
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
def recluster(
    dataset: str,
    seed: Optional[int],
    threshold: Optional[float],
    k_topics: Optional[int],
    root: Optional[str],
    config_path: Optional[str],
):
    """Re-run community detection (and topic clustering when k is known)."""
    cfg = _load(config_path)
    engine = _open_engine(cfg, dataset, root)
    try:
        detail = engine.recluster(seed=seed, threshold=threshold, k_topics=k_topics)
    except (StoreError, PipelineError) as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"reclustered with seed {detail['seed']}: {detail['community_count']} communities "
        f"(Q={detail['modularity']:.4f})"
        + (f", {detail['k_topics']} topics" if detail["k_topics"] else "")
    )


@main.command()
@click.option("--dataset", required=True)
@click.option("--iterations", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--root", default=None)
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
def layout(
    dataset: str,
    iterations: Optional[int],
    seed: Optional[int],
    root: Optional[str],
    config_path: Optional[str],
):
    """Continue the force simulation from current positions."""
    cfg = _load(config_path)
    engine = _open_engine(cfg, dataset, root)
    try:
        detail = engine.relayout(iterations=iterations, seed=seed)
    except StoreError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"layout advanced {detail['iterations']} iterations (seed {detail['seed']})")


@main.command()
@click.option("--dataset", required=True)
@click.argument("kind", type=click.Choice(["community", "topic"]))
@click.argument("ref")
@click.argument("name")
@click.option("--root", default=None)
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
def label(
    dataset: str,
    kind: str,
    ref: str,
    name: str,
    root: Optional[str],
    config_path: Optional[str],
):
    """Rename a community or topic label (REF is a label id or current name)."""
    cfg = _load(config_path)
    engine = _open_engine(cfg, dataset, root)
    try:
        detail = engine.rename_label(kind, ref, name)
    except KeyError as exc:
        raise click.ClickException(str(exc.args[0]))
    except StoreError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{kind} {detail['label_id']} renamed to {name!r}")


@main.command()
@click.option("--dataset", required=True)
@click.option(
    "--out",
    required=True,
    type=click.Path(file_okay=False),
    help="Directory for the exported tables.",
)
@click.option("--root", default=None)
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
def export(dataset: str, out: str, root: Optional[str], config_path: Optional[str]):
    """Write snapshot tables (nodes, edges, topic map, communities) for external tools."""
    cfg = _load(config_path)
    engine = _open_engine(cfg, dataset, root)
    snap = engine.snapshot()
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    payload = snap.network_payload(edge_cap=snap.graph.edge_count())
    with open(out_dir / "nodes.tsv", "w", encoding="utf-8") as fh:
        fh.write("id\tx\ty\tcommunity\tcommunity_name\tdegree\n")
        for node in payload["nodes"]:
            fh.write(
                f"{node['id']}\t{node['x']!r}\t{node['y']!r}\t{node['community'] or ''}\t"
                f"{node['community_name'] or ''}\t{node['degree']}\n"
            )
    with open(out_dir / "edges.tsv", "w", encoding="utf-8") as fh:
        fh.write("source\ttarget\tweight\n")
        for edge in payload["edges"]:
            fh.write(f"{edge['source']}\t{edge['target']}\t{edge['weight']}\n")
    with open(out_dir / "topic_map.tsv", "w", encoding="utf-8") as fh:
        fh.write("post_id\tx\ty\ttopic_index\ttopic_label\n")
        for row in snap.topic_map():
            fh.write(
                f"{row['post_id']}\t{row['x']!r}\t{row['y']!r}\t"
                f"{row['topic_index']}\t{row['topic_label']}\n"
            )
    with open(out_dir / "communities.tsv", "w", encoding="utf-8") as fh:
        fh.write("label_id\tname\tsize\n")
        if snap.partition is not None:
            sizes: dict[str, int] = {}
            for user, comm in snap.partition.assignment.items():
                lid = snap.partition.labels.get(comm)
                if lid is not None:
                    sizes[lid] = sizes.get(lid, 0) + 1
            for lid in sorted(sizes, key=snap.community_registry.seq_of):
                name = snap.community_registry.get(lid).name
                fh.write(f"{lid}\t{name}\t{sizes[lid]}\n")
    summary = {
        "dataset": dataset,
        "version": snap.version,
        "platform": snap.platform.value,
        "posts": len(snap.corpus),
        "nodes": payload["node_count"],
        "edges": payload["edge_count"],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n", encoding="utf-8")
    click.echo(f"exported {payload['node_count']} nodes / {payload['edge_count']} edges to {out_dir}")


@main.command()
@click.option("--dataset", required=True)
@click.option("--root", default=None)
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
def audit(dataset: str, root: Optional[str], config_path: Optional[str]):
    """Replay the journal with recorded seeds and verify bit-exact state."""
    cfg = _load(config_path)
    engine = _open_engine(cfg, dataset, root)
    report = engine.audit()
    click.echo(
        f"{report.verdict()} ({report.events_replayed} events, "
        f"{report.batches_replayed} batches)"
    )
    for diff in report.differences:
        click.echo(f"  - {diff}", err=True)
    if not report.identical:
        sys.exit(1)


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--config", "config_path", default=None, help=_CONFIG_HELP)
@click.option("--root", default=None)
def serve(
    host: Optional[str], port: Optional[int], config_path: Optional[str], root: Optional[str]
):
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    cfg = _load(config_path)
    if root is not None:
        cfg = replace(cfg, dataset_root=root)
    uvicorn.run(
        create_app(cfg),
        host=host or cfg.host,
        port=port or cfg.port,
        log_level="info",
    )


if __name__ == "__main__":
    main()
