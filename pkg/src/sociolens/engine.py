"""Dataset engine: the batch pipeline and the read snapshots it publishes.

One Engine owns one dataset. Mutations (ingest, recluster, relayout, label
renames) run the documented pipeline and commit through the store; every
successful mutation publishes a new immutable read snapshot, so queries that
began before a commit keep seeing the exact pre-commit state.

The same pipeline code replays journal events for the determinism audit:
re-running every recorded event with its recorded seeds from a blank state
must reproduce the committed graph, partition, and layout bit-for-bit.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .analytics import AnalyticsView, Corpus
from .community import LabelRegistry, Partition, louvain, match_communities
from .graph import EdgeKind, InteractionGraph, build_edges, merge_batch
from .layout import LayoutParams, LayoutState, init_layout, run, viewport_positions
from .model import (
    Batch,
    ParseReport,
    Platform,
    Post,
    RecordError,
    User,
    parse_record,
    parse_timestamp,
    users_from_posts,
)
from .store import (
    DatasetStore,
    DuplicateBatchError,
    LoadedState,
    SnapshotArtifacts,
    UnknownDatasetError,
)
from .topics import TopicModel, fit_topics

__all__ = [
    "Engine",
    "EngineConfig",
    "EngineSnapshot",
    "IngestReport",
    "AuditReport",
    "PipelineError",
]

_MAX_REJECT_EXAMPLES = 25


class PipelineError(RuntimeError):
    pass


@dataclass(slots=True, frozen=True)
class EngineConfig:
    threshold: float = 0.5  # community label-matching overlap threshold
    layout: LayoutParams = field(default_factory=LayoutParams)
    k_topics: Optional[int] = None  # topics are fitted only when set
    network_edge_cap: int = 50_000
    lock_timeout: float = 0.5


@dataclass(slots=True, frozen=True)
class IngestReport:
    batch_id: int
    version: int
    source: str
    digest: str
    seed: int
    accepted: int
    rejected: int
    reject_reasons: dict[str, int]
    reject_examples: tuple[str, ...]
    edge_tallies: dict[str, int]
    node_count: int
    edge_count: int
    community_count: int
    modularity: float
    duration_s: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(slots=True, frozen=True)
class AuditReport:
    identical: bool
    events_replayed: int
    batches_replayed: int
    differences: tuple[str, ...]

    def verdict(self) -> str:
        return "replay identical" if self.identical else "replay diverged"


@dataclass(slots=True)
class EngineSnapshot:
    """Immutable published read view of one committed dataset version."""

    version: int
    platform: Platform
    corpus: Corpus
    graph: InteractionGraph
    layout: Optional[LayoutState]
    partition: Optional[Partition]
    community_registry: LabelRegistry
    topic_registry: LabelRegistry
    topic_model: Optional[TopicModel]
    batches: tuple[Batch, ...]
    _view: Optional[AnalyticsView] = None

    def analytics(self) -> AnalyticsView:
        if self._view is None:
            self._view = AnalyticsView(
                corpus=self.corpus,
                partition=self.partition,
                community_registry=self.community_registry,
                topic_model=self.topic_model,
                topic_registry=self.topic_registry,
            )
        return self._view

    def network_payload(self, edge_cap: int) -> dict:
        positions = viewport_positions(self.layout) if self.layout is not None else {}
        assignment = self.partition.assignment if self.partition is not None else {}
        labels = self.partition.labels if self.partition is not None else {}
        nodes = []
        for user in sorted(self.graph.nodes):
            x, y = positions.get(user, (0.0, 0.0))
            comm = assignment.get(user)
            label_id = labels.get(comm) if comm is not None else None
            name = (
                self.community_registry.get(label_id).name if label_id is not None else None
            )
            nodes.append(
                {
                    "id": user,
                    "x": x,
                    "y": y,
                    "community": label_id,
                    "community_name": name,
                    "degree": self.graph.degree(user),
                }
            )
        ranked = sorted(self.graph.edges(), key=lambda e: (-e[2], e[0], e[1]))
        edges = [
            {"source": src, "target": dst, "weight": w} for src, dst, w in ranked[:edge_cap]
        ]
        return {
            "version": self.version,
            "node_count": len(nodes),
            "edge_count": self.graph.edge_count(),
            "edges_returned": len(edges),
            "nodes": nodes,
            "edges": edges,
        }

    def topic_map(self) -> list[dict]:
        if self.topic_model is None:
            return []
        model = self.topic_model
        rows = []
        for pid in sorted(model.assignment):
            t = model.assignment[pid]
            x, y = model.projection.get(pid, (0.0, 0.0))
            label_id = model.labels.get(t)
            name = (
                self.topic_registry.get(label_id).name if label_id is not None else f"topic-{t}"
            )
            rows.append(
                {
                    "post_id": pid,
                    "x": x,
                    "y": y,
                    "topic_index": t,
                    "topic_label": name,
                }
            )
        return rows


def _copy_registry(reg: LabelRegistry) -> LabelRegistry:
    return LabelRegistry.from_dict(reg.to_dict())


def _copy_partition(part: Optional[Partition]) -> Optional[Partition]:
    if part is None:
        return None
    return Partition(
        assignment=dict(part.assignment),
        labels=dict(part.labels),
        modularity=part.modularity,
    )


class Engine:
    """Single-dataset pipeline driver. Thread-safe: mutations serialize on a
    lock; readers grab the current published snapshot without locking."""

    def __init__(
        self,
        platform: Platform,
        store: Optional[DatasetStore] = None,
        config: Optional[EngineConfig] = None,
    ):
        self.platform = platform
        self.kind = EdgeKind.for_platform(platform)
        self.store = store
        self.config = config or EngineConfig()

        self.posts: list[Post] = []
        self.users: dict[str, User] = {}
        self.graph = InteractionGraph(self.kind)
        self.layout: Optional[LayoutState] = None
        self.partition: Optional[Partition] = None
        self.community_registry = LabelRegistry("C", "Community")
        self.topic_registry = LabelRegistry("T", "Topic")
        self.topic_model: Optional[TopicModel] = None
        self.batches: list[Batch] = []
        self.version = 0

        self._mutate = threading.Lock()
        self._published: Optional[EngineSnapshot] = None
        self._publish()

    # -- construction --------------------------------------------------------

    @classmethod
    def create(
        cls,
        root: Path | str,
        dataset_id: str,
        platform: Platform,
        config: Optional[EngineConfig] = None,
    ) -> "Engine":
        store = DatasetStore(root, dataset_id)
        store.create(platform)
        return cls(platform, store=store, config=config)

    @classmethod
    def open(
        cls, root: Path | str, dataset_id: str, config: Optional[EngineConfig] = None
    ) -> "Engine":
        store = DatasetStore(root, dataset_id)
        if not store.exists():
            raise UnknownDatasetError(dataset_id)
        loaded = store.load()
        engine = cls(loaded.platform, store=store, config=config)
        engine._adopt(loaded)
        return engine

    def _adopt(self, loaded: LoadedState) -> None:
        self.posts = list(loaded.posts)
        self.users = users_from_posts(self.posts, {})
        self.graph = loaded.graph
        self.layout = loaded.layout
        self.partition = loaded.partition
        self.community_registry = loaded.community_registry
        self.topic_registry = loaded.topic_registry
        self.topic_model = loaded.topic_model
        self.version = loaded.version
        self.batches = [
            Batch(
                batch_id=ev["batch_id"],
                source_path=ev.get("source", ""),
                post_count=ev.get("accepted", 0),
                ingested_at=parse_timestamp(ev["committed_at"]),
            )
            for ev in loaded.events
            if ev.get("event") == "batch"
        ]
        self._publish()

    # -- publishing ------------------------------------------------------------

    def _publish(self, corpus_changed: bool = True) -> EngineSnapshot:
        if corpus_changed or self._published is None:
            corpus = Corpus(self.posts, self.platform)
        else:
            corpus = self._published.corpus
        snap = EngineSnapshot(
            version=self.version,
            platform=self.platform,
            corpus=corpus,
            graph=self.graph,
            layout=self.layout,
            partition=_copy_partition(self.partition),
            community_registry=_copy_registry(self.community_registry),
            topic_registry=_copy_registry(self.topic_registry),
            topic_model=self.topic_model,
            batches=tuple(self.batches),
        )
        self._published = snap
        return snap

    def snapshot(self) -> EngineSnapshot:
        return self._published

    # -- ingest -----------------------------------------------------------------

    def ingest_path(
        self,
        path: Path | str,
        seed: Optional[int] = None,
        progress: Optional[Callable[[str], None]] = None,
    ) -> IngestReport:
        path = Path(path)
        data = path.read_bytes()
        return self.ingest_bytes(data, source=path.name, seed=seed, progress=progress)

    def ingest_bytes(
        self,
        data: bytes,
        source: str,
        seed: Optional[int] = None,
        progress: Optional[Callable[[str], None]] = None,
    ) -> IngestReport:
        started = time.monotonic()
        notify = progress or (lambda stage: None)
        digest = hashlib.sha256(data).hexdigest()
        if seed is None:
            seed = secrets.randbelow(2**31)

        with self._mutate:
            if self.store is not None:
                self.store.acquire_writer(self.config.lock_timeout)
            try:
                prior = self.store.find_digest(digest) if self.store is not None else None
                if prior is not None:
                    raise DuplicateBatchError(digest, prior["batch_id"])

                notify("parsing")
                accepted, report = self._parse_batch(data.decode("utf-8", errors="replace"))
                batch_id = (self.batches[-1].batch_id + 1) if self.batches else 1

                notify("building graph")
                outcome = self._apply_batch(
                    accepted,
                    seed=seed,
                    threshold=self.config.threshold,
                    layout_params=self.config.layout,
                    batch_id=batch_id,
                    notify=notify,
                )

                notify("committing")
                event = {
                    "event": "batch",
                    "batch_id": batch_id,
                    "source": source,
                    "digest": digest,
                    "seed": seed,
                    "threshold": self.config.threshold,
                    "layout_params": asdict(self.config.layout),
                    "accepted": report.accepted,
                    "rejected": report.rejected,
                    "edge_tallies": dict(sorted(outcome["tallies"].items())),
                }
                self._commit(event, new_posts=accepted, outcome=outcome)
                self.batches.append(
                    Batch(
                        batch_id=batch_id,
                        source_path=source,
                        post_count=report.accepted,
                        ingested_at=datetime.now(timezone.utc),
                    )
                )
                notify("indexing")
                self._publish()
            finally:
                if self.store is not None:
                    self.store.release_writer()

        reasons = Counter(err.reason for err in report.rejects)
        return IngestReport(
            batch_id=batch_id,
            version=self.version,
            source=source,
            digest=digest,
            seed=seed,
            accepted=report.accepted,
            rejected=report.rejected,
            reject_reasons=dict(sorted(reasons.items())),
            reject_examples=tuple(
                str(err) for err in report.rejects[:_MAX_REJECT_EXAMPLES]
            ),
            edge_tallies=dict(sorted(outcome["tallies"].items())),
            node_count=self.graph.node_count(),
            edge_count=self.graph.edge_count(),
            community_count=self.partition.community_count() if self.partition else 0,
            modularity=self.partition.modularity if self.partition else 0.0,
            duration_s=time.monotonic() - started,
        )

    def _parse_batch(self, text: str) -> tuple[list[Post], ParseReport]:
        """Record-level validation plus dataset-level checks (platform, id reuse)."""
        report = ParseReport()
        accepted: list[Post] = []
        seen = {p.id for p in self.posts}
        for line_no, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                report.rejects.append(RecordError(line_no, "empty line"))
                continue
            try:
                post = parse_record(stripped, line_no)
            except RecordError as exc:
                report.rejects.append(exc)
                continue
            if post.platform is not self.platform:
                report.rejects.append(
                    RecordError(
                        line_no,
                        f"platform {post.platform.value} record in a {self.platform.value} dataset",
                    )
                )
            elif post.id in seen:
                report.rejects.append(RecordError(line_no, f"duplicate post id {post.id!r}"))
            else:
                seen.add(post.id)
                accepted.append(post)
        report.accepted = len(accepted)
        return accepted, report

    def _apply_batch(
        self,
        accepted: Sequence[Post],
        *,
        seed: int,
        threshold: float,
        layout_params: LayoutParams,
        batch_id: int,
        notify: Callable[[str], None] = lambda stage: None,
    ) -> dict:
        """The §-free heart of ingestion; also the unit the audit replays."""
        users_from_posts(accepted, self.users)

        post_authors = {p.id: p.author_id for p in self.posts}
        for p in accepted:
            post_authors[p.id] = p.author_id
        history = self.posts if self.platform is Platform.YOUTUBE else ()
        result = build_edges(
            self.platform, accepted, self.users, post_authors=post_authors, history=history
        )

        graph = self.graph.copy()
        merge_batch(graph, result, self.kind)

        notify("clustering")
        fresh = louvain(graph, seed)
        partition = match_communities(
            self.partition,
            fresh.assignment,
            self.community_registry,
            threshold,
            batch_id,
            graph=graph,
        )

        notify("layout")
        layout = init_layout(graph, self.layout, seed, layout_params)
        run(graph, layout)

        return {
            "graph": graph,
            "partition": partition,
            "layout": layout,
            "tallies": dict(result.tallies),
        }

    def _commit(self, event: dict, new_posts: Sequence[Post], outcome: dict) -> None:
        graph = outcome.get("graph", self.graph)
        partition = outcome.get("partition", self.partition)
        layout = outcome.get("layout", self.layout)
        topic_model = outcome.get("topic_model", self.topic_model)

        if self.store is not None:
            artifacts = SnapshotArtifacts(
                graph=graph,
                layout=layout,
                partition=partition,
                community_registry=self.community_registry,
                topic_registry=self.topic_registry,
                topic_model=topic_model,
                new_posts=tuple(new_posts),
            )
            self.store.commit(event, artifacts)

        self.posts.extend(new_posts)
        self.graph = graph
        self.partition = partition
        self.layout = layout
        self.topic_model = topic_model
        self.version += 1

    # -- recluster / relayout / labels -------------------------------------------

    def recluster(
        self,
        seed: Optional[int] = None,
        threshold: Optional[float] = None,
        k_topics: Optional[int] = None,
    ) -> dict:
        """Re-run community detection (and topic fitting when k is known)."""
        if seed is None:
            seed = secrets.randbelow(2**31)
        threshold = self.config.threshold if threshold is None else threshold
        effective_k = k_topics or self.config.k_topics or (
            self.topic_model.k if self.topic_model is not None else None
        )
        batch_id = self.batches[-1].batch_id if self.batches else 0

        with self._mutate:
            if self.store is not None:
                self.store.acquire_writer(self.config.lock_timeout)
            try:
                outcome = self._apply_recluster(
                    seed=seed, threshold=threshold, k_topics=effective_k, batch_id=batch_id
                )
                event = {
                    "event": "recluster",
                    "seed": seed,
                    "threshold": threshold,
                    "k_topics": effective_k,
                    "batch_id": batch_id,
                }
                self._commit(event, new_posts=(), outcome=outcome)
                self._publish(corpus_changed=False)
            finally:
                if self.store is not None:
                    self.store.release_writer()

        return {
            "seed": seed,
            "threshold": threshold,
            "k_topics": effective_k,
            "community_count": self.partition.community_count() if self.partition else 0,
            "modularity": self.partition.modularity if self.partition else 0.0,
            "version": self.version,
        }

    def _apply_recluster(
        self, *, seed: int, threshold: float, k_topics: Optional[int], batch_id: int
    ) -> dict:
        fresh = louvain(self.graph, seed)
        partition = match_communities(
            self.partition,
            fresh.assignment,
            self.community_registry,
            threshold,
            batch_id,
            graph=self.graph,
        )
        outcome: dict = {"partition": partition}

        if k_topics is not None:
            embedded = {p.id: p.embedding for p in self.posts if p.embedding is not None}
            if len(embedded) < k_topics:
                raise PipelineError(
                    f"topic clustering needs at least {k_topics} embedded posts, "
                    f"have {len(embedded)}"
                )
            model = fit_topics(embedded, k_topics, seed)
            for t in range(model.k):
                model.labels[t] = self.topic_registry.create(batch_id).label_id
            outcome["topic_model"] = model
        return outcome

    def relayout(
        self, iterations: Optional[int] = None, seed: Optional[int] = None
    ) -> dict:
        """Re-run the force simulation from current positions."""
        if seed is None:
            seed = secrets.randbelow(2**31)
        params = self.config.layout
        if iterations is None:
            iterations = params.iterations

        with self._mutate:
            if self.store is not None:
                self.store.acquire_writer(self.config.lock_timeout)
            try:
                outcome = self._apply_relayout(seed=seed, iterations=iterations, params=params)
                event = {
                    "event": "relayout",
                    "seed": seed,
                    "iterations": iterations,
                    "layout_params": asdict(params),
                }
                self._commit(event, new_posts=(), outcome=outcome)
                self._publish(corpus_changed=False)
            finally:
                if self.store is not None:
                    self.store.release_writer()
        return {"seed": seed, "iterations": iterations, "version": self.version}

    def _apply_relayout(self, *, seed: int, iterations: int, params: LayoutParams) -> dict:
        layout = init_layout(self.graph, self.layout, seed, params)
        run(self.graph, layout, iterations)
        return {"layout": layout}

    def rename_label(self, kind: str, ref: str, name: str) -> dict:
        if kind not in ("community", "topic"):
            raise ValueError(f"label kind must be community or topic, got {kind!r}")
        registry = self.community_registry if kind == "community" else self.topic_registry
        label_id = registry.resolve(ref)
        if label_id is None:
            raise KeyError(f"unknown {kind} label: {ref!r}")

        with self._mutate:
            if self.store is not None:
                self.store.acquire_writer(self.config.lock_timeout)
            try:
                registry.rename(label_id, name)
                if self.store is not None:
                    self.store.append_event(
                        {"event": "label", "kind": kind, "label_id": label_id, "name": name}
                    )
                self.version += 1
                self._publish(corpus_changed=False)
            finally:
                if self.store is not None:
                    self.store.release_writer()
        return {"kind": kind, "label_id": label_id, "name": name, "version": self.version}

    # -- audit ---------------------------------------------------------------------

    def audit(self) -> AuditReport:
        """Replay the journal from scratch and compare with committed state."""
        if self.store is None:
            raise PipelineError("audit requires a persistent dataset")
        loaded = self.store.load()
        events = loaded.events

        replayed = Engine(self.platform, store=None, config=self.config)
        batches = 0
        for ev in events:
            kind = ev.get("event")
            if kind == "batch":
                batches += 1
                snap = self.store.path / ev["snapshot"]
                posts: list[Post] = []
                posts_file = snap / "posts.jsonl"
                if posts_file.is_file():
                    with open(posts_file, encoding="utf-8") as fh:
                        for i, line in enumerate(fh, start=1):
                            if line.strip():
                                posts.append(parse_record(line, i))
                outcome = replayed._apply_batch(
                    posts,
                    seed=ev["seed"],
                    threshold=ev["threshold"],
                    layout_params=LayoutParams(**ev["layout_params"]),
                    batch_id=ev["batch_id"],
                )
                replayed._commit({}, new_posts=posts, outcome=outcome)
                replayed.batches.append(
                    Batch(
                        batch_id=ev["batch_id"],
                        source_path=ev.get("source", ""),
                        post_count=len(posts),
                        ingested_at=parse_timestamp(ev["committed_at"]),
                    )
                )
            elif kind == "recluster":
                outcome = replayed._apply_recluster(
                    seed=ev["seed"],
                    threshold=ev["threshold"],
                    k_topics=ev.get("k_topics"),
                    batch_id=ev.get("batch_id", 0),
                )
                replayed._commit({}, new_posts=(), outcome=outcome)
            elif kind == "relayout":
                outcome = replayed._apply_relayout(
                    seed=ev["seed"],
                    iterations=ev["iterations"],
                    params=LayoutParams(**ev["layout_params"]),
                )
                replayed._commit({}, new_posts=(), outcome=outcome)
            elif kind == "label":
                registry = (
                    replayed.community_registry
                    if ev["kind"] == "community"
                    else replayed.topic_registry
                )
                registry.rename(ev["label_id"], ev["name"])

        differences = _diff_states(loaded, replayed)
        return AuditReport(
            identical=not differences,
            events_replayed=len(events),
            batches_replayed=batches,
            differences=tuple(differences),
        )


def _diff_states(loaded: LoadedState, replayed: Engine) -> list[str]:
    diffs: list[str] = []

    if loaded.graph != replayed.graph:
        diffs.append("graph: committed and replayed edge sets differ")

    lp, rp = loaded.partition, replayed.partition
    if (lp is None) != (rp is None):
        diffs.append("partition: present in one state only")
    elif lp is not None and rp is not None:
        if lp.assignment != rp.assignment:
            diffs.append("partition: assignments differ")
        if lp.labels != rp.labels:
            diffs.append("partition: community labels differ")
        if lp.modularity != rp.modularity:
            diffs.append(
                f"partition: modularity {lp.modularity!r} != {rp.modularity!r}"
            )

    ll, rl = loaded.layout, replayed.layout
    if (ll is None) != (rl is None):
        diffs.append("layout: present in one state only")
    elif ll is not None and rl is not None:
        if ll.ids != rl.ids:
            diffs.append("layout: node sets differ")
        elif not np.array_equal(ll.pos, rl.pos):
            worst = float(np.abs(ll.pos - rl.pos).max())
            diffs.append(f"layout: positions differ (max abs delta {worst!r})")

    if loaded.community_registry.to_dict() != replayed.community_registry.to_dict():
        diffs.append("labels: community registry differs")
    if loaded.topic_registry.to_dict() != replayed.topic_registry.to_dict():
        diffs.append("labels: topic registry differs")

    lt, rt = loaded.topic_model, replayed.topic_model
    if (lt is None) != (rt is None):
        diffs.append("topics: model present in one state only")
    elif lt is not None and rt is not None:
        if (
            lt.k != rt.k
            or lt.assignment != rt.assignment
            or lt.labels != rt.labels
            or not np.array_equal(lt.centroids, rt.centroids)
            or lt.projection != rt.projection
        ):
            diffs.append("topics: model differs")

    return diffs
