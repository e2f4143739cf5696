"""Durable per-dataset state: append-only journal plus snapshot directories.

Directory layout (one directory per dataset under a common root):

    <root>/<dataset_id>/
        dataset.json          dataset identity + format version
        journal.jsonl         append-only event log, one JSON object per line
        lock                  writer lock file
        snapshots/000001/     one directory per state-bearing event
            meta.json         event kind, sequence number, format version
            posts.jsonl       batch events only: that batch's accepted posts
            graph.tsv         cumulative directed edges  src  dst  weight
            layout.tsv        user  x  y  (floats as repr, so they round-trip)
            layout.json       layout seed/speed/params
            partition.tsv     user  community-index
            partition.json    community-index -> label id, modularity, seed
            registries.json   community + topic label registries
            topics.json       topic model (absent until topics are fitted)

Everything is UTF-8 text, diffable, no binaries. The journal line is the
commit point: a snapshot directory is staged under a temporary name, renamed
into place, and only then is the event appended — a crash in between leaves
an orphan directory that load ignores. Duplicate batches are rejected by
content digest. One writer per dataset, enforced with a file lock; readers
always see the last committed journal state.
"""

from __future__ import annotations

import json
import os
import shutil
import uuid
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from filelock import FileLock, Timeout

from .community import LabelRegistry, Partition
from .graph import EdgeKind, InteractionGraph
from .layout import LayoutParams, LayoutState
from .model import Platform, Post, format_timestamp, parse_record, serialize_record
from .topics import TopicModel

__all__ = [
    "FORMAT_VERSION",
    "DatasetStore",
    "SnapshotArtifacts",
    "LoadedState",
    "DuplicateBatchError",
    "DatasetLockedError",
    "UnknownDatasetError",
    "StoreError",
]

FORMAT_VERSION = 1
_SNAP_DIR = "snapshots"


class StoreError(RuntimeError):
    pass


class UnknownDatasetError(StoreError):
    def __init__(self, dataset_id: str):
        super().__init__(f"unknown dataset: {dataset_id!r}")
        self.dataset_id = dataset_id


class DuplicateBatchError(StoreError):
    def __init__(self, digest: str, batch_id: int):
        super().__init__(f"already ingested (batch {batch_id}, digest {digest[:12]})")
        self.digest = digest
        self.batch_id = batch_id


class DatasetLockedError(StoreError):
    def __init__(self, dataset_id: str):
        super().__init__(
            f"dataset {dataset_id!r} is locked by another writer; concurrent writes are rejected"
        )


@dataclass(slots=True)
class SnapshotArtifacts:
    """Current state to persist with one state-bearing journal event."""

    graph: InteractionGraph
    layout: Optional[LayoutState]
    partition: Optional[Partition]
    community_registry: LabelRegistry
    topic_registry: LabelRegistry
    topic_model: Optional[TopicModel]
    new_posts: Sequence[Post] = ()  # batch events only: the delta


@dataclass(slots=True)
class LoadedState:
    platform: Platform
    posts: list[Post]
    graph: InteractionGraph
    layout: Optional[LayoutState]
    partition: Optional[Partition]
    community_registry: LabelRegistry
    topic_registry: LabelRegistry
    topic_model: Optional[TopicModel]
    events: list[dict]
    version: int  # journal event count
    batch_count: int


def _fsync_write(path: Path, data: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=1) + "\n"


class DatasetStore:
    """Files and journal for one dataset. The engine layers semantics on top."""

    def __init__(self, root: Path | str, dataset_id: str):
        self.root = Path(root)
        self.dataset_id = dataset_id
        self.path = self.root / dataset_id
        self._lock: Optional[FileLock] = None

    # -- lifecycle -----------------------------------------------------------

    def exists(self) -> bool:
        return (self.path / "dataset.json").is_file()

    def create(self, platform: Platform) -> None:
        if self.exists():
            raise StoreError(f"dataset {self.dataset_id!r} already exists")
        self.path.mkdir(parents=True, exist_ok=True)
        (self.path / _SNAP_DIR).mkdir(exist_ok=True)
        _fsync_write(
            self.path / "dataset.json",
            _dump_json(
                {
                    "format_version": FORMAT_VERSION,
                    "dataset_id": self.dataset_id,
                    "platform": platform.value,
                    "created_at": format_timestamp(datetime.now(timezone.utc)),
                }
            ),
        )
        (self.path / "journal.jsonl").touch()

    def meta(self) -> dict:
        if not self.exists():
            raise UnknownDatasetError(self.dataset_id)
        return json.loads((self.path / "dataset.json").read_text(encoding="utf-8"))

    def platform(self) -> Platform:
        return Platform(self.meta()["platform"])

    # -- writer lock ----------------------------------------------------------

    def acquire_writer(self, timeout: float = 0.5) -> None:
        """Take the single-writer lock; a second writer is rejected, not queued."""
        if self._lock is None:
            self._lock = FileLock(str(self.path / "lock"))
        try:
            self._lock.acquire(timeout=timeout)
        except Timeout:
            raise DatasetLockedError(self.dataset_id) from None

    def release_writer(self) -> None:
        if self._lock is not None and self._lock.is_locked:
            self._lock.release()

    # -- journal ---------------------------------------------------------------

    def events(self) -> list[dict]:
        """All committed events. A torn trailing line (mid-append crash) is ignored."""
        if not self.exists():
            raise UnknownDatasetError(self.dataset_id)
        raw = (self.path / "journal.jsonl").read_text(encoding="utf-8")
        lines = raw.splitlines()
        events: list[dict] = []
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                if i == len(lines) - 1:
                    break  # torn append from a crash; pre-commit state stands
                raise StoreError(f"corrupt journal line {i + 1}")
        return events

    def find_digest(self, digest: str) -> Optional[dict]:
        for ev in self.events():
            if ev.get("event") == "batch" and ev.get("digest") == digest:
                return ev
        return None

    def append_event(self, event: dict) -> dict:
        """Append a non-state-bearing event (labels). Caller holds the writer lock."""
        return self._append(event, snapshot_rel=None)

    def commit(self, event: dict, artifacts: SnapshotArtifacts) -> dict:
        """Stage a snapshot, rename it into place, then append the journal line.

        The append is the commit point; the caller holds the writer lock.
        """
        seq = len(self.events()) + 1
        snap_rel = f"{_SNAP_DIR}/{seq:06d}"
        staging = self.path / _SNAP_DIR / f".tmp-{uuid.uuid4().hex}"
        staging.mkdir(parents=True)
        try:
            self._write_snapshot(staging, seq, event, artifacts)
            os.replace(staging, self.path / snap_rel)
        except BaseException:
            shutil.rmtree(staging, ignore_errors=True)
            raise
        return self._append(event, snapshot_rel=snap_rel, seq=seq)

    def _append(self, event: dict, snapshot_rel: Optional[str], seq: Optional[int] = None) -> dict:
        if seq is None:
            seq = len(self.events()) + 1
        full = dict(event)
        full["seq"] = seq
        full["snapshot"] = snapshot_rel
        full["committed_at"] = format_timestamp(datetime.now(timezone.utc))
        line = json.dumps(full, ensure_ascii=False, sort_keys=True)
        with open(self.path / "journal.jsonl", "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return full

    # -- snapshot writing --------------------------------------------------------

    def _write_snapshot(
        self, into: Path, seq: int, event: dict, art: SnapshotArtifacts
    ) -> None:
        _fsync_write(
            into / "meta.json",
            _dump_json(
                {
                    "format_version": FORMAT_VERSION,
                    "seq": seq,
                    "event": event.get("event"),
                    "batch_id": event.get("batch_id"),
                }
            ),
        )
        if art.new_posts:
            lines = [serialize_record(p) for p in art.new_posts]
            _fsync_write(into / "posts.jsonl", "\n".join(lines) + "\n")

        rows = [f"# sociolens graph v{FORMAT_VERSION} kind={art.graph.kind.value}"]
        for src, dst, w in sorted(art.graph.edges()):
            rows.append(f"{src}\t{dst}\t{w}")
        isolated = sorted(art.graph.nodes - {s for s, _, _ in art.graph.edges()}
                          - {d for _, d, _ in art.graph.edges()})
        for node in isolated:
            rows.append(f"{node}\t\t0")  # degree-0 node, no edge
        _fsync_write(into / "graph.tsv", "\n".join(rows) + "\n")

        if art.layout is not None:
            lrows = [f"# sociolens layout v{FORMAT_VERSION}"]
            for i, user in enumerate(art.layout.ids):
                x, y = float(art.layout.pos[i, 0]), float(art.layout.pos[i, 1])
                lrows.append(f"{user}\t{x!r}\t{y!r}")
            _fsync_write(into / "layout.tsv", "\n".join(lrows) + "\n")
            _fsync_write(
                into / "layout.json",
                _dump_json(
                    {
                        "format_version": FORMAT_VERSION,
                        "rng_seed": art.layout.rng_seed,
                        "step_count": art.layout.step_count,
                        "global_speed": art.layout.global_speed,
                        "params": asdict(art.layout.params),
                    }
                ),
            )

        if art.partition is not None:
            prows = [f"# sociolens partition v{FORMAT_VERSION}"]
            for user in sorted(art.partition.assignment):
                prows.append(f"{user}\t{art.partition.assignment[user]}")
            _fsync_write(into / "partition.tsv", "\n".join(prows) + "\n")
            _fsync_write(
                into / "partition.json",
                _dump_json(
                    {
                        "format_version": FORMAT_VERSION,
                        "labels": {str(c): lid for c, lid in sorted(art.partition.labels.items())},
                        "modularity": art.partition.modularity,
                    }
                ),
            )

        _fsync_write(
            into / "registries.json",
            _dump_json(
                {
                    "format_version": FORMAT_VERSION,
                    "community": art.community_registry.to_dict(),
                    "topic": art.topic_registry.to_dict(),
                }
            ),
        )

        if art.topic_model is not None:
            tm = art.topic_model
            _fsync_write(
                into / "topics.json",
                _dump_json(
                    {
                        "format_version": FORMAT_VERSION,
                        "k": tm.k,
                        "centroids": [[float(v) for v in row] for row in tm.centroids],
                        "assignment": {pid: t for pid, t in sorted(tm.assignment.items())},
                        "labels": {str(t): lid for t, lid in sorted(tm.labels.items())},
                        "projection": {
                            pid: [xy[0], xy[1]] for pid, xy in sorted(tm.projection.items())
                        },
                    }
                ),
            )

    # -- loading -------------------------------------------------------------------

    def load(self) -> LoadedState:
        """Reconstruct committed state bit-exactly from the journal + snapshots."""
        platform = self.platform()
        events = self.events()

        posts: list[Post] = []
        batch_count = 0
        last_state_event: Optional[dict] = None
        for ev in events:
            if ev.get("event") == "batch":
                batch_count += 1
                snap = self.path / ev["snapshot"]
                posts_file = snap / "posts.jsonl"
                if posts_file.is_file():
                    with open(posts_file, encoding="utf-8") as fh:
                        for i, line in enumerate(fh, start=1):
                            if line.strip():
                                posts.append(parse_record(line, i))
            if ev.get("snapshot"):
                last_state_event = ev

        kind = EdgeKind.for_platform(platform)
        graph = InteractionGraph(kind)
        layout: Optional[LayoutState] = None
        partition: Optional[Partition] = None
        community_registry = LabelRegistry("C", "Community")
        topic_registry = LabelRegistry("T", "Topic")
        topic_model: Optional[TopicModel] = None

        if last_state_event is not None:
            snap = self.path / last_state_event["snapshot"]
            graph = self._read_graph(snap / "graph.tsv", kind)
            layout = self._read_layout(snap)
            partition = self._read_partition(snap)
            regs = json.loads((snap / "registries.json").read_text(encoding="utf-8"))
            community_registry = LabelRegistry.from_dict(regs["community"])
            topic_registry = LabelRegistry.from_dict(regs["topic"])
            topic_model = self._read_topics(snap)

            # label renames after the last snapshot live only in the journal
            for ev in events:
                if ev.get("event") == "label" and ev["seq"] > last_state_event["seq"]:
                    reg = community_registry if ev["kind"] == "community" else topic_registry
                    reg.rename(ev["label_id"], ev["name"])
        else:
            for ev in events:
                if ev.get("event") == "label":
                    reg = community_registry if ev["kind"] == "community" else topic_registry
                    reg.rename(ev["label_id"], ev["name"])

        return LoadedState(
            platform=platform,
            posts=posts,
            graph=graph,
            layout=layout,
            partition=partition,
            community_registry=community_registry,
            topic_registry=topic_registry,
            topic_model=topic_model,
            events=events,
            version=len(events),
            batch_count=batch_count,
        )

    @staticmethod
    def _read_graph(path: Path, kind: EdgeKind) -> InteractionGraph:
        graph = InteractionGraph(kind)
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                src, dst, w = line.split("\t")
                if dst == "" and w == "0":
                    graph.add_node(src)
                else:
                    graph.add_edge(src, dst, int(w))
        return graph

    def _read_layout(self, snap: Path) -> Optional[LayoutState]:
        tsv = snap / "layout.tsv"
        if not tsv.is_file():
            return None
        ids: list[str] = []
        coords: list[tuple[float, float]] = []
        with open(tsv, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                user, x, y = line.split("\t")
                ids.append(user)
                coords.append((float(x), float(y)))
        meta = json.loads((snap / "layout.json").read_text(encoding="utf-8"))
        n = len(ids)
        pos = np.array(coords, dtype=np.float64).reshape(n, 2)
        return LayoutState(
            ids=tuple(ids),
            pos=pos,
            prev_forces=np.zeros((n, 2), dtype=np.float64),
            global_speed=float(meta["global_speed"]),
            params=LayoutParams(**meta["params"]),
            rng_seed=int(meta["rng_seed"]),
            step_count=int(meta["step_count"]),
        )

    @staticmethod
    def _read_partition(snap: Path) -> Optional[Partition]:
        tsv = snap / "partition.tsv"
        if not tsv.is_file():
            return None
        assignment: dict[str, int] = {}
        with open(tsv, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                user, comm = line.split("\t")
                assignment[user] = int(comm)
        meta = json.loads((snap / "partition.json").read_text(encoding="utf-8"))
        labels = {int(c): lid for c, lid in meta["labels"].items()}
        return Partition(
            assignment=assignment, labels=labels, modularity=float(meta["modularity"])
        )

    @staticmethod
    def _read_topics(snap: Path) -> Optional[TopicModel]:
        path = snap / "topics.json"
        if not path.is_file():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return TopicModel(
            k=int(data["k"]),
            centroids=np.array(data["centroids"], dtype=np.float64),
            assignment={pid: int(t) for pid, t in data["assignment"].items()},
            labels={int(t): lid for t, lid in data["labels"].items()},
            projection={pid: (xy[0], xy[1]) for pid, xy in data["projection"].items()},
        )

    # -- misc ----------------------------------------------------------------------

    @staticmethod
    def list_datasets(root: Path | str) -> list[str]:
        root = Path(root)
        if not root.is_dir():
            return []
        return sorted(
            p.name for p in root.iterdir() if (p / "dataset.json").is_file()
        )
