"""Filtered aggregations: timeline, distributions, top content, wordclouds,
and the topics-per-community cross-tab.

A Corpus is an immutable columnar snapshot of a post set: field codes in
numpy arrays, plus CSR token/url/hashtag tables with an inverted token
posting list. An AnalyticsView binds one Corpus to the partition, label
registries, and topic model current at snapshot time, so every query reads
one consistent state no matter what ingestion does meanwhile.

Filter semantics are strictly conjunctive. Keywords use case-insensitive
substring-on-token matching (each keyword must hit at least one token of the
post; AND across keywords).
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

import numpy as np

from .community import LabelRegistry, Partition
from .model import FilterSpec, Platform, Post, Sentiment, format_timestamp
from .text import stopwords_for, tokenize
from .topics import TopicModel

__all__ = [
    "Corpus",
    "AnalyticsView",
    "TimeSeries",
    "Categorical",
    "RankedList",
    "Matrix",
    "CapabilityAbsent",
    "UnknownLabelError",
    "Granularity",
]

_SENTIMENTS = tuple(Sentiment)
_SENT_CODE = {s: i for i, s in enumerate(_SENTIMENTS)}

Granularity = str  # "hour" | "day" | "week"
_BUCKET_SECONDS = {"hour": 3600, "day": 86400, "week": 7 * 86400}
# Epoch day 0 is a Thursday; shifting by 3 days aligns week buckets to Mondays.
_WEEK_SHIFT = 3 * 86400


class UnknownLabelError(KeyError):
    def __init__(self, kind: str, ref: str):
        super().__init__(f"unknown {kind} label: {ref!r}")
        self.kind = kind
        self.ref = ref


@dataclass(slots=True, frozen=True)
class TimeSeries:
    granularity: str
    buckets: tuple[str, ...]  # bucket start timestamps, RFC-3339 UTC
    counts: tuple[int, ...]
    by_sentiment: Optional[dict[str, tuple[int, ...]]] = None


@dataclass(slots=True, frozen=True)
class Categorical:
    field: str
    entries: tuple[tuple[str, int], ...]  # (key, count), count desc then key asc


@dataclass(slots=True, frozen=True)
class RankedList:
    kind: str
    entries: tuple[tuple[str, int], ...]  # (item, score), score desc then item asc


@dataclass(slots=True, frozen=True)
class Matrix:
    mode: str  # "counts" | "proportions"
    row_ids: tuple[str, ...]  # community label ids
    row_names: tuple[str, ...]
    col_ids: tuple[str, ...]  # topic label ids
    col_names: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]


@dataclass(slots=True, frozen=True)
class CapabilityAbsent:
    capability: str
    reason: str


class _Vocab:
    """Interns strings to dense int codes; code order is first-appearance."""

    __slots__ = ("index", "items")

    def __init__(self):
        self.index: dict[str, int] = {}
        self.items: list[str] = []

    def code(self, value: str) -> int:
        got = self.index.get(value)
        if got is None:
            got = len(self.items)
            self.index[value] = got
            self.items.append(value)
        return got


class _CsrColumn:
    """Per-post variable-length sets of vocab codes, in CSR form."""

    __slots__ = ("vocab", "offsets", "codes", "rows", "postings", "posting_bounds")

    def __init__(self, per_post_values: Iterable[Iterable[str]], n_posts: int):
        self.vocab = _Vocab()
        offsets = np.zeros(n_posts + 1, dtype=np.int64)
        flat = array("q")
        for row, values in enumerate(per_post_values):
            for v in sorted(set(values)):
                flat.append(self.vocab.code(v))
            offsets[row + 1] = len(flat)
        self.offsets = offsets
        self.codes = np.frombuffer(flat, dtype=np.int64) if len(flat) else np.zeros(0, np.int64)
        counts = np.diff(offsets)
        self.rows = np.repeat(np.arange(n_posts, dtype=np.int64), counts)
        # Inverted index: posting p lists the rows containing code p, grouped
        # by sorting the flat code column once.
        order = np.argsort(self.codes, kind="stable")
        self.postings = self.rows[order]
        self.posting_bounds = np.searchsorted(
            self.codes[order], np.arange(len(self.vocab.items) + 1)
        )

    def rows_with_code(self, code: int) -> np.ndarray:
        lo, hi = self.posting_bounds[code], self.posting_bounds[code + 1]
        return self.postings[lo:hi]

    def rows_with_any(self, codes: Sequence[int]) -> np.ndarray:
        if not len(codes):
            return np.zeros(0, dtype=np.int64)
        parts = [self.rows_with_code(c) for c in codes]
        return np.unique(np.concatenate(parts))


class Corpus:
    """Columnar snapshot of a post set, sorted by post id."""

    def __init__(self, posts: Sequence[Post], platform: Platform):
        self.platform = platform
        self.posts: tuple[Post, ...] = tuple(sorted(posts, key=lambda p: p.id))
        n = len(self.posts)
        self.ids: list[str] = [p.id for p in self.posts]
        self._row_of: dict[str, int] = {pid: i for i, pid in enumerate(self.ids)}

        self.created_ts = np.array(
            [int(p.created_at.timestamp()) for p in self.posts], dtype=np.int64
        )
        self.engagement = np.array([p.engagement for p in self.posts], dtype=np.int64)
        self.sentiment_codes = np.array(
            [_SENT_CODE[p.sentiment] for p in self.posts], dtype=np.int8
        )

        self.languages = _Vocab()
        self.language_codes = np.array(
            [self.languages.code(p.language) for p in self.posts], dtype=np.int32
        )
        self.countries = _Vocab()
        self.country_codes = np.array(
            [self.countries.code(p.country) if p.country else -1 for p in self.posts],
            dtype=np.int32,
        )
        self.authors = _Vocab()
        self.author_codes = np.array(
            [self.authors.code(p.author_id) for p in self.posts], dtype=np.int64
        )

        self.tokens = _CsrColumn((tokenize(p.text) for p in self.posts), n)
        self.urls = _CsrColumn((p.urls for p in self.posts), n)
        self.hashtags = _CsrColumn((p.hashtags for p in self.posts), n)

    def __len__(self) -> int:
        return len(self.posts)

    def row_of(self, post_id: str) -> Optional[int]:
        return self._row_of.get(post_id)

    def post(self, post_id: str) -> Post:
        return self.posts[self._row_of[post_id]]


def _week_bucket_starts(ts: np.ndarray) -> np.ndarray:
    return ((ts + _WEEK_SHIFT) // (7 * 86400)) * (7 * 86400) - _WEEK_SHIFT


def _bucket_starts(ts: np.ndarray, granularity: str) -> np.ndarray:
    if granularity == "week":
        return _week_bucket_starts(ts)
    size = _BUCKET_SECONDS[granularity]
    return (ts // size) * size


class AnalyticsView:
    """Read-only query surface over one corpus snapshot.

    partition/topic_model may be absent (fresh dataset); community and topic
    filters then fail with an instructive error.
    """

    def __init__(
        self,
        corpus: Corpus,
        partition: Optional[Partition] = None,
        community_registry: Optional[LabelRegistry] = None,
        topic_model: Optional[TopicModel] = None,
        topic_registry: Optional[LabelRegistry] = None,
    ):
        self.corpus = corpus
        self.partition = partition
        self.community_registry = community_registry
        self.topic_model = topic_model
        self.topic_registry = topic_registry
        self._topic_rows: Optional[np.ndarray] = None  # row -> topic index or -1

    # -- selection ---------------------------------------------------------

    def _topic_row_codes(self) -> np.ndarray:
        if self._topic_rows is None:
            codes = np.full(len(self.corpus), -1, dtype=np.int64)
            if self.topic_model is not None:
                for pid, t in self.topic_model.assignment.items():
                    row = self.corpus.row_of(pid)
                    if row is not None:
                        codes[row] = t
            self._topic_rows = codes
        return self._topic_rows

    def _community_member_mask(self, ref: str) -> np.ndarray:
        if self.partition is None or self.community_registry is None:
            raise UnknownLabelError("community", ref)
        label_id = self.community_registry.resolve(ref)
        if label_id is None:
            raise UnknownLabelError("community", ref)
        members = self.partition.members_of_label(label_id)
        member_codes = [
            self.corpus.authors.index[u] for u in members if u in self.corpus.authors.index
        ]
        mask = np.zeros(len(self.corpus), dtype=bool)
        if member_codes:
            mask = np.isin(self.corpus.author_codes, np.asarray(member_codes, dtype=np.int64))
        return mask

    def _topic_mask(self, ref: str) -> np.ndarray:
        if self.topic_model is None or self.topic_registry is None:
            raise UnknownLabelError("topic", ref)
        label_id = self.topic_registry.resolve(ref)
        if label_id is None:
            raise UnknownLabelError("topic", ref)
        indices = [t for t, lid in self.topic_model.labels.items() if lid == label_id]
        if not indices:
            raise UnknownLabelError("topic", ref)
        return np.isin(self._topic_row_codes(), np.asarray(indices, dtype=np.int64))

    def _keyword_mask(self, keyword: str) -> np.ndarray:
        needle = keyword.casefold()
        tokens = self.corpus.tokens
        matched = [code for code, tok in enumerate(tokens.vocab.items) if needle in tok]
        mask = np.zeros(len(self.corpus), dtype=bool)
        rows = tokens.rows_with_any(matched)
        mask[rows] = True
        return mask

    def _select_rows(self, spec: FilterSpec) -> np.ndarray:
        corpus = self.corpus
        mask = np.ones(len(corpus), dtype=bool)
        if spec.language is not None:
            code = corpus.languages.index.get(spec.language.lower(), -1)
            mask &= corpus.language_codes == code
        if spec.sentiment is not None:
            mask &= corpus.sentiment_codes == _SENT_CODE[spec.sentiment]
        if spec.date_from is not None:
            mask &= corpus.created_ts >= int(spec.date_from.timestamp())
        if spec.date_to is not None:
            mask &= corpus.created_ts <= int(spec.date_to.timestamp())
        for kw in spec.keywords:
            mask &= self._keyword_mask(kw)
        if spec.community is not None:
            mask &= self._community_member_mask(spec.community)
        if spec.topic is not None:
            mask &= self._topic_mask(spec.topic)
        return np.flatnonzero(mask)

    def select(self, spec: FilterSpec) -> set[str]:
        """Ids of exactly the posts satisfying every present filter field."""
        rows = self._select_rows(spec)
        ids = self.corpus.ids
        return {ids[i] for i in rows}

    # -- aggregations ------------------------------------------------------

    def timeline(
        self,
        spec: FilterSpec,
        granularity: Granularity = "day",
        split_by_sentiment: bool = False,
    ) -> TimeSeries:
        if granularity not in _BUCKET_SECONDS:
            raise ValueError(f"granularity must be one of hour/day/week, got {granularity!r}")
        rows = self._select_rows(spec)
        if rows.size == 0:
            return TimeSeries(granularity, (), (), {} if split_by_sentiment else None)
        size = _BUCKET_SECONDS[granularity]
        starts = _bucket_starts(self.corpus.created_ts[rows], granularity)
        first = int(starts.min())
        indices = (starts - first) // size
        nbuckets = int(indices.max()) + 1
        counts = np.bincount(indices, minlength=nbuckets)
        bucket_labels = tuple(
            format_timestamp(datetime.fromtimestamp(first + i * size, tz=timezone.utc))
            for i in range(nbuckets)
        )
        by_sentiment = None
        if split_by_sentiment:
            sent = self.corpus.sentiment_codes[rows]
            by_sentiment = {
                s.value: tuple(
                    int(c) for c in np.bincount(indices[sent == code], minlength=nbuckets)
                )
                for code, s in enumerate(_SENTIMENTS)
            }
        return TimeSeries(
            granularity,
            bucket_labels,
            tuple(int(c) for c in counts),
            by_sentiment,
        )

    def distribution(self, spec: FilterSpec, field_name: str) -> Categorical:
        if field_name not in ("language", "sentiment"):
            raise ValueError(f"distribution field must be language or sentiment, got {field_name!r}")
        rows = self._select_rows(spec)
        if field_name == "language":
            codes = self.corpus.language_codes[rows]
            names = self.corpus.languages.items
        else:
            codes = self.corpus.sentiment_codes[rows]
            names = [s.value for s in _SENTIMENTS]
        counts = np.bincount(codes, minlength=len(names)) if rows.size else np.zeros(len(names), np.int64)
        entries = [(names[i], int(counts[i])) for i in range(len(names)) if counts[i] > 0]
        entries.sort(key=lambda kv: (-kv[1], kv[0]))
        return Categorical(field_name, tuple(entries))

    def geo_distribution(self, spec: FilterSpec):
        if self.corpus.platform is Platform.YOUTUBE:
            return CapabilityAbsent(
                capability="geo_distribution",
                reason="geolocation is not available for youtube datasets",
            )
        rows = self._select_rows(spec)
        codes = self.corpus.country_codes[rows]
        codes = codes[codes >= 0]
        names = self.corpus.countries.items
        counts = np.bincount(codes, minlength=len(names)) if codes.size else np.zeros(len(names), np.int64)
        entries = [(names[i], int(counts[i])) for i in range(len(names)) if counts[i] > 0]
        entries.sort(key=lambda kv: (-kv[1], kv[0]))
        return Categorical("country", tuple(entries))

    def top_content(self, spec: FilterSpec, kind: str, k: int) -> RankedList:
        if kind not in ("posts", "urls", "hashtags"):
            raise ValueError(f"top_content kind must be posts/urls/hashtags, got {kind!r}")
        if k < 0:
            raise ValueError("k must be non-negative")
        rows = self._select_rows(spec)
        if k == 0 or rows.size == 0:
            return RankedList(kind, ())
        if kind == "posts":
            ids = self.corpus.ids
            scored = sorted(
                ((int(self.corpus.engagement[i]), ids[i]) for i in rows),
                key=lambda t: (-t[0], t[1]),
            )
            return RankedList(kind, tuple((pid, score) for score, pid in scored[:k]))
        column = self.corpus.urls if kind == "urls" else self.corpus.hashtags
        counts = self._document_frequencies(column, rows)
        order = sorted(
            (i for i in range(len(column.vocab.items)) if counts[i] > 0),
            key=lambda i: (-counts[i], column.vocab.items[i]),
        )
        return RankedList(
            kind, tuple((column.vocab.items[i], int(counts[i])) for i in order[:k])
        )

    @staticmethod
    def _document_frequencies(column: _CsrColumn, rows: np.ndarray) -> np.ndarray:
        """Per-code count of selected posts containing the code."""
        nvocab = len(column.vocab.items)
        if nvocab == 0 or rows.size == 0:
            return np.zeros(nvocab, dtype=np.int64)
        keep = np.zeros(len(column.offsets) - 1, dtype=bool)
        keep[rows] = True
        selected_codes = column.codes[keep[column.rows]]
        return np.bincount(selected_codes, minlength=nvocab)

    def wordcloud_terms(self, spec: FilterSpec, k: int) -> RankedList:
        if k < 0:
            raise ValueError("k must be non-negative")
        rows = self._select_rows(spec)
        tokens = self.corpus.tokens
        nvocab = len(tokens.vocab.items)
        if k == 0 or rows.size == 0 or nvocab == 0:
            return RankedList("terms", ())
        counts = np.zeros(nvocab, dtype=np.int64)
        lang_codes = self.corpus.language_codes[rows]
        for code in np.unique(lang_codes):
            lang_rows = rows[lang_codes == code]
            freq = self._document_frequencies(tokens, lang_rows)
            stop = stopwords_for(self.corpus.languages.items[code])
            if stop:
                stop_ids = [
                    tokens.vocab.index[w] for w in stop if w in tokens.vocab.index
                ]
                freq[stop_ids] = 0
            counts += freq
        order = sorted(
            (i for i in range(nvocab) if counts[i] > 0),
            key=lambda i: (-counts[i], tokens.vocab.items[i]),
        )
        return RankedList(
            "terms", tuple((tokens.vocab.items[i], int(counts[i])) for i in order[:k])
        )

    def topics_per_community(self, spec: FilterSpec, mode: str = "counts") -> Matrix:
        if mode not in ("counts", "proportions"):
            raise ValueError(f"mode must be counts or proportions, got {mode!r}")
        if self.topic_model is None or self.topic_registry is None:
            raise ValueError("no topic model available; run topic clustering first")
        if self.partition is None or self.community_registry is None:
            raise ValueError("no community partition available; run clustering first")

        rows = self._select_rows(spec)
        topic_codes = self._topic_row_codes()[rows]
        author_codes = self.corpus.author_codes[rows]

        # community index per author code (-1 when the author has no community)
        comm_of_author = np.full(len(self.corpus.authors.items), -1, dtype=np.int64)
        for user, comm in self.partition.assignment.items():
            code = self.corpus.authors.index.get(user)
            if code is not None:
                comm_of_author[code] = comm
        comm_codes = comm_of_author[author_codes]

        comm_indices = sorted(
            self.partition.labels,
            key=lambda c: self.community_registry.seq_of(self.partition.labels[c]),
        )
        comm_pos = {c: i for i, c in enumerate(comm_indices)}
        ntopics = self.topic_model.k

        cells = np.zeros((len(comm_indices), ntopics), dtype=np.float64)
        ok = (comm_codes >= 0) & (topic_codes >= 0)
        for c, t in zip(comm_codes[ok], topic_codes[ok]):
            pos = comm_pos.get(int(c))
            if pos is not None:
                cells[pos, int(t)] += 1.0

        if mode == "proportions":
            totals = cells.sum(axis=1, keepdims=True)
            nz = totals[:, 0] > 0
            cells[nz] /= totals[nz]

        row_ids = tuple(self.partition.labels[c] for c in comm_indices)
        row_names = tuple(self.community_registry.get(lid).name for lid in row_ids)
        col_ids = tuple(
            self.topic_model.labels.get(t, f"topic-{t}") for t in range(ntopics)
        )
        col_names = tuple(
            self.topic_registry.get(lid).name if lid in self.topic_registry.labels else lid
            for lid in col_ids
        )
        return Matrix(
            mode=mode,
            row_ids=row_ids,
            row_names=row_names,
            col_ids=col_ids,
            col_names=col_names,
            values=tuple(tuple(float(v) for v in row) for row in cells),
        )
