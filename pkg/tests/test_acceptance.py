"""The package's headline guarantees, one test per promise.

Every test here pins a user-visible behavior at an explicit tolerance and
checks it against something that cannot share a bug with the implementation:
enumerated ground truth, closed-form physics, exact rational arithmetic,
linear-scan reference aggregations, or bookkeeping carried alongside the
synthetic corpora while they are generated. `pytest -v` prints one pass/fail
line per promise; the two long-running checks carry the `slow` marker but
still run by default.
"""

from __future__ import annotations

import time
from collections import Counter, defaultdict
from datetime import timedelta
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from sociolens.analytics import AnalyticsView, Corpus
from sociolens.cli import main as cli_main
from sociolens.community import LabelRegistry, louvain, match_communities
from sociolens.engine import Engine
from sociolens.graph import (
    EdgeKind,
    InteractionGraph,
    build_twitter_edges,
    build_youtube_edges,
    merge_batch,
)
from sociolens.layout import LayoutParams, init_layout, run
from sociolens.model import FilterSpec, Platform, Sentiment, parse_lines, users_from_posts
from sociolens.quadtree import repulsion_barnes_hut
from sociolens.topics import fit_topics

import synth
from oracles import (
    exact_repulsion,
    max_single_move_gain,
    modularity_of_partitions,
    oracle_distribution,
    oracle_geo,
    oracle_select,
    oracle_timeline,
    oracle_tokenize,
    oracle_top,
    oracle_topics_per_community,
    oracle_wordcloud,
    oracle_youtube_edges,
    set_partitions,
)

DATA_DIR = Path(__file__).parent / "data"


def _parse(records):
    posts, report = parse_lines(synth.records_to_jsonl(records).encode("utf-8").splitlines())
    assert report.rejected == 0, [str(e) for e in report.rejects]
    return posts


# ---------------------------------------------------------------------------
# Reply attribution: exact edge multiset on a 200-thread corpus, under 1 s
# ---------------------------------------------------------------------------


def test_reply_attribution_yields_exact_edge_multiset():
    records, want_edges, want_tallies = synth.youtube_thread_corpus(n_threads=200)
    posts = _parse(records)
    users = users_from_posts(posts)

    started = time.perf_counter()
    result = build_youtube_edges(posts, users)
    elapsed = time.perf_counter() - started

    assert result.edges == want_edges  # multiset equality, zero tolerance
    assert result.tallies == want_tallies
    assert elapsed < 1.0, f"attribution took {elapsed:.3f}s on 200 threads"

    # second independent route: a from-scratch rescan of every thread
    handles = {u.id: u.handle for u in users.values()}
    oracle_edges, oracle_tallies = oracle_youtube_edges(posts, handles)
    assert result.edges == oracle_edges
    assert result.tallies == oracle_tallies


# ---------------------------------------------------------------------------
# Community detection: move-stable and >= 95% of the optimum on every
# connected graph up to 8 nodes; the two-triangle value is exactly 5/14
# ---------------------------------------------------------------------------

_GRAPH_COUNTS_BY_SIZE = [1, 1, 2, 6, 21, 112, 853, 11117]  # n = 1..8


def _pair_equality_masks(parts: np.ndarray) -> np.ndarray:
    """(P, n) partition rows -> (n*n, P) pairwise same-community indicators."""
    n_parts, n = parts.shape
    masks = np.empty((n * n, n_parts), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            masks[i * n + j] = parts[:, i] == parts[:, j]
    return masks


def _optimal_modularity(n: int, edges: list[tuple[int, int]], masks: np.ndarray) -> float:
    """Max Q over every set partition, from the definition (no heuristics)."""
    m = float(len(edges))
    if m == 0:
        return 0.0
    deg = np.zeros(n)
    for u, v in edges:
        deg[u] += 1.0
        deg[v] += 1.0
    intra = np.zeros(masks.shape[1])
    for u, v in edges:
        intra += masks[u * n + v]
    degsq = np.outer(deg, deg).ravel() @ masks
    return float((intra / m - degsq / (4.0 * m * m)).max())


def _fraction_modularity(edges: list[tuple[str, str]], assignment: dict[str, int]) -> Fraction:
    deg: dict[int, Fraction] = defaultdict(Fraction)
    intra: dict[int, Fraction] = defaultdict(Fraction)
    m = Fraction(len(edges))
    for u, v in edges:
        cu, cv = assignment[u], assignment[v]
        deg[cu] += 1
        deg[cv] += 1
        if cu == cv:
            intra[cu] += 1
    return sum((intra[c] / m - (deg[c] / (2 * m)) ** 2 for c in deg), Fraction(0))


@pytest.mark.slow
def test_community_detection_on_all_small_connected_graphs():
    nx = pytest.importorskip("networkx")
    graphs = nx.read_graph6(DATA_DIR / "connected_graphs_upto8.g6")
    by_size = Counter(g.number_of_nodes() for g in graphs)
    assert [by_size[n] for n in range(1, 9)] == _GRAPH_COUNTS_BY_SIZE

    parts_by_n = {n: set_partitions(n) for n in range(1, 9)}
    masks_by_n = {n: _pair_equality_masks(parts_by_n[n]) for n in range(1, 9)}

    worst_ratio = 1.0
    for idx, g in enumerate(graphs):
        n = g.number_of_nodes()
        edges = [(int(u), int(v)) for u, v in g.edges()]

        ig = InteractionGraph(EdgeKind.RETWEET)
        for u in range(n):
            ig.add_node(str(u))
        for u, v in edges:
            ig.add_edge(str(u), str(v), 1.0)
        part = louvain(ig, seed=0)
        membership = [part.assignment[str(u)] for u in range(n)]

        weighted = [(u, v, 1.0) for u, v in edges]
        gain = max_single_move_gain(n, weighted, membership)
        assert gain <= 1e-9, f"graph #{idx} (n={n}): single move still gains {gain}"

        q_got = float(modularity_of_partitions(np.asarray([membership]), n, weighted)[0])
        q_opt = _optimal_modularity(n, edges, masks_by_n[n])
        if q_opt > 1e-12:
            ratio = q_got / q_opt
            worst_ratio = min(worst_ratio, ratio)
            assert q_got + 1e-9 >= 0.95 * q_opt, (
                f"graph #{idx} (n={n}): Q={q_got:.6f} < 95% of optimum {q_opt:.6f}"
            )
        else:
            assert abs(q_got - q_opt) <= 1e-9

    # the canonical worked example: two triangles joined by one bridge
    bridge_edges = [("a", "b"), ("b", "c"), ("a", "c"),
                    ("d", "e"), ("e", "f"), ("d", "f"), ("c", "d")]
    ig = InteractionGraph(EdgeKind.RETWEET)
    for u, v in bridge_edges:
        ig.add_edge(u, v, 1.0)
    part = louvain(ig, seed=0)
    sides = {
        frozenset(u for u, c in part.assignment.items() if c == comm)
        for comm in set(part.assignment.values())
    }
    assert sides == {frozenset("abc"), frozenset("def")}
    assert _fraction_modularity(bridge_edges, part.assignment) == Fraction(5, 14)
    assert abs(part.modularity - 5.0 / 14.0) < 1e-12
    assert worst_ratio >= 0.95


# ---------------------------------------------------------------------------
# Label continuity: growth keeps a label, an above-threshold overlap inherits
# it, and a split leaves it with the dominant fragment while the breakaway
# fragment is minted a fresh one
# ---------------------------------------------------------------------------


def test_community_labels_follow_grow_and_split_dynamics():
    group_a = {f"a{i:02d}" for i in range(10)}
    group_b = {f"b{i:02d}" for i in range(10)}
    newcomers = {f"n{i:02d}" for i in range(5)}
    batch1, batch2, batch3 = synth.fig3_batches()

    engine = Engine(Platform.TWITTER)

    engine.ingest_bytes(batch1.encode("utf-8"), source="b1", seed=1)
    part = engine.partition
    members = {label: part.members_of_label(label) for label in part.labels.values()}
    assert members == {"C1": group_a, "C2": group_b}

    engine.ingest_bytes(batch2.encode("utf-8"), source="b2", seed=2)
    part = engine.partition
    members = {label: part.members_of_label(label) for label in part.labels.values()}
    # the first community grew by five users and keeps its label; no new label
    assert members == {"C1": group_a | newcomers, "C2": group_b}

    engine.ingest_bytes(batch3.encode("utf-8"), source="b3", seed=3)
    part = engine.partition
    members = {label: part.members_of_label(label) for label in part.labels.values()}
    # the grown community split: the fragment holding most of the original
    # membership keeps C1, the breakaway newcomers get a fresh C3
    assert members == {"C1": group_a, "C2": group_b, "C3": newcomers}
    assert engine.community_registry.labels["C3"].name == "Community C3"


# ---------------------------------------------------------------------------
# Layout physics: an isolated edge settles at distance 2.0 with unit
# repulsion and no gravity, within 1000 iterations and 0.1 s
# ---------------------------------------------------------------------------


def test_two_node_layout_reaches_equilibrium_distance():
    graph = InteractionGraph(EdgeKind.RETWEET)
    graph.add_edge("left", "right", 1.0)
    params = LayoutParams(k_repulsion=1.0, k_gravity=0.0, iterations=1000)

    started = time.perf_counter()
    state = init_layout(graph, None, seed=0, params=params)
    iterations = 0
    distance = 0.0
    while iterations < 1000:
        state = run(graph, state, 25)
        iterations += 25
        distance = float(np.linalg.norm(state.pos[0] - state.pos[1]))
        if abs(distance - 2.0) <= 0.01:
            break
    elapsed = time.perf_counter() - started

    assert abs(distance - 2.0) <= 0.01, f"distance {distance:.4f} after {iterations} iterations"
    assert iterations <= 1000
    assert elapsed < 0.1, f"took {elapsed:.3f}s"

    # converged, not passing through: still at equilibrium after more steps
    state = run(graph, state, 100)
    final = float(np.linalg.norm(state.pos[0] - state.pos[1]))
    assert abs(final - 2.0) <= 0.01


# ---------------------------------------------------------------------------
# Approximate repulsion: mean per-node relative error under 5% at theta=0.5
# against the exact O(n^2) field, on 10 random 500-node layouts
# ---------------------------------------------------------------------------


def test_approximate_repulsion_error_stays_under_five_percent():
    for trial in range(10):
        rng = np.random.default_rng(5000 + trial)
        pos = rng.uniform(-300.0, 300.0, size=(500, 2))
        degrees = rng.integers(0, 30, size=500).astype(np.float64)

        exact = exact_repulsion(pos, degrees, 1.0)
        approx = repulsion_barnes_hut(pos, degrees, theta=0.5, k_repulsion=1.0)

        norms = np.linalg.norm(exact, axis=1)
        assert norms.min() > 0.0
        rel = np.linalg.norm(approx - exact, axis=1) / norms
        assert rel.mean() < 0.05, f"trial {trial}: mean relative error {rel.mean():.4f}"


# ---------------------------------------------------------------------------
# Warm starts: newcomers travel, veterans stay put — in every trial
# ---------------------------------------------------------------------------


def _attachment_graph(n_new: int, seed: int, base: InteractionGraph | None = None):
    """Grow a graph by preferentially wiring each new node to two existing ones."""
    rng = np.random.default_rng(seed)
    graph = base.copy() if base is not None else InteractionGraph(EdgeKind.RETWEET)
    existing = sorted(graph.nodes)
    start = len(existing)
    for i in range(start, start + n_new):
        uid = f"w{i:05d}"
        if not existing:
            graph.add_node(uid)
        else:
            for j in rng.integers(0, len(existing), size=2):
                graph.add_edge(uid, existing[int(j)], 1.0)
        existing.append(uid)
    return graph


def test_warm_start_moves_new_nodes_more_than_old():
    base = _attachment_graph(5000, seed=11)
    params = LayoutParams()
    settled = init_layout(base, None, seed=0, params=params)
    settled = run(base, settled, 150)
    old_ids = set(settled.ids)

    for trial in range(20):
        grown = _attachment_graph(500, seed=900 + trial, base=base)
        state = init_layout(grown, settled, seed=30 + trial, params=params)
        row_of = {u: i for i, u in enumerate(state.ids)}
        old_rows = np.array([row_of[u] for u in settled.ids])
        new_rows = np.array([i for i, u in enumerate(state.ids) if u not in old_ids])
        assert len(new_rows) == 500
        init_pos = state.pos.copy()

        out = run(grown, state, 50)
        old_displacement = np.linalg.norm(out.pos[old_rows] - settled.pos, axis=1).mean()
        new_travel = np.linalg.norm(out.pos[new_rows] - init_pos[new_rows], axis=1).mean()
        assert old_displacement < new_travel, (
            f"trial {trial}: veterans moved {old_displacement:.2f}, "
            f"newcomers only {new_travel:.2f}"
        )


# ---------------------------------------------------------------------------
# Aggregations: 1000 random filters on a 10k-post corpus, every panel equal
# to the linear-scan reference, exactly
# ---------------------------------------------------------------------------

_KEYWORD_POOL = (
    "vaccine", "clim", "market", "café", "值得", "zür", "rocket", "zzz-no-such",
    "elect", "(unmatchable)", "neural",
)


def _random_filter(rng, registry, topic_registry):
    kwargs = {}
    if rng.random() < 0.4:
        kwargs["keywords"] = tuple(
            rng.choice(_KEYWORD_POOL) for _ in range(rng.randint(1, 2))
        )
    if rng.random() < 0.3:
        kwargs["language"] = rng.choice(["en", "fr", "de", "es", "und", "xx"])
    if rng.random() < 0.3:
        kwargs["sentiment"] = rng.choice(list(Sentiment))
    if rng.random() < 0.35:
        start = synth._BASE + timedelta(hours=rng.randint(0, 45 * 24))
        kwargs["date_from"] = start
        if rng.random() < 0.7:
            kwargs["date_to"] = start + timedelta(hours=rng.randint(1, 500))
    if rng.random() < 0.25:
        kwargs["community"] = rng.choice(sorted(registry.labels))
    if rng.random() < 0.25:
        kwargs["topic"] = rng.choice(sorted(topic_registry.labels))
    return FilterSpec(**kwargs)


def test_aggregations_match_linear_scan_on_random_filters():
    import random as pyrandom

    posts = _parse(synth.twitter_corpus(n_posts=10_000, seed=29, n_users=350))
    graph = InteractionGraph(EdgeKind.RETWEET)
    merge_batch(graph, build_twitter_edges(posts), EdgeKind.RETWEET)
    raw = louvain(graph, seed=3)
    registry = LabelRegistry("C", "Community")
    partition = match_communities(None, raw.assignment, registry, 0.5, batch_id=1, graph=graph)
    embeddings = {p.id: list(p.embedding) for p in posts if p.embedding is not None}
    model = fit_topics(embeddings, k=3, seed=3)
    topic_registry = LabelRegistry("T", "Topic")
    model.labels = {t: topic_registry.create(1).label_id for t in range(model.k)}
    view = AnalyticsView(
        Corpus(posts, Platform.TWITTER),
        partition=partition,
        community_registry=registry,
        topic_model=model,
        topic_registry=topic_registry,
    )

    tokens_of = {p.id: oracle_tokenize(p.text) for p in posts}
    want_rows = sorted(set(partition.labels.values()), key=registry.seq_of)
    members_of = {lab: partition.members_of_label(lab) for lab in want_rows}
    posts_of_topic = {
        lab: {pid for pid, t in model.assignment.items() if model.labels[t] == lab}
        for lab in sorted(topic_registry.labels)
    }
    author_label = {
        user: partition.labels[comm]
        for user, comm in partition.assignment.items()
        if comm in partition.labels
    }

    rng = pyrandom.Random(1312)
    for i in range(1000):
        spec = _random_filter(rng, registry, topic_registry)
        selected = oracle_select(
            posts,
            spec,
            members_of[registry.resolve(spec.community)] if spec.community else None,
            posts_of_topic[topic_registry.resolve(spec.topic)] if spec.topic else None,
            tokens_of,
        )
        assert view.select(spec) == {p.id for p in selected}

        granularity = ("hour", "day", "week")[i % 3]
        split = bool(i % 2)
        ts = view.timeline(spec, granularity, split_by_sentiment=split)
        labels, counts, by_sent = oracle_timeline(selected, granularity, split)
        assert list(ts.buckets) == labels
        assert list(ts.counts) == counts
        if split:
            got_sent = {k: list(v) for k, v in ts.by_sentiment.items()}
            assert got_sent == by_sent

        field = ("language", "sentiment")[i % 2]
        assert list(view.distribution(spec, field).entries) == oracle_distribution(
            selected, field
        )
        assert list(view.geo_distribution(spec).entries) == oracle_geo(selected)

        kind = ("posts", "urls", "hashtags")[i % 3]
        assert list(view.top_content(spec, kind, 15).entries) == oracle_top(selected, kind, 15)
        assert list(view.wordcloud_terms(spec, 25).entries) == oracle_wordcloud(
            selected, 25, tokens_of
        )

        mode = ("counts", "proportions")[i % 2]
        matrix = view.topics_per_community(spec, mode=mode)
        assert list(matrix.row_ids) == want_rows
        want_values = oracle_topics_per_community(
            selected, author_label, model.assignment, want_rows, model.k, mode
        )
        assert [list(row) for row in matrix.values] == want_values


# ---------------------------------------------------------------------------
# Audit: replaying a three-batch journal reproduces the committed state
# bit-for-bit
# ---------------------------------------------------------------------------


def test_audit_reproduces_three_batch_state_bit_exactly(tmp_path):
    records = synth.twitter_corpus(n_posts=240, seed=31, n_users=40)
    runner = CliRunner()
    result = runner.invoke(
        cli_main,
        ["init", "--dataset", "aud", "--platform", "twitter", "--root", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output

    for b in range(3):
        batch = tmp_path / f"batch{b + 1}.jsonl"
        batch.write_text(
            synth.records_to_jsonl(records[b * 80 : (b + 1) * 80]), encoding="utf-8"
        )
        result = runner.invoke(
            cli_main,
            [
                "ingest", "--dataset", "aud", "--input", str(batch),
                "--seed", str(40 + b), "--root", str(tmp_path),
            ],
        )
        assert result.exit_code == 0, result.output

    result = runner.invoke(cli_main, ["audit", "--dataset", "aud", "--root", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "replay identical" in result.output
    assert "3 events, 3 batches" in result.output


# ---------------------------------------------------------------------------
# Scale: one million posts ingested end-to-end inside ten minutes, then a
# filtered timeline answers in under half a second
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_million_post_ingest_within_time_budget(tmp_path):
    corpus_path = tmp_path / "scale.jsonl"
    synth.write_scale_corpus(corpus_path, n_posts=1_000_000, n_users=30_000, seed=404)

    engine = Engine.create(tmp_path / "store", "scale", Platform.TWITTER)
    started = time.monotonic()
    report = engine.ingest_path(corpus_path, seed=77)
    ingest_s = time.monotonic() - started
    assert report.accepted == 1_000_000
    assert report.rejected == 0
    assert ingest_s < 600.0, f"ingest took {ingest_s:.0f}s"

    view = engine.snapshot().analytics()
    spec = FilterSpec(
        keywords=("market",),
        language="en",
        date_from=synth._BASE + timedelta(hours=6),
        date_to=synth._BASE + timedelta(hours=60),
    )
    started = time.perf_counter()
    series = view.timeline(spec, "hour", split_by_sentiment=True)
    query_s = time.perf_counter() - started
    assert sum(series.counts) > 0
    assert query_s < 0.5, f"filtered timeline took {query_s * 1000:.0f}ms"
