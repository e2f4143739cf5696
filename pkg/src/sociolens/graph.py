"""Weighted directed user-to-user interaction graph.

Twitter interactions are retweets (retweeter -> original author). YouTube
interactions are replies with three attribution rules:

  (a) a top-level comment is a reply to the channel,
  (b) a reply that mentions no earlier replier in its thread targets the
      top-level comment's author,
  (c) a reply that mentions one or more earlier repliers targets the first
      such mention in authorial order.

Self-interactions are dropped and tallied; edges never carry zero weight.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .model import Platform, Post, User

__all__ = [
    "EdgeKind",
    "EdgeBuildResult",
    "InteractionGraph",
    "build_twitter_edges",
    "build_youtube_edges",
    "build_edges",
    "merge_batch",
]


class EdgeKind(str, Enum):
    RETWEET = "retweet"
    REPLY = "reply"

    @staticmethod
    def for_platform(platform: Platform) -> "EdgeKind":
        return EdgeKind.RETWEET if platform is Platform.TWITTER else EdgeKind.REPLY


class KindMismatchError(ValueError):
    pass


@dataclass(slots=True)
class EdgeBuildResult:
    """Edge multiset for one batch plus the skip tallies.

    Conservation: sum(edges.values()) + sum(tallies.values()) equals the
    number of interaction posts handed to the builder.
    """

    edges: Counter = field(default_factory=Counter)  # (src, dst) -> weight
    tallies: Counter = field(default_factory=Counter)  # reason -> count

    @property
    def emitted_weight(self) -> int:
        return sum(self.edges.values())

    @property
    def skipped(self) -> int:
        return sum(self.tallies.values())


class InteractionGraph:
    """Cumulative weighted directed graph with a consistent degree cache."""

    def __init__(self, kind: EdgeKind):
        self.kind = kind
        self.out_edges: dict[str, dict[str, int]] = {}
        self._degree: dict[str, int] = {}

    @property
    def nodes(self) -> set[str]:
        return set(self._degree)

    def node_count(self) -> int:
        return len(self._degree)

    def edge_count(self) -> int:
        return sum(len(d) for d in self.out_edges.values())

    def total_weight(self) -> int:
        return sum(w for d in self.out_edges.values() for w in d.values())

    def weight(self, src: str, dst: str) -> int:
        return self.out_edges.get(src, {}).get(dst, 0)

    def degree(self, node: str) -> int:
        """Weighted degree: sum of weights over all incident edges."""
        return self._degree.get(node, 0)

    def degrees(self) -> dict[str, int]:
        return dict(self._degree)

    def add_edge(self, src: str, dst: str, weight: int) -> None:
        if weight <= 0:
            raise ValueError("edge weights must be strictly positive")
        if src == dst:
            raise ValueError("self-loops are not allowed")
        self.out_edges.setdefault(src, {})
        self.out_edges[src][dst] = self.out_edges[src].get(dst, 0) + weight
        self._degree[src] = self._degree.get(src, 0) + weight
        self._degree[dst] = self._degree.get(dst, 0) + weight

    def add_node(self, node: str) -> None:
        self._degree.setdefault(node, 0)

    def edges(self) -> Iterable[tuple[str, str, int]]:
        """Edges in sorted (src, dst) order.

        The order is part of the contract: float accumulations downstream
        (modularity, force sums) must not depend on how the graph happened to
        be built, or a dataset reloaded from disk would diverge from the same
        dataset kept in memory by ulps.
        """
        for src in sorted(self.out_edges):
            targets = self.out_edges[src]
            for dst in sorted(targets):
                yield src, dst, targets[dst]

    def undirected(self) -> dict[str, dict[str, float]]:
        """Symmetric view with weights summed over both directions."""
        adj: dict[str, dict[str, float]] = {node: {} for node in sorted(self._degree)}
        for src, dst, w in self.edges():
            adj[src][dst] = adj[src].get(dst, 0.0) + w
            adj[dst][src] = adj[dst].get(src, 0.0) + w
        return adj

    def copy(self) -> "InteractionGraph":
        clone = InteractionGraph(self.kind)
        clone.out_edges = {src: dict(targets) for src, targets in self.out_edges.items()}
        clone._degree = dict(self._degree)
        return clone

    def __eq__(self, other) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.out_edges == other.out_edges
            and self._degree == other._degree
        )


def build_twitter_edges(
    posts: Sequence[Post],
    post_authors: Optional[Mapping[str, str]] = None,
) -> EdgeBuildResult:
    """Retweet edges: retweeter -> original author, +1 per retweet.

    post_authors maps post id -> author id for the corpus the retweets may
    target; by default it is derived from `posts` alone. Retweets of posts
    whose author is not in that corpus are skipped and tallied, as are
    self-retweets.
    """
    if post_authors is None:
        post_authors = {p.id: p.author_id for p in posts}
    result = EdgeBuildResult()
    for post in posts:
        if post.platform is not Platform.TWITTER:
            raise ValueError(f"post {post.id} is not a twitter post")
        if post.retweet_of is None:
            continue
        target = post_authors.get(post.retweet_of)
        if target is None:
            result.tallies["dangling_retweet"] += 1
        elif target == post.author_id:
            result.tallies["self_interaction"] += 1
        else:
            result.edges[(post.author_id, target)] += 1
    return result


def _resolve_mention_target(
    mentions: Sequence[str],
    earlier_repliers: Sequence[str],
    users: Mapping[str, User],
) -> Optional[str]:
    """First mention (authorial order) matching an earlier replier in the thread."""
    if not mentions or not earlier_repliers:
        return None
    by_handle: dict[str, str] = {}
    earlier_set = set(earlier_repliers)
    for uid in earlier_repliers:
        user = users.get(uid)
        if user is not None and user.handle:
            by_handle.setdefault(user.handle.lower(), uid)
    for mention in mentions:
        if mention in earlier_set:
            return mention
        uid = by_handle.get(mention)
        if uid is not None:
            return uid
    return None


def build_youtube_edges(
    posts: Sequence[Post],
    users: Mapping[str, User],
    history: Sequence[Post] = (),
) -> EdgeBuildResult:
    """Reply edges for a batch of YouTube comments.

    `history` supplies comments from earlier batches for thread context;
    edges are emitted only for `posts`. Threads are re-ordered by
    (created_at, id) before attribution so input permutations cannot change
    the result.
    """
    result = EdgeBuildResult()
    new_ids = {p.id for p in posts}

    top_level: dict[str, Post] = {}
    replies_by_parent: dict[str, list[Post]] = defaultdict(list)
    for post in list(history) + list(posts):
        if post.platform is not Platform.YOUTUBE:
            raise ValueError(f"post {post.id} is not a youtube post")
        if post.parent_comment_id is None:
            top_level[post.id] = post
        else:
            replies_by_parent[post.parent_comment_id].append(post)

    # rule (a): top-level comments reply to the channel
    for post in posts:
        if post.parent_comment_id is not None:
            continue
        if post.channel_id is None:
            result.tallies["missing_channel"] += 1
        elif post.channel_id == post.author_id:
            result.tallies["self_interaction"] += 1
        else:
            result.edges[(post.author_id, post.channel_id)] += 1

    # rules (b) and (c): replies within each thread, in timestamp order
    for parent_id, thread in replies_by_parent.items():
        parent = top_level.get(parent_id)
        thread.sort(key=lambda p: (p.created_at, p.id))
        earlier_repliers: list[str] = []
        for reply in thread:
            if reply.id in new_ids:
                if parent is None:
                    result.tallies["dangling_parent"] += 1
                else:
                    target = _resolve_mention_target(reply.mentions, earlier_repliers, users)
                    if target is None:
                        target = parent.author_id
                    if target == reply.author_id:
                        result.tallies["self_interaction"] += 1
                    else:
                        result.edges[(reply.author_id, target)] += 1
            earlier_repliers.append(reply.author_id)
    return result


def build_edges(
    platform: Platform,
    posts: Sequence[Post],
    users: Mapping[str, User],
    post_authors: Optional[Mapping[str, str]] = None,
    history: Sequence[Post] = (),
) -> EdgeBuildResult:
    if platform is Platform.TWITTER:
        return build_twitter_edges(posts, post_authors)
    return build_youtube_edges(posts, users, history)


def merge_batch(graph: InteractionGraph, result: EdgeBuildResult, kind: EdgeKind) -> InteractionGraph:
    """Merge one batch's edge multiset into the cumulative graph (weights sum).

    Mutates and returns `graph`. A kind mismatch aborts before any edge is
    applied. The journal, not this function, prevents double-applying a batch.
    """
    if kind != graph.kind:
        raise KindMismatchError(f"edge kind {kind.value} does not match graph kind {graph.kind.value}")
    for (src, dst), weight in result.edges.items():
        graph.add_edge(src, dst, weight)
    return graph
