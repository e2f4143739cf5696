"""Community detection and cross-batch identity tracking.

Louvain clustering runs from scratch on every batch; community identities
are then kept stable by overlap matching: a new community inherits an old
community's label when the share of its previously-seen members that sat in
that old community exceeds a threshold, with greedy one-to-one assignment.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

from .graph import InteractionGraph

__all__ = [
    "CommunityLabel",
    "LabelRegistry",
    "Partition",
    "modularity",
    "louvain",
    "match_communities",
]


@dataclass(slots=True)
class CommunityLabel:
    label_id: str  # stable opaque id, never reused
    name: str  # user-editable
    created_in_batch: int


class LabelRegistry:
    """Allocator and name store for community or topic labels.

    Ids are "{prefix}{seq}" with a monotonically increasing sequence, so a
    retired id can never be minted again.
    """

    def __init__(self, prefix: str, default_name: str):
        self.prefix = prefix
        self.default_name = default_name
        self.labels: dict[str, CommunityLabel] = {}
        self.next_seq = 1

    def create(self, batch_id: int) -> CommunityLabel:
        label_id = f"{self.prefix}{self.next_seq}"
        self.next_seq += 1
        label = CommunityLabel(
            label_id=label_id,
            name=f"{self.default_name} {label_id}",
            created_in_batch=batch_id,
        )
        self.labels[label_id] = label
        return label

    def get(self, label_id: str) -> CommunityLabel:
        return self.labels[label_id]

    def rename(self, label_id: str, name: str) -> CommunityLabel:
        if label_id not in self.labels:
            raise KeyError(label_id)
        self.labels[label_id].name = name
        return self.labels[label_id]

    def resolve(self, ref: str) -> Optional[str]:
        """Resolve a label id or a label name to a label id."""
        if ref in self.labels:
            return ref
        for label in self.labels.values():
            if label.name == ref:
                return label.label_id
        return None

    def seq_of(self, label_id: str) -> int:
        return int(label_id[len(self.prefix):])

    def to_dict(self) -> dict:
        return {
            "prefix": self.prefix,
            "default_name": self.default_name,
            "next_seq": self.next_seq,
            "labels": [
                {"label_id": l.label_id, "name": l.name, "created_in_batch": l.created_in_batch}
                for l in sorted(self.labels.values(), key=lambda l: self.seq_of(l.label_id))
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabelRegistry":
        reg = cls(data["prefix"], data["default_name"])
        reg.next_seq = data["next_seq"]
        for item in data["labels"]:
            reg.labels[item["label_id"]] = CommunityLabel(
                label_id=item["label_id"],
                name=item["name"],
                created_in_batch=item["created_in_batch"],
            )
        return reg


@dataclass(slots=True)
class Partition:
    """User -> community assignment with per-community label ids."""

    assignment: dict[str, int]
    labels: dict[int, str] = field(default_factory=dict)  # community index -> label_id
    modularity: float = 0.0

    def communities(self) -> dict[int, set[str]]:
        members: dict[int, set[str]] = {}
        for user, comm in self.assignment.items():
            members.setdefault(comm, set()).add(user)
        return members

    def community_count(self) -> int:
        return len(set(self.assignment.values()))

    def members_of_label(self, label_id: str) -> set[str]:
        indices = {c for c, lid in self.labels.items() if lid == label_id}
        return {u for u, c in self.assignment.items() if c in indices}


def modularity(graph: InteractionGraph, assignment: Mapping[str, int]) -> float:
    """Q = sum_c [ e_c/m - (d_c/2m)^2 ] on the undirected weighted view.

    Empty graphs (m == 0) score 0 by definition.
    """
    intra: dict[int, float] = {}
    deg: dict[int, float] = {}
    m = 0.0
    for src, dst, w in graph.edges():
        cs, cd = assignment[src], assignment[dst]
        # undirected weight is w_uv + w_vu; summing directed edges once per
        # direction accumulates exactly that
        m += w
        deg[cs] = deg.get(cs, 0.0) + w
        deg[cd] = deg.get(cd, 0.0) + w
        if cs == cd:
            intra[cs] = intra.get(cs, 0.0) + w
    if m == 0:
        return 0.0
    q = 0.0
    for comm in deg:
        e_c = intra.get(comm, 0.0)
        d_c = deg[comm]
        q += e_c / m - (d_c / (2.0 * m)) ** 2
    return q


def _local_moves(
    adj: list[dict[int, float]],
    degree: list[float],
    node_comm: list[int],
    m: float,
    rng: random.Random,
) -> bool:
    """One Louvain phase of repeated single-node relocations.

    Returns True if any node changed community. `adj` may carry self-loops
    (adj[i][i]); they travel with the node and cancel out of every gain.
    """
    n = len(adj)
    comm_total = [0.0] * n  # sum of degrees per community
    comm_size = [0] * n  # member counts, to find empty slots for break-offs
    for i in range(n):
        comm_total[node_comm[i]] += degree[i]
        comm_size[node_comm[i]] += 1
    freed = [c for c in range(n) if comm_size[c] == 0]  # lazily-validated stack

    improved = False
    moved = True
    order = list(range(n))
    while moved:
        moved = False
        rng.shuffle(order)
        for i in order:
            current = node_comm[i]
            k_i = degree[i]
            # weights from i to each neighboring community, self-loop excluded
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j != i:
                    links[node_comm[j]] = links.get(node_comm[j], 0.0) + w
            comm_total[current] -= k_i
            comm_size[current] -= 1
            base = links.get(current, 0.0) / m - comm_total[current] * k_i / (2.0 * m * m)
            best_comm = current
            best_gain = base
            # a community of one scores 0: better than staying when the node's
            # own community drags it down and no neighbor community pays
            if 0.0 > best_gain + 1e-12 and comm_size[current] > 0:
                while freed and comm_size[freed[-1]] > 0:
                    freed.pop()
                if freed:
                    best_gain = 0.0
                    best_comm = freed[-1]
            for comm in sorted(links):
                if comm == current:
                    continue
                gain = links[comm] / m - comm_total[comm] * k_i / (2.0 * m * m)
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_comm = comm
            comm_total[best_comm] += k_i
            comm_size[best_comm] += 1
            if best_comm != current:
                if comm_size[current] == 0:
                    freed.append(current)
                node_comm[i] = best_comm
                moved = True
                improved = True
    return improved


def _aggregate(
    adj: list[dict[int, float]],
    node_comm: list[int],
) -> tuple[list[dict[int, float]], list[int]]:
    """Collapse communities into super-nodes; intra weight becomes a self-loop."""
    comms = sorted(set(node_comm))
    remap = {c: idx for idx, c in enumerate(comms)}
    new_adj: list[dict[int, float]] = [{} for _ in comms]
    for i, targets in enumerate(adj):
        ci = remap[node_comm[i]]
        row = new_adj[ci]
        for j, w in targets.items():
            cj = remap[node_comm[j]]
            if ci == cj:
                # each undirected edge appears in both adj rows; halve so the
                # self-loop carries the intra weight once (i==j appears once)
                row[ci] = row.get(ci, 0.0) + (w if i == j else w / 2.0)
            else:
                row[cj] = row.get(cj, 0.0) + w
    return new_adj, [remap[c] for c in node_comm]


def _degrees(adj: list[dict[int, float]]) -> list[float]:
    # self-loops count twice toward degree
    return [2.0 * row.get(i, 0.0) + sum(w for j, w in row.items() if j != i)
            for i, row in enumerate(adj)]


def _hierarchy(
    adj: list[dict[int, float]],
    m: float,
    membership: list[int],
    rng: random.Random,
) -> list[int]:
    """Run local moves + aggregation to convergence from `membership`.

    Repeats from the flattened result until neither single-node relocations
    nor community merges improve Q, so the returned membership is move-stable
    at the level of individual nodes, not just super-nodes.
    """
    n = len(adj)
    degrees = _degrees(adj)
    while True:
        any_change = False

        # level 0 on the original graph, seeded with the current flat partition
        level_comm = list(membership)
        if _local_moves(adj, degrees, level_comm, m, rng):
            any_change = True
        membership = list(level_comm)

        # higher levels on progressively aggregated graphs
        level_adj, to_super = _aggregate(adj, level_comm)
        flat_map = list(to_super)  # original node -> current-level super-node
        while len(level_adj) > 1:
            comm = list(range(len(level_adj)))
            if not _local_moves(level_adj, _degrees(level_adj), comm, m, rng):
                break
            any_change = True
            membership = [comm[flat_map[i]] for i in range(n)]
            level_adj, mapped = _aggregate(level_adj, comm)
            flat_map = [mapped[flat_map[i]] for i in range(n)]

        if not any_change:
            return membership


def _optimize(
    adj: list[dict[int, float]],
    m: float,
    membership: list[int],
    rng: random.Random,
) -> list[int]:
    """Alternate move/merge convergence with small-community refinement.

    Ends on a partition that no single-node relocation, community merge,
    small-community two-way split, or small-community dissolution improves;
    every accepted change strictly raises Q, so the loop terminates.
    """
    while True:
        membership = _hierarchy(adj, m, membership, rng)
        if _split_refine(adj, m, membership):
            continue
        if _dissolve_refine(adj, m, membership):
            continue
        return membership


def _membership_modularity(
    adj: list[dict[int, float]], m: float, membership: list[int]
) -> float:
    """Q of an index-level membership, matching modularity()'s convention."""
    intra: dict[int, float] = {}
    deg: dict[int, float] = {}
    for i, row in enumerate(adj):
        ci = membership[i]
        for j, w in row.items():
            if j < i:
                continue  # each undirected pair once; self-loops have j == i
            deg[ci] = deg.get(ci, 0.0) + w
            cj = membership[j]
            deg[cj] = deg.get(cj, 0.0) + w
            if ci == cj:
                intra[ci] = intra.get(ci, 0.0) + w
    q = 0.0
    for comm in deg:
        q += intra.get(comm, 0.0) / m - (deg[comm] / (2.0 * m)) ** 2
    return q


# Graphs this small get extra random-restart attempts: greedy moves plus
# community merges cannot cross every basin boundary on tiny instances, and
# diversified starting partitions recover the lost optima cheaply.
_RESTART_LIMIT_N = 512
_SMALL_GRAPH_RESTARTS = 12
# Communities up to this size get refinement checks after the move/merge
# phases converge: an exhaustive two-way split, and a dissolve that hands the
# members to neighboring communities one by one. Both target compound moves
# greedy single-node relocation cannot perform — merging is irreversible, and
# redistributing a community needs several simultaneously non-improving steps.
_REFINE_SIZE_LIMIT = 12
# Below this size, additionally attempt every "pair or triple vs. the rest"
# starting partition. When the optimum peels a small set off an otherwise
# dense graph, that start IS the optimum and survives untouched (no strictly
# improving change exists), which no amount of random restarting guarantees.
_SPLIT_SEED_LIMIT_N = 10


def _split_seed_starts(n: int) -> Iterator[list[int]]:
    """Starting partitions isolating each pair/triple from the other nodes."""
    for size in (2, 3):
        for group in itertools.combinations(range(n), size):
            start = [1] * n
            for i in group:
                start[i] = 0
            yield start


def _split_refine(adj: list[dict[int, float]], m: float, membership: list[int]) -> bool:
    """Split any small community whose best two-way division raises Q.

    For a community with total degree d and internal halves (d_a, d_b) joined
    by cut weight w_ab, splitting changes Q by d_a*d_b/(2m²) − w_ab/m: the
    intra term loses the cut once, the degree penalty drops by 2*d_a*d_b/(4m²).
    Applies the best strictly-positive split per community; returns whether
    anything changed.
    """
    members: dict[int, list[int]] = {}
    for i, c in enumerate(membership):
        members.setdefault(c, []).append(i)
    degree = _degrees(adj)
    free = sorted(set(range(len(adj))) - set(members), reverse=True)
    changed = False
    for c in sorted(members):
        nodes = members[c]
        k = len(nodes)
        if k < 2 or k > _REFINE_SIZE_LIMIT:
            continue
        best_gain = 0.0
        best_mask = 0
        # masks with the last node fixed in B cover each unordered split once
        for mask in range(1, 1 << (k - 1)):
            d_a = 0.0
            in_a = [False] * k
            for b in range(k - 1):
                if mask >> b & 1:
                    in_a[b] = True
                    d_a += degree[nodes[b]]
            cut = 0.0
            for b in range(k):
                if not in_a[b]:
                    continue
                row = adj[nodes[b]]
                for other_b in range(k):
                    if not in_a[other_b]:
                        w = row.get(nodes[other_b])
                        if w is not None:
                            cut += w
            d_b = sum(degree[x] for x in nodes) - d_a
            gain = d_a * d_b / (2.0 * m * m) - cut / m
            if gain > best_gain + 1e-12:
                best_gain = gain
                best_mask = mask
        if best_mask:
            label = free.pop()
            for b in range(k - 1):
                if best_mask >> b & 1:
                    membership[nodes[b]] = label
            changed = True
    return changed


def _dissolve_refine(adj: list[dict[int, float]], m: float, membership: list[int]) -> bool:
    """Disband any small community if redistributing its members raises Q.

    Members are pulled out together, then greedily rehomed one at a time into
    the best neighboring community (or left alone), so a pair can land in two
    different destinations even when each individual relocation on its own
    would lower Q. The change is applied only if the summed ΔQ is positive.
    """
    n = len(adj)
    degree = _degrees(adj)
    members: dict[int, list[int]] = {}
    comm_total: dict[int, float] = {}
    for i, c in enumerate(membership):
        members.setdefault(c, []).append(i)
        comm_total[c] = comm_total.get(c, 0.0) + degree[i]
    free = sorted(set(range(n)) - set(members), reverse=True)
    changed = False
    for c in sorted(members):
        nodes = members.get(c, [])
        k = len(nodes)
        if k < 2 or k > _REFINE_SIZE_LIMIT:
            continue
        node_set = set(nodes)
        d_c = sum(degree[i] for i in nodes)
        e_c = 0.0
        for i in nodes:
            for j, w in adj[i].items():
                if j > i and j in node_set:
                    e_c += w
        # pulling everyone out to singletons drops the community term and
        # charges each member its own degree penalty
        delta = (d_c / (2.0 * m)) ** 2 - e_c / m
        delta -= sum((degree[i] / (2.0 * m)) ** 2 for i in nodes)

        placed: dict[int, int] = {}
        total_delta: dict[int, float] = {}  # trial comm_total adjustments
        fresh = list(free)
        for i in sorted(nodes):
            k_i = degree[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j == i:
                    continue
                lab = placed.get(j)
                if lab is None:
                    if j in node_set:
                        continue  # not rehomed yet: no community to join
                    lab = membership[j]
                links[lab] = links.get(lab, 0.0) + w
            best_gain = 0.0  # staying alone
            best_lab = -1
            for lab in sorted(links):
                tot = comm_total.get(lab, 0.0) + total_delta.get(lab, 0.0)
                gain = links[lab] / m - tot * k_i / (2.0 * m * m)
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_lab = lab
            if best_lab == -1:
                best_lab = fresh.pop()
            placed[i] = best_lab
            total_delta[best_lab] = total_delta.get(best_lab, 0.0) + k_i
            delta += best_gain

        if delta > 1e-12:
            for i in nodes:
                dest = placed[i]
                membership[i] = dest
                members.setdefault(dest, []).append(i)
            members[c] = []
            for lab, d in total_delta.items():
                comm_total[lab] = comm_total.get(lab, 0.0) + d
            comm_total[c] -= d_c
            free = fresh
            changed = True
    return changed


def louvain(graph: InteractionGraph, seed: int = 0) -> Partition:
    """Greedy modularity maximization, deterministic per seed.

    Each attempt alternates single-node moves and community aggregation to
    convergence, then checks small-community two-way splits and dissolutions
    (merging is irreversible, so undoing one needs a dedicated phase). The
    seed fixes the node visiting order of every sweep and the restart
    starting partitions: restart 0 begins from singletons (the classic
    schedule); small graphs add seeded random starts plus every pair/triple
    peel-off start, and the best-Q result wins, first-found on exact ties.
    Isolated nodes end up in singleton communities. Every candidate is
    move-stable, so the winner is.
    """
    nodes = sorted(graph.nodes)
    if not nodes:
        return Partition(assignment={}, modularity=0.0)
    n = len(nodes)
    index = {u: i for i, u in enumerate(nodes)}

    adj: list[dict[int, float]] = [{} for _ in nodes]
    for src, dst, w in graph.edges():
        i, j = index[src], index[dst]
        adj[i][j] = adj[i].get(j, 0.0) + float(w)
        adj[j][i] = adj[j].get(i, 0.0) + float(w)

    m = sum(w for row in adj for w in row.values()) / 2.0
    if m == 0:
        assignment = {u: i for i, u in enumerate(nodes)}
        return Partition(assignment=assignment, modularity=0.0)

    restarts = _SMALL_GRAPH_RESTARTS if n <= _RESTART_LIMIT_N else 1
    starts: list[Optional[list[int]]] = [None] * restarts  # None -> random
    starts[0] = list(range(n))  # the classic schedule: every node alone
    if n <= _SPLIT_SEED_LIMIT_N:
        starts.extend(_split_seed_starts(n))

    best_membership: Optional[list[int]] = None
    best_q = -math.inf
    for r, start in enumerate(starts):
        rng = random.Random(seed * 0x9E3779B1 + r)
        if start is None:
            start = [rng.randrange(n) for _ in range(n)]
        membership = _optimize(adj, m, start, rng)
        q = _membership_modularity(adj, m, membership)
        if q > best_q:
            best_q = q
            best_membership = membership

    # renumber communities densely by first appearance over sorted node order
    remap: dict[int, int] = {}
    assignment: dict[str, int] = {}
    for i, u in enumerate(nodes):
        c = best_membership[i]
        if c not in remap:
            remap[c] = len(remap)
        assignment[u] = remap[c]
    return Partition(assignment=assignment, modularity=modularity(graph, assignment))


def match_communities(
    old: Optional[Partition],
    new_assignment: Mapping[str, int],
    registry: LabelRegistry,
    threshold: float,
    batch_id: int,
    graph: Optional[InteractionGraph] = None,
) -> Partition:
    """Assign labels to a fresh clustering by overlap with the old partition.

    overlap(new_c, old_c) = |new_c ∩ old_c| / |new_c ∩ old_universe|.
    Candidate pairs are taken greedily by overlap descending (ties: larger old
    community, then lower old label id, then lower new index); a new community
    inherits iff its matched overlap is strictly greater than the threshold.
    Everything unmatched gets a fresh label. Names are never touched here.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    q = modularity(graph, new_assignment) if graph is not None else 0.0
    new_members: dict[int, set[str]] = {}
    for user, comm in new_assignment.items():
        new_members.setdefault(comm, set()).add(user)

    labels: dict[int, str] = {}
    if old is not None and old.assignment:
        old_universe = set(old.assignment)
        old_members = old.communities()
        old_label_of = old.labels

        pairs: list[tuple[float, int, int, int, str]] = []
        for new_c, members in new_members.items():
            seen_before = members & old_universe
            if not seen_before:
                continue  # entirely new users: fresh label below
            votes: dict[int, int] = {}
            for user in seen_before:
                oc = old.assignment[user]
                votes[oc] = votes.get(oc, 0) + 1
            for old_c, inter in votes.items():
                if old_c not in old_label_of:
                    continue
                overlap = inter / len(seen_before)
                pairs.append((overlap, len(old_members[old_c]), old_c, new_c, old_label_of[old_c]))

        pairs.sort(key=lambda p: (-p[0], -p[1], registry.seq_of(p[4]), p[3]))
        taken_old: set[str] = set()
        for overlap, _size, _old_c, new_c, label_id in pairs:
            if overlap <= threshold:
                break
            if new_c in labels or label_id in taken_old:
                continue
            labels[new_c] = label_id
            taken_old.add(label_id)

    for new_c in sorted(new_members):
        if new_c not in labels:
            labels[new_c] = registry.create(batch_id).label_id

    return Partition(assignment=dict(new_assignment), labels=labels, modularity=q)
