"""Force-directed layout with degree-weighted repulsion and warm starts.

Force laws, per node pair / node:

  attraction along an edge   F_a(u,v) = d(u,v) * w_uv
  repulsion between nodes    F_r(u,v) = k_r * (deg(u)+1) * (deg(v)+1) / d(u,v)
  gravity toward the origin  F_g(u)   = k_g * (deg(u)+1)

Each iteration applies the adaptive-speed scheme: a node's swing is the norm
of the change in its force between iterations, its traction the norm of the
mean; the global speed is tolerance * traction_sum / swing_sum (rise capped
at 50% per iteration), and each node moves by
F * k_s * S / (1 + S * sqrt(swing)), capped so no node is displaced by more
than k_s_max / |F|.

Warm starts: users present in a prior state keep their exact coordinates;
only new users are randomly initialized, which keeps incremental batches
from displacing the existing picture.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .graph import InteractionGraph
from .quadtree import exact_repulsion, repulsion_barnes_hut

__all__ = ["LayoutParams", "LayoutState", "init_layout", "step", "run", "viewport_positions"]


@dataclass(slots=True, frozen=True)
class LayoutParams:
    k_repulsion: float = 1.0
    k_gravity: float = 0.05
    theta: float = 0.5
    iterations: int = 300
    tolerance: float = 1.0  # jitter tolerance of the adaptive-speed scheme
    speed_k: float = 0.1
    speed_k_max: float = 10.0
    max_speed_rise: float = 0.5
    exact_below: int = 256  # pairwise repulsion under this node count, quadtree above

    def __post_init__(self):
        if self.k_repulsion <= 0:
            raise ValueError("k_repulsion must be positive")
        if self.k_gravity < 0:
            raise ValueError("k_gravity must be non-negative")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must be in (0, 1]")
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if self.tolerance <= 0 or self.speed_k <= 0 or self.speed_k_max <= 0:
            raise ValueError("speed constants must be positive")


@dataclass(slots=True)
class LayoutState:
    ids: tuple[str, ...]  # canonical (sorted) node order
    pos: np.ndarray  # (n, 2) float64
    prev_forces: np.ndarray  # (n, 2) float64
    global_speed: float
    params: LayoutParams
    rng_seed: int
    step_count: int = 0

    def positions(self) -> dict[str, tuple[float, float]]:
        return {u: (float(self.pos[i, 0]), float(self.pos[i, 1])) for i, u in enumerate(self.ids)}

    def position_of(self, user_id: str) -> tuple[float, float]:
        i = self.ids.index(user_id)
        return float(self.pos[i, 0]), float(self.pos[i, 1])

    def copy(self) -> "LayoutState":
        return LayoutState(
            ids=self.ids,
            pos=self.pos.copy(),
            prev_forces=self.prev_forces.copy(),
            global_speed=self.global_speed,
            params=self.params,
            rng_seed=self.rng_seed,
            step_count=self.step_count,
        )


def init_layout(
    graph: InteractionGraph,
    prior: Optional[LayoutState],
    seed: int,
    params: Optional[LayoutParams] = None,
) -> LayoutState:
    """Positions for exactly the graph's node set, carrying prior coordinates over.

    New users are sampled uniformly in the prior layout's bounding box (unit
    disk when there is no prior). Deterministic per seed.
    """
    if params is None:
        params = prior.params if prior is not None else LayoutParams()
    ids = tuple(sorted(graph.nodes))
    n = len(ids)
    pos = np.zeros((n, 2), dtype=np.float64)
    rng = np.random.default_rng(seed)

    prior_map: dict[str, int] = {}
    if prior is not None and len(prior.ids):
        prior_map = {u: i for i, u in enumerate(prior.ids)}

    new_rows = [i for i, u in enumerate(ids) if u not in prior_map]
    for i, u in enumerate(ids):
        j = prior_map.get(u)
        if j is not None:
            pos[i] = prior.pos[j]

    if new_rows:
        k = len(new_rows)
        if prior_map:
            lo = prior.pos.min(axis=0)
            hi = prior.pos.max(axis=0)
            samples = np.column_stack([
                rng.uniform(lo[0], hi[0], size=k),
                rng.uniform(lo[1], hi[1], size=k),
            ])
        else:
            r = np.sqrt(rng.uniform(0.0, 1.0, size=k))
            ang = rng.uniform(0.0, 2.0 * np.pi, size=k)
            samples = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        pos[new_rows] = samples

    return LayoutState(
        ids=ids,
        pos=pos,
        prev_forces=np.zeros((n, 2), dtype=np.float64),
        global_speed=1.0,
        params=params,
        rng_seed=seed,
    )


def _edge_arrays(graph: InteractionGraph, ids: tuple[str, ...]):
    """Undirected unique edge list in canonical order, weights summed both ways."""
    index = {u: i for i, u in enumerate(ids)}
    acc: dict[tuple[int, int], float] = {}
    for src, dst, w in graph.edges():
        i, j = index[src], index[dst]
        key = (i, j) if i < j else (j, i)
        acc[key] = acc.get(key, 0.0) + float(w)
    if not acc:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.float64))
    keys = sorted(acc)
    u = np.array([k[0] for k in keys], dtype=np.int64)
    v = np.array([k[1] for k in keys], dtype=np.int64)
    w = np.array([acc[k] for k in keys], dtype=np.float64)
    return u, v, w


def _degree_array(graph: InteractionGraph, ids: tuple[str, ...]) -> np.ndarray:
    return np.array([graph.degree(u) for u in ids], dtype=np.float64)


def _separate_coincident(pos: np.ndarray, rng: np.random.Generator) -> None:
    """Nudge exact duplicates apart by 1e-6 of the layout diameter."""
    n = pos.shape[0]
    if n < 2:
        return
    _, inverse, counts = np.unique(pos, axis=0, return_inverse=True, return_counts=True)
    if counts.max() < 2:
        return
    span = pos.max(axis=0) - pos.min(axis=0)
    diameter = float(max(span[0], span[1]))
    scale = 1e-6 * diameter if diameter > 0 else 1e-6
    dup_rows = np.flatnonzero(counts[inverse] > 1)
    jitter = rng.uniform(-scale, scale, size=(dup_rows.size, 2))
    pos[dup_rows] += jitter


def _compute_forces(pos, degrees, eu, ev, ew, params: LayoutParams) -> np.ndarray:
    n = pos.shape[0]
    if n >= params.exact_below:
        forces = repulsion_barnes_hut(pos, degrees, params.theta, params.k_repulsion)
    else:
        forces = exact_repulsion(pos, degrees, params.k_repulsion)

    if eu.size:
        diff = pos[ev] - pos[eu]  # pull u toward v and vice versa
        pull = ew[:, None] * diff
        np.add.at(forces, eu, pull)
        np.subtract.at(forces, ev, pull)

    if params.k_gravity > 0:
        norms = np.sqrt((pos ** 2).sum(axis=1))
        mass = degrees + 1.0
        nz = norms > 0
        forces[nz] -= params.k_gravity * (mass[nz] / norms[nz])[:, None] * pos[nz]
    return forces


def _apply_speeds(state: LayoutState, forces: np.ndarray, degrees: np.ndarray) -> None:
    params = state.params
    mass = degrees + 1.0
    delta = forces - state.prev_forces
    swing = np.sqrt((delta ** 2).sum(axis=1))
    traction = 0.5 * np.sqrt(((forces + state.prev_forces) ** 2).sum(axis=1))

    swing_sum = float((mass * swing).sum())
    traction_sum = float((mass * traction).sum())
    if swing_sum > 1e-30:
        target = params.tolerance * traction_sum / swing_sum
    else:
        target = state.global_speed
    speed = min(target, state.global_speed * (1.0 + params.max_speed_rise))
    # a perfectly destructive force reversal has zero traction; without a
    # floor the multiplicative rise cap would pin the speed at 0 forever
    speed = max(speed, 1e-6)

    node_speed = params.speed_k * speed / (1.0 + speed * np.sqrt(swing))
    fnorm = np.sqrt((forces ** 2).sum(axis=1))
    with np.errstate(divide="ignore"):
        cap = np.where(fnorm > 0, params.speed_k_max / fnorm, np.inf)
    node_speed = np.minimum(node_speed, cap)

    state.pos += forces * node_speed[:, None]
    if not np.isfinite(state.pos).all():
        raise FloatingPointError("layout produced non-finite coordinates")
    state.prev_forces = forces
    state.global_speed = speed
    state.step_count += 1


def step(graph: InteractionGraph, state: LayoutState) -> LayoutState:
    """One full iteration. Mutates and returns the state."""
    ids = tuple(sorted(graph.nodes))
    if ids != state.ids:
        raise ValueError("layout state does not cover the graph's node set; call init_layout")
    if not state.ids:
        return state
    eu, ev, ew = _edge_arrays(graph, state.ids)
    degrees = _degree_array(graph, state.ids)
    return _step_cached(state, degrees, eu, ev, ew)


def _step_cached(state: LayoutState, degrees, eu, ev, ew) -> LayoutState:
    rng = np.random.default_rng([state.rng_seed, state.step_count, 0x5EED])
    _separate_coincident(state.pos, rng)
    forces = _compute_forces(state.pos, degrees, eu, ev, ew, state.params)
    _apply_speeds(state, forces, degrees)
    return state


def run(
    graph: InteractionGraph,
    state: LayoutState,
    iterations: Optional[int] = None,
) -> LayoutState:
    """Run a fixed iteration budget (params.iterations by default)."""
    if not state.ids:
        return state
    ids = tuple(sorted(graph.nodes))
    if ids != state.ids:
        raise ValueError("layout state does not cover the graph's node set; call init_layout")
    count = state.params.iterations if iterations is None else iterations
    eu, ev, ew = _edge_arrays(graph, state.ids)
    degrees = _degree_array(graph, state.ids)
    for _ in range(count):
        _step_cached(state, degrees, eu, ev, ew)
    return state


def viewport_positions(state: LayoutState, extent: float = 1000.0) -> dict[str, tuple[float, float]]:
    """Positions mapped into the [-extent, extent] export box, aspect preserved.

    Internal coordinates are never normalized; this is an export-time view.
    """
    if not state.ids:
        return {}
    lo = state.pos.min(axis=0)
    hi = state.pos.max(axis=0)
    center = 0.5 * (lo + hi)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    scale = (2.0 * extent / span) if span > 0 else 1.0
    mapped = (state.pos - center) * scale
    return {u: (float(mapped[i, 0]), float(mapped[i, 1])) for i, u in enumerate(state.ids)}
