"""Shortest paths, nearest exits and sight tables on a :class:`FloorLayout`.

Movement is 4-connected. A path is built by walking a breadth-first distance
field from the start cell, taking at each step the first neighbour (up, right,
down, left) that is one step closer to the target, so every query is
deterministic. The heavy tables (all-pairs step distances, sight within a
radius, per-exit next hops) are computed once per layout and cached on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path as _csgraph_shortest_path

from .layout import Cell, CellKind, FloorLayout, supercover

UNREACHABLE = -1


class NoPath(LookupError):
    pass


@dataclass(frozen=True)
class Path:
    cells: tuple[Cell, ...]

    @property
    def cost(self) -> int:
        return len(self.cells) - 1


def distance_matrix(layout: FloorLayout) -> np.ndarray:
    """All-pairs step distances between walkable cells (dense ids), -1 if disconnected."""
    cached = layout._cache.get("dist")
    if cached is None:
        nbr = layout.neighbor_table
        n = layout.n_walkable
        src, k = np.nonzero(nbr >= 0)
        graph = csr_matrix((np.ones(len(src)), (src, nbr[src, k])), shape=(n, n))
        d = _csgraph_shortest_path(graph, method="D", unweighted=True, directed=False)
        cached = np.where(np.isinf(d), UNREACHABLE, d).astype(np.int32)
        cached.setflags(write=False)
        layout._cache["dist"] = cached
    return cached


def next_hop(layout: FloorLayout, src: int, dst: int) -> int:
    """Dense id of the first step from ``src`` toward ``dst`` (``src`` if equal)."""
    dist = distance_matrix(layout)
    d = dist[src, dst]
    if d < 0:
        raise NoPath(f"{layout.cell_of(src)} -> {layout.cell_of(dst)}")
    if d == 0:
        return src
    for n in layout.neighbor_table[src]:
        if n >= 0 and dist[n, dst] == d - 1:
            return int(n)
    raise AssertionError("inconsistent distance table")


def advance(layout: FloorLayout, src: int, dst: int, speed: int) -> int:
    pos = src
    for _ in range(max(0, speed)):
        if pos == dst:
            break
        pos = next_hop(layout, pos, dst)
    return pos


def shortest_path(layout: FloorLayout, start: Cell, goal: Cell) -> Path:
    for c in (start, goal):
        if not layout.is_walkable(c):
            raise ValueError(f"{c} is not a walkable cell")
    s, g = layout.idx(start), layout.idx(goal)
    cells = [start]
    while s != g:
        s = next_hop(layout, s, g)
        cells.append(layout.cell_of(s))
    return Path(tuple(cells))


def exit_distances(layout: FloorLayout) -> np.ndarray:
    """``(n_exits, n_walkable)`` step distance from every cell to each exit."""
    return distance_matrix(layout)[layout.exit_cells]


def nearest_exit(layout: FloorLayout, start: Cell) -> tuple[Cell, Path]:
    """Exit with the lowest path cost; ties go to the lowest exit id."""
    d = exit_distances(layout)[:, layout.idx(start)]
    reachable = d >= 0
    if not reachable.any():
        raise NoPath(f"no exit reachable from {start}")
    eid = int(np.argmin(np.where(reachable, d, np.iinfo(np.int32).max)))
    goal = layout.exits[eid]
    return goal, shortest_path(layout, start, goal)


def step_toward(layout: FloorLayout, start: Cell, target: Cell, speed: int) -> Cell:
    """Cell reached after ``min(speed, cost)`` steps along :func:`shortest_path`."""
    return layout.cell_of(advance(layout, layout.idx(start), layout.idx(target), speed))


def exit_next_hops(layout: FloorLayout) -> np.ndarray:
    """``(n_exits, n_walkable)`` first step toward each exit; exits map to themselves."""
    cached = layout._cache.get("exit_hops")
    if cached is None:
        dist = exit_distances(layout)
        nbr = layout.neighbor_table
        n = layout.n_walkable
        cached = np.tile(np.arange(n, dtype=np.int32), (len(layout.exits), 1))
        for e in range(len(layout.exits)):
            d = dist[e]
            chosen = np.zeros(n, dtype=bool)
            for k in range(4):
                cand = nbr[:, k]
                ok = (~chosen) & (cand >= 0) & (d > 0)
                ok[ok] = d[cand[ok]] == d[ok] - 1
                cached[e, ok] = cand[ok]
                chosen |= ok
        cached.setflags(write=False)
        layout._cache["exit_hops"] = cached
    return cached


def sight_matrix(layout: FloorLayout, radius: int) -> np.ndarray:
    """Boolean ``(n, n)`` table: clear sight between cells within Manhattan ``radius``.

    Pairs farther apart than ``radius`` are False. Built one offset at a time
    over the whole grid, using the same supercover as
    :func:`egress_sim.layout.line_of_sight`.
    """
    key = ("sight", int(radius))
    cached = layout._cache.get(key)
    if cached is not None:
        return cached
    w, h = layout.width, layout.height
    open_ = layout.kinds != CellKind.WALL
    ys, xs = np.nonzero(open_)
    vis = np.zeros((layout.n_walkable, layout.n_walkable), dtype=bool)
    src_ids = layout.index[ys, xs]
    for dx in range(-radius, radius + 1):
        for dy in range(-(radius - abs(dx)), radius - abs(dx) + 1):
            tx, ty = xs + dx, ys + dy
            ok = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
            for cx, cy in supercover((0, 0), (dx, dy)):
                px, py = xs + cx, ys + cy
                inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
                ok &= inside
                ok[ok] = open_[py[ok], px[ok]]
            vis[src_ids[ok], layout.index[ty[ok], tx[ok]]] = True
    vis.setflags(write=False)
    layout._cache[key] = vis
    return vis
