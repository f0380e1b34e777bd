"""Decision rules for students, the shooter and the responding officer.

All functions are pure: state goes in, an action comes out, and any random
draw uses the generator passed in. Cells handed to the array-based functions
are dense walkable-cell ids of the layout (see ``FloorLayout.idx``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .layout import Cell, FloorLayout, manhattan
from .pathfind import advance, distance_matrix, exit_distances, exit_next_hops, sight_matrix


class StudentMode:
    UNAWARE = 0
    RUNNING = 1
    HIDING = 2
    EVACUATED = 3
    CASUALTY = 4

    NAMES = ("Unaware", "Running", "Hiding", "Evacuated", "Casualty")


NO_EFFECT, HIDE, RUN = 0, 1, 2


@dataclass(frozen=True)
class BehaviorParams:
    """Ranges in cells. Defaults satisfy alpha < gamma < beta."""

    alpha: float = 5  # hiding range
    beta: float = 20  # hearing range
    gamma: float = 10  # shooter visible range
    gamma_officer: float = 12  # officer visible range
    sigma: float = 8  # officer hearing (evacuation) range
    epsilon: float = 1e-6

    def __post_init__(self):
        if not 0 < self.alpha < self.beta:
            raise ValueError(f"need 0 < alpha < beta, got alpha={self.alpha}, beta={self.beta}")
        for name in ("gamma", "gamma_officer", "sigma", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def sight_radius(self) -> int:
        return int(math.floor(max(self.gamma, self.gamma_officer)))


@dataclass(frozen=True)
class ShotContext:
    """``cfk`` is the first-kill cell, ``cs`` the shooter's current cell.

    A missed first shot alerts without defining ``cfk``; hide gating then
    measures from ``cs`` until a kill happens.
    """

    cs: Cell
    cfk: Cell | None = None
    first_shot_fired: bool = False
    detector_enabled: bool = False

    def __post_init__(self):
        if self.cfk is not None and not self.first_shot_fired:
            raise ValueError("first kill recorded but no shot fired")

    @property
    def hide_reference(self) -> Cell:
        return self.cfk if self.cfk is not None else self.cs


# actions


@dataclass(frozen=True)
class Hide:
    pass


@dataclass(frozen=True)
class Run:
    exit_id: int


@dataclass(frozen=True)
class NoEffect:
    pass


StudentAction = Union[Hide, Run, NoEffect]


@dataclass(frozen=True)
class Kill:
    victim: int
    probability: float
    success: bool


@dataclass(frozen=True)
class Move:
    to: int
    target: int | None = None  # student id pursued, None when patrolling


ShooterAction = Union[Kill, Move]


@dataclass(frozen=True)
class Wait:
    pass


@dataclass(frozen=True)
class Enter:
    cell: int


@dataclass(frozen=True)
class Patrol:
    route: tuple[int, ...]  # cells stepped through this tick, last one is the new position


@dataclass(frozen=True)
class Suppress:
    shooter_id: int
    evacuate: tuple[int, ...] = ()


@dataclass(frozen=True)
class Evacuate:
    student_ids: tuple[int, ...]


OfficerAction = Union[Wait, Enter, Patrol, Suppress, Evacuate]


@dataclass
class OfficerState:
    inside: bool = False
    cell: int = -1
    last_visit: dict[int, int] = field(default_factory=dict)


# gates


def heaviside(x: float) -> int:
    return 1 if x >= 0 else 0


def student_gates(dist_fk, dist_sh, params: BehaviorParams, detector: bool):
    """Vectorised hide/run gating. Returns HIDE, RUN or NO_EFFECT codes.

    Without a detector a student hides within ``alpha`` of the first kill and
    runs when the shooter is between ``alpha`` and ``beta`` away. With a
    detector everybody is alerted: hide within ``alpha``, run otherwise. Hide
    wins where both gates fire.
    """
    dist_fk = np.asarray(dist_fk)
    dist_sh = np.asarray(dist_sh)
    hide = (params.alpha - dist_fk) >= 0
    if detector:
        run = (dist_fk - params.alpha) >= 0
    else:
        run = ((dist_sh - params.alpha) >= 0) & ((params.beta - dist_sh) >= 0)
    return np.where(hide, HIDE, np.where(run, RUN, NO_EFFECT))


def student_decide_no_detector(layout: FloorLayout, student: Cell, ctx: ShotContext, params: BehaviorParams) -> StudentAction:
    if not ctx.first_shot_fired:
        return NoEffect()
    code = student_gates(manhattan(student, ctx.hide_reference), manhattan(student, ctx.cs), params, detector=False)
    if code == HIDE:
        return Hide()
    if code == RUN:
        return Run(int(choose_exits(layout, np.array([layout.idx(student)]))[0]))
    return NoEffect()


def student_decide_detector(layout: FloorLayout, student: Cell, ctx: ShotContext, params: BehaviorParams) -> StudentAction:
    if not ctx.first_shot_fired:
        return NoEffect()
    dist = manhattan(student, ctx.hide_reference)
    if student_gates(dist, dist, params, detector=True) == HIDE:
        return Hide()
    exits = choose_exits(layout, np.array([layout.idx(student)]), shooter=layout.idx(ctx.cs), avoid_radius=params.gamma)
    return Run(int(exits[0]))


def safe_exit_mask(layout: FloorLayout, shooter: int, radius: float) -> np.ndarray:
    """``(n_exits, n_walkable)``: the route to each exit keeps farther than ``radius`` from ``shooter``.

    Uses pointer doubling along the next-hop chains.
    """
    coords = layout.coords
    sx, sy = coords[shooter]
    clear = (np.abs(coords[:, 0] - sx) + np.abs(coords[:, 1] - sy)) > radius
    hops = exit_next_hops(layout)
    span = int(exit_distances(layout).max()) + 1
    out = np.empty(hops.shape, dtype=bool)
    for e in range(hops.shape[0]):
        safe = clear.copy()
        nxt = hops[e]
        reach = 1
        while reach < span:
            safe = safe & safe[nxt]
            nxt = nxt[nxt]
            reach *= 2
        out[e] = safe & clear[nxt]
    return out


def choose_exits(layout: FloorLayout, cells: np.ndarray, shooter: int | None = None, avoid_radius: float = 0.0) -> np.ndarray:
    """Exit id per cell: nearest by path cost, lowest id on ties.

    With ``shooter`` given, exits whose route stays out of ``avoid_radius``
    of the shooter are preferred when any exists for that cell.
    """
    dist = exit_distances(layout)[:, cells].astype(np.int64)
    big = np.iinfo(np.int64).max // 4
    dist = np.where(dist < 0, big, dist)
    if shooter is not None:
        safe = safe_exit_mask(layout, shooter, avoid_radius)[:, cells]
        guarded = np.where(safe, dist, big)
        use_safe = safe.any(axis=0)
        dist = np.where(use_safe[None, :], guarded, dist)
    return np.argmin(dist, axis=0)


def kill_probability(d: float, gamma: float) -> float:
    return max(0.0, (gamma - d) / gamma)


def targetable(modes: np.ndarray) -> np.ndarray:
    return (modes == StudentMode.UNAWARE) | (modes == StudentMode.RUNNING)


def visible_targets(layout: FloorLayout, shooter: int, cells: np.ndarray, radius: float) -> np.ndarray:
    """Mask of ``cells`` within Manhattan ``radius`` of ``shooter`` with clear sight."""
    coords = layout.coords
    d = np.abs(coords[cells, 0] - coords[shooter, 0]) + np.abs(coords[cells, 1] - coords[shooter, 1])
    return (d <= radius) & sight_matrix(layout, int(math.floor(radius)))[shooter, cells]


def shooter_decide(
    layout: FloorLayout,
    shooter: int,
    ids: np.ndarray,
    cells: np.ndarray,
    modes: np.ndarray,
    params: BehaviorParams,
    rng: np.random.Generator,
    *,
    speed: int = 1,
    last_visit: dict[int, int] | None = None,
    clock: int = 0,
) -> ShooterAction:
    """Shoot the nearest visible student in range, else walk toward the nearest one.

    Nearest is by path cost, ties to the lowest id. The shot succeeds with
    :func:`kill_probability` of the Manhattan distance. With nobody left to
    target the shooter sweeps the hallways.
    """
    live = targetable(modes)
    ids, cells = ids[live], cells[live]
    if len(ids) == 0:
        route = patrol_route(layout, shooter, last_visit or {}, speed, clock)
        return Move(route[-1] if route else shooter)
    path_cost = distance_matrix(layout)[shooter, cells]
    path_cost = np.where(path_cost < 0, np.iinfo(np.int32).max, path_cost)
    seen = visible_targets(layout, shooter, cells, params.gamma)
    if seen.any():
        k = int(np.argmin(np.where(seen, path_cost, np.iinfo(np.int32).max)))
        d = manhattan(layout.cell_of(shooter), layout.cell_of(int(cells[k])))
        p = kill_probability(d, params.gamma)
        return Kill(int(ids[k]), p, bool(rng.random() < p))
    k = int(np.argmin(path_cost))
    if path_cost[k] == np.iinfo(np.int32).max:
        route = patrol_route(layout, shooter, last_visit or {}, speed, clock)
        return Move(route[-1] if route else shooter)
    return Move(advance(layout, shooter, int(cells[k]), speed), int(ids[k]))


def patrol_route(layout: FloorLayout, start: int, last_visit: dict[int, int], steps: int, clock: int) -> tuple[int, ...]:
    """Deterministic sweep: unvisited neighbours first, else least recently visited.

    Hallway and exit cells are preferred over doors and rooms whenever one is
    adjacent. ``last_visit`` maps cell -> tick of last visit and is not modified.
    """
    seen = dict(last_visit)
    corridor = layout.is_corridor
    pos = start
    route = []
    for i in range(steps):
        nbrs = [int(n) for n in layout.neighbor_table[pos] if n >= 0]
        if not nbrs:
            break
        hall = [n for n in nbrs if corridor[n]]
        pool = hall or nbrs
        fresh = [n for n in pool if n not in seen]
        if fresh:
            pos = fresh[0]
        else:
            pos = min(pool, key=lambda n: seen[n])  # min keeps the first on ties
        seen[pos] = clock + i
        route.append(pos)
    return tuple(route)


def officer_decide(
    layout: FloorLayout,
    officer: OfficerState,
    shooter: tuple[int, bool] | None,
    ids: np.ndarray,
    cells: np.ndarray,
    modes: np.ndarray,
    elapsed: float,
    params: BehaviorParams,
    entry_time: float,
    *,
    shooter_id: int = -1,
    speed: int = 2,
    clock: int = 0,
    last_known_shooter: int | None = None,
) -> OfficerAction:
    """``shooter`` is ``(cell, active)``. ``last_known_shooter`` steers the patrol when set."""
    if not officer.inside:
        if elapsed < entry_time:
            return Wait()
        return Enter(int(layout.exit_cells[0]))
    pos = officer.cell
    coords = layout.coords
    near = (np.abs(coords[cells, 0] - coords[pos, 0]) + np.abs(coords[cells, 1] - coords[pos, 1])) <= params.sigma
    near &= modes <= StudentMode.HIDING
    evac = tuple(int(i) for i in ids[near])
    if shooter is not None and shooter[1]:
        scell = shooter[0]
        if visible_targets(layout, pos, np.array([scell]), params.gamma_officer)[0]:
            return Suppress(shooter_id, evac)
    if evac:
        return Evacuate(evac)
    if last_known_shooter is not None and distance_matrix(layout)[pos, last_known_shooter] > 0:
        route = []
        cur = pos
        for _ in range(speed):
            if cur == last_known_shooter:
                break
            cur = advance(layout, cur, last_known_shooter, 1)
            route.append(cur)
        return Patrol(tuple(route))
    return Patrol(patrol_route(layout, pos, officer.last_visit, speed, clock))


# objectives, evaluated for audit only


def shooter_objective(kills, t: float, d: float, gamma: float) -> float:
    """Sum of ``k_i * max(0, 1 - d_i/gamma)`` minus ``(t + d) / (t + d + 1)``."""
    gain = sum(k * kill_probability(di, gamma) for k, di in kills)
    cost = t + d
    return gain - cost / (cost + 1.0)


def officer_objective(suppressed: bool, evacuated_count: int, t_exposure: float, d_officer_shooter: float, params: BehaviorParams) -> float:
    return float(bool(suppressed)) + evacuated_count - t_exposure / (d_officer_shooter + params.epsilon)
