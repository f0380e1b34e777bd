"""Tick loop: shooter acts, then students, then the officer.

Each tick is stamped with the clock value at its start. Student ids are
``0..N-1``; the shooter is ``N`` and the officer ``N+1``.
"""

from __future__ import annotations

import copy
import enum
import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import behavior as bh
from .behavior import BehaviorParams, OfficerState, ShotContext, StudentMode
from .layout import Cell, FloorLayout, LayoutTooSmall, load_layout
from .pathfind import exit_next_hops

PRESET_RUNTIMES = (360, 420, 480, 540)


@dataclass(frozen=True)
class SimConfig:
    layout: str | FloorLayout = "structure1"
    student_count: int = 100
    runtime: float = 360
    tick: float = 1.0
    detector_enabled: bool = False
    officer_entry: float = 300
    student_speed: int = 1
    shooter_speed: int = 1
    officer_speed: int = 2
    params: BehaviorParams = field(default_factory=BehaviorParams)
    seed: int = 0
    placement_seed: int = 0

    def __post_init__(self):
        if self.student_count <= 0:
            raise ValueError("student_count must be positive")
        if self.tick <= 0:
            raise ValueError("tick must be positive")
        if self.runtime < 0:
            raise ValueError("runtime must be non-negative")
        if self.officer_entry < 0:
            raise ValueError("officer_entry must be non-negative")
        for name in ("student_speed", "shooter_speed", "officer_speed"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def resolve_layout(self) -> FloorLayout:
        return self.layout if isinstance(self.layout, FloorLayout) else load_layout(self.layout)

    @property
    def layout_name(self) -> str:
        return self.layout.name if isinstance(self.layout, FloorLayout) else str(self.layout)

    @property
    def n_steps(self) -> int:
        return steps_for(self.runtime, self.tick)


def steps_for(runtime: float, tick: float) -> int:
    return int(math.ceil(runtime / tick - 1e-9))


class EventKind(str, enum.Enum):
    SHOT_FIRED = "ShotFired"
    FIRST_KILL = "FirstKill"
    KILL = "Kill"
    HIDE_START = "HideStart"
    RUN_START = "RunStart"
    EVACUATED = "Evacuated"
    OFFICER_ENTERED = "OfficerEntered"
    SUPPRESSED = "Suppressed"


@dataclass(frozen=True)
class TickEvent:
    time: float
    kind: EventKind
    subject: int
    location: Cell

    def to_line(self) -> str:
        return f"{format_time(self.time)},{self.kind.value},{self.subject},{self.location[0]},{self.location[1]}"

    @classmethod
    def from_line(cls, line: str) -> "TickEvent":
        t, kind, subject, x, y = line.strip().split(",")
        return cls(float(t), EventKind(kind), int(subject), (int(x), int(y)))


def format_time(t: float) -> str:
    text = f"{t:.6f}".rstrip("0").rstrip(".")
    return text or "0"


def events_to_text(events) -> str:
    return "".join(e.to_line() + "\n" for e in events)


@dataclass(frozen=True)
class AgentState:
    agent_id: int
    role: str  # student | shooter | officer
    mode: str
    position: Cell | None


@dataclass(frozen=True)
class RunOutcome:
    student_count: int
    casualties: int
    evacuated: int
    hiding: int
    still_inside: int
    suppressed: bool
    suppression_time: float | None

    @property
    def casualty_pct(self) -> float:
        return 100.0 * self.casualties / self.student_count

    @property
    def evacuation_pct(self) -> float:
        return 100.0 * self.evacuated / self.student_count

    def summary_line(self) -> str:
        st = "-" if self.suppression_time is None else format_time(self.suppression_time)
        return (
            f"casualties={self.casualties} evacuated={self.evacuated} hiding={self.hiding} "
            f"still_inside={self.still_inside} suppressed={int(self.suppressed)} suppression_time={st} "
            f"casualty_pct={self.casualty_pct:.2f} evacuation_pct={self.evacuation_pct:.2f}"
        )


@dataclass
class WorldState:
    layout: FloorLayout
    config: SimConfig
    positions: np.ndarray  # dense cell per student
    modes: np.ndarray
    exit_target: np.ndarray  # exit id per running student, -1 otherwise
    shooter_cell: int
    shooter_active: bool
    officer: OfficerState
    rng: np.random.Generator
    step_index: int = 0
    first_shot_fired: bool = False
    first_kill_cell: int | None = None
    last_shot_cell: int | None = None
    suppression_time: float | None = None
    shooter_visits: dict[int, int] = field(default_factory=dict)
    events: list[TickEvent] = field(default_factory=list)

    @property
    def clock(self) -> float:
        return self.step_index * self.config.tick

    @property
    def student_count(self) -> int:
        return len(self.modes)

    @property
    def shooter_id(self) -> int:
        return self.student_count

    @property
    def officer_id(self) -> int:
        return self.student_count + 1

    @property
    def terminal(self) -> bool:
        return self.step_index >= self.config.n_steps

    def context(self) -> ShotContext:
        cfk = None if self.first_kill_cell is None else self.layout.cell_of(self.first_kill_cell)
        return ShotContext(
            cs=self.layout.cell_of(self.shooter_cell),
            cfk=cfk,
            first_shot_fired=self.first_shot_fired,
            detector_enabled=self.config.detector_enabled,
        )

    def mode_counts(self) -> dict[str, int]:
        counts = np.bincount(self.modes, minlength=len(StudentMode.NAMES))
        return {name: int(c) for name, c in zip(StudentMode.NAMES, counts)}

    def agent_states(self) -> list[AgentState]:
        cell = self.layout.cell_of
        out = [
            AgentState(i, "student", StudentMode.NAMES[m], cell(int(p)))
            for i, (p, m) in enumerate(zip(self.positions, self.modes))
        ]
        out.append(AgentState(self.shooter_id, "shooter", "Active" if self.shooter_active else "Suppressed", cell(self.shooter_cell)))
        out.append(
            AgentState(
                self.officer_id,
                "officer",
                "Patrolling" if self.officer.inside else "Outside",
                cell(self.officer.cell) if self.officer.inside else None,
            )
        )
        return out

    def outcome(self) -> RunOutcome:
        c = np.bincount(self.modes, minlength=5)
        return RunOutcome(
            student_count=self.student_count,
            casualties=int(c[StudentMode.CASUALTY]),
            evacuated=int(c[StudentMode.EVACUATED]),
            hiding=int(c[StudentMode.HIDING]),
            still_inside=int(c[StudentMode.UNAWARE] + c[StudentMode.RUNNING]),
            suppressed=not self.shooter_active,
            suppression_time=self.suppression_time,
        )


def place_agents(config: SimConfig, layout: FloorLayout | None = None) -> WorldState:
    """Initial state; positions depend only on ``placement_seed``."""
    layout = layout or config.resolve_layout()
    rooms = layout.room_cells
    if len(rooms) < 1:
        raise LayoutTooSmall(f"{layout.name} has no room cells")
    halls = layout.hallway_cells
    if len(halls) == 0:
        halls = rooms
    place = np.random.default_rng(config.placement_seed)
    positions = rooms[place.integers(0, len(rooms), size=config.student_count)].astype(np.int32)
    shooter = int(halls[place.integers(0, len(halls))])
    n = config.student_count
    return WorldState(
        layout=layout,
        config=config,
        positions=positions,
        modes=np.zeros(n, dtype=np.int8),
        exit_target=np.full(n, -1, dtype=np.int32),
        shooter_cell=shooter,
        shooter_active=True,
        officer=OfficerState(),
        rng=np.random.default_rng(config.seed),
        shooter_visits={shooter: 0},
    )


def step(state: WorldState) -> WorldState:
    """Advance one tick in place and return the state. No-op once terminal."""
    if state.terminal:
        return state
    _shooter_phase(state)
    _student_phase(state)
    _officer_phase(state)
    state.step_index += 1
    return state


def _emit(state: WorldState, kind: EventKind, subject: int, cell: int) -> None:
    state.events.append(TickEvent(state.clock, kind, subject, state.layout.cell_of(cell)))


def _shooter_phase(state: WorldState) -> None:
    if not state.shooter_active:
        return
    cfg = state.config
    ids = np.arange(state.student_count)
    action = bh.shooter_decide(
        state.layout,
        state.shooter_cell,
        ids,
        state.positions,
        state.modes,
        cfg.params,
        state.rng,
        speed=cfg.shooter_speed,
        last_visit=state.shooter_visits,
        clock=state.step_index,
    )
    if isinstance(action, bh.Kill):
        state.first_shot_fired = True
        state.last_shot_cell = state.shooter_cell
        _emit(state, EventKind.SHOT_FIRED, state.shooter_id, state.shooter_cell)
        if action.success:
            victim_cell = int(state.positions[action.victim])
            state.modes[action.victim] = StudentMode.CASUALTY
            state.exit_target[action.victim] = -1
            _emit(state, EventKind.KILL, action.victim, victim_cell)
            if state.first_kill_cell is None:
                state.first_kill_cell = victim_cell
                _emit(state, EventKind.FIRST_KILL, action.victim, victim_cell)
    else:
        state.shooter_cell = action.to
        state.shooter_visits[action.to] = state.step_index


def _start_running(state: WorldState, who: np.ndarray, avoid_shooter: bool) -> None:
    if len(who) == 0:
        return
    cfg = state.config
    shooter = state.shooter_cell if avoid_shooter else None
    state.exit_target[who] = bh.choose_exits(state.layout, state.positions[who], shooter, cfg.params.gamma)
    state.modes[who] = StudentMode.RUNNING


def _student_phase(state: WorldState) -> None:
    cfg = state.config
    layout = state.layout
    if state.first_shot_fired and state.shooter_active:
        unaware = np.nonzero(state.modes == StudentMode.UNAWARE)[0]
        if len(unaware):
            xy = layout.coords[state.positions[unaware]]
            ctx = state.context()
            fx, fy = ctx.hide_reference
            sx, sy = ctx.cs
            d_fk = np.abs(xy[:, 0] - fx) + np.abs(xy[:, 1] - fy)
            d_sh = np.abs(xy[:, 0] - sx) + np.abs(xy[:, 1] - sy)
            codes = bh.student_gates(d_fk, d_sh, cfg.params, cfg.detector_enabled)
            hide = unaware[codes == bh.HIDE]
            run = unaware[codes == bh.RUN]
            state.modes[hide] = StudentMode.HIDING
            _start_running(state, run, avoid_shooter=cfg.detector_enabled)
            for i, code in zip(unaware, codes):
                if code != bh.NO_EFFECT:
                    kind = EventKind.HIDE_START if code == bh.HIDE else EventKind.RUN_START
                    _emit(state, kind, int(i), int(state.positions[i]))

    running = np.nonzero(state.modes == StudentMode.RUNNING)[0]
    if len(running) == 0:
        return
    hops = exit_next_hops(layout)
    pos = state.positions[running]
    targets = state.exit_target[running]
    for _ in range(cfg.student_speed):
        pos = hops[targets, pos]
    state.positions[running] = pos
    arrived = running[layout.is_exit[pos]]
    state.modes[arrived] = StudentMode.EVACUATED
    state.exit_target[arrived] = -1
    for i in arrived:
        _emit(state, EventKind.EVACUATED, int(i), int(state.positions[i]))


def _officer_phase(state: WorldState) -> None:
    cfg = state.config
    officer = state.officer
    last_known = None
    if cfg.detector_enabled and state.shooter_active:
        last_known = state.last_shot_cell
    action = bh.officer_decide(
        state.layout,
        officer,
        (state.shooter_cell, state.shooter_active),
        np.arange(state.student_count),
        state.positions,
        state.modes,
        state.clock,
        cfg.params,
        cfg.officer_entry,
        shooter_id=state.shooter_id,
        speed=cfg.officer_speed,
        clock=state.step_index,
        last_known_shooter=last_known,
    )
    if isinstance(action, bh.Wait):
        return
    if isinstance(action, bh.Enter):
        officer.inside = True
        officer.cell = action.cell
        officer.last_visit[action.cell] = state.step_index
        _emit(state, EventKind.OFFICER_ENTERED, state.officer_id, action.cell)
        return
    if isinstance(action, bh.Patrol):
        for c in action.route:
            officer.last_visit[c] = state.step_index
        if action.route:
            officer.cell = action.route[-1]
        return
    evacuate = action.evacuate if isinstance(action, bh.Suppress) else action.student_ids
    if isinstance(action, bh.Suppress):
        state.shooter_active = False
        state.suppression_time = state.clock
        _emit(state, EventKind.SUPPRESSED, state.shooter_id, state.shooter_cell)
    for i in evacuate:
        state.modes[i] = StudentMode.EVACUATED
        state.exit_target[i] = -1
        _emit(state, EventKind.EVACUATED, i, int(state.positions[i]))
    if isinstance(action, bh.Suppress):
        hiders = np.nonzero(state.modes == StudentMode.HIDING)[0]
        _start_running(state, hiders, avoid_shooter=False)
        for i in hiders:
            _emit(state, EventKind.RUN_START, int(i), int(state.positions[i]))


def run_checkpoints(
    config: SimConfig, runtimes, layout: FloorLayout | None = None, state: WorldState | None = None
) -> tuple[list[RunOutcome], list[TickEvent]]:
    """Outcomes at several runtimes from one trajectory.

    Nothing in a tick depends on the configured runtime, so the outcome at
    ``t`` equals that of a separate run with ``runtime=t``. A prepared
    initial ``state`` may be passed instead of placing agents afresh.
    """
    runtimes = list(runtimes)
    horizon = max(runtimes, default=0)
    if state is None:
        state = place_agents(config, layout)
    state.config = replace(state.config, runtime=horizon)
    marks = sorted({steps_for(r, config.tick) for r in runtimes})
    snapshot = {}
    for mark in marks:
        while state.step_index < mark:
            step(state)
        snapshot[mark] = state.outcome()
    return [snapshot[steps_for(r, config.tick)] for r in runtimes], state.events


def run(config: SimConfig, layout: FloorLayout | None = None) -> tuple[RunOutcome, list[TickEvent]]:
    state = place_agents(config, layout)
    while not state.terminal:
        step(state)
    return state.outcome(), state.events


def state_digest(state: WorldState) -> str:
    """Short hash of every agent's role, mode and position."""
    return hashlib.sha256(repr(state.agent_states()).encode("utf-8")).hexdigest()[:16]


def snapshot(state: WorldState) -> WorldState:
    """Independent copy, sharing only the immutable layout."""
    return copy.deepcopy(state, memo={id(state.layout): state.layout, id(state.config): state.config})
