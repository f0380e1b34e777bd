"""Replay an event log and check it against the model's rules."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .behavior import BehaviorParams, StudentMode
from .engine import EventKind, TickEvent
from .layout import FloorLayout, line_of_sight, manhattan

U, R, H, V, C = (
    StudentMode.UNAWARE,
    StudentMode.RUNNING,
    StudentMode.HIDING,
    StudentMode.EVACUATED,
    StudentMode.CASUALTY,
)

_TRANSITIONS = {
    EventKind.RUN_START: ({U, H}, R),
    EventKind.HIDE_START: ({U, R}, H),
    EventKind.EVACUATED: ({U, R, H}, V),
    EventKind.KILL: ({U, R}, C),
}


@dataclass
class AuditResult:
    violations: list[str]
    counts: dict[str, int]

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_events(
    events: list[TickEvent],
    layout: FloorLayout,
    student_count: int,
    params: BehaviorParams,
    officer_entry: float = 300.0,
    tick: float = 1.0,
) -> AuditResult:
    bad: list[str] = []
    modes = [U] * student_count
    shooter_id, officer_id = student_count, student_count + 1
    first_kills = 0
    suppressed_at = None
    officer_seen = False
    entry_tick = math.ceil(officer_entry / tick - 1e-9) * tick
    last_time = -math.inf
    prev = None

    for time, group in itertools.groupby(events, key=lambda e: e.time):
        if time < last_time:
            bad.append(f"t={time}: timestamps go backwards")
        last_time = time
        for ev in group:
            where = f"t={ev.time} {ev.kind.value}({ev.subject})"
            if ev.kind in (EventKind.OFFICER_ENTERED, EventKind.SUPPRESSED) or ev.subject == officer_id:
                if ev.time < officer_entry:
                    bad.append(f"{where}: officer acts before entry at {officer_entry}")
                if not officer_seen:
                    officer_seen = True
                    if ev.kind != EventKind.OFFICER_ENTERED or abs(ev.time - entry_tick) > 1e-9:
                        bad.append(f"{where}: first officer event must be OfficerEntered at {entry_tick}")
            if suppressed_at is not None and ev.kind not in (EventKind.EVACUATED, EventKind.RUN_START):
                bad.append(f"{where}: event after suppression")
            if ev.kind == EventKind.SUPPRESSED:
                if ev.subject != shooter_id:
                    bad.append(f"{where}: suppressed agent is not the shooter")
                suppressed_at = ev.time
            elif ev.kind == EventKind.SHOT_FIRED:
                if ev.subject != shooter_id:
                    bad.append(f"{where}: shot by a non-shooter")
            elif ev.kind == EventKind.FIRST_KILL:
                first_kills += 1
                if first_kills > 1:
                    bad.append(f"{where}: second FirstKill")
                if prev is None or prev.kind != EventKind.KILL or prev.subject != ev.subject:
                    bad.append(f"{where}: FirstKill not paired with a Kill")
            elif ev.kind in _TRANSITIONS:
                if not 0 <= ev.subject < student_count:
                    bad.append(f"{where}: unknown student")
                else:
                    allowed, new = _TRANSITIONS[ev.kind]
                    if modes[ev.subject] not in allowed:
                        bad.append(f"{where}: illegal transition from {StudentMode.NAMES[modes[ev.subject]]}")
                    modes[ev.subject] = new
                if ev.kind == EventKind.KILL:
                    if prev is None or prev.kind != EventKind.SHOT_FIRED or prev.time != ev.time:
                        bad.append(f"{where}: kill without a shot in the same tick")
                    else:
                        d = manhattan(prev.location, ev.location)
                        if d > params.gamma:
                            bad.append(f"{where}: kill at distance {d} > gamma {params.gamma}")
                        if not line_of_sight(layout, prev.location, ev.location):
                            bad.append(f"{where}: kill through a wall")
            prev = ev
        counts = [modes.count(m) for m in range(len(StudentMode.NAMES))]
        if sum(counts) != student_count:
            bad.append(f"t={time}: agent count {sum(counts)} != {student_count}")

    counts = {name: modes.count(m) for m, name in enumerate(StudentMode.NAMES)}
    return AuditResult(bad, counts)
