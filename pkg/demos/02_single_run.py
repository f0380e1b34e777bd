"""One paired run on a bundled floor, stepped tick by tick.

Both arms start from the same placement; only the detector flag differs.
Run with ``python3 demos/02_single_run.py``.
"""

from collections import Counter

from egress_sim import SimConfig, place_agents, step
from egress_sim.audit import audit_events

base = dict(layout="structure1", student_count=100, runtime=360, seed=11, placement_seed=11)

for detector in (False, True):
    cfg = SimConfig(detector_enabled=detector, **base)
    state = place_agents(cfg)
    print(f"\ndetector {'on' if detector else 'off'}")
    print("  shooter starts at", state.layout.cell_of(state.shooter_cell))
    while not state.terminal:
        step(state)
        if state.step_index in (1, 30, 60, 120, 300, 360):
            counts = state.mode_counts()
            print(f"  t={state.clock:>5.0f}s  " + "  ".join(f"{k}={v}" for k, v in counts.items()))

    outcome = state.outcome()
    print(" ", outcome.summary_line())
    kinds = Counter(e.kind.value for e in state.events)
    print("  events:", dict(sorted(kinds.items())))
    first = [e for e in state.events if e.kind.value == "ShotFired"][:1]
    if first:
        print("  first shot:", first[0].to_line())

    audit = audit_events(state.events, state.layout, cfg.student_count, cfg.params, cfg.officer_entry, cfg.tick)
    print("  audit clean:", audit.ok)
