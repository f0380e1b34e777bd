import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from egress_sim.behavior import (
    HIDE,
    NO_EFFECT,
    RUN,
    BehaviorParams,
    Enter,
    Evacuate,
    Hide,
    Kill,
    Move,
    NoEffect,
    OfficerState,
    Patrol,
    Run,
    ShotContext,
    StudentMode,
    Suppress,
    Wait,
    choose_exits,
    heaviside,
    kill_probability,
    officer_decide,
    officer_objective,
    patrol_route,
    safe_exit_mask,
    shooter_decide,
    shooter_objective,
    student_decide_detector,
    student_decide_no_detector,
    student_gates,
    visible_targets,
)
from egress_sim.layout import line_of_sight, manhattan
from egress_sim.pathfind import distance_matrix, exit_next_hops
from helpers import make_map

U, R, H, EV, C = (StudentMode.UNAWARE, StudentMode.RUNNING, StudentMode.HIDING, StudentMode.EVACUATED, StudentMode.CASUALTY)


def hand_no_detector(dfk, dsh, a, b):
    """Written out case by case from the two step-function products."""
    hide_term = 1 if a - dfk >= 0 else 0
    run_term = (1 if dsh - a >= 0 else 0) * (1 if b - dsh >= 0 else 0)
    if hide_term:
        return HIDE
    if run_term:
        return RUN
    return NO_EFFECT


def test_heaviside_examples():
    assert heaviside(0) == 1
    assert heaviside(-3.2) == 0
    assert heaviside(7) == 1


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_heaviside_pair(x):
    total = heaviside(x) + heaviside(-x)
    assert total in (1, 2)
    assert (total == 2) == (x == 0)


def test_params_validation():
    with pytest.raises(ValueError):
        BehaviorParams(alpha=5, beta=5)
    with pytest.raises(ValueError):
        BehaviorParams(alpha=0)
    with pytest.raises(ValueError):
        BehaviorParams(sigma=0)


def test_context_requires_shot_before_kill():
    with pytest.raises(ValueError):
        ShotContext(cs=(0, 0), cfk=(1, 1), first_shot_fired=False)
    assert ShotContext(cs=(0, 0), first_shot_fired=True).hide_reference == (0, 0)
    assert ShotContext(cs=(0, 0), cfk=(3, 3), first_shot_fired=True).hide_reference == (3, 3)


def test_no_detector_table_small():
    p = BehaviorParams(alpha=5, beta=15)
    grid = np.arange(0, 18)
    dfk, dsh = np.meshgrid(grid, grid, indexing="ij")
    got = student_gates(dfk, dsh, p, detector=False)
    for i, j in itertools.product(grid, grid):
        assert got[i, j] == hand_no_detector(i, j, 5, 15)


def test_no_detector_examples():
    p = BehaviorParams()
    assert student_gates(0, 50, p, False) == HIDE
    assert student_gates(p.alpha + 1, p.beta + 1, p, False) == NO_EFFECT
    assert student_gates(p.alpha + 1, p.beta, p, False) == RUN


def test_detector_sweep():
    p = BehaviorParams()
    d = np.arange(0, 101)
    got = student_gates(d, d, p, detector=True)
    assert np.array_equal(got == HIDE, d <= p.alpha)
    assert np.array_equal(got == RUN, d > p.alpha)
    assert not (got == NO_EFFECT).any()


def test_detector_boundary():
    p = BehaviorParams()
    assert student_gates(p.alpha, p.alpha, p, True) == HIDE
    assert student_gates(p.alpha + 1, p.alpha + 1, p, True) == RUN


def test_decide_before_first_shot_is_no_effect(open_room):
    ctx = ShotContext(cs=(5, 5))
    p = BehaviorParams()
    assert student_decide_no_detector(open_room, (5, 6), ctx, p) == NoEffect()
    assert student_decide_detector(open_room, (5, 6), ctx, p) == NoEffect()


def test_decide_wrappers(open_room):
    p = BehaviorParams(alpha=2, beta=6)
    ctx = ShotContext(cs=(10, 10), cfk=(10, 9), first_shot_fired=True, detector_enabled=True)
    assert student_decide_no_detector(open_room, (10, 8), ctx, p) == Hide()
    assert student_decide_no_detector(open_room, (6, 8), ctx, p) == Run(0)
    assert student_decide_no_detector(open_room, (1, 1), ctx, p) == NoEffect()
    assert student_decide_detector(open_room, (1, 1), ctx, p) == Run(0)
    assert student_decide_detector(open_room, (11, 10), ctx, p) == Hide()


def test_detector_never_no_effect_after_shot(open_room):
    p = BehaviorParams()
    ctx = ShotContext(cs=(6, 6), cfk=(7, 6), first_shot_fired=True, detector_enabled=True)
    for i in range(open_room.n_walkable):
        action = student_decide_detector(open_room, open_room.cell_of(i), ctx, p)
        assert not isinstance(action, NoEffect)


def test_kill_probability_examples():
    assert kill_probability(0, 10) == 1.0
    assert kill_probability(10, 10) == 0.0
    assert kill_probability(5, 10) == 0.5
    assert kill_probability(25, 10) == 0.0


def test_kill_probability_exact():
    rng = random.Random(99)
    for _ in range(1000):
        g = rng.randint(1, 40)
        d = rng.randint(0, 60)
        exact = max(Fraction(0), 1 - Fraction(d, g))
        assert Fraction(kill_probability(d, g)) == Fraction(float(exact))


@given(st.integers(0, 100), st.integers(0, 100), st.integers(1, 50))
def test_kill_probability_monotone_bounded(a, b, g):
    lo, hi = sorted((a, b))
    assert 0.0 <= kill_probability(hi, g) <= kill_probability(lo, g) <= 1.0


def _shooter(layout, shooter_cell, students, modes=None, params=None, seed=0, **kw):
    ids = np.arange(len(students))
    cells = np.array([layout.idx(c) for c in students])
    modes = np.full(len(students), U) if modes is None else np.array(modes)
    return shooter_decide(layout, layout.idx(shooter_cell), ids, cells, modes, params or BehaviorParams(),
                          np.random.default_rng(seed), **kw)


def test_point_blank_always_kills(open_room):
    for seed in range(20):
        action = _shooter(open_room, (5, 5), [(5, 5)], seed=seed)
        assert action == Kill(0, 1.0, True)


def test_no_students_patrols(open_room):
    action = _shooter(open_room, (5, 5), [(2, 2)], modes=[EV])
    assert isinstance(action, Move) and action.target is None
    assert manhattan(open_room.cell_of(action.to), (5, 5)) == 1


def test_targets_lowest_path_cost(open_room):
    shooter = (6, 6)
    students = [(6, 2), (2, 1), (8, 6)]
    costs = [manhattan(shooter, s) for s in students]
    assert costs == [4, 9, 2]
    action = _shooter(open_room, shooter, students)
    assert isinstance(action, Kill) and action.victim == 2
    assert action.probability == kill_probability(2, 10)


def test_target_ties_lowest_id(open_room):
    action = _shooter(open_room, (6, 6), [(6, 9), (9, 6), (6, 3)])
    assert action.victim == 0


def test_never_targets_hidden_or_finished(open_room):
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randint(1, 8)
        cells = [open_room.cell_of(rng.randrange(open_room.n_walkable)) for _ in range(n)]
        modes = [rng.choice((U, R, H, EV, C)) for _ in range(n)]
        action = _shooter(open_room, (6, 6), cells, modes=modes, seed=rng.randrange(1000))
        if isinstance(action, Kill):
            assert modes[action.victim] in (U, R)
            assert manhattan((6, 6), cells[action.victim]) <= 10
            assert line_of_sight(open_room, (6, 6), cells[action.victim])


def test_shooter_does_not_shoot_through_walls():
    layout = make_map(["#######", "Eaa#bbE", "#######"])
    action = _shooter(layout, (1, 1), [(5, 1)])
    assert isinstance(action, Move)


def test_shooter_walks_toward_unseen_target(open_room):
    action = _shooter(open_room, (1, 1), [(12, 12)], params=BehaviorParams(gamma=3, beta=20))
    assert isinstance(action, Move) and action.target == 0
    assert manhattan(open_room.cell_of(action.to), (12, 12)) == 21


def test_visible_targets_match_ray(open_room):
    walled = make_map(["#########", "Eaa#aaaa#", "#a..#aaa#", "#aaaaaa.E", "#########"])
    for layout in (open_room, walled):
        cells = np.arange(layout.n_walkable)
        for s in range(0, layout.n_walkable, 7):
            mask = visible_targets(layout, s, cells, 6)
            for c in cells:
                a, b = layout.cell_of(s), layout.cell_of(int(c))
                assert mask[c] == (manhattan(a, b) <= 6 and line_of_sight(layout, a, b))


def _officer(layout, state, shooter, students, modes, elapsed, params=None, **kw):
    ids = np.arange(len(students))
    cells = np.array([layout.idx(c) for c in students], dtype=np.int64)
    return officer_decide(layout, state, shooter, ids, cells, np.array(modes, dtype=np.int64), elapsed,
                          params or BehaviorParams(), 300, **kw)


def test_officer_waits_then_enters(open_room):
    assert _officer(open_room, OfficerState(), None, [], [], 0) == Wait()
    assert _officer(open_room, OfficerState(), None, [], [], 299) == Wait()
    assert _officer(open_room, OfficerState(), None, [], [], 300) == Enter(open_room.idx(open_room.exits[0]))


def test_officer_suppresses_at_range(open_room):
    p = BehaviorParams()
    officer = OfficerState(inside=True, cell=open_room.idx((1, 1)))
    g = int(p.gamma_officer)
    shooter_cell = open_room.idx((1 + 6, 1 + g - 1 - 6))
    action = _officer(open_room, officer, (shooter_cell, True), [(2, 1), (12, 12)], [H, U], 320, shooter_id=7)
    assert action == Suppress(7, (0,))
    far = open_room.idx((12, 12))
    officer = OfficerState(inside=True, cell=open_room.idx((1, 1)))
    assert not isinstance(_officer(open_room, officer, (far, True), [], [], 320), Suppress)
    assert not isinstance(_officer(open_room, officer, (shooter_cell, False), [], [], 320), Suppress)


def test_officer_evacuates_within_hearing(open_room):
    officer = OfficerState(inside=True, cell=open_room.idx((6, 6)))
    students = [(6, 7), (10, 10), (12, 12), (5, 6), (6, 5)]
    action = _officer(open_room, officer, None, students, [H, U, U, C, EV], 320, params=BehaviorParams(sigma=8))
    assert action == Evacuate((0, 1))


def test_officer_patrol_prefers_unvisited():
    layout = make_map(["#######", "E.....E", "##a####", "#######"])
    start = layout.idx((3, 1))
    visited = {layout.idx((4, 1)): 0}
    officer = OfficerState(inside=True, cell=start, last_visit=visited)
    action = _officer(layout, officer, None, [], [], 320, speed=1)
    assert isinstance(action, Patrol)
    assert layout.cell_of(action.route[-1]) == (2, 1)
    route = patrol_route(layout, start, {layout.idx((4, 1)): 5, layout.idx((2, 1)): 3}, 1, 10)
    assert layout.cell_of(route[0]) == (2, 1)


def test_officer_heads_for_last_shot():
    layout = make_map(["#########", "E.......E", "###a#####", "#########"])
    officer = OfficerState(inside=True, cell=layout.idx((1, 1)))
    action = _officer(layout, officer, None, [], [], 320, speed=2, last_known_shooter=layout.idx((6, 1)))
    assert [layout.cell_of(c) for c in action.route] == [(2, 1), (3, 1)]


def test_exit_choice_avoids_shooter():
    layout = make_map(["###########", "E.........E", "#####a#####", "###########"])
    student = np.array([layout.idx((5, 2))])
    assert choose_exits(layout, student).tolist() == [0]
    shooter = layout.idx((1, 1))
    assert choose_exits(layout, student, shooter=shooter, avoid_radius=3).tolist() == [1]
    # no safe route at all: fall back to nearest
    assert choose_exits(layout, student, shooter=layout.idx((5, 1)), avoid_radius=3).tolist() == [0]


def test_safe_mask_matches_walk():
    layout = make_map(["###########", "E.........E", "#aaaa#aaaa#", "#aaaaaaaaa#", "###########"])
    hops = exit_next_hops(layout)
    coords = layout.coords
    for shooter in range(0, layout.n_walkable, 3):
        mask = safe_exit_mask(layout, shooter, 2)
        for e in range(len(layout.exits)):
            for i in range(layout.n_walkable):
                pos, ok = i, True
                for _ in range(layout.n_walkable + 1):
                    ok &= int(np.abs(coords[pos] - coords[shooter]).sum()) > 2
                    if hops[e, pos] == pos:
                        break
                    pos = int(hops[e, pos])
                assert mask[e, i] == ok


def test_shooter_objective_examples():
    assert shooter_objective([], 0, 0, 10) == 0.0
    assert shooter_objective([], 3, 2, 10) == pytest.approx(-5 / 6)
    assert shooter_objective([(1, 0)], 0, 0, 10) == 1.0
    assert shooter_objective([(1, 0), (1, 5)], 0, 0, 10) == 1.5


def test_officer_objective_examples():
    p = BehaviorParams()
    assert officer_objective(False, 0, 0, 5, p) == 0.0
    assert officer_objective(True, 3, 0, 5, p) == 4.0
    value = officer_objective(False, 0, 2, 0, p)
    assert np.isfinite(value) and value == pytest.approx(-2 / p.epsilon)


# policy comparisons against random baselines

ARENA = make_map(["######", "Eaaaa#", "#aaaa#", "#aaaa#", "#aaaa#", "######"], name="arena")


def _shooter_episode(greedy, seed, ticks=12):
    rng = np.random.default_rng(seed)
    params = BehaviorParams(alpha=1, beta=4, gamma=3)
    cells = rng.choice(ARENA.room_cells, size=4, replace=False)
    modes = np.full(4, U)
    pos = int(rng.choice(ARENA.room_cells))
    kills, moved = [], 0
    for _ in range(ticks):
        if greedy:
            action = shooter_decide(ARENA, pos, np.arange(4), cells, modes, params, rng)
        else:
            live = np.flatnonzero(modes == U)
            seen = live[visible_targets(ARENA, pos, cells[live], params.gamma)] if len(live) else live
            if len(seen) and rng.random() < 0.5:
                k = int(rng.choice(seen))
                d = manhattan(ARENA.cell_of(pos), ARENA.cell_of(int(cells[k])))
                prob = kill_probability(d, params.gamma)
                action = Kill(k, prob, bool(rng.random() < prob))
            else:
                nbrs = [int(n) for n in ARENA.neighbor_table[pos] if n >= 0]
                action = Move(int(rng.choice(nbrs)))
        if isinstance(action, Kill):
            if action.success:
                modes[action.victim] = C
                kills.append((1, manhattan(ARENA.cell_of(pos), ARENA.cell_of(int(cells[action.victim])))))
        else:
            moved += int(distance_matrix(ARENA)[pos, action.to])
            pos = action.to
    return shooter_objective(kills, ticks, moved, params.gamma)


def test_greedy_shooter_beats_random():
    greedy = np.mean([_shooter_episode(True, s) for s in range(100)])
    rand = np.mean([_shooter_episode(False, s) for s in range(100)])
    assert greedy >= rand


def _officer_episode(rule, seed, ticks=10):
    rng = np.random.default_rng(seed)
    params = BehaviorParams(alpha=1, beta=4, gamma=3, gamma_officer=3, sigma=2)
    layout = ARENA
    cells = rng.choice(layout.room_cells, size=5, replace=False)
    modes = np.full(5, H)
    shooter = int(rng.choice(layout.room_cells))
    state = OfficerState(inside=True, cell=int(layout.exit_cells[0]))
    suppressed, evacuated, exposure = False, 0, 0
    for t in range(ticks):
        if rule:
            action = officer_decide(layout, state, (shooter, not suppressed), np.arange(5), cells, modes, 300 + t,
                                    params, 300, speed=1, clock=t)
        else:
            nbrs = [int(n) for n in layout.neighbor_table[state.cell] if n >= 0]
            action = Patrol((int(rng.choice(nbrs)),))
        if isinstance(action, Suppress):
            suppressed = True
            action = Evacuate(action.evacuate)
        if isinstance(action, Evacuate):
            for i in action.student_ids:
                if modes[i] != EV:
                    modes[i] = EV
                    evacuated += 1
        elif isinstance(action, Patrol) and action.route:
            state.cell = action.route[-1]
            state.last_visit[state.cell] = t
        if not suppressed and visible_targets(layout, shooter, np.array([state.cell]), params.gamma)[0]:
            exposure += 1
    d = manhattan(layout.cell_of(state.cell), layout.cell_of(shooter))
    return officer_objective(suppressed, evacuated, exposure, d, params)


def test_rule_officer_beats_random_walk():
    rule = np.mean([_officer_episode(True, s) for s in range(100)])
    rand = np.mean([_officer_episode(False, s) for s in range(100)])
    assert rule >= rand


def test_officer_ignores_unreachable_shot_cell():
    layout = make_map(["#######", "E.a#.aE", "#######"])
    officer = OfficerState(inside=True, cell=layout.idx((1, 1)))
    action = _officer(layout, officer, None, [], [], 320, speed=1, last_known_shooter=layout.idx((4, 1)))
    assert isinstance(action, Patrol)
    assert layout.cell_of(action.route[-1]) == (0, 1)
