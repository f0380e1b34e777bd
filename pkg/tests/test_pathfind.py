import random

import numpy as np
import pytest

from egress_sim.layout import BUNDLED_MAPS, load_layout, manhattan
from egress_sim.pathfind import (
    NoPath,
    distance_matrix,
    exit_next_hops,
    nearest_exit,
    shortest_path,
    step_toward,
)
from helpers import bfs_oracle, make_map, random_map


def _walkable(layout):
    return [layout.cell_of(i) for i in range(layout.n_walkable)]


def test_same_cell_costs_nothing(corridor):
    p = shortest_path(corridor, (3, 1), (3, 1))
    assert p.cost == 0
    assert p.cells == ((3, 1),)


def test_straight_corridor(corridor):
    p = shortest_path(corridor, (1, 1), (6, 1))
    assert p.cost == 5
    assert p.cells == tuple((x, 1) for x in range(1, 7))


def test_wall_endpoint_rejected(corridor):
    with pytest.raises(ValueError):
        shortest_path(corridor, (0, 0), (3, 1))


def test_disconnected_cells_raise():
    layout = make_map(["#####", "Ea#.#", "#####"])
    with pytest.raises(NoPath):
        shortest_path(layout, (1, 1), (3, 1))


def test_costs_match_bfs_on_random_maps():
    rng = random.Random(21)
    for _ in range(60):
        layout = random_map(rng)
        cells = _walkable(layout)
        for a in rng.sample(cells, min(5, len(cells))):
            oracle = bfs_oracle(layout.rows, a)
            for b in cells:
                if b in oracle:
                    assert shortest_path(layout, a, b).cost == oracle[b]
                else:
                    with pytest.raises(NoPath):
                        shortest_path(layout, a, b)


def test_paths_are_valid_walks():
    rng = random.Random(8)
    for _ in range(40):
        layout = random_map(rng)
        cells = _walkable(layout)
        for _ in range(10):
            a, b = rng.choice(cells), rng.choice(cells)
            try:
                p = shortest_path(layout, a, b)
            except NoPath:
                continue
            assert p.cells[0] == a and p.cells[-1] == b
            assert all(layout.is_walkable(c) for c in p.cells)
            assert all(manhattan(u, v) == 1 for u, v in zip(p.cells, p.cells[1:]))


@pytest.mark.parametrize("name", BUNDLED_MAPS)
def test_cost_is_symmetric(name):
    d = distance_matrix(load_layout(name))
    assert np.array_equal(d, d.T)


def test_path_is_deterministic(open_room):
    a = shortest_path(open_room, (1, 1), (12, 12))
    b = shortest_path(open_room, (1, 1), (12, 12))
    assert a == b
    # up, right, down, left preference: first move goes right, never up (blocked)
    assert a.cells[1] == (2, 1)


def test_next_to_exit():
    layout = make_map(["#####", "E.aa#", "#####"])
    goal, path = nearest_exit(layout, (1, 1))
    assert goal == (0, 1) and path.cost == 1


def test_exit_tie_goes_to_lowest_id():
    layout = make_map(["#####", "E.a.E", "#####"])
    goal, path = nearest_exit(layout, (2, 1))
    assert goal == layout.exits[0] == (0, 1)
    assert path.cost == 2


def test_nearest_exit_is_minimal_everywhere():
    rng = random.Random(4)
    for _ in range(40):
        layout = random_map(rng)
        for c in _walkable(layout):
            costs = []
            for e in layout.exits:
                try:
                    costs.append(shortest_path(layout, c, e).cost)
                except NoPath:
                    costs.append(None)
            if all(x is None for x in costs):
                with pytest.raises(NoPath):
                    nearest_exit(layout, c)
                continue
            goal, path = nearest_exit(layout, c)
            best = min(x for x in costs if x is not None)
            assert path.cost == best
            assert layout.exits.index(goal) == costs.index(best)


def test_step_toward_examples(corridor):
    assert step_toward(corridor, (6, 1), (1, 1), 0) == (6, 1)
    assert step_toward(corridor, (6, 1), (1, 1), 2) == (4, 1)
    assert step_toward(corridor, (6, 1), (1, 1), 5) == (1, 1)
    assert step_toward(corridor, (6, 1), (1, 1), 9) == (1, 1)


def test_step_toward_follows_path(open_room):
    p = shortest_path(open_room, (3, 3), (8, 10))
    for speed in range(p.cost + 2):
        assert step_toward(open_room, (3, 3), (8, 10), speed) == p.cells[min(speed, p.cost)]


def test_step_toward_never_moves_away():
    rng = random.Random(13)
    for _ in range(30):
        layout = random_map(rng)
        cells = _walkable(layout)
        d = distance_matrix(layout)
        for _ in range(20):
            a, b = rng.choice(cells), rng.choice(cells)
            if d[layout.idx(a), layout.idx(b)] < 0:
                continue
            for speed in (1, 2, 3):
                nxt = step_toward(layout, a, b, speed)
                assert layout.is_walkable(nxt)
                before = d[layout.idx(a), layout.idx(b)]
                after = d[layout.idx(nxt), layout.idx(b)]
                assert after == max(0, before - speed)


@pytest.mark.parametrize("name", BUNDLED_MAPS)
def test_exit_hop_table_matches_paths(name):
    layout = load_layout(name)
    hops = exit_next_hops(layout)
    rng = random.Random(2)
    for i in rng.sample(range(layout.n_walkable), 60):
        for e, goal in enumerate(layout.exits):
            p = shortest_path(layout, layout.cell_of(i), goal)
            expected = p.cells[1] if p.cost else p.cells[0]
            assert layout.cell_of(int(hops[e, i])) == expected
