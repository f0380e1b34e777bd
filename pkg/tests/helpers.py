"""Fixture builders and independent oracles shared by the tests."""

from __future__ import annotations

import random
from collections import deque
from fractions import Fraction

from egress_sim.layout import LayoutValidationError, parse_layout


def make_map(rows: list[str], name: str = "fixture"):
    text = f"{len(rows[0])}x{len(rows)}\n" + "\n".join(rows) + "\n"
    return parse_layout(text, name=name)


def random_map(rng: random.Random, max_w: int = 12, max_h: int = 12, wall_p: float = 0.3):
    """Random valid layout no larger than ``max_w x max_h``; may contain sealed pockets."""
    while True:
        w, h = rng.randint(3, max_w), rng.randint(3, max_h)
        grid = [["#" if rng.random() < wall_p else rng.choice(".a") for _ in range(w)] for _ in range(h)]
        border = [(x, 0) for x in range(w)] + [(x, h - 1) for x in range(w)] + [(0, y) for y in range(h)] + [(w - 1, y) for y in range(h)]
        for _ in range(rng.randint(1, 3)):
            x, y = rng.choice(border)
            grid[y][x] = "E"
        try:
            return make_map(["".join(r) for r in grid], name="random")
        except LayoutValidationError:
            continue


def bfs_oracle(rows: tuple[str, ...], start: tuple[int, int]) -> dict[tuple[int, int], int]:
    """Plain breadth-first search over non-'#' glyphs."""
    h, w = len(rows), len(rows[0])
    dist = {start: 0}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny < h and rows[ny][nx] != "#" and (nx, ny) not in dist:
                dist[(nx, ny)] = dist[(x, y)] + 1
                queue.append((nx, ny))
    return dist


def segment_touches_cell(a, b, cell) -> bool:
    """Exact test: does the segment between the centres of ``a`` and ``b`` meet the closed square of ``cell``?"""
    x0, y0 = Fraction(a[0]) + Fraction(1, 2), Fraction(a[1]) + Fraction(1, 2)
    x1, y1 = Fraction(b[0]) + Fraction(1, 2), Fraction(b[1]) + Fraction(1, 2)
    lo, hi = Fraction(0), Fraction(1)
    for p0, d, cmin in ((x0, x1 - x0, cell[0]), (y0, y1 - y0, cell[1])):
        cmax = cmin + 1
        if d == 0:
            if not cmin <= p0 <= cmax:
                return False
            continue
        t0, t1 = (cmin - p0) / d, (cmax - p0) / d
        if t0 > t1:
            t0, t1 = t1, t0
        lo, hi = max(lo, t0), min(hi, t1)
        if lo > hi:
            return False
    return True


def ray_cells_oracle(a, b) -> set[tuple[int, int]]:
    xs = range(min(a[0], b[0]) - 1, max(a[0], b[0]) + 2)
    ys = range(min(a[1], b[1]) - 1, max(a[1], b[1]) + 2)
    return {(x, y) for x in xs for y in ys if segment_touches_cell(a, b, (x, y))}


def los_oracle(layout, a, b) -> bool:
    return all(
        not (0 <= x < layout.width and 0 <= y < layout.height) or layout.rows[y][x] != "#"
        for x, y in ray_cells_oracle(a, b)
    )


# PASS/FAIL lines from the acceptance suite, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []
