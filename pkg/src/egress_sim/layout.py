"""ASCII floor maps: parsing, validation and spatial queries.

Map format (UTF-8)::

    ; comment lines start with a semicolon
    7x4
    #######
    E..+aa#
    ###aaa#
    #######

``#`` wall, ``.`` hallway floor, ``+`` door, ``E`` exit, any other ASCII
letter is room floor. A room is a 4-connected region of one letter; the same
letter may be reused for rooms that do not touch. One cell is one metre.
"""

from __future__ import annotations

import enum
import functools
import re
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

Cell = tuple[int, int]

# up, right, down, left -- the tie-break order used everywhere
NEIGHBOR_OFFSETS: tuple[Cell, ...] = ((0, -1), (1, 0), (0, 1), (-1, 0))

BUNDLED_MAPS = ("structure1", "gyte_floor1", "sulb_floor3")

_HEADER = re.compile(r"^(\d+)x(\d+)$")


class CellKind(enum.IntEnum):
    WALL = 0
    FLOOR = 1
    DOOR = 2
    EXIT = 3


class LayoutSyntaxError(ValueError):
    """Malformed map text: unknown glyph, bad header, ragged rows."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class LayoutValidationError(ValueError):
    """Well-formed map that breaks a structural rule."""

    def __init__(self, message: str, room_id: int | None = None):
        self.room_id = room_id
        super().__init__(message)


class LayoutTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class Room:
    room_id: int
    glyph: str
    cells: frozenset[Cell]


@dataclass(frozen=True)
class LayoutStats:
    room_count: int
    exit_count: int
    floor_cell_count: int


@dataclass(frozen=True)
class FloorLayout:
    """Immutable parsed map.

    ``rows`` holds the original glyphs and defines equality. The numpy arrays
    are indexed ``[y, x]``; public queries take ``(x, y)`` cells. Walkable
    cells also get a dense index (row-major) used by the path and sight
    tables in :mod:`egress_sim.pathfind`.
    """

    name: str
    width: int
    height: int
    rows: tuple[str, ...]
    rooms: tuple[Room, ...] = field(compare=False)
    exits: tuple[Cell, ...] = field(compare=False)
    kinds: np.ndarray = field(compare=False, repr=False)
    room_ids: np.ndarray = field(compare=False, repr=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def kind_at(self, cell: Cell) -> CellKind:
        x, y = cell
        return CellKind(int(self.kinds[y, x]))

    def room_at(self, cell: Cell) -> int | None:
        rid = int(self.room_ids[cell[1], cell[0]])
        return None if rid < 0 else rid

    def exit_id_at(self, cell: Cell) -> int | None:
        try:
            return self.exits.index(cell)
        except ValueError:
            return None

    def is_walkable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and self.kinds[cell[1], cell[0]] != CellKind.WALL

    def neighbors(self, cell: Cell) -> list[Cell]:
        """Walkable 4-neighbours in up, right, down, left order."""
        x, y = cell
        out = []
        for dx, dy in NEIGHBOR_OFFSETS:
            n = (x + dx, y + dy)
            if self.is_walkable(n):
                out.append(n)
        return out

    # dense indexing of walkable cells

    @functools.cached_property
    def index(self) -> np.ndarray:
        """``index[y, x]`` -> dense id of a walkable cell, -1 for walls."""
        idx = np.full((self.height, self.width), -1, dtype=np.int32)
        walk = self.kinds != CellKind.WALL
        idx[walk] = np.arange(int(walk.sum()), dtype=np.int32)
        return idx

    @functools.cached_property
    def coords(self) -> np.ndarray:
        """``coords[i] = (x, y)`` for dense id ``i``."""
        ys, xs = np.nonzero(self.kinds != CellKind.WALL)
        return np.stack([xs, ys], axis=1).astype(np.int32)

    @property
    def n_walkable(self) -> int:
        return len(self.coords)

    def idx(self, cell: Cell) -> int:
        i = int(self.index[cell[1], cell[0]])
        if i < 0:
            raise ValueError(f"{cell} is a wall")
        return i

    def cell_of(self, i: int) -> Cell:
        x, y = self.coords[i]
        return int(x), int(y)

    @functools.cached_property
    def neighbor_table(self) -> np.ndarray:
        """``(n_walkable, 4)`` dense neighbour ids in tie-break order, -1 if blocked."""
        xs, ys = self.coords[:, 0], self.coords[:, 1]
        table = np.full((self.n_walkable, 4), -1, dtype=np.int32)
        for k, (dx, dy) in enumerate(NEIGHBOR_OFFSETS):
            nx, ny = xs + dx, ys + dy
            ok = (nx >= 0) & (nx < self.width) & (ny >= 0) & (ny < self.height)
            table[ok, k] = self.index[ny[ok], nx[ok]]
        return table

    @functools.cached_property
    def room_cells(self) -> np.ndarray:
        """Dense ids of room floor cells, ascending."""
        rid = self.room_ids[self.coords[:, 1], self.coords[:, 0]]
        return np.nonzero(rid >= 0)[0].astype(np.int32)

    @functools.cached_property
    def hallway_cells(self) -> np.ndarray:
        """Dense ids of hallway floor cells (``.``), ascending."""
        k = self.kinds[self.coords[:, 1], self.coords[:, 0]]
        rid = self.room_ids[self.coords[:, 1], self.coords[:, 0]]
        return np.nonzero((k == CellKind.FLOOR) & (rid < 0))[0].astype(np.int32)

    @functools.cached_property
    def exit_cells(self) -> np.ndarray:
        return np.array([self.idx(c) for c in self.exits], dtype=np.int32)

    @functools.cached_property
    def is_exit(self) -> np.ndarray:
        flags = np.zeros(self.n_walkable, dtype=bool)
        flags[self.exit_cells] = True
        return flags

    @functools.cached_property
    def is_corridor(self) -> np.ndarray:
        """Cells patrols prefer: hallway floor and exits."""
        flags = np.zeros(self.n_walkable, dtype=bool)
        flags[self.hallway_cells] = True
        flags[self.exit_cells] = True
        return flags

    def to_text(self) -> str:
        lines = [f"; {self.name}", f"{self.width}x{self.height}", *self.rows]
        return "\n".join(lines) + "\n"


def _is_room_glyph(ch: str) -> bool:
    return ch.isascii() and ch.isalpha() and ch != "E"


def parse_layout(source: str, name: str = "unnamed") -> FloorLayout:
    """Parse map text into a validated :class:`FloorLayout`."""
    header: tuple[int, int] | None = None
    rows: list[str] = []
    row_lines: list[int] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.rstrip("\r")
        if line.startswith(";"):
            continue
        if header is None:
            if not line.strip():
                continue
            m = _HEADER.match(line.strip())
            if not m:
                raise LayoutSyntaxError(f"expected 'WxH' header, got {line!r}", lineno)
            header = (int(m.group(1)), int(m.group(2)))
            if header[0] < 1 or header[1] < 1:
                raise LayoutSyntaxError("dimensions must be positive", lineno)
            continue
        if not line:
            continue
        rows.append(line)
        row_lines.append(lineno)
    if header is None:
        raise LayoutSyntaxError("missing 'WxH' header")
    width, height = header

    if len(rows) != height:
        line = row_lines[height] if len(rows) > height else None
        raise LayoutSyntaxError(f"expected {height} rows, found {len(rows)}", line)

    kinds = np.zeros((height, width), dtype=np.int8)
    for y, (row, lineno) in enumerate(zip(rows, row_lines)):
        if len(row) != width:
            raise LayoutSyntaxError(f"row has {len(row)} characters, expected {width}", lineno)
        for x, ch in enumerate(row):
            if ch == "#":
                kinds[y, x] = CellKind.WALL
            elif ch == "." or _is_room_glyph(ch):
                kinds[y, x] = CellKind.FLOOR
            elif ch == "+":
                kinds[y, x] = CellKind.DOOR
            elif ch == "E":
                kinds[y, x] = CellKind.EXIT
            else:
                raise LayoutSyntaxError(f"unknown glyph {ch!r}", lineno, x + 1)

    room_ids = np.full((height, width), -1, dtype=np.int32)
    rooms: list[Room] = []
    for y in range(height):
        for x in range(width):
            ch = rows[y][x]
            if not _is_room_glyph(ch) or room_ids[y, x] >= 0:
                continue
            rid = len(rooms)
            cells = _flood(rows, (x, y), lambda c, g=ch: rows[c[1]][c[0]] == g)
            for cx, cy in cells:
                room_ids[cy, cx] = rid
            rooms.append(Room(rid, ch, frozenset(cells)))

    exits = tuple((x, y) for y in range(height) for x in range(width) if rows[y][x] == "E")

    layout = FloorLayout(
        name=name,
        width=width,
        height=height,
        rows=tuple(rows),
        rooms=tuple(rooms),
        exits=exits,
        kinds=kinds,
        room_ids=room_ids,
    )
    kinds.setflags(write=False)
    room_ids.setflags(write=False)
    _validate(layout)
    return layout


def _flood(rows, start: Cell, accept) -> list[Cell]:
    height, width = len(rows), len(rows[0])
    seen = {start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for dx, dy in NEIGHBOR_OFFSETS:
            n = (x + dx, y + dy)
            if 0 <= n[0] < width and 0 <= n[1] < height and n not in seen and accept(n):
                seen.add(n)
                queue.append(n)
    return sorted(seen, key=lambda c: (c[1], c[0]))


def _validate(layout: FloorLayout) -> None:
    if not layout.exits:
        raise LayoutValidationError("map has no exits")
    if not layout.rooms:
        raise LayoutValidationError("map has no rooms")
    w, h = layout.width, layout.height
    for eid, (x, y) in enumerate(layout.exits):
        if not (x in (0, w - 1) or y in (0, h - 1)):
            raise LayoutValidationError(f"exit {eid} at ({x},{y}) is inside the building, not on its boundary")
        if not layout.neighbors((x, y)):
            raise LayoutValidationError(f"exit {eid} at ({x},{y}) is walled in")
    for y in range(h):
        for x in range(w):
            if layout.kinds[y, x] == CellKind.DOOR and len(layout.neighbors((x, y))) < 2:
                raise LayoutValidationError(f"door at ({x},{y}) does not connect two open cells")

    reached = set()
    for e in layout.exits:
        if e not in reached:
            reached.update(_flood(layout.rows, e, layout.is_walkable))
    for room in layout.rooms:
        if reached.isdisjoint(room.cells):
            x, y = min(room.cells, key=lambda c: (c[1], c[0]))
            raise LayoutValidationError(
                f"room {room.room_id} ('{room.glyph}' at ({x},{y})) has no path to an exit", room.room_id
            )


def layout_stats(layout: FloorLayout) -> LayoutStats:
    """Counts by direct enumeration of the glyph grid."""
    rooms = set()
    exits = 0
    floor = 0
    for y in range(layout.height):
        for x in range(layout.width):
            ch = layout.rows[y][x]
            if ch == "E":
                exits += 1
            elif ch == "." or _is_room_glyph(ch):
                floor += 1
                if _is_room_glyph(ch):
                    rooms.add(int(layout.room_ids[y, x]))
    return LayoutStats(room_count=len(rooms), exit_count=exits, floor_cell_count=floor)


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def supercover(a: Cell, b: Cell) -> list[Cell]:
    """Every cell whose closed square touches the segment between cell centres.

    Where the segment crosses a grid corner exactly, both side cells are
    included, so a diagonal gap between two walls blocks sight.
    """
    x, y = a
    dx, dy = b[0] - a[0], b[1] - a[1]
    nx, ny = abs(dx), abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    cells = [(x, y)]
    ix = iy = 0
    while ix < nx or iy < ny:
        decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx
        if decision == 0:
            cells.append((x + sx, y))
            cells.append((x, y + sy))
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif decision < 0:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        cells.append((x, y))
    return cells


def line_of_sight(layout: FloorLayout, a: Cell, b: Cell) -> bool:
    """True when no wall lies on the supercover between ``a`` and ``b``.

    Doors and exits are transparent.
    """
    return all(layout.kinds[y, x] != CellKind.WALL for x, y in supercover(a, b))


def load_layout(name_or_path: str | Path) -> FloorLayout:
    """Load a bundled map by name (``structure1``) or a map file by path."""
    return _load_cached(str(name_or_path))


@functools.lru_cache(maxsize=32)
def _load_cached(key: str) -> FloorLayout:
    if key in BUNDLED_MAPS:
        text = resources.files("egress_sim.maps").joinpath(f"{key}.map").read_text(encoding="utf-8")
        return parse_layout(text, name=key)
    path = Path(key)
    return parse_layout(path.read_text(encoding="utf-8"), name=path.stem)
