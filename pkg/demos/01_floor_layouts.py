"""Floor layouts: parsing, room/exit counts, paths and sight lines.

Run with ``python3 demos/01_floor_layouts.py``.
"""

from egress_sim import layout_stats, line_of_sight, load_layout, nearest_exit, parse_layout, shortest_path

# The three bundled floors.
for name in ("structure1", "gyte_floor1", "sulb_floor3"):
    floor = load_layout(name)
    st = layout_stats(floor)
    print(f"{name:12s} {floor.width}x{floor.height}  rooms={st.room_count} exits={st.exit_count} floor cells={st.floor_cell_count}")

# A map is plain text: a WxH header, then one row per line.
# '#' wall, '.' hallway, '+' door, 'E' exit, letters are room cells.
text = """
; two classrooms off one hallway
11x5
###########
#aaa+bbbbb#
#aaa#bbbbb#
#.+.......E
###########
"""
floor = parse_layout(text, name="tiny")
print()
print(floor.to_text())
print("rooms:", [(r.room_id, r.glyph, len(r.cells)) for r in floor.rooms])

# Shortest paths are 4-connected and deterministic.
start = (1, 1)
goal, path = nearest_exit(floor, start)
print(f"nearest exit from {start}: {goal}, {path.cost} steps")
print("route:", " ".join(f"{x},{y}" for x, y in path.cells))

# Draw the route on the map.
rows = [list(r) for r in floor.rows]
for x, y in path.cells[1:-1]:
    rows[y][x] = "*"
print("\n".join("".join(r) for r in rows))

# Sight is blocked by walls only; doors and exits are see-through.
for a, b in (((1, 1), (3, 2)), ((2, 2), (6, 2)), ((3, 3), (9, 3))):
    print(f"sight {a} -> {b}: {line_of_sight(floor, a, b)}, path cost {shortest_path(floor, a, b).cost}")
