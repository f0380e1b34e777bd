"""Grid-based active-shooter evacuation simulator with paired detector-on/off experiments."""

from .behavior import BehaviorParams, ShotContext, StudentMode
from .engine import RunOutcome, SimConfig, TickEvent, place_agents, run, step
from .experiment import MatrixSpec, run_cell, run_matrix, summarize_direction
from .layout import FloorLayout, layout_stats, line_of_sight, load_layout, manhattan, parse_layout
from .pathfind import nearest_exit, shortest_path, step_toward

__all__ = [
    "BehaviorParams",
    "FloorLayout",
    "MatrixSpec",
    "RunOutcome",
    "ShotContext",
    "SimConfig",
    "StudentMode",
    "TickEvent",
    "layout_stats",
    "line_of_sight",
    "load_layout",
    "manhattan",
    "nearest_exit",
    "parse_layout",
    "place_agents",
    "run",
    "run_cell",
    "run_matrix",
    "shortest_path",
    "step",
    "step_toward",
    "summarize_direction",
]
