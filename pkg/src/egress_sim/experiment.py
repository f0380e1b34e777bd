"""Paired detector-off / detector-on ensembles over a layout x population x runtime grid."""

from __future__ import annotations

import concurrent.futures as cf
import hashlib
import os
import statistics
import zlib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .behavior import BehaviorParams
from .engine import PRESET_RUNTIMES, RunOutcome, SimConfig, place_agents, run_checkpoints, state_digest
from .layout import BUNDLED_MAPS

PRESET_STUDENT_COUNTS = (50, 100, 150, 200)
DEFAULT_SEEDS_PER_CELL = 100
RESULTS_SCHEMA = "egress-sim-results/1"


class MatrixSpecError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class MatrixSpec:
    layouts: tuple[str, ...] = BUNDLED_MAPS
    student_counts: tuple[int, ...] = PRESET_STUDENT_COUNTS
    runtimes: tuple[float, ...] = PRESET_RUNTIMES
    seeds_per_cell: int = DEFAULT_SEEDS_PER_CELL
    base_seed: int = 20250101
    params: BehaviorParams = field(default_factory=BehaviorParams)
    base_config: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.seeds_per_cell < 1:
            raise ValueError("seeds_per_cell must be at least 1")

    @classmethod
    def preset(cls, **overrides) -> "MatrixSpec":
        return cls(**overrides)

    @property
    def cell_count(self) -> int:
        return len(self.layouts) * len(self.student_counts) * len(self.runtimes)


@dataclass(frozen=True)
class SeedRun:
    seed_index: int
    placement_seed: int
    seed: int
    off: RunOutcome
    on: RunOutcome
    off_start: str = ""  # tick-0 state digest per arm
    on_start: str = ""


@dataclass(frozen=True)
class ArmStats:
    casualty_pct: float
    casualty_sd: float
    evacuation_pct: float
    evacuation_sd: float


@dataclass(frozen=True)
class CellResult:
    layout: str
    student_count: int
    runtime: float
    off: ArmStats  # without detector
    on: ArmStats  # with detector
    seeds: int
    per_seed: tuple[SeedRun, ...] = ()

    @property
    def casualty_change(self) -> float:
        return self.on.casualty_pct - self.off.casualty_pct

    @property
    def evacuation_efficiency_change(self) -> float:
        return self.on.evacuation_pct - self.off.evacuation_pct


def derive_seeds(base_seed: int, layout: str, student_count: int, seed_index: int) -> tuple[int, int]:
    """``(placement_seed, seed)`` for one ensemble member.

    Keyed by layout, population and member index but not by runtime, so the
    runtime cells of one population are prefixes of the same trajectories.
    """
    key = (zlib.crc32(layout.encode("utf-8")), int(student_count), int(seed_index))
    state = np.random.SeedSequence(int(base_seed), spawn_key=key).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def _arm_stats(outcomes: list[RunOutcome]) -> ArmStats:
    cas = [o.casualty_pct for o in outcomes]
    eva = [o.evacuation_pct for o in outcomes]
    sd = statistics.stdev if len(outcomes) > 1 else (lambda _: 0.0)
    return ArmStats(statistics.fmean(cas), sd(cas), statistics.fmean(eva), sd(eva))


def _run_group(layout: str, student_count: int, runtimes: tuple[float, ...], seeds: int, base_seed: int, base: SimConfig):
    """All runtime cells of one (layout, population), one trajectory pair per seed."""
    per_runtime: list[list[SeedRun]] = [[] for _ in runtimes]
    for i in range(seeds):
        placement_seed, seed = derive_seeds(base_seed, layout, student_count, i)
        cfg = replace(base, layout=layout, student_count=student_count, seed=seed, placement_seed=placement_seed)
        start_off = place_agents(replace(cfg, detector_enabled=False))
        start_on = place_agents(replace(cfg, detector_enabled=True))
        digests = state_digest(start_off), state_digest(start_on)
        off, _ = run_checkpoints(start_off.config, runtimes, state=start_off)
        on, _ = run_checkpoints(start_on.config, runtimes, state=start_on)
        for k in range(len(runtimes)):
            per_runtime[k].append(SeedRun(i, placement_seed, seed, off[k], on[k], *digests))
    return [
        CellResult(
            layout=layout,
            student_count=student_count,
            runtime=rt,
            off=_arm_stats([r.off for r in runs]),
            on=_arm_stats([r.on for r in runs]),
            seeds=seeds,
            per_seed=tuple(runs),
        )
        for rt, runs in zip(runtimes, per_runtime)
    ]


def run_cell(
    layout: str,
    student_count: int,
    runtime: float,
    seeds: int,
    params: BehaviorParams | None = None,
    *,
    base_seed: int = 0,
    base_config: SimConfig | None = None,
) -> CellResult:
    base = base_config or SimConfig()
    if params is not None:
        base = replace(base, params=params)
    return _run_group(layout, student_count, (runtime,), seeds, base_seed, base)[0]


def thread_count() -> int:
    raw = os.environ.get("EGRESS_SIM_THREADS", "0").strip() or "0"
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class ExperimentReport:
    spec: MatrixSpec
    cells: tuple[CellResult, ...]

    def layout_averages(self) -> dict[str, tuple[float, float]]:
        """layout -> (mean casualty change, mean evacuation change), in pp."""
        out = {}
        for name in dict.fromkeys(c.layout for c in self.cells):
            mine = [c for c in self.cells if c.layout == name]
            out[name] = (
                statistics.fmean(c.casualty_change for c in mine),
                statistics.fmean(c.evacuation_efficiency_change for c in mine),
            )
        return out

    @property
    def fingerprint(self) -> str:
        return spec_fingerprint(self.spec)

    def to_csv(self) -> str:
        return results_to_csv(self.cells, fingerprint=self.fingerprint)

    def runs_csv(self) -> str:
        lines = ["layout,student_count,runtime,seed_index,placement_seed,seed,detector,casualties,evacuated,hiding,still_inside,suppressed"]
        for c in self.cells:
            for r in c.per_seed:
                for arm, o in (("off", r.off), ("on", r.on)):
                    lines.append(
                        f"{c.layout},{c.student_count},{_num(c.runtime)},{r.seed_index},{r.placement_seed},{r.seed},"
                        f"{arm},{o.casualties},{o.evacuated},{o.hiding},{o.still_inside},{int(o.suppressed)}"
                    )
        return "\n".join(lines) + "\n"


def spec_fingerprint(spec: MatrixSpec) -> str:
    base = spec.base_config
    cfg = {f.name: getattr(base, f.name) for f in fields(base) if f.name not in ("layout", "student_count", "runtime", "seed", "placement_seed", "params", "detector_enabled")}
    payload = repr(
        (
            tuple(spec.layouts),
            tuple(spec.student_counts),
            tuple(spec.runtimes),
            spec.seeds_per_cell,
            spec.base_seed,
            sorted(asdict(spec.params).items()),
            sorted(cfg.items()),
        )
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def run_matrix(spec: MatrixSpec, threads: int | None = None) -> ExperimentReport:
    """Every cell of ``spec`` in canonical (layout, count, runtime) order.

    Groups run in worker processes when more than one thread is allowed;
    results are merged in canonical order either way. Any failure aborts.
    """
    base = replace(spec.base_config, params=spec.params)
    runtimes = tuple(spec.runtimes)
    jobs = [(lay, n) for lay in spec.layouts for n in spec.student_counts] if runtimes else []
    threads = thread_count() if threads is None else threads
    if threads > 1 and len(jobs) > 1:
        with cf.ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            futures = [pool.submit(_run_group, lay, n, runtimes, spec.seeds_per_cell, spec.base_seed, base) for lay, n in jobs]
            groups = [f.result() for f in futures]
    else:
        groups = [_run_group(lay, n, runtimes, spec.seeds_per_cell, spec.base_seed, base) for lay, n in jobs]
    order = {rt: k for k, rt in enumerate(runtimes)}
    cells = [c for g in groups for c in sorted(g, key=lambda c: order[c.runtime])]
    return ExperimentReport(spec, tuple(cells))


@dataclass(frozen=True)
class LayoutDirection:
    layout: str
    cells: int
    casualty_down_fraction: float
    evacuation_up_fraction: float
    mean_casualty_change: float
    mean_evacuation_change: float


@dataclass(frozen=True)
class DirectionSummary:
    layouts: tuple[LayoutDirection, ...]
    mean_casualty_change: float
    mean_evacuation_change: float

    def for_layout(self, name: str) -> LayoutDirection:
        return next(d for d in self.layouts if d.layout == name)

    @property
    def all_improved(self) -> bool:
        return all(d.casualty_down_fraction == 1.0 and d.evacuation_up_fraction == 1.0 for d in self.layouts)


def summarize_direction(cells) -> DirectionSummary:
    """Per layout: share of cells where the detector lowered casualties and raised evacuation."""
    cells = list(cells.cells if isinstance(cells, ExperimentReport) else cells)
    if not cells:
        raise ValueError("nothing to summarize")
    rows = []
    for name in dict.fromkeys(c.layout for c in cells):
        mine = [c for c in cells if c.layout == name]
        rows.append(
            LayoutDirection(
                layout=name,
                cells=len(mine),
                casualty_down_fraction=sum(c.casualty_change < 0 for c in mine) / len(mine),
                evacuation_up_fraction=sum(c.evacuation_efficiency_change > 0 for c in mine) / len(mine),
                mean_casualty_change=statistics.fmean(c.casualty_change for c in mine),
                mean_evacuation_change=statistics.fmean(c.evacuation_efficiency_change for c in mine),
            )
        )
    return DirectionSummary(
        tuple(rows),
        statistics.fmean(c.casualty_change for c in cells),
        statistics.fmean(c.evacuation_efficiency_change for c in cells),
    )


# results file

RESULT_COLUMNS = (
    "layout",
    "student_count",
    "runtime",
    "seeds",
    "off_casualty_pct",
    "off_casualty_sd",
    "off_evacuation_pct",
    "off_evacuation_sd",
    "on_casualty_pct",
    "on_casualty_sd",
    "on_evacuation_pct",
    "on_evacuation_sd",
    "casualty_change",
    "evacuation_efficiency_change",
)


class ResultsSchemaError(ValueError):
    pass


def _num(x: float) -> str:
    return f"{x:.6f}".rstrip("0").rstrip(".") if x != int(x) else str(int(x))


def _pct(x: float) -> str:
    return f"{x:.6f}"


def results_to_csv(cells, fingerprint: str | None = None) -> str:
    lines = [f"# schema={RESULTS_SCHEMA}"]
    if fingerprint:
        lines.append(f"# fingerprint={fingerprint}")
    lines.append(",".join(RESULT_COLUMNS))
    for c in cells:
        vals = [
            c.layout,
            str(c.student_count),
            _num(c.runtime),
            str(c.seeds),
            *(_pct(v) for v in (c.off.casualty_pct, c.off.casualty_sd, c.off.evacuation_pct, c.off.evacuation_sd)),
            *(_pct(v) for v in (c.on.casualty_pct, c.on.casualty_sd, c.on.evacuation_pct, c.on.evacuation_sd)),
            _pct(c.casualty_change),
            _pct(c.evacuation_efficiency_change),
        ]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def read_results(text: str) -> list[CellResult]:
    """Parse a results file written by :func:`results_to_csv`.

    Change columns are recomputed from the arm means; the stored ones are
    only checked for consistency.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    meta = {}
    while lines and lines[0].startswith("#"):
        key, _, value = lines.pop(0)[1:].strip().partition("=")
        meta[key.strip()] = value.strip()
    if meta.get("schema") != RESULTS_SCHEMA:
        raise ResultsSchemaError(f"expected schema {RESULTS_SCHEMA}, found {meta.get('schema')!r}")
    if not lines or tuple(lines[0].split(",")) != RESULT_COLUMNS:
        raise ResultsSchemaError("unexpected column header")
    cells = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(RESULT_COLUMNS):
            raise ResultsSchemaError(f"row {lineno}: expected {len(RESULT_COLUMNS)} fields")
        v = [float(p) for p in parts[4:]]
        cell = CellResult(
            layout=parts[0],
            student_count=int(parts[1]),
            runtime=float(parts[2]),
            seeds=int(parts[3]),
            off=ArmStats(v[0], v[1], v[2], v[3]),
            on=ArmStats(v[4], v[5], v[6], v[7]),
        )
        if abs(cell.casualty_change - v[8]) > 0.011 or abs(cell.evacuation_efficiency_change - v[9]) > 0.011:
            raise ResultsSchemaError(f"row {lineno}: change columns disagree with arm means")
        cells.append(cell)
    return cells


# matrix spec file

_LIST_KEYS = {"layouts": str, "student_counts": int, "runtimes": float}
_INT_KEYS = {"seeds_per_cell", "base_seed"}
_PARAM_KEYS = {f.name for f in fields(BehaviorParams)}
_CONFIG_KEYS = {"tick": float, "officer_entry": float, "student_speed": int, "shooter_speed": int, "officer_speed": int}


def parse_matrix_spec(text: str) -> MatrixSpec:
    """Read ``key = value`` lines; ``#`` starts a comment. Missing keys keep the preset.

    Keys: layouts, student_counts, runtimes (comma lists), seeds_per_cell,
    base_seed, the behaviour ranges (alpha, beta, gamma, gamma_officer,
    sigma, epsilon) and tick, officer_entry, student_speed, shooter_speed,
    officer_speed.
    """
    values: dict = {}
    params: dict = {}
    config: dict = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise MatrixSpecError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key in seen:
            raise MatrixSpecError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        try:
            if key in _LIST_KEYS:
                items = [p.strip() for p in value.split(",") if p.strip()]
                values[key] = tuple(_LIST_KEYS[key](p) for p in items)
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key in _PARAM_KEYS:
                params[key] = float(value)
            elif key in _CONFIG_KEYS:
                config[key] = _CONFIG_KEYS[key](value)
            else:
                raise MatrixSpecError(f"unknown key {key!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, MatrixSpecError):
                raise
            raise MatrixSpecError(f"bad value for {key!r}: {value!r}", lineno) from None
    try:
        return MatrixSpec(params=BehaviorParams(**params), base_config=SimConfig(**config), **values)
    except ValueError as exc:
        raise MatrixSpecError(str(exc)) from None


def write_batch(report: ExperimentReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = out / "results.csv"
    runs = out / "runs.csv"
    results.write_text(report.to_csv(), encoding="utf-8")
    runs.write_text(report.runs_csv(), encoding="utf-8")
    return results, runs
