"""Scenario runner for the conditioning experiments.

A scenario names a method (``LRB``, ``S-THB``, ``LRBNO`` ...), a refinement
pattern and a number of levels.  Level ``n`` means ``n`` hierarchical
levels, so level 1 is always the initial tensor space.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .assembly import assemble_pair, condition_estimate, eigensolve, eigvec_heatmap, thread_count
from .boxmesh import HierarchicalSpec, central_spec, diagonal_spec
from .geometry import Box, union_contains
from .lrspace import lr_hierarchical, tensor_space
from .overload import (
    diagonal_modify,
    lrb1_modify,
    lrbno_modify,
    overload_report,
    tlrbno_modify,
)
from .thbspace import thb_construct

__all__ = [
    "ConfigError",
    "METHODS",
    "PATTERNS",
    "Scenario",
    "RunRecord",
    "make_spec",
    "build_space",
    "run_scenario",
    "boundary_study",
    "BOUNDARY_METHODS",
    "crossover_level",
    "eigvec_site",
    "records_to_csv",
    "load_scenarios",
]

METHODS = ("TP", "LRB", "THB", "S-LRB", "S-THB", "LRB1", "S-LRB1", "LRBNO", "T-LRBNO", "LRBNO-diag")
PATTERNS = ("central", "diagonal")
BOUNDARY_METHODS = ("S-THB", "S-LRB", "THB", "LRB", "LRB1", "S-LRB1")

# desk-scale defaults: level-5 central runs stay near 10^3 DOF
DEFAULT_CELLS = {"central": 16, "diagonal": 8}
DEFAULT_BAND = 2
HEAVY_LEVEL = 9

_MODIFIED = {"LRB1", "S-LRB1", "LRBNO", "T-LRBNO", "LRBNO-diag"}
_PATTERN_ONLY = {"LRBNO": "central", "T-LRBNO": "central", "LRBNO-diag": "diagonal"}


class ConfigError(ValueError):
    """Invalid scenario or command-line configuration."""


@dataclass(frozen=True)
class Scenario:
    name: str
    method: str
    pattern: str = "central"
    degree: Tuple[int, int] = (3, 3)
    max_level: int = 4
    initial_cells: Optional[int] = None
    band: int = DEFAULT_BAND
    outputs: Tuple[str, ...] = ("csv",)
    heavy: bool = False

    def check(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.pattern not in PATTERNS:
            raise ConfigError(f"unknown pattern {self.pattern!r}; expected central or diagonal")
        need = _PATTERN_ONLY.get(self.method)
        if need and need != self.pattern:
            raise ConfigError(f"method {self.method} is incompatible with the {self.pattern} pattern")
        if len(self.degree) != 2 or any(int(p) != p or p < 0 for p in self.degree):
            raise ConfigError(f"degree must be two non-negative integers, got {self.degree!r}")
        if self.method in _MODIFIED and tuple(self.degree) != (3, 3):
            raise ConfigError(f"{self.method} is only defined for bi-degree (3,3)")
        if int(self.max_level) != self.max_level or self.max_level < 1:
            raise ConfigError("max_level must be a positive integer")
        if self.max_level >= HEAVY_LEVEL and not self.heavy:
            raise ConfigError(f"max_level {self.max_level} is a heavy run; set heavy=true to allow it")
        if self.initial_cells is not None and (self.initial_cells < 1 or self.initial_cells % 4):
            raise ConfigError("initial_cells must be a positive multiple of 4")
        if self.band < 0:
            raise ConfigError("band must be non-negative")
        for out in self.outputs:
            if out not in ("csv", "svg", "json"):
                raise ConfigError(f"unknown output {out!r}")

    @property
    def cells(self) -> int:
        return self.initial_cells or DEFAULT_CELLS[self.pattern]

    @property
    def variant(self) -> str:
        return "ghost" if self.method.startswith("S-") else "open"


@dataclass
class RunRecord:
    scenario: str
    method: str
    pattern: str
    level: int
    dofs: int
    cond_mass: float
    cond_stiffness: float
    overloaded: int
    min_eigvec_site: str = ""
    wall_time: float = field(default=0.0, compare=False)


def make_spec(pattern: str, levels: int, cells: Optional[int] = None, band: int = DEFAULT_BAND) -> HierarchicalSpec:
    cells = cells or DEFAULT_CELLS[pattern]
    if pattern == "central":
        return central_spec(levels, cells)
    if pattern == "diagonal":
        return diagonal_spec(levels, cells, band)
    raise ConfigError(f"unknown pattern {pattern!r}")


def build_space(method: str, spec: HierarchicalSpec, degree=(3, 3)):
    """The space a method produces on the hierarchical substrate ``spec``."""
    variant = "ghost" if method.startswith("S-") else "open"
    base = method[2:] if method.startswith("S-") else method
    if base == "TP":
        nx, ny = spec.initial_cells
        scale = 1 << (spec.levels - 1)
        return tensor_space(spec.domain, nx * scale, ny * scale, degree, variant)
    if base == "THB":
        return thb_construct(spec, degree, variant)
    space = lr_hierarchical(spec, degree, variant)
    if base == "LRB":
        return space
    if base == "LRB1":
        return lrb1_modify(space)
    if base == "LRBNO":
        return lrbno_modify(space)
    if base == "T-LRBNO":
        return tlrbno_modify(space)
    if base == "LRBNO-diag":
        return diagonal_modify(space)
    raise ConfigError(f"unknown method {method!r}")


def _corner_zones(spec: HierarchicalSpec, degree) -> List[Box]:
    d = spec.domain
    wx = (degree[0] + 1) * d.width / spec.initial_cells[0]
    wy = (degree[1] + 1) * d.height / spec.initial_cells[1]
    return [Box(d.x0, d.x0 + wx, d.y0, d.y0 + wy), Box(d.x1 - wx, d.x1, d.y0, d.y0 + wy),
            Box(d.x0, d.x0 + wx, d.y1 - wy, d.y1), Box(d.x1 - wx, d.x1, d.y1 - wy, d.y1)]


def eigvec_site(space, summary, spec: HierarchicalSpec, threshold: float = 0.8) -> str:
    """Where the smallest eigenvector of ``summary`` lives.

    The elements whose heatmap intensity reaches ``threshold`` are "hot".
    Returns ``corner`` when every hot element lies within ``p + 1`` initial
    cells of a domain corner, ``refined`` when all of them lie in the
    refined region, and ``mixed`` otherwise.
    """
    hot = [b for b, v in eigvec_heatmap(space, summary, "min") if v >= threshold]
    zones = _corner_zones(spec, space.degree)
    if all(any(z.contains_box(b) for z in zones) for b in hot):
        return "corner"
    if spec.levels > 1 and all(union_contains(spec.regions[1], b) for b in hot):
        return "refined"
    return "mixed"


def _run_level(s: Scenario, level: int) -> RunRecord:
    t0 = time.perf_counter()
    spec = make_spec(s.pattern, level, s.cells, s.band)
    space = build_space(s.method, spec, s.degree)
    mass, stiff = assemble_pair(space)
    em = eigensolve(mass)
    cm = condition_estimate(em)
    cs = condition_estimate(stiff)
    over = len(overload_report(space).overloaded)
    return RunRecord(s.name, s.method, s.pattern, level, len(space), cm, cs, over,
                     eigvec_site(space, em, spec), time.perf_counter() - t0)


def run_scenario(s: Scenario) -> List[RunRecord]:
    """One record per level ``1 .. max_level``."""
    s.check()
    return [_run_level(s, n) for n in range(1, s.max_level + 1)]


def run_many(scenarios: Sequence[Scenario]) -> List[List[RunRecord]]:
    """Independent scenarios, run on up to ``SPLYNE_THREADS`` workers."""
    for s in scenarios:
        s.check()
    workers = min(thread_count(), len(scenarios)) or 1
    if workers == 1:
        return [run_scenario(s) for s in scenarios]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, scenarios))


def boundary_study(max_level: int = 8, cells: int = 16, methods: Sequence[str] = BOUNDARY_METHODS,
                   heavy: bool = False) -> List[RunRecord]:
    """Open versus single boundary multiplicity on the central mesh family."""
    scenarios = [Scenario(f"boundary-{m}", m, "central", (3, 3), max_level, cells, heavy=heavy)
                 for m in methods]
    return [r for recs in run_many(scenarios) for r in recs]


def crossover_level(records: Iterable[RunRecord]) -> Optional[int]:
    """First level from which the smallest mass eigenvector stays in the refined region.

    Before it the smallest eigenvalue belongs to a boundary mode; after it
    the refinement dominates the conditioning.
    """
    recs = sorted(records, key=lambda r: r.level)
    level = None
    for r in recs:
        if r.min_eigvec_site == "refined":
            level = r.level if level is None else level
        else:
            level = None
    return level


def records_to_csv(records: Iterable[RunRecord]) -> str:
    """Deterministic CSV; wall times are left out so reruns are byte-identical."""
    rows = ["scenario,method,pattern,level,dofs,cond_mass,cond_stiffness,overloaded,min_eigvec_site"]
    for r in records:
        rows.append(f"{r.scenario},{r.method},{r.pattern},{r.level},{r.dofs},"
                    f"{r.cond_mass:.10e},{r.cond_stiffness:.10e},{r.overloaded},{r.min_eigvec_site}")
    return "\n".join(rows) + "\n"


_KEYS = {"name", "method", "pattern", "degree", "max_level", "initial_cells", "band", "outputs", "heavy"}


def _scenario_from_dict(d: Dict, index: int) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError(f"scenario #{index} must be an object")
    unknown = set(d) - _KEYS
    if unknown:
        raise ConfigError(f"scenario #{index}: unknown keys {sorted(unknown)}")
    if "method" not in d:
        raise ConfigError(f"scenario #{index}: missing 'method'")
    try:
        degree = tuple(int(p) for p in d.get("degree", (3, 3)))
        s = Scenario(
            name=str(d.get("name", f"{d['method']}-{d.get('pattern', 'central')}")),
            method=d["method"],
            pattern=d.get("pattern", "central"),
            degree=degree,
            max_level=d.get("max_level", 4),
            initial_cells=d.get("initial_cells"),
            band=d.get("band", DEFAULT_BAND),
            outputs=tuple(d.get("outputs", ("csv",))),
            heavy=bool(d.get("heavy", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario #{index}: {exc}") from None
    s.check()
    return s


def load_scenarios(text: str) -> List[Scenario]:
    """Parse a JSON config: one scenario object, a list, or ``{"scenarios": [...]}``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if isinstance(data, dict) and "scenarios" in data:
        data = data["scenarios"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ConfigError("config must hold at least one scenario")
    return [_scenario_from_dict(d, i) for i, d in enumerate(data)]
