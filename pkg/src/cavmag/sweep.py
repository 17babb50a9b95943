"""Parameter sweeps with hysteretic branch following.

A sweep solves the steady-state problem on a parameter grid and selects one
stable branch per point by nearest-log continuation, mimicking adiabatic
following.  Discontinuous selection changes are recorded as jumps; comparing
up and down traversals yields the hysteresis loop and a regime classification
(monostable / bistable / multistable).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import SystemParams
from .steady import SteadyBranch, solve_steady

__all__ = [
    "SweepSpec", "SweepTrace", "JumpEvent", "RegimeReport",
    "NoStableBranchError", "run_sweep", "follow_branches", "classify_regime",
    "leakage_robustness",
]

SWEEPABLE = ("power", "omega_d", "omega_c", "gamma_c")

#: A jump must exceed this multiple of the local continuous increment.
JUMP_INCREMENT_FACTOR = 10.0
#: ... and change x by at least this ratio (guards near-flat branches, where
#: the local increment is at rounding level; cascading folds land ~1.3x apart).
JUMP_RATIO = 1.25
#: Ratio fallback for the first step, where no local increment is known yet.
JUMP_RATIO_COLD = 2.0
#: Excitation numbers below one quantum are treated as zero for jump logic.
X_FLOOR = 1.0

THREADS_ENV = "CAVMAG_THREADS"


class NoStableBranchError(RuntimeError):
    """A grid point produced no stable branch to follow."""


@dataclass(frozen=True)
class SweepSpec:
    """Grid specification: which parameter, bounds, resolution, direction.

    ``start`` and ``stop`` are in the parameter's internal units (watts for
    power, rad/s for frequencies and rates).  ``direction`` is ``up``,
    ``down`` or ``both``.
    """

    parameter: str
    start: float
    stop: float
    points: int = 400
    direction: str = "both"

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ValueError(f"parameter must be one of {SWEEPABLE}")
        if self.start == self.stop:
            raise ValueError("start and stop must differ")
        if self.points < 2:
            raise ValueError("need at least two grid points")
        if self.direction not in ("up", "down", "both"):
            raise ValueError("direction must be up, down or both")

    def grid(self) -> np.ndarray:
        """Ascending parameter grid."""
        lo, hi = sorted((self.start, self.stop))
        return np.linspace(lo, hi, self.points)


@dataclass(frozen=True)
class JumpEvent:
    """Discontinuous branch change between two consecutive grid points.

    ``index`` is the traversal position of the post-jump point.  ``ambiguous``
    marks landings where more than one stable branch was available.
    """

    index: int
    value_before: float
    value_after: float
    x_before: float
    x_after: float
    ambiguous: bool


@dataclass(frozen=True)
class SweepTrace:
    """One directional traversal: grids, selections, full branch lists, jumps."""

    parameter: str
    direction: str
    values: np.ndarray
    selected: list[SteadyBranch]
    all_branches: list[list[SteadyBranch]]
    jumps: list[JumpEvent] = field(default_factory=list)

    def selected_x(self) -> np.ndarray:
        return np.array([b.x for b in self.selected])

    def stable_counts(self) -> np.ndarray:
        return np.array([sum(b.stable for b in bl) for bl in self.all_branches])


@dataclass(frozen=True)
class RegimeReport:
    """Sweep-level classification of the steady-state structure."""

    max_stable_count: int
    regime: str
    up_jump_count: int
    down_jump_count: int
    hysteresis_window: list[tuple[float, float]]


def _n_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def _solve_grid(params: SystemParams, parameter: str,
                values: np.ndarray) -> list[list[SteadyBranch]]:
    def solve_at(v):
        return solve_steady(params.with_parameter(parameter, v))

    workers = _n_workers()
    if workers == 1:
        return [solve_at(v) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(solve_at, values))


def _log_distance(xa: float, xb: float) -> float:
    if xa < X_FLOOR and xb < X_FLOOR:
        return 0.0
    if xa < X_FLOOR or xb < X_FLOOR:
        return math.inf
    return abs(math.log(xa) - math.log(xb))


def follow_branches(params: SystemParams, parameter: str, values,
                    all_branches: list[list[SteadyBranch]] | None = None,
                    start_high: bool = False,
                    ) -> tuple[list[SteadyBranch], list[JumpEvent], list[list[SteadyBranch]]]:
    """Select one stable branch per point along ``values`` (traversal order).

    At the first point picks the lowest-x (or highest-x when ``start_high``)
    stable branch; afterwards the stable branch nearest in log(x).  A selection
    change is a jump when the step dwarfs the local continuous increment and
    exceeds the :data:`JUMP_RATIO` floor.
    """
    values = np.asarray(values, dtype=float)
    if all_branches is None:
        all_branches = _solve_grid(params, parameter, values)
    selected: list[SteadyBranch] = []
    jumps: list[JumpEvent] = []
    smooth_increment: float | None = None
    prev: SteadyBranch | None = None
    for k, branches in enumerate(all_branches):
        stable = [b for b in branches if b.stable]
        if not stable:
            raise NoStableBranchError(
                f"no stable branch at {parameter} = {values[k]:.6g} "
                f"({len(branches)} branches, all unstable)")
        if prev is None:
            pick = max(stable, key=lambda b: b.x) if start_high else \
                min(stable, key=lambda b: b.x)
        else:
            pick = min(stable, key=lambda b: _log_distance(b.x, prev.x))
            is_jump = False
            if prev.x >= X_FLOOR and pick.x >= X_FLOOR:
                ratio = max(pick.x, prev.x) / min(pick.x, prev.x)
                step = abs(pick.x - prev.x)
                if smooth_increment is not None:
                    is_jump = (ratio > JUMP_RATIO
                               and step > JUMP_INCREMENT_FACTOR * smooth_increment)
                else:
                    # no local slope yet; require a structural change too
                    n_prev = sum(b.stable for b in all_branches[k - 1])
                    is_jump = ratio > JUMP_RATIO_COLD and len(stable) != n_prev
            if is_jump:
                jumps.append(JumpEvent(index=k,
                                       value_before=values[k - 1],
                                       value_after=values[k],
                                       x_before=prev.x, x_after=pick.x,
                                       ambiguous=len(stable) > 1))
            else:
                smooth_increment = abs(pick.x - prev.x)
        selected.append(pick)
        prev = pick
    return selected, jumps, all_branches


def run_sweep(params: SystemParams, spec: SweepSpec) -> list[SweepTrace]:
    """Run the sweep in the requested direction(s); one trace per direction.

    Both directions share the per-point branch solves; only the selection
    fold differs.
    """
    grid = spec.grid()
    branches_up = _solve_grid(params, spec.parameter, grid)
    traces = []
    if spec.direction in ("up", "both"):
        sel, jumps, _ = follow_branches(params, spec.parameter, grid,
                                        all_branches=branches_up)
        traces.append(SweepTrace(spec.parameter, "up", grid, sel,
                                 branches_up, jumps))
    if spec.direction in ("down", "both"):
        rev = grid[::-1].copy()
        branches_down = branches_up[::-1]
        sel, jumps, _ = follow_branches(params, spec.parameter, rev,
                                        all_branches=branches_down,
                                        start_high=True)
        traces.append(SweepTrace(spec.parameter, "down", rev, sel,
                                 branches_down, jumps))
    return traces


def _hysteresis_window(grid: np.ndarray, x_up: np.ndarray,
                       x_down_ascending: np.ndarray,
                       rtol: float = 1e-6) -> list[tuple[float, float]]:
    scale = np.maximum(np.maximum(x_up, x_down_ascending), X_FLOOR)
    differs = np.abs(x_up - x_down_ascending) > rtol * scale
    windows = []
    i = 0
    n = len(grid)
    while i < n:
        if differs[i]:
            j = i
            while j + 1 < n and differs[j + 1]:
                j += 1
            windows.append((float(grid[i]), float(grid[j])))
            i = j + 1
        else:
            i += 1
    return windows


def classify_regime(params: SystemParams, spec: SweepSpec) -> RegimeReport:
    """Classify the sweep window from a bidirectional traversal."""
    if spec.direction != "both":
        raise ValueError("regime classification needs direction='both'")
    up, down = run_sweep(params, spec)
    max_stable = int(max(up.stable_counts().max(), down.stable_counts().max()))
    regime = ("monostable" if max_stable <= 1
              else "bistable" if max_stable == 2 else "multistable")
    window = _hysteresis_window(up.values, up.selected_x(),
                                down.selected_x()[::-1])
    return RegimeReport(max_stable_count=max_stable, regime=regime,
                        up_jump_count=len(up.jumps),
                        down_jump_count=len(down.jumps),
                        hysteresis_window=window)


def leakage_robustness(params: SystemParams, gamma_c_values,
                       power_spec: SweepSpec) -> list[RegimeReport]:
    """Regime report per cavity leakage value, all else fixed."""
    if power_spec.parameter != "power":
        raise ValueError("leakage robustness expects a power sweep")
    reports = []
    for gc in gamma_c_values:
        if gc <= 0:
            raise ValueError("gamma_c values must be positive")
        reports.append(classify_regime(params.with_parameter("gamma_c", gc),
                                       power_spec))
    return reports
