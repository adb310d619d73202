"""Feasible slope regions for generous and extortionate ZD strategies.

Closed-form lower bounds on the slope for both threshold games, a numeric
bisection oracle that only consults the baseline-payoff inequalities, and
parameter sweeps over (multiplier or benefit/cost ratio) x threshold.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .errors import InvalidSpec, NoFeasibleSlope
from .games import Family, GameSpec, PayoffTable, payoff_table
from .zd import ZDClass, baseline_for, enforceable, l_bounds, slope_floor

ORACLE_TOL = 1e-10
STRICT_PROBE = 1e-9
# Relative width (to the payoff scale) below which the baseline interval at
# the boundary slope counts as collapsed to a point.
DEGENERATE_WIDTH = 1e-6
SCAN_POINTS = 41


@dataclass(frozen=True)
class SlopeBound:
    """Feasible slopes ``s > s_star`` (strict) or ``s >= s_star``.

    ``floored`` marks a bound clipped to the open end of the legal range
    -1/(n-1), which is then always strict.
    """

    s_star: float
    strict: bool
    cls: ZDClass
    floored: bool = False

    def admits(self, s: float) -> bool:
        if s >= 1:
            return False
        return s > self.s_star if self.strict else s >= self.s_star


def _floor_guard(n, s_star, strict, cls):
    lowest = slope_floor(n)
    if s_star <= lowest:
        return SlopeBound(lowest, True, cls, floored=True)
    return SlopeBound(float(s_star), strict, cls)


def pgg_generous_bound(n: int, m: int, r: float) -> SlopeBound:
    GameSpec.pgg(n, m, r)
    s_star = 1 - (n - m + 1) / (r * (n - 1))
    return _floor_guard(n, s_star, False, ZDClass.GENEROUS)


def pgg_extortionate_bound(n: int, m: int, r: float) -> SlopeBound:
    GameSpec.pgg(n, m, r)
    # (m-2)/(n-1) >= 1 - n/(r(n-1))  <=>  r(n-m+1) <= n, exact at ties.
    if r * (n - m + 1) <= n:
        return _floor_guard(n, (m - 2) / (n - 1), True, ZDClass.EXTORTIONATE)
    return _floor_guard(n, 1 - n / (r * (n - 1)), False, ZDClass.EXTORTIONATE)


def sdg_generous_bound(n: int, m: int, b: float, c: float) -> SlopeBound:
    GameSpec.sdg(n, m, b, c)
    s_star = 1 - c * n * (n - m + 1) / ((n - 1) * ((b * n - c) * (m - 1) + c * n))
    return _floor_guard(n, s_star, False, ZDClass.GENEROUS)


def sdg_extortionate_bound(n: int, m: int, b: float, c: float) -> SlopeBound:
    GameSpec.sdg(n, m, b, c)
    return _floor_guard(n, 1 - c / (b * (n - 1)), False, ZDClass.EXTORTIONATE)


def closed_form_bound(spec: GameSpec, cls: ZDClass | str) -> SlopeBound:
    cls = ZDClass(cls)
    if cls is ZDClass.EQUALIZER:
        raise ValueError("equalizer strategies have no slope region")
    if spec.family is Family.PGG:
        f = pgg_generous_bound if cls is ZDClass.GENEROUS else pgg_extortionate_bound
        return f(spec.n, spec.m, spec.r)
    f = sdg_generous_bound if cls is ZDClass.GENEROUS else sdg_extortionate_bound
    return f(spec.n, spec.m, spec.b, spec.c)


def equalizer_exists(table: PayoffTable) -> bool:
    """Whether some baseline l makes s = 0 enforceable.

    At s = 0 a strictly admissible l exists exactly when the baseline
    interval has positive width.
    """
    bounds = l_bounds(table, 0.0)
    if not bounds.lower < bounds.upper:
        return False
    return enforceable(table, 0.0, 0.5 * (bounds.lower + bounds.upper))


def numeric_slope_bound(table: PayoffTable, cls: ZDClass | str,
                        l: float | None = None) -> SlopeBound:
    """Locate the feasible-slope threshold by scanning and bisection.

    Only :func:`enforceable` is consulted. The result is the infimum s* with
    every s in (s*, 1) enforceable, to within 1e-10. The bound is reported
    strict when the admissible baseline interval collapses to the single
    point l as s approaches s* from above.
    """
    cls = ZDClass(cls)
    if l is None:
        l = baseline_for(table, cls)
    n = table.n
    lowest = slope_floor(n)
    grid = np.linspace(lowest, 1.0, SCAN_POINTS)[1:-1]
    ok = [enforceable(table, float(s), l) for s in grid]
    if not ok[-1]:
        # The threshold may sit above the last scan point; halve the gap to 1.
        lo = float(grid[-1])
        for j in range(1, 48):
            hi = 1.0 - (1.0 - float(grid[-1])) * 2.0 ** -j
            if enforceable(table, hi, l):
                break
            lo = hi
        else:
            raise NoFeasibleSlope(f"no enforceable slope for l={l}")
    elif not all(ok):
        last_bad = max(i for i, flag in enumerate(ok) if not flag)
        lo, hi = float(grid[last_bad]), float(grid[last_bad + 1])
    else:
        lo, hi = lowest, float(grid[0])
    while hi - lo > ORACLE_TOL:
        mid = 0.5 * (lo + hi)
        if enforceable(table, mid, l):
            hi = mid
        else:
            lo = mid
    s_star = 0.5 * (lo + hi)
    if s_star - lowest <= STRICT_PROBE:
        return SlopeBound(lowest, True, cls, floored=True)
    probe = s_star + STRICT_PROBE
    scale = max(1.0, float(np.max(np.abs(np.concatenate([table.a, table.b])))))
    width = l_bounds(table, probe).width
    strict = width <= DEGENERATE_WIDTH * scale
    return SlopeBound(s_star, strict, cls)


def oracle_bound(spec: GameSpec, cls: ZDClass | str) -> SlopeBound:
    return numeric_slope_bound(payoff_table(spec), cls)


@dataclass(frozen=True)
class RegionCell:
    m: int
    axis1_value: float
    closed: SlopeBound
    oracle: SlopeBound
    equalizer: bool

    @property
    def discrepancy(self) -> float:
        return abs(self.closed.s_star - self.oracle.s_star)


@dataclass(frozen=True)
class RegionGrid:
    family: Family
    n: int
    cls: ZDClass
    axis1_name: str
    axis1_values: tuple[float, ...]
    m_values: tuple[int, ...]
    cells: tuple[RegionCell, ...]
    c: float = 1.0
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def max_discrepancy(self) -> float:
        return max((cell.discrepancy for cell in self.cells), default=0.0)

    @property
    def strictness_mismatches(self) -> int:
        return sum(cell.closed.strict != cell.oracle.strict for cell in self.cells)

    def cell(self, m: int, axis1_value: float) -> RegionCell:
        for cell in self.cells:
            if cell.m == m and np.isclose(cell.axis1_value, axis1_value,
                                          rtol=0, atol=1e-9):
                return cell
        raise KeyError((m, axis1_value))

    def curve(self, m: int) -> np.ndarray:
        """Closed-form boundary values along axis 1 for threshold m."""
        return np.array([cell.closed.s_star for cell in self.cells if cell.m == m])

    def rows(self) -> list[dict[str, Any]]:
        return [{
            "family": self.family.value,
            "n": self.n,
            "m": cell.m,
            "axis1_name": self.axis1_name,
            "axis1_value": cell.axis1_value,
            "class": self.cls.value,
            "s_star_closed": cell.closed.s_star,
            "strict": cell.closed.strict,
            "s_star_oracle": cell.oracle.s_star,
            "discrepancy": cell.discrepancy,
        } for cell in self.cells]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        meta = {
            "family": self.family.value,
            "n": self.n,
            "class": self.cls.value,
            "axis1_name": self.axis1_name,
            "axis2_name": "m",
            "c": self.c,
            "cell_count": len(self.cells),
            "max_discrepancy": self.max_discrepancy,
            "strictness_mismatches": self.strictness_mismatches,
            "equalizer_cells": sum(cell.equalizer for cell in self.cells),
        }
        meta.update(self.metadata)
        return {"metadata": meta, "columns": CSV_COLUMNS, "rows": self.rows()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


CSV_COLUMNS = ["family", "n", "m", "axis1_name", "axis1_value", "class",
               "s_star_closed", "strict", "s_star_oracle", "discrepancy"]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _cell_spec(family, n, m, x, c):
    if family is Family.PGG:
        return GameSpec.pgg(n, m, r=x, c=c)
    return GameSpec.sdg(n, m, b=x * c, c=c)


def region_sweep(family: Family | str, n: int, axis1: Iterable[float],
                 m_values: Iterable[int], cls: ZDClass | str,
                 c: float = 1.0) -> RegionGrid:
    """Evaluate closed-form and oracle bounds on every (axis1, m) cell.

    Axis 1 is the multiplier r for the public goods game and the ratio b/c
    for the snowdrift game (with b = ratio * c).
    """
    family = Family(family)
    cls = ZDClass(cls)
    xs = tuple(float(x) for x in axis1)
    ms = tuple(int(m) for m in m_values)
    cells = []
    for m in ms:
        for x in xs:
            try:
                spec = _cell_spec(family, n, m, x, c)
            except InvalidSpec as exc:
                raise InvalidSpec(f"cell (m={m}, {_axis_name(family)}={x}): {exc}") from None
            table = payoff_table(spec)
            cells.append(RegionCell(
                m=m, axis1_value=x,
                closed=closed_form_bound(spec, cls),
                oracle=numeric_slope_bound(table, cls),
                equalizer=equalizer_exists(table),
            ))
    return RegionGrid(family, n, cls, _axis_name(family), xs, ms, tuple(cells), c=c)


def _axis_name(family):
    return "r" if family is Family.PGG else "b_over_c"


def decimal_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid rounded to 10 decimals (1.25 stays 1.25)."""
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


# Presets pin n = 8; axis 1 stops one step short of its open bound.
PRESETS: dict[str, dict[str, Any]] = {
    "fig1-left": {"family": "pgg", "cls": "generous",
                  "axis1": (1.01, 7.99, 0.01)},
    "fig1-right": {"family": "pgg", "cls": "extortionate",
                   "axis1": (1.01, 7.99, 0.01)},
    "fig2-left": {"family": "sdg", "cls": "generous",
                  "axis1": (1.01, 10.0, 0.01)},
    "fig2-right": {"family": "sdg", "cls": "extortionate",
                   "axis1": (1.01, 10.0, 0.01)},
}
PRESET_N = 8


def preset_sweep(name: str, step: float | None = None) -> RegionGrid:
    p = PRESETS[name]
    start, stop, default_step = p["axis1"]
    grid = region_sweep(p["family"], PRESET_N,
                        decimal_grid(start, stop, step or default_step),
                        range(2, PRESET_N), p["cls"])
    grid.metadata["preset"] = name
    return grid


def default_axis(family: Family | str, n: int, step: float = 0.01) -> list[float]:
    family = Family(family)
    if family is Family.PGG:
        return decimal_grid(1 + step, n - step, step)
    return decimal_grid(1 + step, 10.0, step)

