"""Acceptance gate. Each criterion prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` or directly as a script.
"""

from __future__ import annotations

import functools
import sys
from dataclasses import dataclass

import numpy as np
import pytest

from zdthresh.errors import ZDError
from zdthresh.games import GameSpec, payoff_table
from zdthresh.regions import (closed_form_bound, equalizer_exists,
                              numeric_slope_bound, pgg_extortionate_bound,
                              pgg_generous_bound, preset_sweep,
                              sdg_extortionate_bound, sdg_generous_bound)
from zdthresh.verify import (StrategyProfile, exact_discounted_payoffs,
                             random_opponents, relation_residual,
                             simulate_monte_carlo)
from zdthresh.zd import (ZDClass, ZDParameters, baseline_for, construct_zd,
                         default_p0, enforceable, feasible_phi_interval,
                         slope_floor)

RESULTS: dict[int, str] = {}

ENFORCE_CASES = 1000
ENFORCE_TOL = 1e-8
SIGN_TOL = 1e-8
MC_CASES = 50
MC_EPISODES = 200_000
MC_SIGMAS = 4.0
MC_REQUIRED = 49
BOUND_TOL = 1e-8
VALUE_TOL = 1e-12
DELTAS = (0.9, 0.99, 0.999)
MASTER_SEED = 20240601


def report(k: int, passed: bool, detail: str) -> bool:
    line = f"{'PASS' if passed else 'FAIL'} criterion {k}: {detail}"
    RESULTS[k] = line
    print(line)
    return passed


def _steps(start, stop, step=0.2):
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def grid_specs(family):
    for n in range(3, 11):
        top = n - 0.05 if family == "pgg" else 10.0
        for m in range(2, n):
            for x in _steps(1.05, top):
                if family == "pgg":
                    yield GameSpec.pgg(n, m, r=x)
                else:
                    yield GameSpec.sdg(n, m, b=x, c=1.0)


def _bound_equivalence(family):
    worst, mismatches, cells = 0.0, [], 0
    for spec in grid_specs(family):
        table = payoff_table(spec)
        for cls in (ZDClass.GENEROUS, ZDClass.EXTORTIONATE):
            closed = closed_form_bound(spec, cls)
            oracle = numeric_slope_bound(table, cls)
            worst = max(worst, abs(closed.s_star - oracle.s_star))
            if closed.strict != oracle.strict:
                mismatches.append((spec, cls))
            cells += 1
    return worst, mismatches, cells


def criterion_1():
    worst, mism, cells = _bound_equivalence("pgg")
    ok = worst <= BOUND_TOL and not mism
    return report(1, ok, f"PGG closed form vs oracle over {cells} cells: "
                  f"max |diff| {worst:.2e} (tol {BOUND_TOL:g}), "
                  f"strictness mismatches {len(mism)}")


def criterion_2():
    worst, mism, cells = _bound_equivalence("sdg")
    ok = worst <= BOUND_TOL and not mism
    return report(2, ok, f"SDG closed form vs oracle over {cells} cells: "
                  f"max |diff| {worst:.2e} (tol {BOUND_TOL:g}), "
                  f"strictness mismatches {len(mism)}")


def criterion_3():
    specs = [*grid_specs("pgg"), *grid_specs("sdg")]
    hits = [s for s in specs if equalizer_exists(payoff_table(s))]
    return report(3, not hits, f"equalizer_exists true on {len(hits)} of "
                  f"{len(specs)} grid specs (expected 0)")


@dataclass(frozen=True)
class Case:
    spec: GameSpec
    cls: ZDClass
    params: ZDParameters
    opponents_seed: int


def _random_spec(rng):
    n = int(rng.integers(3, 11))
    m = int(rng.integers(2, n))
    if rng.random() < 0.5:
        return GameSpec.pgg(n, m, r=float(rng.uniform(1.0, n)))
    return GameSpec.sdg(n, m, b=float(rng.uniform(1.0, 10.0)), c=1.0)


def _draw_case(rng, deltas, index):
    """Resample until the drawn (spec, s, delta, p0) admits some phi."""
    while True:
        try:
            spec = _random_spec(rng)
        except ZDError:
            continue
        table = payoff_table(spec)
        cls = ZDClass.GENEROUS if rng.random() < 0.5 else ZDClass.EXTORTIONATE
        bound = closed_form_bound(spec, cls)
        lo = max(bound.s_star, slope_floor(spec.n))
        s = float(rng.uniform(lo, 1.0))
        l = baseline_for(table, cls)
        if not bound.admits(s) or not enforceable(table, s, l):
            continue
        p0 = float(rng.random())
        order = rng.permutation(len(deltas))
        for p in (p0, default_p0(cls)):
            for i in order:
                delta = deltas[i]
                interval = feasible_phi_interval(table, s, l, delta, p)
                if interval is None:
                    continue
                phi = float(rng.uniform(interval.lo, interval.hi))
                if phi <= 0:
                    continue
                params = ZDParameters(s=s, l=l, phi=phi, delta=delta, p0=p)
                return Case(spec, cls, params, index)


@functools.lru_cache(maxsize=None)
def enforcement_cases(count=ENFORCE_CASES, deltas=DELTAS, seed=MASTER_SEED):
    rng = np.random.default_rng(seed)
    return tuple(_draw_case(rng, deltas, i) for i in range(count))


def _profile(case):
    table = payoff_table(case.spec)
    focal = construct_zd(table, case.params)
    others = random_opponents(case.spec.n, MASTER_SEED, case.opponents_seed)
    return table, StrategyProfile.of(focal, others)


@functools.lru_cache(maxsize=None)
def enforcement_run():
    rows = []
    for case in enforcement_cases():
        table, profile = _profile(case)
        out = exact_discounted_payoffs(profile, table, case.params.delta)
        rows.append((case, out.pi_focal, out.pi_coplayers_avg,
                     relation_residual(out, case.params.s, case.params.l)))
    return rows


def criterion_4():
    rows = enforcement_run()
    res = np.array([abs(r[3]) for r in rows])
    ok = bool(np.all(res < ENFORCE_TOL))
    return report(4, ok, f"{int(np.sum(res < ENFORCE_TOL))}/{len(rows)} cases with "
                  f"|residual| < {ENFORCE_TOL:g}; max {res.max():.2e}")


def criterion_5():
    rows = enforcement_run()
    gen = [r for r in rows if r[0].cls is ZDClass.GENEROUS]
    ext = [r for r in rows if r[0].cls is ZDClass.EXTORTIONATE]
    gen_bad = [r for r in gen if not r[2] >= r[1] - SIGN_TOL]
    ext_bad = [r for r in ext if not r[2] <= r[1] + SIGN_TOL]
    ok = not gen_bad and not ext_bad
    detail = (f"generous others >= self in {len(gen) - len(gen_bad)}/{len(gen)}; "
              f"extortionate others <= self in {len(ext) - len(ext_bad)}/{len(ext)} "
              f"(tol {SIGN_TOL:g})")
    if ext_bad:
        below = sum(r[1] < r[0].params.l for r in ext_bad)
        detail += f"; {below}/{len(ext_bad)} violations have pi_self < l"
        worst = min(ext_bad, key=lambda r: r[1])
        detail += (f"; e.g. {worst[0].spec.family.value} n={worst[0].spec.n} "
                   f"m={worst[0].spec.m} pi_self={worst[1]:.4g} below l=b_0")
    return report(5, ok, detail)


def criterion_6():
    checks = [
        ("pgg_generous_bound(8,3,3)", pgg_generous_bound(8, 3, 3), 5 / 7, False),
        ("pgg_extortionate_bound(8,3,3)", pgg_extortionate_bound(8, 3, 3), 13 / 21, False),
        ("pgg_extortionate_bound(8,6,1.05)", pgg_extortionate_bound(8, 6, 1.05), 4 / 7, True),
        ("sdg_generous_bound(8,3,2,1)", sdg_generous_bound(8, 3, 2, 1), 109 / 133, None),
    ]
    checks += [(f"sdg_extortionate_bound(8,{m},2,1)", sdg_extortionate_bound(8, m, 2, 1),
                13 / 14, None) for m in range(2, 8)]
    bad = [name for name, got, want, strict in checks
           if abs(got.s_star - want) > VALUE_TOL
           or (strict is not None and got.strict != strict)]
    return report(6, not bad, f"{len(checks) - len(bad)}/{len(checks)} exact values "
                  f"within {VALUE_TOL:g}" + (f"; off: {bad}" if bad else ""))


def _oracle_curves(grid):
    ms = grid.m_values
    return {m: np.array([c.oracle.s_star for c in grid.cells if c.m == m]) for m in ms}


def criterion_7():
    n = 8
    notes = []
    # (a) generous PGG: boundary rises with m at every r.
    g = preset_sweep("fig1-left")
    curves = _oracle_curves(g)
    stack = np.stack([curves[m] for m in g.m_values])
    floored = np.stack([[c.closed.floored for c in g.cells if c.m == m] for m in g.m_values])
    diffs = np.diff(stack, axis=0)
    live = ~(floored[:-1] & floored[1:])
    a_ok = bool(np.all(diffs >= -BOUND_TOL) and np.all(diffs[live] > 0))
    notes.append(f"(a) generous PGG increasing in m: {a_ok}")
    # (b) extortionate SDG: same boundary for every m.
    e = preset_sweep("fig2-right")
    stack = np.stack(list(_oracle_curves(e).values()))
    spread = float(np.max(stack.max(axis=0) - stack.min(axis=0)))
    b_ok = spread <= BOUND_TOL
    notes.append(f"(b) extortionate SDG constant in m: {b_ok} (spread {spread:.1e})")
    # (c) extortionate PGG: branch switch at r = n/(n-m+1).
    x = preset_sweep("fig1-right")
    c_ok = True
    for cell in x.cells:
        m, r = cell.m, cell.axis1_value
        first = r * (n - m + 1) <= n
        want = (m - 2) / (n - 1) if first else 1 - n / (r * (n - 1))
        want = max(want, slope_floor(n))
        if abs(cell.oracle.s_star - want) > BOUND_TOL or cell.oracle.strict != first:
            c_ok = False
    switches = {m: round(n / (n - m + 1), 4) for m in x.m_values}
    notes.append(f"(c) extortionate PGG piecewise with switch at n/(n-m+1) "
                 f"{switches}: {c_ok}")
    return report(7, a_ok and b_ok and c_ok, "; ".join(notes))


def criterion_8():
    cases = enforcement_cases(MC_CASES, (0.9,), MASTER_SEED + 8)
    good = 0
    worst = 0.0
    for i, case in enumerate(cases):
        table, profile = _profile(case)
        exact = exact_discounted_payoffs(profile, table, 0.9)
        mc = simulate_monte_carlo(profile, table, 0.9, MC_EPISODES, seed=i)
        diff = np.abs(mc.pi - exact.pi)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(mc.stderr > 0, diff / mc.stderr, np.where(diff == 0, 0.0, np.inf))
        worst = max(worst, float(z.max()))
        good += bool(np.all(z <= MC_SIGMAS))
    return report(8, good >= MC_REQUIRED, f"{good}/{len(cases)} cases with every "
                  f"player within {MC_SIGMAS:g} stderr (need {MC_REQUIRED}); "
                  f"max |z| {worst:.2f}")


def criterion_9():
    specs = list(grid_specs("pgg"))
    leaks = []
    for spec in specs:
        table = payoff_table(spec)
        floor = slope_floor(spec.n)
        for s in (1.0, floor, floor - 1e-9, floor - 0.5, -1.0):
            params = ZDParameters(s=s, l=baseline_for(table, "generous"),
                                  phi=0.1, delta=0.99, p0=1.0)
            try:
                construct_zd(table, params)
            except ZDError:
                continue
            leaks.append((spec, s))
    return report(9, not leaks, f"construct_zd rejected s=1 and s<=-1/(n-1) on "
                  f"{len(specs) - len({l[0] for l in leaks})}/{len(specs)} specs")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion):
    assert criterion(), RESULTS[int(criterion.__name__.split("_")[1])]


if __name__ == "__main__":
    outcomes = [c() for c in CRITERIA]
    sys.exit(0 if all(outcomes) else 1)
