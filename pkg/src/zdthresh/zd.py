"""Zero-determinant memory-one strategies for symmetric n-player games.

Strategy vectors use the ordering

    (p[C,n-1], ..., p[C,0], p[D,n-1], ..., p[D,0])

so entry ``k < n`` is "I cooperated and z = n-1-k co-players cooperated"
and entry ``k >= n`` is "I defected and z = 2n-1-k co-players cooperated".
The payoff tables themselves stay ascending in z; only the vectors built
here are descending.

A ZD strategy with slope ``s``, baseline ``l`` and scale ``phi`` satisfies

    delta * p = p_rep + phi * (s*g_self - g_others + (1-s)*l) - (1-delta)*p0

where ``p_rep`` repeats the previous action (ones on the C half, zeros on
the D half).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (InfeasibleParameters, NotEnforceable, NotFound,
                     SlopeAtOne, SlopeOutOfRange)
from .games import PayoffTable

# Entries of a constructed strategy may stray this far outside [0, 1] from
# rounding; they are clamped. Anything further is an error.
PROB_TOL = 1e-12


class ZDClass(str, enum.Enum):
    GENEROUS = "generous"
    EXTORTIONATE = "extortionate"
    EQUALIZER = "equalizer"


@dataclass(frozen=True)
class ZDParameters:
    s: float
    l: float
    phi: float
    delta: float
    p0: float

    def validate(self, n: int) -> None:
        check_slope(n, self.s)
        if not self.phi > 0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 <= self.p0 <= 1:
            raise ValueError(f"p0 must lie in [0, 1], got {self.p0}")

    def to_dict(self) -> dict[str, float]:
        return {"s": self.s, "l": self.l, "phi": self.phi,
                "delta": self.delta, "p0": self.p0}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ZDParameters":
        return cls(*(float(d[k]) for k in ("s", "l", "phi", "delta", "p0")))


@dataclass(frozen=True)
class MemoryOneStrategy:
    """Cooperation probabilities conditioned on the previous round.

    ``probs`` has length 2n in the descending layout described in the module
    docstring; ``init`` is the first-round cooperation probability.
    """

    n: int
    probs: np.ndarray
    init: float

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (2 * self.n,):
            raise ValueError(f"probs must have length 2n = {2 * self.n}")
        if np.any(probs < 0) or np.any(probs > 1) or np.any(np.isnan(probs)):
            raise ValueError("every entry of probs must lie in [0, 1]")
        if not 0 <= self.init <= 1:
            raise ValueError(f"init must lie in [0, 1], got {self.init}")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "init", float(self.init))

    def coop_prob(self, cooperated: bool, z: int) -> float:
        k = self.n - 1 - z if cooperated else 2 * self.n - 1 - z
        return float(self.probs[k])

    @classmethod
    def constant(cls, n: int, p: float) -> "MemoryOneStrategy":
        return cls(n, np.full(2 * n, p), p)

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "probs": self.probs.tolist(), "init": self.init}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MemoryOneStrategy":
        return cls(int(d["n"]), d["probs"], float(d["init"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MemoryOneStrategy":
        return cls.from_dict(json.loads(text))


def allc(n: int) -> MemoryOneStrategy:
    return MemoryOneStrategy.constant(n, 1.0)


def alld(n: int) -> MemoryOneStrategy:
    return MemoryOneStrategy.constant(n, 0.0)


def repeat_vector(n: int) -> np.ndarray:
    return np.concatenate([np.ones(n), np.zeros(n)])


def payoff_vector_self(table: PayoffTable) -> np.ndarray:
    return np.concatenate([table.a[::-1], table.b[::-1]])


def payoff_vector_coplayers(table: PayoffTable) -> np.ndarray:
    """Average co-player payoff for each of the 2n outcomes, descending in z."""
    n, a, b = table.n, table.a, table.b
    coop = np.empty(n)
    defect = np.empty(n)
    for z in range(n):
        others_d = n - z - 1
        # a[z-1] at z = 0 and b[z+1] at z = n-1 carry a zero weight.
        coop[z] = z * a[z] + (others_d * b[z + 1] if others_d else 0.0)
        defect[z] = (z * a[z - 1] if z else 0.0) + others_d * b[z]
    coop /= n - 1
    defect /= n - 1
    return np.concatenate([coop[::-1], defect[::-1]])


def slope_floor(n: int) -> float:
    return -1.0 / (n - 1)


def slope_in_range(n: int, s: float) -> bool:
    return -1.0 / (n - 1) < s < 1


def check_slope(n: int, s: float) -> None:
    if not slope_in_range(n, s):
        raise SlopeOutOfRange(
            f"slope must satisfy -1/(n-1) < s < 1 (got s={s}, n={n})")


def lower_terms(table: PayoffTable, s: float) -> np.ndarray:
    """Per-z lower-bound expressions for the baseline payoff (ascending z)."""
    if s == 1:
        raise SlopeAtOne("baseline bounds are undefined at s = 1")
    n, a, b = table.n, table.a, table.b
    z = np.arange(1, n)
    out = np.empty(n)
    out[0] = b[0]
    out[1:] = b[1:] - (z / (n - 1)) * (b[1:] - a[:-1]) / (1 - s)
    return out


def upper_terms(table: PayoffTable, s: float) -> np.ndarray:
    """Per-z upper-bound expressions for the baseline payoff (ascending z)."""
    if s == 1:
        raise SlopeAtOne("baseline bounds are undefined at s = 1")
    n, a, b = table.n, table.a, table.b
    z = np.arange(n - 1)
    out = np.empty(n)
    out[:-1] = a[:-1] + ((n - z - 1) / (n - 1)) * (b[1:] - a[:-1]) / (1 - s)
    out[-1] = a[-1]
    return out


@dataclass(frozen=True)
class LBounds:
    lower: float
    upper: float
    lower_argz: int
    upper_argz: int

    @property
    def width(self) -> float:
        return self.upper - self.lower


def l_bounds(table: PayoffTable, s: float) -> LBounds:
    lo = lower_terms(table, s)
    hi = upper_terms(table, s)
    i, j = int(np.argmax(lo)), int(np.argmin(hi))
    return LBounds(float(lo[i]), float(hi[j]), i, j)


def enforceable(table: PayoffTable, s: float, l: float) -> bool:
    """True iff (s, l) satisfies the slope range and the baseline bounds,
    with at least one of the two baseline inequalities strict."""
    if not slope_in_range(table.n, s):
        return False
    bounds = l_bounds(table, s)
    if not bounds.lower <= l <= bounds.upper:
        return False
    return bounds.lower < l or l < bounds.upper


def zd_direction(table: PayoffTable, s: float, l: float) -> np.ndarray:
    """The bracket ``s*g_self - g_others + (1-s)*l`` multiplying phi."""
    return (s * payoff_vector_self(table) - payoff_vector_coplayers(table)
            + (1 - s) * l)


def baseline_for(table: PayoffTable, cls: ZDClass | str) -> float:
    """Baseline payoff of the generous (full cooperation) or extortionate
    (mutual defection) preset."""
    cls = ZDClass(cls)
    if cls is ZDClass.GENEROUS:
        return float(table.a[-1])
    if cls is ZDClass.EXTORTIONATE:
        return float(table.b[0])
    raise ValueError("equalizer strategies have no fixed baseline payoff")


def default_p0(cls: ZDClass | str | None) -> float | None:
    if cls is None:
        return None
    cls = ZDClass(cls)
    if cls is ZDClass.GENEROUS:
        return 1.0
    if cls is ZDClass.EXTORTIONATE:
        return 0.0
    return None


def construct_zd(table: PayoffTable, params: ZDParameters) -> MemoryOneStrategy:
    n = table.n
    params.validate(n)
    d = params.delta
    raw = (repeat_vector(n) + params.phi * zd_direction(table, params.s, params.l)
           - (1 - d) * params.p0) / d
    bad = [(k, float(v)) for k, v in enumerate(raw)
           if v < -PROB_TOL or v > 1 + PROB_TOL]
    if bad:
        raise InfeasibleParameters(bad)
    return MemoryOneStrategy(n, np.clip(raw, 0.0, 1.0), params.p0)


class PhiInterval(NamedTuple):
    """Admissible scales ``phi``: ``lo < phi <= hi`` if lo is 0, else closed."""

    lo: float
    hi: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, phi) -> bool:
        return phi > 0 and self.lo <= phi <= self.hi


def _phi_limits(v, delta, p0, n):
    # delta * p_k = rep_k + phi * v_k - (1 - delta) * p0, and p_k must stay in
    # [-tol, 1 + tol]; half the clamp tolerance keeps endpoints safely inside.
    slack = 0.5 * PROB_TOL * delta
    shift = (1 - delta) * p0 - repeat_vector(n)
    low = shift - slack                # phi * v_k >= low
    high = shift + delta + slack       # phi * v_k <= high
    lo, hi = 0.0, np.inf
    for vk, lk, hk in zip(v, low, high):
        if vk > 0:
            lo = max(lo, lk / vk)
            hi = min(hi, hk / vk)
        elif vk < 0:
            lo = max(lo, hk / vk)
            hi = min(hi, lk / vk)
        elif not lk <= 0 <= hk:
            return 0.0, -np.inf
    return lo, hi


def feasible_phi_interval(table: PayoffTable, s: float, l: float, delta: float,
                          p0: float) -> PhiInterval | None:
    """All phi > 0 for which :func:`construct_zd` succeeds, or None if empty.

    Each of the 2n strategy entries is linear in phi, so the admissible set
    is an intersection of half-lines.
    """
    check_slope(table.n, s)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0 <= p0 <= 1:
        raise ValueError(f"p0 must lie in [0, 1], got {p0}")
    lo, hi = _phi_limits(zd_direction(table, s, l), delta, p0, table.n)
    if hi < lo or hi <= 0 or not np.isfinite(hi):
        return None
    return PhiInterval(lo, hi)


def _phi_gap(v, delta, p0, n):
    lo, hi = _phi_limits(v, delta, p0, n)
    return hi - lo if np.isfinite(hi) else -np.inf


def best_p0(table: PayoffTable, s: float, l: float, delta: float) -> float:
    """The p0 maximizing the width of the phi interval.

    The lower limit is a max of functions affine in p0 and the upper limit a
    min of affine functions, so their difference is concave in p0.
    """
    v = zd_direction(table, s, l)
    res = minimize_scalar(lambda p: -_phi_gap(v, delta, p, table.n),
                          bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def _p0_candidates(table, s, l, delta):
    yield from np.linspace(0.0, 1.0, 11)
    yield best_p0(table, s, l, delta)


def feasible_at(table: PayoffTable, s: float, l: float, delta: float) -> bool:
    return any(feasible_phi_interval(table, s, l, delta, float(p0)) is not None
               for p0 in _p0_candidates(table, s, l, delta))


def min_enforceable_delta(table: PayoffTable, s: float, l: float,
                          resolution: float = 1e-6) -> float:
    """Smallest discount factor (to ``resolution``) admitting some phi.

    Feasibility only grows with delta for a fixed p0, so a bisection on the
    grid of candidate p0 values is valid.
    """
    if not enforceable(table, s, l):
        raise NotEnforceable(f"(s={s}, l={l}) is not enforceable")
    top = 1.0 - resolution
    if not feasible_at(table, s, l, top):
        raise NotFound(f"no feasible phi for delta up to {top}")
    lo, hi = 0.0, top
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if feasible_at(table, s, l, mid):
            hi = mid
        else:
            lo = mid
    return hi


def resolve_parameters(table: PayoffTable, s: float, l: float, delta: float,
                       phi: float | None = None, p0: float | None = None,
                       cls: ZDClass | str | None = None) -> ZDParameters:
    """Fill in missing phi and p0 for a requested (s, l, delta).

    p0 defaults to 1 for generous and 0 for extortionate strategies; without
    a class the first candidate with a nonempty phi interval is used. phi
    defaults to the midpoint of its feasible interval.
    """
    check_slope(table.n, s)
    if not enforceable(table, s, l):
        raise NotEnforceable(f"(s={s}, l={l}) is not enforceable")
    if p0 is None:
        p0 = default_p0(cls)
    if p0 is None:
        for cand in [1.0, 0.0, *_p0_candidates(table, s, l, delta)]:
            if feasible_phi_interval(table, s, l, delta, float(cand)) is not None:
                p0 = float(cand)
                break
        else:
            p0 = 1.0
    if phi is None:
        interval = feasible_phi_interval(table, s, l, delta, p0)
        if interval is None:
            raise InfeasibleParameters(
                [], f"no feasible phi at delta={delta}, p0={p0}")
        phi = interval.midpoint
    return ZDParameters(s=s, l=l, phi=phi, delta=delta, p0=p0)
