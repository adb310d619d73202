"""Threshold public goods and snowdrift games.

Payoffs are stored ascending in the number ``z`` of cooperating co-players:
``a[z]`` is what a cooperator earns, ``b[z]`` what a defector earns.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidSpec


class Family(str, enum.Enum):
    PGG = "pgg"
    SDG = "sdg"


@dataclass(frozen=True)
class GameSpec:
    """Parameters of one threshold game.

    ``r`` is only used by the public goods game and ``b`` only by the
    snowdrift game; ``c`` is the contribution cost (PGG) or the total
    clearing cost shared by the cooperators (SDG).
    """

    family: Family
    n: int
    m: int
    c: float = 1.0
    r: float | None = None
    b: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        validate_spec(self)

    @classmethod
    def pgg(cls, n: int, m: int, r: float, c: float = 1.0) -> "GameSpec":
        return cls(Family.PGG, n, m, c=c, r=r)

    @classmethod
    def sdg(cls, n: int, m: int, b: float, c: float = 1.0) -> "GameSpec":
        return cls(Family.SDG, n, m, c=c, b=b)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"family": self.family.value, "n": self.n, "m": self.m}
        if self.family is Family.PGG:
            d["r"] = self.r
        else:
            d["b"] = self.b
        d["c"] = self.c
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GameSpec":
        try:
            family = Family(str(d["family"]).lower())
        except (KeyError, ValueError):
            raise InvalidSpec("family must be 'pgg' or 'sdg'") from None
        for key in ("n", "m"):
            if key not in d:
                raise InvalidSpec(f"missing field {key!r}")
        extra = "r" if family is Family.PGG else "b"
        if extra not in d:
            raise InvalidSpec(f"missing field {extra!r} for family {family.value}")
        kwargs = {extra: float(d[extra])}
        return cls(family, _as_int(d["n"], "n"), _as_int(d["m"], "m"),
                   c=float(d.get("c", 1.0)), **kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GameSpec":
        return cls.from_dict(json.loads(text))


def _as_int(value, name):
    if isinstance(value, bool) or int(value) != value:
        raise InvalidSpec(f"{name} must be an integer, got {value!r}")
    return int(value)


def validate_spec(spec: GameSpec) -> None:
    """Raise :class:`InvalidSpec` naming the first violated bound."""
    n, m, c = spec.n, spec.m, spec.c
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidSpec(f"n must be an integer >= 2, got {n!r}")
    if not isinstance(m, (int, np.integer)) or not 1 < m < n:
        raise InvalidSpec(f"m must satisfy 1 < m < n (got m={m}, n={n})")
    if spec.family is Family.PGG:
        if spec.r is None:
            raise InvalidSpec("r is required for the public goods game")
        if not c > 0:
            raise InvalidSpec(f"c > 0 required (got c={c})")
        if not 1 < spec.r < n:
            raise InvalidSpec(f"r must satisfy 1 < r < n (got r={spec.r}, n={n})")
    else:
        if spec.b is None:
            raise InvalidSpec("b is required for the snowdrift game")
        if not c > 0:
            raise InvalidSpec(f"c > 0 required (got c={c})")
        if not spec.b > c:
            raise InvalidSpec(f"b > c required (got b={spec.b}, c={c})")


@dataclass(frozen=True)
class PayoffTable:
    """Cooperator payoffs ``a[z]`` and defector payoffs ``b[z]``, z = 0..n-1."""

    n: int
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.shape != (self.n,) or b.shape != (self.n,):
            raise ValueError(f"payoff vectors must have length n={self.n}")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def scaled(self, k: float) -> "PayoffTable":
        return PayoffTable(self.n, k * self.a, k * self.b)

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "a": self.a.tolist(), "b": self.b.tolist()}


def pgg_payoffs(spec: GameSpec) -> PayoffTable:
    if spec.family is not Family.PGG:
        raise InvalidSpec("pgg_payoffs needs a public goods game spec")
    validate_spec(spec)
    n, m, r, c = spec.n, spec.m, spec.r, spec.c
    z = np.arange(n)
    a = np.where(z >= m - 1, r * c * (z + 1) / n - c, -c)
    b = np.where(z >= m, r * c * z / n, 0.0)
    return PayoffTable(n, a, b)


def sdg_payoffs(spec: GameSpec) -> PayoffTable:
    if spec.family is not Family.SDG:
        raise InvalidSpec("sdg_payoffs needs a snowdrift game spec")
    validate_spec(spec)
    n, m, benefit, c = spec.n, spec.m, spec.b, spec.c
    z = np.arange(n)
    a = np.where(z >= m - 1, benefit - c / (z + 1), -c / (z + 1))
    b = np.where(z >= m, benefit, 0.0)
    return PayoffTable(n, a, b)


def payoff_table(spec: GameSpec) -> PayoffTable:
    if spec.family is Family.PGG:
        return pgg_payoffs(spec)
    return sdg_payoffs(spec)


@dataclass(frozen=True)
class AssumptionReport:
    monotone: bool
    defector_advantage: bool
    cooperation_favored: bool
    violations: list[tuple[str, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "monotone": self.monotone,
            "defector_advantage": self.defector_advantage,
            "cooperation_favored": self.cooperation_favored,
            "violations": [list(v) for v in self.violations],
        }


def check_social_dilemma(table: PayoffTable) -> AssumptionReport:
    """Check the three social-dilemma conditions on every valid index.

    Violations are reported as ``(condition, z)`` with condition one of
    ``"monotone"`` (a and b nondecreasing), ``"defector_advantage"``
    (b[z+1] > a[z]) or ``"cooperation_favored"`` (a[n-1] > b[0], reported
    with z = n-1).
    """
    a, b, n = table.a, table.b, table.n
    violations = []
    for z in range(n - 1):
        if not (a[z + 1] >= a[z] and b[z + 1] >= b[z]):
            violations.append(("monotone", z))
    for z in range(n - 1):
        if not b[z + 1] > a[z]:
            violations.append(("defector_advantage", z))
    if not a[n - 1] > b[0]:
        violations.append(("cooperation_favored", n - 1))
    kinds = {v[0] for v in violations}
    return AssumptionReport(
        monotone="monotone" not in kinds,
        defector_advantage="defector_advantage" not in kinds,
        cooperation_favored="cooperation_favored" not in kinds,
        violations=violations,
    )
