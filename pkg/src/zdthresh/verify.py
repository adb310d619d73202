"""Discounted payoffs of memory-one strategy profiles.

The exact route solves the full Markov chain over action profiles: a state
is an integer bitmask whose bit j is 1 when player j cooperated. Payoffs
are normalized by (1 - delta), so a constant per-round payoff g yields g.

The Monte Carlo route plays the game with geometric stopping: after every
round play continues with probability delta. The expected undiscounted
total times (1 - delta) equals the normalized discounted payoff.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import NumericFailure, StateSpaceTooLarge
from .games import PayoffTable
from .zd import MemoryOneStrategy

MAX_EXACT_PLAYERS = 16
# Above this the transition matrix is not materialized.
MAX_DENSE_PLAYERS = 12
RNG_ALGORITHM = "numpy.Philox(SeedSequence([seed, chunk]))"
MC_CHUNK = 8192


class Method(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class StrategyProfile:
    """Strategies of all n players; index 0 is the focal player."""

    n: int
    strategies: tuple[MemoryOneStrategy, ...]

    def __post_init__(self):
        strategies = tuple(self.strategies)
        if len(strategies) != self.n:
            raise ValueError(f"expected {self.n} strategies, got {len(strategies)}")
        for st in strategies:
            if st.n != self.n:
                raise ValueError("all strategies must be built for the same n")
        object.__setattr__(self, "strategies", strategies)

    @classmethod
    def of(cls, focal: MemoryOneStrategy,
           others: Sequence[MemoryOneStrategy]) -> "StrategyProfile":
        return cls(focal.n, (focal, *others))

    def prob_matrix(self) -> np.ndarray:
        return np.stack([st.probs for st in self.strategies])

    def inits(self) -> np.ndarray:
        return np.array([st.init for st in self.strategies])


@dataclass(frozen=True)
class PayoffOutcome:
    pi: np.ndarray
    method: Method
    delta: float
    stderr: np.ndarray | None = None
    seed: int | None = None
    episodes: int | None = None

    @property
    def n(self) -> int:
        return len(self.pi)

    @property
    def pi_focal(self) -> float:
        return float(self.pi[0])

    @property
    def pi_coplayers_avg(self) -> float:
        return float(np.sum(self.pi[1:]) / (self.n - 1))

    def to_dict(self, s: float | None = None, l: float | None = None) -> dict[str, Any]:
        d: dict[str, Any] = {
            "method": self.method.value,
            "delta": self.delta,
            "pi": self.pi.tolist(),
            "pi_focal": self.pi_focal,
            "pi_coplayers_avg": self.pi_coplayers_avg,
        }
        if self.stderr is not None:
            d["stderr"] = self.stderr.tolist()
        if self.method is Method.MONTE_CARLO:
            d["seed"] = self.seed
            d["episodes"] = self.episodes
            d["rng"] = RNG_ALGORITHM
        if s is not None and l is not None:
            d["s"] = s
            d["l"] = l
            d["residual"] = relation_residual(self, s, l)
        return d

    def to_json(self, s: float | None = None, l: float | None = None) -> str:
        return json.dumps(self.to_dict(s, l), indent=2)


def relation_residual(outcome: PayoffOutcome, s: float, l: float) -> float:
    """Signed gap ``pi_others - s*pi_focal - (1-s)*l``."""
    return outcome.pi_coplayers_avg - s * outcome.pi_focal - (1 - s) * l


def random_memory_one(n: int, seed: int) -> MemoryOneStrategy:
    if n < 2:
        raise ValueError("n must be at least 2")
    u = np.random.Generator(np.random.Philox(seed)).random(2 * n + 1)
    return MemoryOneStrategy(n, u[:-1], float(u[-1]))


def random_opponents(n: int, seed: int, sample: int = 0) -> list[MemoryOneStrategy]:
    """n-1 random memory-one co-players for profile number ``sample``."""
    seeds = np.random.SeedSequence([seed, sample]).generate_state(n - 1, np.uint64)
    return [random_memory_one(n, int(s)) for s in seeds]


def _profile_bits(n):
    states = np.arange(1 << n)
    return (states[:, None] >> np.arange(n)) & 1


def _decision_index(n, own, z):
    # Position in the descending (C, z) / (D, z) layout of a strategy vector.
    return np.where(own == 1, n - 1 - z, 2 * n - 1 - z)


def state_tables(profile: StrategyProfile, table: PayoffTable):
    """Per-state cooperation probabilities and payoffs, both (2**n, n)."""
    n = profile.n
    bits = _profile_bits(n)
    total = bits.sum(axis=1, keepdims=True)
    z = total - bits
    idx = _decision_index(n, bits, z)
    probs = profile.prob_matrix()
    coop = probs[np.arange(n)[None, :], idx]
    payoff = np.where(bits == 1, table.a[z], table.b[z])
    return coop, payoff


def _product_distribution(p):
    """Joint law of independent Bernoulli(p[..., j]) over bitmask states.

    ``p`` has shape (..., n); the result has shape (..., 2**n).
    """
    n = p.shape[-1]
    out = np.ones(p.shape[:-1] + (1,))
    for j in range(n - 1, -1, -1):
        q = np.stack([1 - p[..., j], p[..., j]], axis=-1)
        out = (out[..., :, None] * q[..., None, :]).reshape(p.shape[:-1] + (-1,))
    return out


def transition_matrix(profile: StrategyProfile, table: PayoffTable) -> np.ndarray:
    coop, _ = state_tables(profile, table)
    return _product_distribution(coop)


def initial_distribution(profile: StrategyProfile) -> np.ndarray:
    return _product_distribution(profile.inits())


def _dense_occupancy(coop, v0, delta):
    M = _product_distribution(coop)
    A = np.eye(len(v0)) - delta * M.T
    try:
        return linalg.solve(A, v0)
    except linalg.LinAlgError as exc:
        raise NumericFailure(f"discounted occupancy solve failed: {exc}") from exc


def _transposed_transition_operator(P, n):
    """Return x -> M^T x without forming M.

    Among states with k cooperators, player j's next move depends only on
    its own previous action, so that block of M is a Kronecker product of
    per-player 2x2 kernels (rows: own previous action, columns: next one).
    """
    total = _profile_bits(n).sum(axis=1)
    masks = [total == k for k in range(n + 1)]
    kernels = []
    for k in range(n + 1):
        row = []
        for j in range(n):
            p_d = P[j, 2 * n - 1 - k] if k < n else 0.0
            p_c = P[j, n - k] if k > 0 else 0.0
            row.append(np.array([[1 - p_d, p_d], [1 - p_c, p_c]]))
        kernels.append(row)
    shape = (2,) * n

    def apply(x):
        y = np.zeros_like(x)
        for k in range(n + 1):
            t = np.where(masks[k], x, 0.0).reshape(shape)
            for j in range(n):
                axis = n - 1 - j
                t = np.moveaxis(np.tensordot(t, kernels[k][j], axes=([axis], [0])),
                                -1, axis)
            y += t.reshape(-1)
        return y

    return apply


def _iterative_occupancy(P, v0, delta, n):
    size = len(v0)
    apply_mt = _transposed_transition_operator(P, n)
    op = LinearOperator((size, size), dtype=float,
                        matvec=lambda x: x - delta * apply_mt(x))
    x, info = gmres(op, v0, rtol=1e-13, atol=0.0, restart=100, maxiter=200)
    if info != 0:
        raise NumericFailure(f"GMRES did not converge (info={info})")
    return x


def discounted_occupancy(profile: StrategyProfile, table: PayoffTable,
                         delta: float, dense: bool | None = None) -> np.ndarray:
    """Solve ``x = v0 + delta * M^T x``: the expected discounted number of
    visits to each action profile."""
    n = profile.n
    v0 = initial_distribution(profile)
    if dense is None:
        dense = n <= MAX_DENSE_PLAYERS
    if dense:
        coop, _ = state_tables(profile, table)
        return _dense_occupancy(coop, v0, delta)
    return _iterative_occupancy(profile.prob_matrix(), v0, delta, n)


def exact_discounted_payoffs(profile: StrategyProfile, table: PayoffTable,
                             delta: float, dense: bool | None = None) -> PayoffOutcome:
    if profile.n != table.n:
        raise ValueError("profile and payoff table disagree on n")
    if profile.n > MAX_EXACT_PLAYERS:
        raise StateSpaceTooLarge(
            f"exact solve supports n <= {MAX_EXACT_PLAYERS} (got n={profile.n}); "
            "use the Monte Carlo simulator instead")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    occupancy = discounted_occupancy(profile, table, delta, dense=dense)
    _, payoff = state_tables(profile, table)
    pi = (1 - delta) * occupancy @ payoff
    if not np.all(np.isfinite(pi)):
        raise NumericFailure("non-finite payoff from the linear solve")
    return PayoffOutcome(pi=pi, method=Method.EXACT, delta=delta)


def _chunk_totals(P, init, a, b, delta, size, rng):
    n = len(init)
    players = np.arange(n)
    totals = np.zeros((size, n))
    live = np.arange(size)
    acts = (rng.random((size, n)) < init).astype(np.int64)
    while live.size:
        k = acts.sum(axis=1, keepdims=True)
        z = k - acts
        totals[live] += np.where(acts == 1, a[z], b[z])
        keep = rng.random(live.size) < delta
        live, acts, z = live[keep], acts[keep], z[keep]
        p = P[players[None, :], _decision_index(n, acts, z)]
        acts = (rng.random(p.shape) < p).astype(np.int64)
    return totals


def simulate_monte_carlo(profile: StrategyProfile, table: PayoffTable,
                         delta: float, episodes: int, seed: int) -> PayoffOutcome:
    """Estimate discounted payoffs by simulating ``episodes`` plays.

    Episodes are processed in fixed chunks of 8192, each with its own
    generator derived from ``(seed, chunk index)``, so the result does not
    depend on evaluation order.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    P = profile.prob_matrix()
    init = profile.inits()
    parts = []
    for chunk, start in enumerate(range(0, episodes, MC_CHUNK)):
        size = min(MC_CHUNK, episodes - start)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))
        parts.append(_chunk_totals(P, init, table.a, table.b, delta, size, rng))
    totals = np.concatenate(parts)
    pi = (1 - delta) * totals.mean(axis=0)
    if episodes > 1:
        stderr = (1 - delta) * totals.std(axis=0, ddof=1) / np.sqrt(episodes)
    else:
        stderr = np.zeros(profile.n)
    return PayoffOutcome(pi=pi, method=Method.MONTE_CARLO, delta=delta,
                         stderr=stderr, seed=seed, episodes=episodes)
