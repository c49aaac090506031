"""Exact and Monte Carlo Shapley attribution, plus power indices.

A coalitional game assigns a worth v(S) to every subset of n players with
v(empty) = 0.  Exact Shapley values use the factorial-weighted subset sum over
a fully materialized table (n <= 24).  The sampled estimator averages marginal
contributions over random player permutations and reports a standard error
per player.  Simple (win/lose) games get integer-exact Shapley-Shubik power
indices for n <= 20 via rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, OutcomeEvaluationError
from .lattice import EXACT_ENUMERATION_MAX, ExclusionSet

SSPI_EXACT_MAX = 20

OutcomeScalarFn = Callable[[ExclusionSet], float]
OutcomeVectorFn = Callable[[ExclusionSet], Mapping[str, float]]
RuleFn = Callable[[Mapping[str, float]], bool]


def _mask_label(n: int, mask: int) -> str:
    members = [str(i) for i in range(n) if mask >> i & 1]
    return "{" + ", ".join(members) + "}"


@dataclass(frozen=True, eq=False)
class CoalitionalGame:
    """Characteristic function over n players, table- or evaluator-backed."""

    n: int
    table: np.ndarray | None = None
    evaluator: Callable[[int], float] | None = None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("player count must be nonnegative")
        if (self.table is None) == (self.evaluator is None):
            raise ValueError("exactly one of table or evaluator must be given")
        if self.table is not None:
            if self.table.shape != (1 << self.n,):
                raise ValueError("table size must be 2^n")
            if self.table[0] != 0.0:
                raise ValueError("v(empty) must be exactly zero")

    @classmethod
    def from_table(cls, values: Sequence[float]) -> "CoalitionalGame":
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0 or arr.size & (arr.size - 1):
            raise ValueError("table length must be a positive power of two")
        arr.flags.writeable = False
        return cls(n=arr.size.bit_length() - 1, table=arr)

    def value_of_mask(self, mask: int) -> float:
        if not 0 <= mask < (1 << self.n):
            raise ValueError(f"mask {mask} out of range for {self.n} players")
        if self.table is not None:
            return float(self.table[mask])
        if mask == 0:
            return 0.0
        assert self.evaluator is not None
        try:
            return float(self.evaluator(mask))
        except Exception as exc:
            raise OutcomeEvaluationError(
                f"characteristic evaluation failed on subset "
                f"{_mask_label(self.n, mask)}: {exc}"
            ) from exc

    def value(self, subset: ExclusionSet) -> float:
        if subset.n != self.n:
            raise ValueError("subset width does not match the game")
        return self.value_of_mask(subset.bits)

    def materialized(self) -> np.ndarray:
        """Full 2^n value table; raises past the exact-enumeration limit."""
        if self.table is not None:
            return self.table
        if self.n > EXACT_ENUMERATION_MAX:
            raise CapacityError(
                f"cannot materialize 2^{self.n} coalition values; "
                f"limit is n = {EXACT_ENUMERATION_MAX} (use shapley_sampled)"
            )
        table = np.empty(1 << self.n, dtype=np.float64)
        for mask in range(1 << self.n):
            table[mask] = self.value_of_mask(mask)
        table.flags.writeable = False
        return table


def characteristic_from_outcome(
    f: OutcomeScalarFn,
    n: int,
    materialize: bool | None = None,
) -> CoalitionalGame:
    """Game with v(S) = f(S) - f(empty), pinned to v(empty) = 0 exactly.

    ``materialize`` defaults to True when exact enumeration is feasible
    (n <= 24); pass False to keep ``f`` as an on-demand evaluator for
    sampling-only use at larger n.
    """
    if n < 0:
        raise ValueError("player count must be nonnegative")

    def outcome(mask: int) -> float:
        subset = ExclusionSet(n, mask)
        try:
            return float(f(subset))
        except Exception as exc:
            raise OutcomeEvaluationError(
                f"outcome function failed on subset {_mask_label(n, mask)}: {exc}"
            ) from exc

    base = outcome(0)
    if materialize is None:
        materialize = n <= EXACT_ENUMERATION_MAX
    if materialize:
        if n > EXACT_ENUMERATION_MAX:
            raise CapacityError(
                f"cannot materialize 2^{n} coalition values; "
                f"limit is n = {EXACT_ENUMERATION_MAX}"
            )
        table = np.empty(1 << n, dtype=np.float64)
        table[0] = 0.0
        for mask in range(1, 1 << n):
            table[mask] = outcome(mask) - base
        table.flags.writeable = False
        return CoalitionalGame(n=n, table=table)
    return CoalitionalGame(n=n, evaluator=lambda mask: outcome(mask) - base)


@dataclass(frozen=True)
class ShapleyResult:
    """Per-player attribution with bookkeeping for how it was computed.

    ``shares`` divides each value by the value total and is absent (None)
    when that total is zero, never NaN.
    """

    values: tuple[float, ...]
    grand_value: float
    shares: tuple[float, ...] | None
    mode: str
    std_errors: tuple[float, ...] | None = None
    permutations_used: int | None = None
    seed: int | None = None

    @property
    def efficiency_residual(self) -> float:
        """Sum of values minus the grand-coalition worth."""
        return sum(self.values) - self.grand_value


def _popcounts(size: int, n: int) -> np.ndarray:
    masks = np.arange(size, dtype=np.int64)
    pop = np.zeros(size, dtype=np.int64)
    for i in range(n):
        pop += (masks >> i) & 1
    return pop


def _result(values: Sequence[float], grand: float, mode: str,
            std_errors: tuple[float, ...] | None = None,
            permutations: int | None = None,
            seed: int | None = None) -> ShapleyResult:
    vals = tuple(float(v) for v in values)
    total = sum(vals)
    shares = None if total == 0.0 else tuple(v / total for v in vals)
    return ShapleyResult(vals, float(grand), shares, mode,
                         std_errors, permutations, seed)


def shapley_exact(game: CoalitionalGame) -> ShapleyResult:
    """Exact Shapley values by factorial-weighted subset summation."""
    n = game.n
    table = game.materialized()
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    pop = _popcounts(size, n)
    fact = [math.factorial(k) for k in range(n + 1)]
    weights = np.array(
        [float(Fraction(fact[k] * fact[n - 1 - k], fact[n])) for k in range(n)],
        dtype=np.float64,
    )
    values = []
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        gains = table[without | bit] - table[without]
        values.append(float(np.dot(weights[pop[without]], gains)))
    grand = float(table[size - 1])
    return _result(values, grand, "exact")


def shapley_sampled(
    game: CoalitionalGame, permutations: int, seed: int
) -> ShapleyResult:
    """Permutation-sampling Shapley estimate with per-player standard errors.

    Draws ``permutations`` uniform player orders from a seeded generator and
    averages each player's marginal contribution; identical inputs and seed
    reproduce the estimate bit for bit.  Standard errors use the sample
    standard deviation (ddof=1) over permutations and are zero when only one
    permutation is drawn.
    """
    if permutations < 1:
        raise ValueError("permutation count must be at least 1")
    n = game.n
    if n == 0:
        return _result((), 0.0, "sampled", (), permutations, seed)
    rng = np.random.default_rng(seed)
    base = np.tile(np.arange(n, dtype=np.int64), (permutations, 1))
    perms = rng.permuted(base, axis=1)
    samples = np.empty((permutations, n), dtype=np.float64)
    full_mask = (1 << n) - 1
    if game.table is not None:
        powers = np.int64(1) << np.arange(n, dtype=np.int64)
        prefixes = np.cumsum(powers[perms], axis=1)
        worths = game.table[prefixes]
        marginals = np.empty_like(worths)
        marginals[:, 0] = worths[:, 0]
        marginals[:, 1:] = np.diff(worths, axis=1)
        np.put_along_axis(samples, perms, marginals, axis=1)
        grand = float(game.table[full_mask])
    else:
        memo: dict[int, float] = {0: 0.0}
        for p in range(permutations):
            mask = 0
            prev = 0.0
            for j in range(n):
                player = int(perms[p, j])
                mask |= 1 << player
                worth = memo.get(mask)
                if worth is None:
                    worth = game.value_of_mask(mask)
                    memo[mask] = worth
                samples[p, player] = worth - prev
                prev = worth
        grand = memo[full_mask]
    means = samples.mean(axis=0)
    if permutations > 1:
        errors = samples.std(axis=0, ddof=1) / math.sqrt(permutations)
    else:
        errors = np.zeros(n, dtype=np.float64)
    return _result(
        means, grand, "sampled",
        tuple(float(e) for e in errors), permutations, seed,
    )


@dataclass(frozen=True, eq=False)
class SimpleGame:
    """A win/lose coalitional game stored as a 0/1 table indexed by mask."""

    n: int
    wins: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("player count must be nonnegative")
        if self.n > EXACT_ENUMERATION_MAX:
            raise CapacityError(
                f"simple games support at most {EXACT_ENUMERATION_MAX} players"
            )
        if self.wins.shape != (1 << self.n,):
            raise ValueError("wins table size must be 2^n")
        if not np.isin(self.wins, (0, 1)).all():
            raise ValueError("wins table entries must be 0 or 1")

    @classmethod
    def from_flags(cls, n: int, flags: Mapping[int, bool]) -> "SimpleGame":
        """Build from a mask -> flag mapping covering all 2^n subsets."""
        size = 1 << n
        if len(flags) != size or not all(0 <= m < size for m in flags):
            raise ValueError("flags must cover every mask exactly once")
        wins = np.zeros(size, dtype=np.uint8)
        for mask, flag in flags.items():
            wins[mask] = 1 if flag else 0
        wins.flags.writeable = False
        return cls(n=n, wins=wins)

    @property
    def degenerate_at_origin(self) -> bool:
        """True when the empty coalition already wins."""
        return bool(self.wins[0])

    @property
    def constant(self) -> bool:
        """True when every coalition has the same outcome."""
        return bool((self.wins == self.wins[0]).all())

    def win(self, subset: ExclusionSet) -> bool:
        if subset.n != self.n:
            raise ValueError("subset width does not match the game")
        return bool(self.wins[subset.bits])


def simple_game_from_rule(f: OutcomeVectorFn, rule: RuleFn, n: int) -> SimpleGame:
    """Evaluate an outcome function and a decision rule over every subset."""
    if n > EXACT_ENUMERATION_MAX:
        raise CapacityError(
            f"cannot enumerate 2^{n} subsets; limit is n = {EXACT_ENUMERATION_MAX}"
        )
    wins = np.zeros(1 << n, dtype=np.uint8)
    for mask in range(1 << n):
        subset = ExclusionSet(n, mask)
        try:
            wins[mask] = 1 if rule(dict(f(subset))) else 0
        except Exception as exc:
            raise OutcomeEvaluationError(
                f"rule evaluation failed on subset {_mask_label(n, mask)}: {exc}"
            ) from exc
    wins.flags.writeable = False
    return SimpleGame(n=n, wins=wins)


def sspi(game: SimpleGame) -> tuple[float, ...]:
    """Shapley-Shubik power index per player.

    For n <= 20 the pivot counts are accumulated in integers and divided by
    n! as exact rationals, so indices like 2/3 come out as the correctly
    rounded float with no accumulation error; larger games fall back to the
    float path.  Degenerate games (empty coalition winning, or no winning
    coalition at all) still return the Shapley values of the 0/1 game, which
    then sum to v(N) - v(empty) rather than 1.
    """
    n = game.n
    if n == 0:
        return ()
    if n > SSPI_EXACT_MAX:
        table = game.wins.astype(np.float64)
        table -= table[0]
        return shapley_exact(CoalitionalGame.from_table(table)).values
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    pop = _popcounts(size, n)
    fact = [math.factorial(k) for k in range(n + 1)]
    layer_weights = np.array(
        [fact[k] * fact[n - 1 - k] for k in range(n)], dtype=np.int64
    )
    wins = game.wins.astype(np.int64)
    out = []
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        pivots = wins[without | bit] - wins[without]
        numerator = int(np.dot(layer_weights[pop[without]], pivots))
        out.append(float(Fraction(numerator, fact[n])))
    return tuple(out)
