"""Local circle markets around merging parties' stores.

Each defendant store anchors a circular candidate market; stores within the
radius (great-circle distance, inclusive boundary) form the market, revenue
aggregates by chain, and the exclusion-set machinery then runs per circle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import worker_count
from .display import round_half_up
from .errors import DataError, DegenerateMarketError
from .lattice import ExclusionSet, MarginalSet, enumerate_subsets
from .metrics import (
    Market,
    MergerSpec,
    PresumptionRule,
    merger_outcomes,
    presumption,
)
from .shapley import SimpleGame, sspi

EARTH_RADIUS_KM = 6371.0088
MILES_TO_KM = 1.609344


@dataclass(frozen=True)
class Store:
    """One outlet: location, owning chain, format, and annual revenue."""

    store_id: str
    chain_id: str
    chain_name: str
    format: str
    latitude: float
    longitude: float
    revenue: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise DataError(f"store {self.store_id!r}: latitude out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise DataError(f"store {self.store_id!r}: longitude out of range")
        if self.revenue < 0:
            raise DataError(f"store {self.store_id!r}: negative revenue")

    @property
    def position(self) -> tuple[float, float]:
        return (self.latitude, self.longitude)


@dataclass(frozen=True)
class StoreUniverse:
    """All stores under analysis, with the defendant (merging) chains noted."""

    stores: tuple[Store, ...]
    defendant_chains: tuple[str, ...] = ()
    _by_id: dict[str, Store] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        by_id: dict[str, Store] = {}
        for store in self.stores:
            if store.store_id in by_id:
                raise DataError(f"duplicate store id {store.store_id!r}")
            by_id[store.store_id] = store
        object.__setattr__(self, "_by_id", by_id)

    def __iter__(self):
        return iter(self.stores)

    def __len__(self) -> int:
        return len(self.stores)

    def store(self, store_id: str) -> Store:
        try:
            return self._by_id[store_id]
        except KeyError:
            raise DataError(f"unknown store id {store_id!r}") from None

    def chains(self) -> dict[str, str]:
        """chain_id -> chain_name, first spelling wins."""
        out: dict[str, str] = {}
        for store in self.stores:
            out.setdefault(store.chain_id, store.chain_name)
        return out

    def of_chains(self, chain_ids: Iterable[str]) -> tuple[Store, ...]:
        wanted = set(chain_ids)
        return tuple(s for s in self.stores if s.chain_id in wanted)


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in kilometers between (lat, lon) degree pairs.

    Uses the mean Earth radius 6371.0088 km; symmetric and nonnegative.
    """
    for lat, lon in (a, b):
        if not -90.0 <= lat <= 90.0:
            raise DataError(f"latitude {lat} out of range")
        if not -180.0 <= lon <= 180.0:
            raise DataError(f"longitude {lon} out of range")
    phi1, phi2 = math.radians(a[0]), math.radians(b[0])
    dphi = phi2 - phi1
    dlam = math.radians(b[1] - a[1])
    h = (
        math.sin(dphi / 2.0) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def miles_to_km(miles: float) -> float:
    return miles * MILES_TO_KM


@dataclass(frozen=True)
class CircleMarket:
    """Stores within ``radius_miles`` of a center store, boundary inclusive."""

    center: Store
    radius_miles: float
    members: tuple[Store, ...]

    @property
    def center_id(self) -> str:
        return self.center.store_id

    @property
    def member_ids(self) -> tuple[str, ...]:
        return tuple(s.store_id for s in self.members)


def circle_market(
    universe: StoreUniverse,
    center: str | Store,
    radius_miles: float,
) -> CircleMarket:
    """Select every store at most ``radius_miles`` from the center store.

    ``center`` may be a store id (looked up in the universe) or a Store.
    The center is always a member; members are sorted by store id.
    """
    if radius_miles < 0:
        raise ValueError("radius must be nonnegative")
    anchor = universe.store(center) if isinstance(center, str) else center
    radius_km = miles_to_km(radius_miles)
    members = tuple(
        sorted(
            (
                s
                for s in universe
                if haversine(anchor.position, s.position) <= radius_km
            ),
            key=lambda s: s.store_id,
        )
    )
    return CircleMarket(anchor, radius_miles, members)


def chain_market(
    stores: Iterable[Store],
    excluded_formats: Iterable[str] = (),
    label: str = "",
) -> Market:
    """Aggregate store revenue into chain-level sales, dropping excluded formats."""
    drop = set(excluded_formats)
    sales: dict[str, float] = {}
    for store in stores:
        if store.format in drop:
            continue
        sales[store.chain_id] = sales.get(store.chain_id, 0.0) + store.revenue
    return Market(sales, label)


@dataclass(frozen=True)
class LocalOutcome:
    """Screening outcome of one exclusion set within one circle."""

    subset: ExclusionSet
    post_hhi: float
    delta_hhi: float
    merged_share: float
    flagged: bool


@dataclass(frozen=True)
class LocalAnalysisResult:
    """Full sensitivity record of one circle market."""

    center: Store
    radius_miles: float
    member_count: int
    outcomes: tuple[LocalOutcome, ...]
    sensitive: bool
    sspi: tuple[float, ...] | None
    _by_bits: dict[int, LocalOutcome] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_by_bits", {o.subset.bits: o for o in self.outcomes}
        )

    @property
    def center_id(self) -> str:
        return self.center.store_id

    def outcome_for(self, subset: ExclusionSet) -> LocalOutcome:
        try:
            return self._by_bits[subset.bits]
        except KeyError:
            raise KeyError("subset is not part of this analysis") from None


def _analyze_circle(
    circle: CircleMarket,
    merger: MergerSpec,
    ms: MarginalSet,
    subsets: Sequence[ExclusionSet],
    rule: PresumptionRule,
    include_constant_sspi: bool,
) -> LocalAnalysisResult:
    outcomes = []
    flags: dict[int, bool] = {}
    for subset in subsets:
        market = chain_market(
            circle.members, ms.labels_of(subset), circle.center_id
        )
        try:
            post, delta, share = merger_outcomes(market, merger)
        except DegenerateMarketError as exc:
            raise DataError(
                f"circle around store {circle.center_id!r} has no revenue "
                f"left after excluding {sorted(ms.labels_of(subset))}"
            ) from exc
        flag = presumption(post, delta, share, rule)
        outcomes.append(LocalOutcome(subset, post, delta, share, flag))
        flags[subset.bits] = flag
    game = SimpleGame.from_flags(ms.n, flags)
    sensitive = not game.constant
    values = sspi(game) if (sensitive or include_constant_sspi) else None
    return LocalAnalysisResult(
        circle.center,
        circle.radius_miles,
        len(circle.members),
        tuple(outcomes),
        sensitive,
        values,
    )


def analyze_local(
    universe: StoreUniverse,
    merger: MergerSpec,
    marginal_formats: MarginalSet | Sequence[str],
    rule: PresumptionRule = PresumptionRule(),
    radius_miles: float = 5.0,
    include_constant_sspi: bool = False,
) -> tuple[LocalAnalysisResult, ...]:
    """Run the exclusion-set analysis in a circle around every defendant store.

    Centers are the defendant chains' stores (the merging chains unless the
    universe names others), in store-id order.  A circle is analyzed only
    when both merging chains have at least one member store; single-party
    circles carry no competitive overlap and are skipped.  A merging chain
    whose in-circle revenue disappears under some exclusion set still
    evaluates, as a zero-sales firm.  Set the MKTSENS_THREADS environment
    variable to analyze circles in parallel; results keep center order
    regardless.
    """
    ms = (
        marginal_formats
        if isinstance(marginal_formats, MarginalSet)
        else MarginalSet(marginal_formats)
    )
    parties = (merger.acquirer, merger.target)
    universe_chains = {s.chain_id for s in universe}
    for party in parties:
        if party not in universe_chains:
            raise DataError(f"merging chain {party!r} has no stores in the universe")
    defendants = universe.defendant_chains or parties
    centers = sorted(universe.of_chains(defendants), key=lambda s: s.store_id)
    if not centers:
        raise DataError(
            f"no defendant stores found for chains {sorted(defendants)}"
        )
    subsets = enumerate_subsets(ms.n)
    circles = []
    for center in centers:
        circle = circle_market(universe, center, radius_miles)
        chains_present = {s.chain_id for s in circle.members}
        if all(p in chains_present for p in parties):
            circles.append(circle)

    def run(circle: CircleMarket) -> LocalAnalysisResult:
        return _analyze_circle(
            circle, merger, ms, subsets, rule, include_constant_sspi
        )

    workers = worker_count()
    if workers > 1 and len(circles) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return tuple(pool.map(run, circles))
    return tuple(run(circle) for circle in circles)


def count_presumptive(
    results: Sequence[LocalAnalysisResult], subset: ExclusionSet
) -> int:
    """Number of analyzed circles flagged under one exclusion set."""
    return sum(1 for r in results if r.outcome_for(subset).flagged)


def sspi_structure_table(
    results: Sequence[LocalAnalysisResult], decimals: int = 3
) -> tuple[tuple[tuple[float, ...], int], ...]:
    """Distinct rounded SSPI vectors across sensitive circles, with counts.

    Rows sort by descending count, then ascending vector, so the dominant
    power structure comes first and ties break deterministically.
    """
    tallies: dict[tuple[float, ...], int] = {}
    for result in results:
        if not result.sensitive or result.sspi is None:
            continue
        key = tuple(round_half_up(v, decimals) for v in result.sspi)
        tallies[key] = tallies.get(key, 0) + 1
    rows = sorted(tallies.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(rows)
