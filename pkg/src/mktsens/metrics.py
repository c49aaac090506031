"""Market concentration and merger screening metrics.

A :class:`Market` is a named set of firms with nonnegative sales.  On top of
it this module provides shares, HHI on the 0..10000 scale, merger deltas,
concentration ratios, logit diversion, upward pricing pressure, compensating
marginal cost reductions, and the structural-presumption decision rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DataError, DegenerateMarketError

HHI_SCALE = 10_000.0


@dataclass(frozen=True)
class Market:
    """Immutable snapshot of firm sales in one candidate market."""

    sales: Mapping[str, float]
    label: str = ""

    def __post_init__(self) -> None:
        cleaned: dict[str, float] = {}
        for firm, value in self.sales.items():
            amount = float(value)
            if amount < 0:
                raise DataError(f"firm {firm!r} has negative sales {value!r}")
            cleaned[firm] = amount
        object.__setattr__(self, "sales", cleaned)

    @property
    def firms(self) -> tuple[str, ...]:
        return tuple(self.sales)

    def total(self) -> float:
        return sum(self.sales.values())

    def require(self, firm: str) -> float:
        try:
            return self.sales[firm]
        except KeyError:
            raise DataError(f"firm {firm!r} is not in the market") from None


@dataclass(frozen=True)
class MergerSpec:
    """The two merging firms, by identifier."""

    acquirer: str
    target: str

    def __post_init__(self) -> None:
        if not self.acquirer or not self.target:
            raise ValueError("merging firm identifiers must be nonempty")
        if self.acquirer == self.target:
            raise ValueError("a firm cannot merge with itself")


@dataclass(frozen=True)
class PresumptionRule:
    """Structural presumption thresholds (all comparisons strict)."""

    post_hhi_threshold: float = 1800.0
    delta_hhi_threshold: float = 100.0
    merged_share_threshold: float = 0.30
    use_share_criterion: bool = False

    def __post_init__(self) -> None:
        if self.post_hhi_threshold < 0 or self.delta_hhi_threshold < 0:
            raise ValueError("HHI thresholds must be nonnegative")
        if not 0 < self.merged_share_threshold <= 1:
            raise ValueError("merged share threshold must lie in (0, 1]")


@dataclass(frozen=True)
class MarginData:
    """Per-firm prices and marginal costs for pricing-pressure metrics."""

    prices: Mapping[str, float]
    marginal_costs: Mapping[str, float]

    def __post_init__(self) -> None:
        if set(self.prices) != set(self.marginal_costs):
            raise ValueError("prices and marginal costs must cover the same firms")
        prices = dict(self.prices)
        costs = dict(self.marginal_costs)
        for firm, price in prices.items():
            if price <= 0:
                raise ValueError(f"firm {firm!r}: price must be positive")
            if not 0 <= costs[firm] <= price:
                raise ValueError(
                    f"firm {firm!r}: marginal cost must lie in [0, price]"
                )
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "marginal_costs", costs)

    def price(self, firm: str) -> float:
        try:
            return self.prices[firm]
        except KeyError:
            raise DataError(f"no margin data for firm {firm!r}") from None

    def cost(self, firm: str) -> float:
        self.price(firm)
        return self.marginal_costs[firm]

    def margin(self, firm: str) -> float:
        """Percentage margin (p - c) / p, in [0, 1]."""
        price = self.price(firm)
        return (price - self.marginal_costs[firm]) / price


def shares(m: Market) -> dict[str, float]:
    """Sales shares summing to 1; raises on an all-zero market."""
    total = m.total()
    if total <= 0:
        raise DegenerateMarketError(
            f"market {m.label!r} has zero total sales; shares are undefined"
        )
    return {firm: value / total for firm, value in m.sales.items()}


def hhi(m: Market) -> float:
    """Herfindahl-Hirschman index, 0..10000."""
    return HHI_SCALE * sum(s * s for s in shares(m).values())


def merge_firms(m: Market, g: MergerSpec, merged_id: str | None = None) -> Market:
    """Market with the two merging firms combined into one entity."""
    a = m.require(g.acquirer)
    b = m.require(g.target)
    merged = merged_id or f"{g.acquirer}+{g.target}"
    sales = {f: v for f, v in m.sales.items() if f not in (g.acquirer, g.target)}
    if merged in sales:
        raise DataError(f"merged identifier {merged!r} collides with an existing firm")
    sales[merged] = a + b
    return Market(sales, m.label)


def post_merger_hhi(m: Market, g: MergerSpec) -> float:
    """HHI after combining the merging firms' sales."""
    return hhi(merge_firms(m, g))


def delta_hhi(m: Market, g: MergerSpec) -> float:
    """Merger-induced HHI change, 2 * s_a * s_b on the 10000 scale."""
    m.require(g.acquirer)
    m.require(g.target)
    s = shares(m)
    return HHI_SCALE * 2.0 * s[g.acquirer] * s[g.target]


def concentration_ratio(m: Market, firms: Iterable[str]) -> float:
    """Combined share of ``firms``; unknown firms raise."""
    group = list(firms)
    if len(set(group)) != len(group):
        raise ValueError("concentration-ratio firm list contains duplicates")
    s = shares(m)
    total = 0.0
    for firm in group:
        m.require(firm)
        total += s[firm]
    return total


def diversion_ratio(m: Market, from_firm: str, to_firm: str) -> float:
    """Logit-proportional diversion s_k / (1 - s_j)."""
    if from_firm == to_firm:
        raise ValueError("diversion requires two distinct firms")
    m.require(from_firm)
    m.require(to_firm)
    s = shares(m)
    denom = 1.0 - s[from_firm]
    if denom <= 0:
        raise DegenerateMarketError(
            f"firm {from_firm!r} holds the entire market; diversion is undefined"
        )
    return s[to_firm] / denom


def upp(m: Market, md: MarginData, j: str, k: str) -> float:
    """Gross upward pricing pressure on firm j from merging with k.

    The absolute margin recaptured on the partner: (p_k - c_k) * D(j -> k).
    No efficiency credit is netted out.
    """
    d_jk = diversion_ratio(m, j, k)
    return (md.price(k) - md.cost(k)) * d_jk


def cmcr(m: Market, md: MarginData, j: str, k: str) -> float:
    """Compensating marginal cost reduction for firm j merging with k.

    With m_j, m_k percentage margins, D_jk and D_kj the two diversion ratios
    and p_k / p_j the price ratio, the reduction (as a fraction of j's
    pre-merger marginal cost base) is

        (m_j * D_jk * D_kj + m_k * D_jk * (p_k / p_j))
        / ((1 - m_j) * (1 - D_jk * D_kj))
    """
    d_jk = diversion_ratio(m, j, k)
    d_kj = diversion_ratio(m, k, j)
    cross = d_jk * d_kj
    if cross >= 1.0:
        raise DegenerateMarketError(
            "diversion product is >= 1; compensating reductions are unbounded"
        )
    m_j = md.margin(j)
    m_k = md.margin(k)
    if m_j >= 1.0:
        raise DegenerateMarketError(
            f"firm {j!r} has a 100% margin; the reduction is unbounded"
        )
    numer = m_j * cross + m_k * d_jk * (md.price(k) / md.price(j))
    return numer / ((1.0 - m_j) * (1.0 - cross))


def exclude(m: Market, labels: Iterable[str], protected: Iterable[str] = ()) -> Market:
    """Market with ``labels`` removed; unknown labels raise.

    ``protected`` members (merging parties, always-in firms) cannot be
    excluded; naming one is an error rather than a silent no-op.
    """
    keep = set(protected)
    drop = set()
    for label in labels:
        m.require(label)
        if label in keep:
            raise DataError(f"firm {label!r} is protected and cannot be excluded")
        drop.add(label)
    return Market({f: v for f, v in m.sales.items() if f not in drop}, m.label)


def presumption(
    post_hhi_value: float,
    d_hhi: float,
    merged_share: float | None = None,
    rule: PresumptionRule = PresumptionRule(),
) -> bool:
    """Structural presumption test.

    Triggers when post-merger HHI and the delta both strictly exceed their
    thresholds, or (only when the rule enables it and a share is supplied)
    when the merged share strictly exceeds its threshold alongside the delta.
    """
    if post_hhi_value > rule.post_hhi_threshold and d_hhi > rule.delta_hhi_threshold:
        return True
    if rule.use_share_criterion and merged_share is not None:
        if (
            merged_share > rule.merged_share_threshold
            and d_hhi > rule.delta_hhi_threshold
        ):
            return True
    return False


def merger_outcomes(m: Market, g: MergerSpec) -> tuple[float, float, float]:
    """(post-merger HHI, delta HHI, merged share) for one candidate market.

    Merging firms absent from the market are treated as zero-sales entrants,
    so a candidate market that excludes one party entirely still evaluates.
    """
    s = shares(m)
    sa = s.get(g.acquirer, 0.0)
    sb = s.get(g.target, 0.0)
    base = HHI_SCALE * sum(v * v for v in s.values())
    post = base - HHI_SCALE * (sa * sa + sb * sb) + HHI_SCALE * (sa + sb) ** 2
    delta = HHI_SCALE * 2.0 * sa * sb
    return post, delta, sa + sb
