"""Shared fixtures: reference markets, store universes, and CSV builders.

The "textbook" fixture is a small eight-firm market with three marginal
members whose exclusion lattice has hand-checked HHI values.  The "state"
fixture is a store universe engineered so that the post-merger HHI lattice
of the configured merger reproduces those same values exactly.  The "local"
fixture is two far-apart store clusters with known per-circle outcomes.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from mktsens import (
    Market,
    MarginalSet,
    MergerSpec,
    RunConfig,
    Store,
    StoreUniverse,
    exclude,
    hhi,
)

# Eight-firm reference market: five core firms and marginal firms 1, 2, 3.
TEXTBOOK_SALES = {
    "A": 15.0, "B": 15.0, "C": 10.0, "D": 10.0, "E": 10.0,
    "1": 9.0, "2": 6.0, "3": 3.0,
}
TEXTBOOK_MARGINAL = ("1", "2", "3")

# Pre-merger HHI of the textbook market per exclusion set, full precision,
# keyed by the excluded labels.  Cross-checked by hand: HHI of the full
# market is 10^4 * (2*15^2 + 3*10^2 + 9^2 + 6^2 + 3^2) / 78^2.
TEXTBOOK_HHI = {
    (): 1439.8422090729784,
    ("1",): 1669.8172652804033,
    ("2",): 1620.3703703703707,
    ("3",): 1541.3333333333335,
    ("1", "2"): 1912.320483749055,
    ("1", "3"): 1804.4077134986221,
    ("2", "3"): 1745.431632010082,
    ("1", "2", "3"): 2083.3333333333335,
}

# Exact Shapley values of the HHI gain game v(S) = HHI(S) - HHI({}),
# frozen from a full 3! permutation enumeration in exact rationals.
TEXTBOOK_SHAPLEY = (281.79633476755424, 227.58484656826792, 134.10994292453287)
TEXTBOOK_SHAPLEY_TOTAL = 643.491124260355
TEXTBOOK_SHAPLEY_SHARES = (
    0.4379179823054406, 0.3536720834026416, 0.20840993429191776,
)

# Power indices of the simple game "HHI >= 1800": winning coalitions are
# {1,2}, {1,3}, {1,2,3}, giving exactly (2/3, 1/6, 1/6).
TEXTBOOK_SSPI = (2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0)


@pytest.fixture
def textbook_market() -> Market:
    return Market(TEXTBOOK_SALES)


@pytest.fixture
def textbook_hhi_fn(textbook_market):
    """Exclusion set -> pre-merger HHI of the textbook market."""
    ms = MarginalSet(TEXTBOOK_MARGINAL)

    def f(subset):
        return hhi(exclude(textbook_market, ms.labels_of(subset)))

    return ms, f


# ---------------------------------------------------------------------------
# State fixture: chain revenues chosen so that combining the merging chains
# acme (10) and bolt (5) yields a 15-sales entity, making the post-merger
# market identical to the textbook market firm for firm.
# ---------------------------------------------------------------------------

STATE_CHAINS = (
    # chain_id, chain_name, format, revenue
    ("acme", "Acme Markets", "supermarket", 10.0),
    ("bolt", "Bolt Foods", "supermarket", 5.0),
    ("grandway", "Grandway", "supermarket", 15.0),
    ("citygrocer", "City Grocer", "supermarket", 10.0),
    ("dailymart", "Daily Mart", "supermarket", 10.0),
    ("eastfoods", "East Foods", "supercenter", 10.0),
    ("clubby", "Clubby Wholesale", "club", 9.0),
    ("naturo", "Naturo", "natural", 6.0),
    ("limitz", "Limitz", "limited", 3.0),
)

STATE_MERGING = ("acme", "bolt")

# Post-merger HHI of the state market per excluded-format set; equals the
# textbook pre-merger lattice with formats in place of firm labels.
STATE_POST_HHI = {
    (): TEXTBOOK_HHI[()],
    ("club",): TEXTBOOK_HHI[("1",)],
    ("natural",): TEXTBOOK_HHI[("2",)],
    ("limited",): TEXTBOOK_HHI[("3",)],
    ("club", "natural"): TEXTBOOK_HHI[("1", "2")],
    ("club", "limited"): TEXTBOOK_HHI[("1", "3")],
    ("natural", "limited"): TEXTBOOK_HHI[("2", "3")],
    ("club", "natural", "limited"): TEXTBOOK_HHI[("1", "2", "3")],
}

STATE_FLAGGED = {("club", "natural"), ("club", "limited"),
                 ("club", "natural", "limited")}


def _spread(base_lat: float, base_lon: float, k: int) -> tuple[float, float]:
    """Small deterministic offsets that keep a cluster within ~2 miles."""
    return (base_lat + 0.004 * (k % 5), base_lon + 0.005 * (k // 5))


def state_stores() -> tuple[Store, ...]:
    """One cluster of stores realizing STATE_CHAINS; acme gets two stores."""
    rows = []
    k = 0
    for chain_id, chain_name, fmt, revenue in STATE_CHAINS:
        parts = (revenue * 0.6, revenue * 0.4) if chain_id == "acme" else (revenue,)
        for part in parts:
            lat, lon = _spread(45.5, -122.6, k)
            rows.append(Store(f"s{k:02d}", chain_id, chain_name, fmt,
                              lat, lon, part))
            k += 1
    return tuple(rows)


@pytest.fixture
def state_universe() -> StoreUniverse:
    return StoreUniverse(state_stores(), defendant_chains=STATE_MERGING)


@pytest.fixture
def state_config() -> RunConfig:
    return RunConfig(merging_chains=STATE_MERGING)


# ---------------------------------------------------------------------------
# Local fixture: two clusters ~165 miles apart.  Cluster 1 flags exactly on
# the club-containing exclusion sets (the club chain is a dictator); cluster
# 2 never flags (delta HHI is 50 under every exclusion set).
# ---------------------------------------------------------------------------

LOCAL_CLUSTER_1 = (
    ("a01", "acme", "Acme Markets", "supermarket", 6.0),
    ("b01", "bolt", "Bolt Foods", "supermarket", 6.0),
    ("g01", "grandway", "Grandway", "supermarket", 30.0),
    ("e01", "eastfoods", "East Foods", "supercenter", 21.0),
    ("c01", "clubby", "Clubby Wholesale", "club", 30.0),
    ("n01", "naturo", "Naturo", "natural", 4.0),
    ("l01", "limitz", "Limitz", "limited", 3.0),
)

LOCAL_CLUSTER_2 = (
    ("a02", "acme", "Acme Markets", "supermarket", 5.0),
    ("b02", "bolt", "Bolt Foods", "supermarket", 5.0),
    ("g02", "grandway", "Grandway", "supermarket", 45.0),
    ("e02", "eastfoods", "East Foods", "supercenter", 45.0),
)


def local_stores() -> tuple[Store, ...]:
    rows = []
    for k, (sid, cid, name, fmt, rev) in enumerate(LOCAL_CLUSTER_1):
        lat, lon = _spread(47.60, -122.30, k)
        rows.append(Store(sid, cid, name, fmt, lat, lon, rev))
    for k, (sid, cid, name, fmt, rev) in enumerate(LOCAL_CLUSTER_2):
        lat, lon = _spread(46.20, -119.20, k)
        rows.append(Store(sid, cid, name, fmt, lat, lon, rev))
    return tuple(rows)


@pytest.fixture
def local_universe() -> StoreUniverse:
    return StoreUniverse(local_stores(), defendant_chains=STATE_MERGING)


@pytest.fixture
def local_config() -> RunConfig:
    return RunConfig(merging_chains=STATE_MERGING, radius_miles=5.0)


@pytest.fixture
def merger() -> MergerSpec:
    return MergerSpec(*STATE_MERGING)


# ---------------------------------------------------------------------------
# CSV / config builders for ingestion and CLI tests.
# ---------------------------------------------------------------------------

CSV_HEADER = "store_id,chain_id,chain_name,format,latitude,longitude,revenue"


def stores_csv_text(stores, region_of=None) -> str:
    """Render stores as CSV; ``region_of`` adds a region column."""
    header = CSV_HEADER + ",region" if region_of else CSV_HEADER
    lines = [header]
    for s in stores:
        row = (f"{s.store_id},{s.chain_id},{s.chain_name},{s.format},"
               f"{s.latitude},{s.longitude},{s.revenue}")
        if region_of:
            row += f",{region_of(s)}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def write_inputs(tmp_path: Path, stores, config_doc: dict,
                 region_of=None) -> tuple[Path, Path]:
    stores_path = tmp_path / "stores.csv"
    stores_path.write_text(stores_csv_text(stores, region_of), encoding="utf-8")
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps(config_doc, indent=2), encoding="utf-8")
    return stores_path, config_path


def base_config_doc(**overrides) -> dict:
    doc = {"merging_chains": list(STATE_MERGING)}
    doc.update(overrides)
    return doc
