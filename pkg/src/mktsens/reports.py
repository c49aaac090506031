"""Analysis pipelines and deterministic report emission.

Three pipelines share one configuration: state-level (exclusion lattice over
marginal formats on the statewide chain market), firm-level (exclusion
lattice over named competitor chains), and local (circle markets around
defendant stores).  Emitters write CSV for human-readable display values and
JSON carrying full-precision numbers alongside the displayed ones.

Display conventions: HHI values floor to integers, Shapley values round
half-up to integers, Shapley shares round to 3 decimals, SSPI truncates to
3 decimals in the state table and rounds half-up in the firm and structure
tables.  Every Total row is the sum of the displayed column entries, so the
printed arithmetic always adds up.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .config import RunConfig
from .display import fmt_fixed, fmt_truncated, round_half_up_int
from .errors import ConfigError, DataError
from .geomarket import (
    LocalAnalysisResult,
    StoreUniverse,
    analyze_local,
    chain_market,
    count_presumptive,
    sspi_structure_table,
)
from .lattice import (
    AnnotatedHasseDiagram,
    DotStyle,
    ExclusionSet,
    MarginalSet,
    build_hasse,
    enumerate_subsets,
    subset_label,
    to_dot,
    to_json,
)
from .metrics import Market, exclude, merger_outcomes, presumption
from .shapley import (
    CoalitionalGame,
    ShapleyResult,
    SimpleGame,
    shapley_exact,
    shapley_sampled,
    simple_game_from_rule,
    sspi,
)

METRIC_NAMES = ("post_hhi", "delta_hhi", "merged_share")


def _write_text(path: Path, text: str) -> Path:
    """Atomic write: temp file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)
    return path


def _csv_text(rows: Sequence[Sequence[object]]) -> str:
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(rows)
    return buffer.getvalue()


def _json_text(doc: object) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _display_total(cells: Sequence[str]) -> str:
    """Sum already-formatted numeric strings exactly, keeping their scale."""
    filled = [cell for cell in cells if cell != ""]
    if not filled:
        return "0"
    total = sum(Decimal(cell) for cell in filled)
    exponent = max(-Decimal(cell).as_tuple().exponent for cell in filled)
    return f"{total:.{exponent}f}" if exponent > 0 else str(total)


def _outcome_fn(base_market_fn, merger):
    def f(subset: ExclusionSet) -> dict[str, float]:
        post, delta, share = merger_outcomes(base_market_fn(subset), merger)
        return {
            "post_hhi": post,
            "delta_hhi": delta,
            "merged_share": share,
        }

    return f


def _presumption_rule(rule):
    def decide(metrics: Mapping[str, float]) -> bool:
        return presumption(
            metrics["post_hhi"],
            metrics["delta_hhi"],
            metrics["merged_share"],
            rule,
        )

    return decide


@dataclass(frozen=True)
class StateReport:
    """State-level sensitivity analysis over marginal formats."""

    config: RunConfig
    market: Market
    chain_names: dict[str, str]
    diagram: AnnotatedHasseDiagram
    shapley: ShapleyResult
    sspi_values: tuple[float, ...]
    sspi_game: SimpleGame

    @property
    def sensitive(self) -> bool:
        return not self.sspi_game.constant

    @property
    def degenerate_at_origin(self) -> bool:
        return self.sspi_game.degenerate_at_origin


def run_state(
    config: RunConfig, universe: StoreUniverse, sampled: bool = False
) -> StateReport:
    """Exclusion-lattice analysis of the whole universe's chain market.

    Builds the annotated Hasse diagram of (post-HHI, delta-HHI, merged share)
    over the marginal formats, the Shapley attribution of post-merger HHI,
    and the presumption-rule power indices.  ``sampled`` switches the Shapley
    computation to the seeded Monte Carlo estimator from the configuration's
    seed and permutation count.
    """
    market = chain_market(universe, (), "state")
    for party in config.merging_chains:
        market.require(party)
    ms = MarginalSet(config.marginal_formats)
    f = _outcome_fn(
        lambda subset: chain_market(universe, ms.labels_of(subset), "state"),
        config.merger,
    )
    diagram = build_hasse(ms, f, _presumption_rule(config.rule))

    post_index = diagram.metric_names.index("post_hhi")
    size = 1 << ms.n
    base = diagram.node_for(ExclusionSet(ms.n, 0)).outcomes[post_index]
    table = np.zeros(size, dtype=np.float64)
    for node in diagram.nodes:
        table[node.subset.bits] = node.outcomes[post_index] - base
    table[0] = 0.0
    game = CoalitionalGame.from_table(table)
    if sampled:
        sv = shapley_sampled(game, config.permutations, config.seed)
    else:
        sv = shapley_exact(game)

    flags = {node.subset.bits: node.flagged for node in diagram.nodes}
    sspi_game = SimpleGame.from_flags(ms.n, flags)
    return StateReport(
        config=config,
        market=market,
        chain_names=universe.chains(),
        diagram=diagram,
        shapley=sv,
        sspi_values=sspi(sspi_game),
        sspi_game=sspi_game,
    )


@dataclass(frozen=True)
class FirmReport:
    """Firm-level power analysis over named competitor chains."""

    config: RunConfig
    market: Market
    chain_names: dict[str, str]
    marginal_firms: tuple[str, ...]
    sspi_values: tuple[float, ...]
    sspi_game: SimpleGame

    @property
    def sensitive(self) -> bool:
        return not self.sspi_game.constant

    @property
    def degenerate_at_origin(self) -> bool:
        return self.sspi_game.degenerate_at_origin


def run_firm_level(config: RunConfig, universe: StoreUniverse) -> FirmReport:
    """Presumption power indices over exclusion of named competitor chains.

    The marginal set is the configured chain list; the merging chains stay in
    every candidate market.  Excluding a chain removes all its revenue and
    renormalizes shares.
    """
    if not config.marginal_firms:
        raise ConfigError("firm-level analysis requires marginal_firms")
    market = chain_market(universe, (), "state")
    for party in config.merging_chains:
        market.require(party)
    for firm in config.marginal_firms:
        if firm not in market.sales:
            raise DataError(f"marginal firm {firm!r} has no stores in the universe")
    firms = config.marginal_firms
    ms = MarginalSet(firms)
    f = _outcome_fn(
        lambda subset: exclude(
            market, ms.labels_of(subset), config.merging_chains
        ),
        config.merger,
    )
    game = simple_game_from_rule(f, _presumption_rule(config.rule), ms.n)
    return FirmReport(
        config=config,
        market=market,
        chain_names=universe.chains(),
        marginal_firms=firms,
        sspi_values=sspi(game),
        sspi_game=game,
    )


@dataclass(frozen=True)
class LocalReport:
    """Batch circle-market analysis around defendant stores."""

    config: RunConfig
    marginal_set: MarginalSet
    results: tuple[LocalAnalysisResult, ...]
    counts: tuple[tuple[ExclusionSet, int], ...]
    structure: tuple[tuple[tuple[float, ...], int], ...]

    @property
    def sensitive_count(self) -> int:
        return sum(1 for r in self.results if r.sensitive)


def run_local(config: RunConfig, universe: StoreUniverse) -> LocalReport:
    """Circle-market sweep: per-subset presumptive counts, sensitivity, SSPI."""
    ms = MarginalSet(config.marginal_formats)
    results = analyze_local(
        universe,
        config.merger,
        ms,
        config.rule,
        config.radius_miles,
    )
    counts = tuple(
        (subset, count_presumptive(results, subset))
        for subset in enumerate_subsets(ms.n)
    )
    structure = sspi_structure_table(results, config.sspi_decimals)
    return LocalReport(
        config=config,
        marginal_set=ms,
        results=results,
        counts=counts,
        structure=structure,
    )


def emit_hasse(
    diagram: AnnotatedHasseDiagram,
    fmt: str,
    path: str | Path,
    style: DotStyle | None = None,
) -> Path:
    """Write the diagram in ``dot`` or ``json`` format, atomically."""
    target = Path(path)
    if fmt == "dot":
        return _write_text(target, to_dot(diagram, style or DotStyle()))
    if fmt == "json":
        return _write_text(target, to_json(diagram))
    raise ConfigError(f"unknown hasse format {fmt!r}; expected dot or json")


def _shapley_rows(report: StateReport) -> tuple[list[list[str]], dict]:
    labels = report.diagram.marginal_set.members
    sv = report.shapley
    value_cells = [str(round_half_up_int(v)) for v in sv.values]
    if sv.shares is not None:
        share_cells = [
            fmt_fixed(s, report.config.share_decimals) for s in sv.shares
        ]
    else:
        share_cells = [""] * len(labels)
    rows: list[list[str]] = [["format", "shapley_value", "sv_share"]]
    for label, value, share in zip(labels, value_cells, share_cells):
        rows.append([label, value, share])
    rows.append(
        ["Total", _display_total(value_cells), _display_total(share_cells)]
    )
    doc = {
        "players": list(labels),
        "mode": sv.mode,
        "values": list(sv.values),
        "shares": list(sv.shares) if sv.shares is not None else None,
        "grand_value": sv.grand_value,
        "efficiency_residual": sv.efficiency_residual,
        "std_errors": list(sv.std_errors) if sv.std_errors else None,
        "permutations_used": sv.permutations_used,
        "seed": sv.seed,
        "display": {
            "values": [int(c) for c in value_cells],
            "shares": (
                [float(c) for c in share_cells]
                if sv.shares is not None
                else None
            ),
        },
    }
    return rows, doc


def _state_sspi_rows(report: StateReport) -> tuple[list[list[str]], dict]:
    labels = report.diagram.marginal_set.members
    decimals = report.config.sspi_decimals
    cells = [fmt_truncated(v, decimals) for v in report.sspi_values]
    rows: list[list[str]] = [["format", "sspi"]]
    for label, cell in zip(labels, cells):
        rows.append([label, cell])
    rows.append(["Total", _display_total(cells)])
    doc = {
        "players": list(labels),
        "values": list(report.sspi_values),
        "sensitive": report.sensitive,
        "degenerate_at_origin": report.degenerate_at_origin,
        "display": {"values": [float(c) for c in cells], "rounding": "truncate"},
    }
    return rows, doc


def _share_rows(report: StateReport) -> tuple[list[list[str]], dict]:
    market = report.market
    total = market.total()
    ranked = sorted(
        market.sales.items(), key=lambda item: (-item[1], item[0])
    )
    decimals = report.config.share_decimals
    rows: list[list[str]] = [["chain_id", "chain_name", "revenue", "share"]]
    share_cells = []
    entries = []
    for chain, revenue in ranked:
        share = revenue / total if total > 0 else 0.0
        cell = fmt_fixed(share, decimals)
        share_cells.append(cell)
        name = report.chain_names.get(chain, chain)
        rows.append([chain, name, repr(revenue), cell])
        entries.append(
            {"chain_id": chain, "chain_name": name,
             "revenue": revenue, "share": share}
        )
    rows.append(["Total", "", repr(total), _display_total(share_cells)])
    return rows, {"market": market.label, "total_revenue": total,
                  "chains": entries}


def write_state_report(report: StateReport, out_dir: str | Path) -> list[Path]:
    """Emit hasse.dot/json, shapley.csv/json, sspi.csv/json, shares.csv/json."""
    out = Path(out_dir)
    hhi_labels = DotStyle(label_metrics=("post_hhi",))
    written = [
        emit_hasse(report.diagram, "dot", out / "hasse.dot", hhi_labels),
        emit_hasse(report.diagram, "json", out / "hasse.json"),
    ]
    shapley_rows, shapley_doc = _shapley_rows(report)
    sspi_rows, sspi_doc = _state_sspi_rows(report)
    share_rows, share_doc = _share_rows(report)
    written.append(_write_text(out / "shapley.csv", _csv_text(shapley_rows)))
    written.append(_write_text(out / "shapley.json", _json_text(shapley_doc)))
    written.append(_write_text(out / "sspi.csv", _csv_text(sspi_rows)))
    written.append(_write_text(out / "sspi.json", _json_text(sspi_doc)))
    written.append(_write_text(out / "shares.csv", _csv_text(share_rows)))
    written.append(_write_text(out / "shares.json", _json_text(share_doc)))
    return written


def write_firm_report(report: FirmReport, out_dir: str | Path) -> list[Path]:
    """Emit the firm-level SSPI table as sspi.csv/json."""
    out = Path(out_dir)
    decimals = report.config.sspi_decimals
    order = sorted(
        zip(report.marginal_firms, report.sspi_values),
        key=lambda pair: (-pair[1], pair[0]),
    )
    cells = [fmt_fixed(value, decimals) for _, value in order]
    rows: list[list[str]] = [["chain_id", "chain_name", "sspi"]]
    for (firm, _), cell in zip(order, cells):
        rows.append([firm, report.chain_names.get(firm, firm), cell])
    rows.append(["Total", "", _display_total(cells)])
    doc = {
        "players": list(report.marginal_firms),
        "values": list(report.sspi_values),
        "sensitive": report.sensitive,
        "degenerate_at_origin": report.degenerate_at_origin,
        "display": {
            "order": [firm for firm, _ in order],
            "values": [float(c) for c in cells],
            "rounding": "half_up",
        },
    }
    written = [
        _write_text(out / "sspi.csv", _csv_text(rows)),
        _write_text(out / "sspi.json", _json_text(doc)),
    ]
    return written


def write_local_report(report: LocalReport, out_dir: str | Path) -> list[Path]:
    """Emit local_counts, local_markets, and sspi_structure as CSV + JSON."""
    out = Path(out_dir)
    ms = report.marginal_set
    decimals = report.config.sspi_decimals

    count_rows: list[list[object]] = [["subset", "excluded_count", "count"]]
    for subset, count in report.counts:
        count_rows.append([subset_label(ms, subset), subset.size, count])
    counts_doc = {
        "marginal_set": list(ms.members),
        "analyzed_markets": len(report.results),
        "sensitive_markets": report.sensitive_count,
        "counts": [
            {"subset": list(subset.indices), "count": count}
            for subset, count in report.counts
        ],
    }

    market_rows: list[list[object]] = [
        ["center_store_id", "member_count", "sensitive"]
        + [f"sspi_{label}" for label in ms.members]
    ]
    market_entries = []
    for result in report.results:
        cells = (
            [fmt_fixed(v, decimals) for v in result.sspi]
            if result.sensitive and result.sspi is not None
            else [""] * ms.n
        )
        market_rows.append(
            [result.center_id, result.member_count,
             str(result.sensitive).lower()] + cells
        )
        market_entries.append(
            {
                "center_store_id": result.center_id,
                "member_count": result.member_count,
                "sensitive": result.sensitive,
                "sspi": list(result.sspi) if result.sspi is not None else None,
                "outcomes": [
                    {
                        "subset": list(o.subset.indices),
                        "post_hhi": o.post_hhi,
                        "delta_hhi": o.delta_hhi,
                        "merged_share": o.merged_share,
                        "flagged": o.flagged,
                    }
                    for o in result.outcomes
                ],
            }
        )
    markets_doc = {
        "marginal_set": list(ms.members),
        "radius_miles": report.config.radius_miles,
        "markets": market_entries,
    }

    structure_rows: list[list[object]] = [
        [f"sspi_{label}" for label in ms.members] + ["count"]
    ]
    for vector, count in report.structure:
        structure_rows.append([f"{v:.{decimals}f}" for v in vector] + [count])
    structure_doc = {
        "marginal_set": list(ms.members),
        "sensitive_markets": report.sensitive_count,
        "rows": [
            {"sspi": list(vector), "count": count}
            for vector, count in report.structure
        ],
    }

    return [
        _write_text(out / "local_counts.csv", _csv_text(count_rows)),
        _write_text(out / "local_counts.json", _json_text(counts_doc)),
        _write_text(out / "local_markets.csv", _csv_text(market_rows)),
        _write_text(out / "local_markets.json", _json_text(markets_doc)),
        _write_text(out / "sspi_structure.csv", _csv_text(structure_rows)),
        _write_text(out / "sspi_structure.json", _json_text(structure_doc)),
    ]
