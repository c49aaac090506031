"""Organized sensitivity analysis of antitrust market definitions.

Evaluates concentration and pricing-pressure metrics over every candidate
market in an exclusion-set lattice, renders annotated Hasse diagrams, and
attributes outcome changes to individual firms or formats through Shapley
values and Shapley-Shubik power indices, statewide and in local circle
markets.
"""

from .config import RunConfig, load_config
from .errors import (
    CapacityError,
    ConfigError,
    DataError,
    DegenerateMarketError,
    MktsensError,
    OutcomeEvaluationError,
)
from .geomarket import (
    CircleMarket,
    LocalAnalysisResult,
    LocalOutcome,
    Store,
    StoreUniverse,
    analyze_local,
    chain_market,
    circle_market,
    count_presumptive,
    haversine,
    miles_to_km,
    sspi_structure_table,
)
from .ingest import load_stores
from .lattice import (
    AnnotatedHasseDiagram,
    DotStyle,
    ExclusionSet,
    HasseEdge,
    HasseNode,
    MarginalSet,
    build_hasse,
    covers,
    diagram_from_json,
    enumerate_subsets,
    restrict,
    subset_label,
    to_dot,
    to_json,
)
from .metrics import (
    MarginData,
    Market,
    MergerSpec,
    PresumptionRule,
    cmcr,
    concentration_ratio,
    delta_hhi,
    diversion_ratio,
    exclude,
    hhi,
    merger_outcomes,
    post_merger_hhi,
    presumption,
    shares,
    upp,
)
from .reports import (
    FirmReport,
    LocalReport,
    StateReport,
    emit_hasse,
    run_firm_level,
    run_local,
    run_state,
    write_firm_report,
    write_local_report,
    write_state_report,
)
from .shapley import (
    CoalitionalGame,
    ShapleyResult,
    SimpleGame,
    characteristic_from_outcome,
    shapley_exact,
    shapley_sampled,
    simple_game_from_rule,
    sspi,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedHasseDiagram",
    "CapacityError",
    "CircleMarket",
    "CoalitionalGame",
    "ConfigError",
    "DataError",
    "DegenerateMarketError",
    "DotStyle",
    "ExclusionSet",
    "FirmReport",
    "HasseEdge",
    "HasseNode",
    "LocalAnalysisResult",
    "LocalOutcome",
    "LocalReport",
    "MarginData",
    "MarginalSet",
    "Market",
    "MergerSpec",
    "MktsensError",
    "OutcomeEvaluationError",
    "PresumptionRule",
    "RunConfig",
    "ShapleyResult",
    "SimpleGame",
    "StateReport",
    "Store",
    "StoreUniverse",
    "analyze_local",
    "build_hasse",
    "chain_market",
    "characteristic_from_outcome",
    "circle_market",
    "cmcr",
    "concentration_ratio",
    "count_presumptive",
    "covers",
    "delta_hhi",
    "diagram_from_json",
    "diversion_ratio",
    "emit_hasse",
    "enumerate_subsets",
    "exclude",
    "haversine",
    "hhi",
    "load_config",
    "load_stores",
    "merger_outcomes",
    "miles_to_km",
    "post_merger_hhi",
    "presumption",
    "restrict",
    "run_firm_level",
    "run_local",
    "run_state",
    "shapley_exact",
    "shapley_sampled",
    "shares",
    "simple_game_from_rule",
    "sspi",
    "sspi_structure_table",
    "subset_label",
    "to_dot",
    "to_json",
    "upp",
    "write_firm_report",
    "write_local_report",
    "write_state_report",
]
