"""Exact transfer-matrix, spectral and sampling tools for area-tilted random-walk bridges."""

from ._prewet import (
    AreaStatistics,
    BridgeSpec,
    Potential,
    PrewetError,
    StepDistribution,
    TransferOperator,
    TransferTables,
    __version__,
    build_operator,
    build_tables,
    canonical_scale,
    exact_samples,
    heatbath,
    main,
    partition_ratio,
    run_experiment,
    solve_H,
)

__all__ = [
    "AreaStatistics",
    "BridgeSpec",
    "Potential",
    "PrewetError",
    "StepDistribution",
    "TransferOperator",
    "TransferTables",
    "build_operator",
    "build_tables",
    "canonical_scale",
    "exact_samples",
    "heatbath",
    "main",
    "partition_ratio",
    "run_experiment",
    "solve_H",
]
