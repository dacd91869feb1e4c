"""Event-log analyses: DMA stall timeline, unit utilization, VMEM pages,
dependency graphs and reorder suggestions."""


class AnalysisError(Exception):
    pass


from .dma import DmaRecord, analyze_dma                      # noqa: E402
from .utilization import UtilizationSeries, analyze_utilization  # noqa: E402
from .vmem import VmemPageStats, analyze_vmem                # noqa: E402
from .deps import (DependencyGraph, LogTables, build_tables,  # noqa: E402
                   build_dependency_graph, compute_backtails, Backtail)
from .suggest import Suggestion, suggest, apply_and_verify    # noqa: E402
from .report import write_report                              # noqa: E402

__all__ = ["AnalysisError", "DmaRecord", "analyze_dma", "UtilizationSeries",
           "analyze_utilization", "VmemPageStats", "analyze_vmem",
           "DependencyGraph", "LogTables", "build_tables",
           "build_dependency_graph", "compute_backtails", "Backtail",
           "Suggestion", "suggest", "apply_and_verify", "write_report"]
