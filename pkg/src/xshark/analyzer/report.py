"""Report bundle writer.

Layout of the output directory (documented in docs/reports.md):
  report.json        all records, series, graph edges and suggestions
  dma_timeline.svg   one row per DMA with stall/slack segments + backtails
  util_<unit>.csv    per-bucket busy fraction per unit
  vmem_heatmap.svg   128 buckets x time
  suggestions.json   the suggestion list on its own, for `apply`
"""

from __future__ import annotations

import csv
import json
import os
from typing import Dict, List, Optional

from .deps import Backtail, DependencyGraph
from .dma import DmaRecord
from .suggest import Suggestion
from .svg import render_dma_timeline, render_vmem_heatmap
from .utilization import UtilizationSeries
from .vmem import VmemPageStats


def write_report(outdir: str,
                 dma_records: Optional[List[DmaRecord]] = None,
                 utilization: Optional[Dict[str, UtilizationSeries]] = None,
                 vmem: Optional[VmemPageStats] = None,
                 graph: Optional[DependencyGraph] = None,
                 backtails: Optional[Dict[int, Backtail]] = None,
                 suggestions: Optional[List[Suggestion]] = None,
                 regions: Optional[dict] = None) -> List[str]:
    os.makedirs(outdir, exist_ok=True)
    written = []
    doc: dict = {}
    if dma_records is not None:
        doc["dma"] = [r.to_json() for r in dma_records]
        path = os.path.join(outdir, "dma_timeline.svg")
        with open(path, "w") as fh:
            fh.write(render_dma_timeline(dma_records, backtails))
        written.append(path)
    if utilization is not None:
        doc["utilization"] = {u: s.to_json() for u, s in sorted(utilization.items())}
        for unit, series in sorted(utilization.items()):
            path = os.path.join(outdir, f"util_{unit.lower()}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["bucket_start_cycle", "busy_fraction"])
                for c, f in series.samples:
                    w.writerow([c, f"{f:.6f}"])
            written.append(path)
    if vmem is not None:
        doc["vmem"] = vmem.to_json()
        path = os.path.join(outdir, "vmem_heatmap.svg")
        with open(path, "w") as fh:
            fh.write(render_vmem_heatmap(vmem))
        written.append(path)
    if graph is not None:
        doc["dependencies"] = {
            "nodes": graph.n,
            "conservative": [e.to_json() for e in graph.conservative],
            "relaxed": [e.to_json() for e in graph.relaxed],
            "chains": {str(k): list(v) for k, v in sorted(graph.chains.items())},
        }
    if backtails is not None:
        doc["backtails"] = [b.to_json() for _, b in sorted(backtails.items())]
    if regions:
        doc["regions"] = regions
    if suggestions is not None:
        doc["suggestions"] = [s.to_json() for s in suggestions]
        path = os.path.join(outdir, "suggestions.json")
        with open(path, "w") as fh:
            json.dump([s.to_json() for s in suggestions], fh, indent=1)
        written.append(path)
    path = os.path.join(outdir, "report.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    written.append(path)
    return written
