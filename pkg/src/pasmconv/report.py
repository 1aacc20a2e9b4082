"""Sweep rows and CSV emission for the cost/latency comparison tables."""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction

from .costmodel import (
    AcceleratorSpec,
    GateConstants,
    gates_accelerator,
    latency_mac,
    latency_pasm,
)

__all__ = ["CSV_HEADER", "ReportRow", "sweep_rows", "rows_to_csv"]

CSV_HEADER = "W,B,kind,n_units,n_shared_mac,total_gates,mult_gates,reg_gates,cycles,overhead_pct"


@dataclass(frozen=True)
class ReportRow:
    """One swept configuration: gate totals plus cycle count and overhead
    relative to a plain MAC array on the same per-output workload."""

    width: int
    n_bins: int
    kind: str
    n_units: int
    n_shared_mac: int
    total_gates: int
    mult_gates: int
    reg_gates: int
    cycles: int
    overhead: Fraction

    @property
    def overhead_pct(self) -> float:
        return float(100 * self.overhead)

    def to_csv_fields(self) -> list:
        return [
            str(self.width),
            str(self.n_bins),
            self.kind,
            str(self.n_units),
            str(self.n_shared_mac),
            str(self.total_gates),
            str(self.mult_gates),
            str(self.reg_gates),
            str(self.cycles),
            f"{self.overhead_pct:.4f}",
        ]


def _row(kind: str, width: int, n_bins: int, n_units: int, n_shared_mac: int,
         n_per_output: int, k: GateConstants) -> ReportRow:
    if kind == "pas-array-shared-mac":
        spec = AcceleratorSpec(kind, n_units, width, n_bins, n_shared_mac)
        cycles = latency_pasm(n_per_output, n_bins, spec.lanes_per_mac)
        shared = n_shared_mac
    else:
        spec = AcceleratorSpec(kind, n_units, width, n_bins)
        cycles = latency_mac(n_per_output)
        shared = 0
    gates = gates_accelerator(spec, k)
    base = latency_mac(n_per_output)
    return ReportRow(
        width=width,
        n_bins=n_bins,
        kind=kind,
        n_units=n_units,
        n_shared_mac=shared,
        total_gates=gates.total,
        mult_gates=gates.multiplier_gates,
        reg_gates=gates.register_gates,
        cycles=cycles,
        overhead=Fraction(cycles - base, base),
    )


def sweep_rows(widths, bins, kinds, n_units: int, n_shared_mac: int,
               n_per_output: int, k: GateConstants) -> list:
    """One row per (W, B, kind), ordered W then B then kind (alphabetical)."""
    rows = []
    for width in sorted(widths):
        for n_bins in sorted(bins):
            for kind in sorted(kinds):
                rows.append(_row(kind, width, n_bins, n_units, n_shared_mac, n_per_output, k))
    return rows


def rows_to_csv(rows) -> str:
    """Deterministic CSV text: fixed header, LF line endings, 4-decimal overhead."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in rows:
        buf.write(",".join(row.to_csv_fields()) + "\n")
    return buf.getvalue()
