#!/usr/bin/env python3
"""Where the accumulate-first array wins on gates, and where it stops.

An accumulate-only lane drops the O(W^2) multiplier but pays for B
accumulation registers and a second file port, so the trade depends on
the bin count: big win at B=16, loss by B=256. Cycle cost moves the
other way: the shared post-pass MAC adds (lanes/macs)*B cycles.
"""

from pasmconv import (
    AcceleratorSpec,
    GateConstants,
    gates_accelerator,
    gates_pas,
    gates_simple_mac,
    gates_ws_mac,
    latency_report,
    rows_to_csv,
    sweep_rows,
)

k = GateConstants()
W = 32
print(f"per-unit NAND2 totals at W={W} (k_add={k.k_add} k_mul={k.k_mul} "
      f"k_reg={k.k_reg} k_port={k.k_port}):")
print(f"  {'B':>4} {'simple MAC':>11} {'WS MAC':>8} {'PAS':>7}")
for b in (4, 16, 64, 256):
    print(f"  {b:>4} {gates_simple_mac(W, k).total:>11} "
          f"{gates_ws_mac(W, b, k).total:>8} {gates_pas(W, b, k).total:>7}")

print(f"\n16-unit arrays at W={W} (two-phase array shares 4 post-pass MACs):")
print(f"  {'B':>4} {'WS-MAC array':>13} {'PAS+MAC array':>14} {'saving':>8}")
for b in (4, 8, 16, 64, 256):
    ws = gates_accelerator(AcceleratorSpec("ws-mac-array", 16, W, b), k).total
    pas = gates_accelerator(
        AcceleratorSpec("pas-array-shared-mac", 16, W, b, n_shared_mac=4), k).total
    print(f"  {b:>4} {ws:>13} {pas:>14} {100 * (ws - pas) / ws:>7.1f}%")

print("\nlatency side of the trade, N=800 pairs per output:")
for b in (4, 16, 64):
    for p in (1, 4):
        r = latency_report(800, b, p)
        print(f"  B={b:>3} lanes/mac={p}: {r.total_cycles} cycles "
              f"(+{r.overhead_pct:.2f}%)")

rows = sweep_rows(widths=(8, 16, 32), bins=(4, 16, 256),
                  kinds=("ws-mac-array", "pas-array-shared-mac"),
                  n_units=16, n_shared_mac=4, n_per_output=800, k=k)
print(f"\nsweep CSV ({len(rows)} rows), first lines:")
for line in rows_to_csv(rows).splitlines()[:5]:
    print(f"  {line}")
