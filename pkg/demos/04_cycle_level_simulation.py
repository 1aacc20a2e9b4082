#!/usr/bin/env python3
"""Count cycles in a simulated accelerator array and check the formulas.

A weight-shared MAC array with one lane per stream finishes N pairs in N
cycles. Swapping the lanes for accumulate-only units and sharing a few
post-pass MACs costs N + (lanes/macs)*B cycles: the classic example is
1024 pairs, 16 bins, 4 lanes per shared MAC -> 1024 + 64 = 1088.
"""

import numpy as np

from pasmconv import (
    LaneStream,
    SimConfig,
    WeightDictionary,
    latency_pasm,
    sim_pasm_array,
    sim_ws_mac_array,
    verify_sim_vs_analytic,
)

rng = np.random.default_rng(4)
N, B, LANES, MACS = 1024, 16, 4, 1

dictionary = WeightDictionary(np.sort(rng.choice(4001, size=B, replace=False) - 2000))
streams = LaneStream([
    [(int(v), int(b)) for v, b in zip(rng.integers(-500, 500, N), rng.integers(0, B, N))]
    for _ in range(LANES)
])

ws_cfg = SimConfig(n_lanes=LANES, n_bins=B)
ws = sim_ws_mac_array(streams, dictionary, ws_cfg)
print(f"weight-shared MAC array: {LANES} lanes x {N} pairs -> {ws.total_cycles} cycles")

pas_cfg = SimConfig(n_lanes=LANES, n_bins=B, n_shared_mac=MACS)
pm = sim_pasm_array(streams, dictionary, pas_cfg, trace=True)
print(f"two-phase array ({MACS} shared MAC): {pm.total_cycles} cycles "
      f"(= {N} + {LANES // MACS}*{B} = {latency_pasm(N, B, LANES // MACS)})")
print(f"lane results identical: {ws.lane_results == pm.lane_results}")

print("\npost-pass starts (round-robin, back to back):")
for lane, start in enumerate(pm.postpass_start):
    print(f"  lane {lane}: cycle {start}")

print("\nbusy cycles per unit:")
for unit, busy in pm.busy_cycles.items():
    print(f"  {unit}: {busy}")

print("\ntrace excerpt around the phase barrier:")
barrier = N * LANES  # accumulate events come first in the trace
for line in pm.trace_lines()[barrier - 2 : barrier + 3]:
    print(f"  {line}")

verdict = verify_sim_vs_analytic(pm, pas_cfg, streams, dictionary)
print(f"\nsimulator vs analytic model: {'pass' if verdict.ok else verdict.issues}")
