"""Cycle-level simulation of MAC and PAS accelerator arrays.

Every lane consumes one (value, binIndex) pair per cycle. A weight-shared
MAC array finishes N lanes-worth of streams in exactly N cycles. The
two-phase array runs the accumulate phase for N cycles, hits a phase
barrier, then each shared post-pass MAC walks its lane group in ascending
lane order spending B cycles per lane, so the total is N + (lanes/macs)*B.
Arbitration is fixed round-robin; any fixed order gives the same total.

The simulator is an independent implementation of the same arithmetic the
functional primitives compute, and `verify_sim_vs_analytic` cross-checks
both the cycle totals against the analytic formulas and the lane results
against pas_accumulate/postpass_multiply.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .conv import pas_accumulate, postpass_multiply
from .costmodel import latency_mac, latency_pasm
from .quantize import WeightDictionary

__all__ = [
    "LaneStream",
    "SimConfig",
    "SimReport",
    "TraceEvent",
    "Verdict",
    "sim_ws_mac_array",
    "sim_pasm_array",
    "verify_sim_vs_analytic",
]


class LaneStream:
    """Per-lane ordered (value, binIndex) pair sequences, all the same length."""

    __slots__ = ("lanes",)

    def __init__(self, lanes):
        lanes = tuple(tuple((int(v), int(b)) for v, b in lane) for lane in lanes)
        if not lanes:
            raise ValueError("need at least one lane")
        n = len(lanes[0])
        if any(len(lane) != n for lane in lanes):
            raise ValueError("all lanes must stream the same number of pairs")
        if n == 0:
            raise ValueError("lanes must stream at least one pair")
        self.lanes = lanes

    @property
    def n_lanes(self) -> int:
        return len(self.lanes)

    @property
    def n_pairs(self) -> int:
        return len(self.lanes[0])

    def check_bins(self, n_bins: int) -> None:
        for i, lane in enumerate(self.lanes):
            for value, b in lane:
                if not 0 <= b < n_bins:
                    raise ValueError(f"lane {i}: bin index {b} out of range for {n_bins} bins")


@dataclass(frozen=True)
class SimConfig:
    """Array shape: lane count, bin count, and (two-phase mode only) the
    shared post-pass MAC count, which must divide the lanes evenly."""

    n_lanes: int
    n_bins: int
    n_shared_mac: int = 0

    def __post_init__(self):
        if self.n_lanes < 1:
            raise ValueError(f"n_lanes: must be >= 1, got {self.n_lanes}")
        if self.n_bins < 1:
            raise ValueError(f"n_bins: must be >= 1, got {self.n_bins}")

    def lanes_per_mac(self) -> int:
        if self.n_shared_mac < 1:
            raise ValueError(f"n_shared_mac: must be >= 1 in two-phase mode, got {self.n_shared_mac}")
        if self.n_shared_mac > self.n_lanes:
            raise ValueError(f"n_shared_mac: {self.n_shared_mac} exceeds n_lanes {self.n_lanes}")
        if self.n_lanes % self.n_shared_mac != 0:
            raise ValueError(
                f"n_lanes: {self.n_lanes} not divisible by n_shared_mac {self.n_shared_mac}"
            )
        return self.n_lanes // self.n_shared_mac


@dataclass(frozen=True)
class TraceEvent:
    cycle: int
    unit: str
    action: str
    lane: int
    bin: int
    value: int

    def to_line(self) -> str:
        return f"{self.cycle},{self.unit},{self.action},{self.lane},{self.bin},{self.value}"


@dataclass
class SimReport:
    """Cycle totals, per-lane accumulator results, per-unit busy counts and
    (optionally) the full event trace."""

    kind: str
    n_pairs: int
    total_cycles: int
    lane_results: list
    busy_cycles: dict
    postpass_start: list | None = None
    trace: list | None = None

    def trace_lines(self):
        if self.trace is None:
            raise ValueError("run with trace=True to collect events")
        return [e.to_line() for e in self.trace]


def sim_ws_mac_array(
    streams: LaneStream, dictionary: WeightDictionary, cfg: SimConfig, trace: bool = False
) -> SimReport:
    """One weight-shared MAC per lane, fully pipelined: N cycles total."""
    if streams.n_lanes != cfg.n_lanes:
        raise ValueError(f"stream has {streams.n_lanes} lanes, config says {cfg.n_lanes}")
    streams.check_bins(cfg.n_bins)
    if dictionary.bins < cfg.n_bins:
        raise ValueError(f"dictionary has {dictionary.bins} bins, config needs {cfg.n_bins}")

    cent = dictionary.centroids
    n = streams.n_pairs
    acc = [0] * cfg.n_lanes
    events = [] if trace else None
    for cycle in range(n):
        for lane in range(cfg.n_lanes):
            value, b = streams.lanes[lane][cycle]
            acc[lane] += value * int(cent[b])
            if trace:
                events.append(TraceEvent(cycle, f"mac{lane}", "mul_acc", lane, b, value))
    busy = {f"mac{lane}": n for lane in range(cfg.n_lanes)}
    return SimReport("ws-mac-array", n, n, acc, busy, trace=events)


def sim_pasm_array(
    streams: LaneStream, dictionary: WeightDictionary, cfg: SimConfig, trace: bool = False
) -> SimReport:
    """PAS lanes with shared post-pass MACs, strict two-phase barrier.

    Phase 1 (cycles 0..N-1): every lane adds its streamed value into its
    own bin register file. Phase 2 (cycles N..): shared MAC j serves lanes
    [j*G, (j+1)*G) back to back, one bin multiply per cycle, G = lanes/macs.
    """
    if streams.n_lanes != cfg.n_lanes:
        raise ValueError(f"stream has {streams.n_lanes} lanes, config says {cfg.n_lanes}")
    streams.check_bins(cfg.n_bins)
    if dictionary.bins < cfg.n_bins:
        raise ValueError(f"dictionary has {dictionary.bins} bins, config needs {cfg.n_bins}")
    group = cfg.lanes_per_mac()

    cent = dictionary.centroids
    n = streams.n_pairs
    n_bins = cfg.n_bins
    bins = [[0] * n_bins for _ in range(cfg.n_lanes)]
    events = [] if trace else None

    for cycle in range(n):
        for lane in range(cfg.n_lanes):
            value, b = streams.lanes[lane][cycle]
            bins[lane][b] += value
            if trace:
                events.append(TraceEvent(cycle, f"pas{lane}", "accumulate", lane, b, value))

    acc = [0] * cfg.n_lanes
    starts = [0] * cfg.n_lanes
    busy = {f"pas{lane}": n for lane in range(cfg.n_lanes)}
    for mac in range(cfg.n_shared_mac):
        cycle = n
        for pos in range(group):
            lane = mac * group + pos
            starts[lane] = cycle
            for b in range(n_bins):
                product = bins[lane][b] * int(cent[b])
                acc[lane] += product
                if trace:
                    events.append(TraceEvent(cycle, f"mac{mac}", "post_mul", lane, b, product))
                cycle += 1
        busy[f"mac{mac}"] = cycle - n
    total = n + group * n_bins
    return SimReport("pas-array-shared-mac", n, total, acc, busy, postpass_start=starts, trace=events)


@dataclass
class Verdict:
    ok: bool
    issues: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def verify_sim_vs_analytic(
    report: SimReport, cfg: SimConfig, streams: LaneStream, dictionary: WeightDictionary
) -> Verdict:
    """Check a run against the analytic latency formulas and the functional
    stream primitives; the verdict carries one line per mismatch."""
    issues = []
    if report.kind == "ws-mac-array":
        expect_cycles = latency_mac(report.n_pairs)
    else:
        expect_cycles = latency_pasm(report.n_pairs, cfg.n_bins, cfg.lanes_per_mac())
    if report.total_cycles != expect_cycles:
        issues.append(f"cycles: simulated {report.total_cycles}, analytic {expect_cycles}")

    cent = dictionary.centroids[: cfg.n_bins]
    for lane in range(streams.n_lanes):
        bins = pas_accumulate(streams.lanes[lane], cfg.n_bins)
        expect = postpass_multiply(bins, [int(c) for c in cent])
        got = report.lane_results[lane]
        if got != expect:
            issues.append(f"lane {lane}: simulated {got}, functional {expect}")
    return Verdict(not issues, issues)
