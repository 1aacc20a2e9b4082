"""Analytic NAND2-equivalent gate counts and cycle-latency formulas.

Component classes per unit:

  simple MAC : adder O(W) + multiplier O(W^2) + accumulation register O(W)
  WS MAC     : simple MAC + B weight registers O(W) + 1 file port O(W*B)
  PAS        : adder O(W) + B accumulation registers O(W) + 2 file ports
               O(W*B), no multiplier

The per-bit constants are calibration knobs (textbook ripple-carry adder,
array multiplier, DFF, mux-tree defaults), not synthesized measurements;
only the scaling classes are structural. Latency: a fully pipelined MAC
or PAS lane consumes one input pair per cycle, so a sum of N products
takes N cycles, and the two-phase schedule adds one post-pass multiply
cycle per bin served per lane: N + P*B with P lanes per shared MAC.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "GateConstants",
    "UnitGates",
    "AcceleratorSpec",
    "LatencyReport",
    "ACCELERATOR_KINDS",
    "gates_simple_mac",
    "gates_ws_mac",
    "gates_pas",
    "gates_accelerator",
    "macops_per_output",
    "latency_mac",
    "latency_pasm",
    "latency_report",
]

ACCELERATOR_KINDS = ("mac-array", "ws-mac-array", "pas-array-shared-mac")


@dataclass(frozen=True)
class GateConstants:
    """NAND2 equivalents per adder bit, multiplier bit^2, register bit and
    file-port bit. Runtime-configurable calibration."""

    k_add: int = 9
    k_mul: int = 10
    k_reg: int = 6
    k_port: int = 1

    def __post_init__(self):
        for name in ("k_add", "k_mul", "k_reg", "k_port"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name}: must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class UnitGates:
    """NAND2-equivalent breakdown; total is always the sum of the parts."""

    adder_gates: int
    multiplier_gates: int
    register_gates: int
    port_gates: int

    @property
    def total(self) -> int:
        return self.adder_gates + self.multiplier_gates + self.register_gates + self.port_gates

    def scaled(self, n: int) -> "UnitGates":
        return UnitGates(
            n * self.adder_gates,
            n * self.multiplier_gates,
            n * self.register_gates,
            n * self.port_gates,
        )

    def __add__(self, other: "UnitGates") -> "UnitGates":
        return UnitGates(
            self.adder_gates + other.adder_gates,
            self.multiplier_gates + other.multiplier_gates,
            self.register_gates + other.register_gates,
            self.port_gates + other.port_gates,
        )


def _check_width_bins(width: int, n_bins: int | None = None) -> None:
    if width < 2:
        raise ValueError(f"width must be >= 2, got {width}")
    if n_bins is not None and n_bins < 2:
        raise ValueError(f"bin count must be >= 2, got {n_bins}")


def gates_simple_mac(width: int, k: GateConstants = GateConstants()) -> UnitGates:
    """Adder + multiplier + one accumulation register."""
    _check_width_bins(width)
    return UnitGates(k.k_add * width, k.k_mul * width * width, k.k_reg * width, 0)


def gates_ws_mac(width: int, n_bins: int, k: GateConstants = GateConstants()) -> UnitGates:
    """Simple MAC plus a B-entry weight register file with one read port."""
    _check_width_bins(width, n_bins)
    base = gates_simple_mac(width, k)
    return UnitGates(
        base.adder_gates,
        base.multiplier_gates,
        base.register_gates + n_bins * k.k_reg * width,
        k.k_port * width * n_bins,
    )


def gates_pas(width: int, n_bins: int, k: GateConstants = GateConstants()) -> UnitGates:
    """Adder plus B accumulation registers with read and write ports; no multiplier."""
    _check_width_bins(width, n_bins)
    return UnitGates(
        k.k_add * width,
        0,
        n_bins * k.k_reg * width,
        2 * k.k_port * width * n_bins,
    )


@dataclass(frozen=True)
class AcceleratorSpec:
    """An array of units: plain MACs, weight-shared MACs, or PAS lanes with
    a pool of shared post-pass (weight-shared) MACs."""

    kind: str
    n_units: int
    width: int
    n_bins: int
    n_shared_mac: int = 0

    def __post_init__(self):
        if self.kind not in ACCELERATOR_KINDS:
            raise ValueError(f"kind: must be one of {ACCELERATOR_KINDS}, got {self.kind!r}")
        if self.n_units < 1:
            raise ValueError(f"n_units: must be >= 1, got {self.n_units}")
        _check_width_bins(self.width, self.n_bins)
        if self.kind == "pas-array-shared-mac":
            if self.n_shared_mac < 1:
                raise ValueError(
                    f"n_shared_mac: must be >= 1 for {self.kind}, got {self.n_shared_mac}"
                )
            if self.n_units < self.n_shared_mac:
                raise ValueError(
                    f"n_shared_mac: {self.n_shared_mac} exceeds n_units {self.n_units}"
                )

    @property
    def lanes_per_mac(self) -> int:
        if self.kind != "pas-array-shared-mac":
            return 0
        if self.n_units % self.n_shared_mac != 0:
            raise ValueError(
                f"n_units {self.n_units} not divisible by n_shared_mac {self.n_shared_mac}"
            )
        return self.n_units // self.n_shared_mac


def gates_accelerator(spec: AcceleratorSpec, k: GateConstants = GateConstants()) -> UnitGates:
    """Whole-array NAND2 total for a spec."""
    if spec.kind == "mac-array":
        return gates_simple_mac(spec.width, k).scaled(spec.n_units)
    if spec.kind == "ws-mac-array":
        return gates_ws_mac(spec.width, spec.n_bins, k).scaled(spec.n_units)
    return gates_pas(spec.width, spec.n_bins, k).scaled(spec.n_units) + gates_ws_mac(
        spec.width, spec.n_bins, k
    ).scaled(spec.n_shared_mac)


def macops_per_output(c: int, kx: int, ky: int) -> int:
    """Multiply-accumulates per output element: C*KX*KY."""
    if c < 1 or kx < 1 or ky < 1:
        raise ValueError(f"all dims must be >= 1, got c={c} kx={kx} ky={ky}")
    return c * kx * ky


def latency_mac(n_inputs: int, fill: int = 0) -> int:
    """Cycles for one fully pipelined MAC lane over N input pairs."""
    if n_inputs < 1:
        raise ValueError(f"n_inputs must be >= 1, got {n_inputs}")
    return n_inputs + fill


def latency_pasm(n_inputs: int, n_bins: int, pas_per_mac: int, fill: int = 0) -> int:
    """Cycles for the two-phase schedule: N accumulate cycles, then B
    post-pass multiply cycles for each of the P lanes a shared MAC serves."""
    if n_inputs < 1:
        raise ValueError(f"n_inputs must be >= 1, got {n_inputs}")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if pas_per_mac < 1:
        raise ValueError(f"pas_per_mac must be >= 1, got {pas_per_mac}")
    return n_inputs + pas_per_mac * n_bins + fill


@dataclass(frozen=True)
class LatencyReport:
    """Cycle total plus overhead relative to a plain MAC lane on the same N."""

    n_inputs: int
    total_cycles: int
    overhead_ratio: Fraction

    @property
    def overhead_pct(self) -> float:
        return float(100 * self.overhead_ratio)


def latency_report(n_inputs: int, n_bins: int | None = None, pas_per_mac: int | None = None) -> LatencyReport:
    """Analytic report; omit n_bins/pas_per_mac for a plain MAC lane."""
    if n_bins is None:
        total = latency_mac(n_inputs)
    else:
        total = latency_pasm(n_inputs, n_bins, pas_per_mac if pas_per_mac is not None else 1)
    return LatencyReport(n_inputs, total, Fraction(total - n_inputs, n_inputs))
