"""JSON experiment configuration.

Field names mirror the conventional convolution symbols (ih, iw, c, m, ky,
kx, s, b, w, bias, relu). Every section is optional; defaults reproduce the
desk-scale experiment (5x5 image, 15 channels, 3x3 kernels, 2 output
kernels) with a 16-lane/4-shared-MAC array at 32-bit words and 16 bins.

Validation is strict: unknown keys and out-of-range values are rejected
with a one-line diagnostic naming the offending field.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .conv import ConvConfig
from .costmodel import ACCELERATOR_KINDS, AcceleratorSpec, GateConstants
from .quantize import KMeansOptions
from .tensor import WordSpec

__all__ = [
    "ExperimentConfig",
    "SweepRanges",
    "BACKENDS",
    "gate_constants_from_env",
    "GATE_CONSTANTS_ENV",
]

BACKENDS = ("reference", "weightshared", "pasm", "all")
GATE_CONSTANTS_ENV = "PASM_GATE_CONSTANTS"

_DEFAULT_SWEEP_WIDTHS = (4, 8, 16, 32)
_DEFAULT_SWEEP_BINS = (4, 8, 16, 64, 256)


@dataclass(frozen=True)
class SweepRanges:
    widths: tuple = _DEFAULT_SWEEP_WIDTHS
    bins: tuple = _DEFAULT_SWEEP_BINS
    kinds: tuple = ACCELERATOR_KINDS

    def __post_init__(self):
        if not self.widths:
            raise ValueError("sweep.widths: must list at least one width")
        if not self.bins:
            raise ValueError("sweep.bins: must list at least one bin count")
        for w in self.widths:
            if not 2 <= w <= 64:
                raise ValueError(f"sweep.widths: width {w} outside 2..64")
        for b in self.bins:
            if not 2 <= b <= 256:
                raise ValueError(f"sweep.bins: bin count {b} outside 2..256")
        for kind in self.kinds:
            if kind not in ACCELERATOR_KINDS:
                raise ValueError(f"sweep.kinds: unknown kind {kind!r}")
        if not self.kinds:
            raise ValueError("sweep.kinds: must list at least one kind")


def _take(section: dict, name: str, allowed: set) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"{name}.{sorted(unknown)[0]}: unknown field")


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ValueError(f"{name}: must be an object")
    return sec


@dataclass(frozen=True)
class ExperimentConfig:
    conv: ConvConfig
    quantizer_bins: int
    kmeans: KMeansOptions
    backend: str
    accelerator: AcceleratorSpec
    gate_constants: GateConstants
    sweep: SweepRanges
    seed: int = 0

    @classmethod
    def default(cls) -> "ExperimentConfig":
        return cls.from_dict({})

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: not valid JSON ({e})") from None
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: top level must be a JSON object")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        _take(raw, "config", {"conv", "quantizer", "backend", "accelerator",
                              "gate_constants", "sweep", "seed"})

        conv_raw = _section(raw, "conv")
        _take(conv_raw, "conv", {"ih", "iw", "c", "m", "ky", "kx", "s", "bias",
                                 "relu", "image_width", "weight_width"})
        m = int(conv_raw.get("m", 2))
        try:
            conv = ConvConfig(
                ih=int(conv_raw.get("ih", 5)),
                iw=int(conv_raw.get("iw", 5)),
                c=int(conv_raw.get("c", 15)),
                m=m,
                ky=int(conv_raw.get("ky", 3)),
                kx=int(conv_raw.get("kx", 3)),
                s=int(conv_raw.get("s", 1)),
                bias=tuple(conv_raw.get("bias", (0,) * m)),
                relu=bool(conv_raw.get("relu", False)),
                image_word=WordSpec(int(conv_raw.get("image_width", 32))),
                weight_word=WordSpec(int(conv_raw.get("weight_width", 32))),
            )
        except ValueError as e:
            raise ValueError(f"conv.{e}") from None

        q_raw = _section(raw, "quantizer")
        _take(q_raw, "quantizer", {"b", "max_iters", "seed", "init", "restarts"})
        q_bins = int(q_raw.get("b", 16))
        if not 2 <= q_bins <= 256:
            raise ValueError(f"quantizer.b: must be in 2..256, got {q_bins}")
        try:
            kmeans = KMeansOptions(
                max_iters=int(q_raw.get("max_iters", 100)),
                seed=int(q_raw.get("seed", 0)),
                init=str(q_raw.get("init", "linspace")),
                restarts=int(q_raw.get("restarts", 8)),
            )
        except ValueError as e:
            raise ValueError(f"quantizer.{e}") from None

        backend = str(raw.get("backend", "all"))
        if backend not in BACKENDS:
            raise ValueError(f"backend: must be one of {BACKENDS}, got {backend!r}")

        acc_raw = _section(raw, "accelerator")
        _take(acc_raw, "accelerator", {"kind", "n_units", "n_shared_mac", "w", "b"})
        try:
            accelerator = AcceleratorSpec(
                kind=str(acc_raw.get("kind", "pas-array-shared-mac")),
                n_units=int(acc_raw.get("n_units", 16)),
                n_shared_mac=int(acc_raw.get("n_shared_mac", 4)),
                width=int(acc_raw.get("w", 32)),
                n_bins=int(acc_raw.get("b", 16)),
            )
        except ValueError as e:
            raise ValueError(f"accelerator.{e}") from None

        k_raw = _section(raw, "gate_constants")
        _take(k_raw, "gate_constants", {"k_add", "k_mul", "k_reg", "k_port"})
        try:
            gate_constants = GateConstants(
                k_add=int(k_raw.get("k_add", 9)),
                k_mul=int(k_raw.get("k_mul", 10)),
                k_reg=int(k_raw.get("k_reg", 6)),
                k_port=int(k_raw.get("k_port", 1)),
            )
        except ValueError as e:
            raise ValueError(f"gate_constants.{e}") from None

        s_raw = _section(raw, "sweep")
        _take(s_raw, "sweep", {"widths", "bins", "kinds"})
        sweep = SweepRanges(
            widths=tuple(int(w) for w in s_raw.get("widths", _DEFAULT_SWEEP_WIDTHS)),
            bins=tuple(int(b) for b in s_raw.get("bins", _DEFAULT_SWEEP_BINS)),
            kinds=tuple(str(k) for k in s_raw.get("kinds", ACCELERATOR_KINDS)),
        )

        return cls(
            conv=conv,
            quantizer_bins=q_bins,
            kmeans=kmeans,
            backend=backend,
            accelerator=accelerator,
            gate_constants=gate_constants,
            sweep=sweep,
            seed=int(raw.get("seed", 0)),
        )


def gate_constants_from_env(base: GateConstants) -> GateConstants:
    """Apply the PASM_GATE_CONSTANTS override (comma-separated
    k_add,k_mul,k_reg,k_port) on top of `base` when the variable is set."""
    raw = os.environ.get(GATE_CONSTANTS_ENV)
    if raw is None:
        return base
    parts = raw.split(",")
    if len(parts) != 4:
        raise ValueError(
            f"{GATE_CONSTANTS_ENV}: expected 4 comma-separated integers, got {raw!r}"
        )
    try:
        k_add, k_mul, k_reg, k_port = (int(p.strip()) for p in parts)
    except ValueError:
        raise ValueError(f"{GATE_CONSTANTS_ENV}: non-integer value in {raw!r}") from None
    return GateConstants(k_add=k_add, k_mul=k_mul, k_reg=k_reg, k_port=k_port)
