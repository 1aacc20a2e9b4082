"""Three bit-exact-equivalent convolution schedules.

* conv_reference      - plain sum-of-products over the kernel window
* conv_weight_shared  - same loop, weights fetched through the dictionary
* conv_pasm           - two-phase: accumulate image values into per-bin
                        registers keyed by bin index (a weighted histogram),
                        then multiply each bin sum by its centroid once

Because integer multiplication distributes over addition exactly (and stays
distributive modulo 2**w under wrapping), the three schedules agree
element-wise on every input. Reductions run in uint64, whose wrap-around is
well defined and congruent modulo 2**64; results are then wrapped into the
accumulator word, so even width-32 operands with a saturated 64-bit
accumulator stay bit-exact across schedules.

Valid padding only: the kernel window never leaves the image, so
OH = (IH-KY)//S + 1 and OW = (IW-KX)//S + 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantize import EncodedKernel, WeightDictionary
from .tensor import AccSpec, QTensor, WordSpec, wrap_to_word

__all__ = [
    "ConvConfig",
    "ConvResult",
    "BinAccumulators",
    "output_dims",
    "conv_reference",
    "conv_weight_shared",
    "conv_pasm",
    "pas_accumulate",
    "postpass_multiply",
    "apply_bias_relu",
    "first_mismatch",
]

_U64 = np.uint64


@dataclass(frozen=True)
class ConvConfig:
    """Convolution shape: [C][IH][IW] image, [M][C][KY][KX] kernel, stride S,
    per-kernel bias, optional ReLU, and the image/weight word widths."""

    ih: int
    iw: int
    c: int
    m: int
    ky: int
    kx: int
    s: int = 1
    bias: tuple = ()
    relu: bool = False
    image_word: WordSpec = WordSpec(32)
    weight_word: WordSpec = WordSpec(32)

    def __post_init__(self):
        object.__setattr__(self, "bias", tuple(int(b) for b in self.bias) or (0,) * self.m)
        for name in ("ih", "iw", "c", "m", "ky", "kx"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name}: must be >= 1, got {getattr(self, name)}")
        if self.ky % 2 == 0 or self.kx % 2 == 0:
            raise ValueError(f"ky/kx: kernel dims must be odd, got {self.ky}x{self.kx}")
        if self.ky > self.ih or self.kx > self.iw:
            raise ValueError(
                f"ky/kx: kernel {self.ky}x{self.kx} exceeds image {self.ih}x{self.iw}"
            )
        if self.s < 1:
            raise ValueError(f"s: stride must be >= 1, got {self.s}")
        if len(self.bias) != self.m:
            raise ValueError(f"bias: expected {self.m} entries, got {len(self.bias)}")

    @property
    def n_per_output(self) -> int:
        """Input pairs consumed per output element: C*KY*KX."""
        return self.c * self.ky * self.kx

    def acc_spec(self) -> AccSpec:
        width = max(self.image_word.width, self.weight_word.width)
        return AccSpec.for_sum(width, self.n_per_output)


@dataclass
class ConvResult:
    """Output feature map [M][OH][OW] in accumulator-width integers."""

    outfeat: QTensor
    oh: int
    ow: int


def output_dims(cfg: ConvConfig) -> tuple:
    """(OH, OW) under valid padding at stride S."""
    return (cfg.ih - cfg.ky) // cfg.s + 1, (cfg.iw - cfg.kx) // cfg.s + 1


def apply_bias_relu(raw: int, bias_m: int, relu: bool) -> int:
    """Add the per-kernel bias, then clamp negatives to zero when ReLU is on."""
    out = raw + bias_m
    return max(out, 0) if relu else out


class BinAccumulators:
    """The per-bin image accumulator file: bins[b] collects every streamed
    value whose bin index is b. Reset to zero before each output element."""

    __slots__ = ("bins",)

    def __init__(self, n_bins: int):
        if n_bins < 1:
            raise ValueError(f"bin count must be >= 1, got {n_bins}")
        self.bins = [0] * n_bins

    def add(self, value: int, bin_index: int) -> None:
        if not 0 <= bin_index < len(self.bins):
            raise ValueError(f"bin index {bin_index} out of range for {len(self.bins)} bins")
        self.bins[bin_index] += value

    def __len__(self):
        return len(self.bins)

    def __iter__(self):
        return iter(self.bins)


def pas_accumulate(pairs, n_bins: int) -> BinAccumulators:
    """Accumulate a stream of (value, binIndex) pairs into n_bins registers.

    Order-independent: the result is the per-bin sum regardless of stream
    permutation.
    """
    acc = BinAccumulators(n_bins)
    for value, bin_index in pairs:
        acc.add(int(value), int(bin_index))
    return acc


def postpass_multiply(bins, weights) -> int:
    """Second phase: one multiply per bin, Σ_b bins[b] * weight[b].

    `weights` may be a WeightDictionary or any same-length value sequence
    (bins produced against a non-canonical index order pair with the
    matching raw weight order).
    """
    values = weights.centroids if isinstance(weights, WeightDictionary) else weights
    bins = list(bins)
    if len(bins) != len(values):
        raise ValueError(f"{len(bins)} bins but {len(values)} weights")
    return sum(int(b) * int(w) for b, w in zip(bins, values))


def _check_image(image: QTensor, cfg: ConvConfig) -> None:
    expect = (cfg.c, cfg.ih, cfg.iw)
    if image.shape != expect:
        raise ValueError(f"image shape {image.shape} does not match config {expect}")
    if image.word.width != cfg.image_word.width:
        raise ValueError(
            f"image word width {image.word.width} does not match config {cfg.image_word.width}"
        )


def _check_kernel_shape(shape, cfg: ConvConfig) -> None:
    expect = (cfg.m, cfg.c, cfg.ky, cfg.kx)
    if tuple(shape) != expect:
        raise ValueError(f"kernel shape {tuple(shape)} does not match config {expect}")


def _finalize(residue_u64: int, bias_m: int, relu: bool, acc_word: WordSpec) -> int:
    """Shared epilogue: wrap the mod-2**64 sum into the accumulator word,
    add bias (wrapped), then ReLU. Identical across schedules by construction."""
    acc = wrap_to_word(int(residue_u64), acc_word)
    acc = wrap_to_word(acc + bias_m, acc_word)
    return max(acc, 0) if relu else acc


def _result_tensor(cfg: ConvConfig, word: WordSpec, values, oh: int, ow: int) -> ConvResult:
    t = QTensor((cfg.m, oh, ow), word, values)
    return ConvResult(t, oh, ow)


def conv_reference(image: QTensor, kernel: QTensor, cfg: ConvConfig) -> ConvResult:
    """Direct MAC schedule: one multiply-accumulate per (c, ky, kx) tap."""
    _check_image(image, cfg)
    _check_kernel_shape(kernel.shape, cfg)
    if kernel.word.width != cfg.weight_word.width:
        raise ValueError(
            f"kernel word width {kernel.word.width} does not match config {cfg.weight_word.width}"
        )
    return _conv_dense(image.data, kernel.data, cfg)


def _conv_dense(img: np.ndarray, kern: np.ndarray, cfg: ConvConfig) -> ConvResult:
    oh, ow = output_dims(cfg)
    acc_word = cfg.acc_spec().word
    img_u = img.astype(_U64)
    out = []
    for m in range(cfg.m):
        k_u = kern[m].astype(_U64)
        for r in range(oh):
            for q in range(ow):
                window = img_u[:, r * cfg.s : r * cfg.s + cfg.ky, q * cfg.s : q * cfg.s + cfg.kx]
                residue = (window * k_u).sum(dtype=_U64)
                out.append(_finalize(residue, cfg.bias[m], cfg.relu, acc_word))
    return _result_tensor(cfg, acc_word, out, oh, ow)


def _wrapped_centroids(ek: EncodedKernel, cfg: ConvConfig) -> np.ndarray:
    if ek.kernel_word.width != cfg.weight_word.width:
        raise ValueError(
            f"encoded kernel word width {ek.kernel_word.width} does not match "
            f"config {cfg.weight_word.width}"
        )
    cent = ek.dictionary.centroids
    return np.array([wrap_to_word(int(c), ek.kernel_word) for c in cent], dtype=np.int64)


def conv_weight_shared(image: QTensor, ek: EncodedKernel, cfg: ConvConfig) -> ConvResult:
    """Weight-shared MAC schedule: each tap fetches its weight through the
    dictionary (weight = centroids[binIndex]) before the multiply-accumulate."""
    _check_image(image, cfg)
    _check_kernel_shape(ek.indices.shape, cfg)
    cent = _wrapped_centroids(ek, cfg)
    # dictionary fetch materialized up front; per-tap indirection is bit-identical
    kern = cent[ek.indices]
    return _conv_dense(image.data, kern, cfg)


def conv_pasm(image: QTensor, ek: EncodedKernel, cfg: ConvConfig) -> ConvResult:
    """Two-phase schedule: per output element, reset the bin registers,
    stream all C*KY*KX (image value, bin index) pairs into them, then run
    the post-pass multiply once per bin and finish with bias/ReLU."""
    _check_image(image, cfg)
    _check_kernel_shape(ek.indices.shape, cfg)
    cent = _wrapped_centroids(ek, cfg)

    oh, ow = output_dims(cfg)
    acc_word = cfg.acc_spec().word
    n_bins = ek.dictionary.bins
    img_u = image.data.astype(_U64)
    cent_u = cent.astype(_U64)
    out = []
    for m in range(cfg.m):
        idx_flat = ek.indices[m].reshape(-1)
        for r in range(oh):
            for q in range(ow):
                window = img_u[:, r * cfg.s : r * cfg.s + cfg.ky, q * cfg.s : q * cfg.s + cfg.kx]
                bins = np.zeros(n_bins, dtype=_U64)
                np.add.at(bins, idx_flat, window.reshape(-1))
                residue = (bins * cent_u).sum(dtype=_U64)
                out.append(_finalize(residue, cfg.bias[m], cfg.relu, acc_word))
    return _result_tensor(cfg, acc_word, out, oh, ow)


def first_mismatch(a: ConvResult, b: ConvResult):
    """(m, oh, ow, value_a, value_b) of the first differing element, or None."""
    if a.outfeat.shape != b.outfeat.shape:
        raise ValueError(f"result shapes differ: {a.outfeat.shape} vs {b.outfeat.shape}")
    diff = a.outfeat.data != b.outfeat.data
    if not diff.any():
        return None
    m, r, q = (int(i) for i in np.argwhere(diff)[0])
    return m, r, q, int(a.outfeat.data[m, r, q]), int(b.outfeat.data[m, r, q])
