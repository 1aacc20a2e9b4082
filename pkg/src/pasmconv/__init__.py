"""Weight-shared CNN convolution with histogram-first scheduling.

A trained kernel is k-means binned into B shared weight values plus a
per-position bin index. Convolution can then run three interchangeable,
bit-exact-equivalent ways: a direct MAC loop, a weight-shared MAC loop
fetching weights through the dictionary, or a two-phase schedule that
first accumulates image values into per-bin registers (no multiplier)
and then multiplies each bin sum by its centroid once. The package also
ships the analytic NAND2 gate and cycle cost models for the three unit
types and a cycle-level array simulator that must agree with them.
"""

from .config import ExperimentConfig, SweepRanges, gate_constants_from_env
from .conv import (
    BinAccumulators,
    ConvConfig,
    ConvResult,
    apply_bias_relu,
    conv_pasm,
    conv_reference,
    conv_weight_shared,
    first_mismatch,
    output_dims,
    pas_accumulate,
    postpass_multiply,
)
from .costmodel import (
    ACCELERATOR_KINDS,
    AcceleratorSpec,
    GateConstants,
    LatencyReport,
    UnitGates,
    gates_accelerator,
    gates_pas,
    gates_simple_mac,
    gates_ws_mac,
    latency_mac,
    latency_pasm,
    latency_report,
    macops_per_output,
)
from .quantize import (
    EncodedKernel,
    KMeansOptions,
    KMeansRun,
    WeightDictionary,
    decode_kernel,
    encode_kernel,
    kmeans_iterate,
    kmeans_quantize,
    quantization_sse,
)
from .report import CSV_HEADER, ReportRow, rows_to_csv, sweep_rows
from .simulate import (
    LaneStream,
    SimConfig,
    SimReport,
    TraceEvent,
    Verdict,
    sim_pasm_array,
    sim_ws_mac_array,
    verify_sim_vs_analytic,
)
from .tensor import AccSpec, QTensor, WordSpec, acc_width, ceil_log2, wrap_to_word
from .tensorio import FORMATS, load_tensor, store_tensor

__version__ = "0.1.0"
