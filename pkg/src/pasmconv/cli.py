"""Command-line front end: quantize, run, simulate, cost, sweep, selftest.

Exit codes: 0 success, 1 validation error, 2 equivalence or verification
failure. All randomness is seeded (--seed overrides the config seed), and
identical config + seed produce byte-identical CSV and tensor outputs.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, gate_constants_from_env
from .conv import (
    ConvConfig,
    conv_pasm,
    conv_reference,
    conv_weight_shared,
    first_mismatch,
    pas_accumulate,
    postpass_multiply,
)
from .costmodel import gates_accelerator, macops_per_output
from .quantize import EncodedKernel, WeightDictionary, decode_kernel, kmeans_iterate
from .report import rows_to_csv, sweep_rows
from .simulate import LaneStream, SimConfig, sim_pasm_array, sim_ws_mac_array, verify_sim_vs_analytic
from .tensor import QTensor, WordSpec
from .tensorio import FORMATS, load_tensor, store_tensor

__all__ = ["main", "EquivalenceFailure"]


class EquivalenceFailure(Exception):
    """Backends or simulator/analytic model disagree; exit code 2."""


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig.default()
    return cfg


def _seed(args, cfg: ExperimentConfig) -> int:
    return args.seed if getattr(args, "seed", None) is not None else cfg.seed


def _random_centroids(rng, n_bins: int, word: WordSpec) -> np.ndarray:
    """n_bins distinct sorted values inside the word range."""
    lo = max(word.min_value, -2048)
    hi = min(word.max_value, 2047)
    span = hi - lo + 1
    if span < n_bins:
        raise ValueError(f"cannot draw {n_bins} distinct centroids from a {word.width}-bit word")
    picks = rng.choice(span, size=n_bins, replace=False)
    return np.sort(picks + lo).astype(np.int64)


def _random_image(rng, cfg: ConvConfig) -> QTensor:
    lo, hi = cfg.image_word.min_value, cfg.image_word.max_value
    data = rng.integers(lo, hi, size=(cfg.c, cfg.ih, cfg.iw), endpoint=True, dtype=np.int64)
    return QTensor((cfg.c, cfg.ih, cfg.iw), cfg.image_word, data)


def _random_encoded_kernel(rng, cfg: ConvConfig, n_bins: int) -> EncodedKernel:
    cent = _random_centroids(rng, n_bins, cfg.weight_word)
    idx = rng.integers(0, n_bins, size=(cfg.m, cfg.c, cfg.ky, cfg.kx), dtype=np.int64)
    return EncodedKernel(idx, WeightDictionary(cent), cfg.weight_word)


def _random_streams(rng, n_lanes: int, n_pairs: int, n_bins: int, word: WordSpec) -> LaneStream:
    lo, hi = word.min_value, word.max_value
    values = rng.integers(lo, hi, size=(n_lanes, n_pairs), endpoint=True, dtype=np.int64)
    bins = rng.integers(0, n_bins, size=(n_lanes, n_pairs), dtype=np.int64)
    return LaneStream(
        [[(int(values[i, t]), int(bins[i, t])) for t in range(n_pairs)] for i in range(n_lanes)]
    )


# ---------------------------------------------------------------- commands


def cmd_quantize(args) -> int:
    cfg = _load_config(args)
    weights = load_tensor(args.weights, args.format)
    run = kmeans_iterate(weights.flat(), cfg.quantizer_bins, cfg.kmeans)
    d = run.dictionary

    dict_t = QTensor((d.bins,), weights.word, d.centroids)
    store_tensor(dict_t, args.dict_out, args.format)
    idx_word = WordSpec(max(2, d.wci + 1))
    idx_t = QTensor(weights.shape, idx_word, run.assignments.reshape(weights.shape))
    store_tensor(idx_t, args.indices_out, args.format)

    print(f"B={d.bins} WCI={d.wci} SSE={run.sse}")
    return 0


def _load_encoded(args, cfg: ExperimentConfig) -> EncodedKernel:
    conv = cfg.conv
    dict_t = load_tensor(args.dict, args.format)
    if len(dict_t.shape) != 1:
        raise ValueError(f"--dict: expected a 1-D centroid tensor, got shape {dict_t.shape}")
    if dict_t.word.width != conv.weight_word.width:
        raise ValueError(
            f"--dict: word width {dict_t.word.width} does not match conv.weight_width "
            f"{conv.weight_word.width}"
        )
    d = WeightDictionary(dict_t.flat())
    if d.bins != dict_t.shape[0]:
        raise ValueError("--dict: centroids must be distinct (duplicates collapse bins)")
    idx_t = load_tensor(args.indices, args.format)
    expect = (conv.m, conv.c, conv.ky, conv.kx)
    if idx_t.shape != expect:
        raise ValueError(f"--indices: shape {idx_t.shape} does not match conv {expect}")
    return EncodedKernel(idx_t.data, d, conv.weight_word)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    conv = cfg.conv
    image = load_tensor(args.image, args.format)

    if args.kernel and (args.dict or args.indices):
        raise ValueError("--kernel: pass either --kernel or --dict/--indices, not both")

    if args.kernel:
        if cfg.backend != "reference":
            raise ValueError(
                f"backend: {cfg.backend!r} needs --dict/--indices; a raw --kernel only "
                "supports the reference backend"
            )
        kernel = load_tensor(args.kernel, args.format)
        result = conv_reference(image, kernel, conv)
        results = {"reference": result}
    else:
        if not (args.dict and args.indices):
            raise ValueError("--dict/--indices: both are required unless --kernel is given")
        ek = _load_encoded(args, cfg)
        results = {}
        if cfg.backend in ("reference", "all"):
            results["reference"] = conv_reference(image, decode_kernel(ek), conv)
        if cfg.backend in ("weightshared", "all"):
            results["weightshared"] = conv_weight_shared(image, ek, conv)
        if cfg.backend in ("pasm", "all"):
            results["pasm"] = conv_pasm(image, ek, conv)

    names = list(results)
    base = results[names[0]]
    for name in names[1:]:
        mism = first_mismatch(base, results[name])
        if mism is not None:
            m, r, q, va, vb = mism
            raise EquivalenceFailure(
                f"{names[0]} vs {name}: outFeat[{m}][{r}][{q}] = {va} vs {vb}"
            )

    if args.out:
        store_tensor(base.outfeat, args.out, args.format)
    verdict = "pass" if len(names) > 1 else "n/a"
    print(
        f"backends={'+'.join(names)} N={conv.n_per_output} "
        f"out_shape={base.outfeat.shape} equivalence={verdict}"
    )
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    acc = cfg.accelerator
    if acc.kind == "mac-array":
        raise ValueError(
            "accelerator.kind: mac-array has no dictionary stream to simulate; "
            "use ws-mac-array or pas-array-shared-mac"
        )
    rng = np.random.default_rng(_seed(args, cfg))
    n = cfg.conv.n_per_output
    word = WordSpec(acc.width)
    dictionary = WeightDictionary(_random_centroids(rng, acc.n_bins, word))
    streams = _random_streams(rng, acc.n_units, n, acc.n_bins, word)

    want_trace = bool(args.trace)
    if acc.kind == "ws-mac-array":
        sim_cfg = SimConfig(n_lanes=acc.n_units, n_bins=acc.n_bins)
        report = sim_ws_mac_array(streams, dictionary, sim_cfg, trace=want_trace)
    else:
        sim_cfg = SimConfig(n_lanes=acc.n_units, n_bins=acc.n_bins, n_shared_mac=acc.n_shared_mac)
        report = sim_pasm_array(streams, dictionary, sim_cfg, trace=want_trace)

    if args.trace:
        Path(args.trace).write_text("\n".join(report.trace_lines()) + "\n")

    verdict = verify_sim_vs_analytic(report, sim_cfg, streams, dictionary)
    print(f"kind={acc.kind} lanes={acc.n_units} N={n} B={acc.n_bins} cycles={report.total_cycles}")
    for unit, busy in report.busy_cycles.items():
        print(f"busy {unit}={busy}")
    print(f"verdict={'pass' if verdict.ok else 'fail'}")
    if not verdict.ok:
        raise EquivalenceFailure("; ".join(verdict.issues))
    return 0


def cmd_cost(args) -> int:
    cfg = _load_config(args)
    k = gate_constants_from_env(cfg.gate_constants)
    acc = cfg.accelerator
    gates = gates_accelerator(acc, k)
    print(f"kind={acc.kind} n_units={acc.n_units} n_shared_mac={acc.n_shared_mac} "
          f"W={acc.width} B={acc.n_bins}")
    print(f"adder_gates={gates.adder_gates}")
    print(f"multiplier_gates={gates.multiplier_gates}")
    print(f"register_gates={gates.register_gates}")
    print(f"port_gates={gates.port_gates}")
    print(f"total_gates={gates.total}")
    if args.out:
        rows = sweep_rows(
            [acc.width], [acc.n_bins], cfg.sweep.kinds,
            acc.n_units, acc.n_shared_mac or max(1, acc.n_units // 4),
            cfg.conv.n_per_output, k,
        )
        Path(args.out).write_text(rows_to_csv(rows))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    k = gate_constants_from_env(cfg.gate_constants)
    acc = cfg.accelerator
    rows = sweep_rows(
        cfg.sweep.widths, cfg.sweep.bins, cfg.sweep.kinds,
        acc.n_units, acc.n_shared_mac or max(1, acc.n_units // 4),
        cfg.conv.n_per_output, k,
    )
    csv_text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(csv_text)
    return 0


# ---------------------------------------------------------------- selftest

_WORKED_PAIRS = ((267, 0), (34, 1), (48, 2), (177, 3), (61, 0))
_WORKED_WEIGHTS = (17, 4, 13, 20)  # original stream order, not canonical
_WORKED_RESULT = 9876
_WORKED_BINS = (328, 34, 48, 177)
_WORKED_FIRST_PRODUCT = 5576

_MACOPS_TABLE = {
    (32, 1, 1): 32, (128, 1, 1): 128, (512, 1, 1): 512,
    (32, 3, 3): 288, (128, 3, 3): 1152, (512, 3, 3): 4608,
    (32, 5, 5): 800, (128, 5, 5): 3200, (512, 5, 5): 12800,
    (32, 7, 7): 1568, (128, 7, 7): 6272, (512, 7, 7): 25088,
}


def _fixture_path(name: str):
    return resources.as_file(resources.files("pasmconv") / "fixtures" / name)


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise EquivalenceFailure(msg)


def _selftest_worked_conv() -> None:
    with _fixture_path("worked_experiment.json") as p:
        cfg = ExperimentConfig.from_file(p)
    with _fixture_path("worked_image.txt") as p:
        image = load_tensor(p)
    with _fixture_path("worked_dict.txt") as p:
        dict_t = load_tensor(p)
    with _fixture_path("worked_indices.txt") as p:
        idx_t = load_tensor(p)
    ek = EncodedKernel(idx_t.data, WeightDictionary(dict_t.flat()), cfg.conv.weight_word)
    for name, result in (
        ("reference", conv_reference(image, decode_kernel(ek), cfg.conv)),
        ("weightshared", conv_weight_shared(image, ek, cfg.conv)),
        ("pasm", conv_pasm(image, ek, cfg.conv)),
    ):
        got = result.outfeat.get((0, 0, 0))
        _check(got == _WORKED_RESULT, f"{name}: got {got}, want {_WORKED_RESULT}")


def _selftest_worked_stream() -> None:
    acc = pas_accumulate(_WORKED_PAIRS, 4)
    _check(tuple(acc) == _WORKED_BINS, f"bins {tuple(acc)}, want {_WORKED_BINS}")
    first = acc.bins[0] * _WORKED_WEIGHTS[0]
    _check(first == _WORKED_FIRST_PRODUCT, f"first product {first}, want {_WORKED_FIRST_PRODUCT}")
    total = postpass_multiply(acc, _WORKED_WEIGHTS)
    _check(total == _WORKED_RESULT, f"post-pass total {total}, want {_WORKED_RESULT}")


def _selftest_macops() -> None:
    for (c, kx, ky), want in _MACOPS_TABLE.items():
        got = macops_per_output(c, kx, ky)
        _check(got == want, f"macops({c},{kx},{ky}) = {got}, want {want}")


def _selftest_cycles() -> None:
    rng = np.random.default_rng(7)
    word = WordSpec(16)
    d = WeightDictionary(_random_centroids(rng, 16, word))
    cases = (
        (4, 1, 1024, 16, 1088),
        (1, 1, 1024, 16, 1040),
        (16, 4, 135, 16, 199),
    )
    for lanes, macs, n, n_bins, want in cases:
        streams = _random_streams(rng, lanes, n, n_bins, word)
        sim_cfg = SimConfig(n_lanes=lanes, n_bins=n_bins, n_shared_mac=macs)
        report = sim_pasm_array(streams, d, sim_cfg)
        _check(report.total_cycles == want,
               f"{lanes} lanes/{macs} macs N={n}: {report.total_cycles} cycles, want {want}")
        verdict = verify_sim_vs_analytic(report, sim_cfg, streams, d)
        _check(verdict.ok, f"verify failed: {verdict.issues}")
    streams = _random_streams(rng, 4, 1024, 16, word)
    report = sim_ws_mac_array(streams, d, SimConfig(n_lanes=4, n_bins=16))
    _check(report.total_cycles == 1024, f"ws array: {report.total_cycles} cycles, want 1024")


def _selftest_random_equivalence() -> None:
    cfg = ExperimentConfig.default()
    rng = np.random.default_rng(1)
    conv = cfg.conv
    image = _random_image(rng, conv)
    ek = _random_encoded_kernel(rng, conv, cfg.quantizer_bins)
    ref = conv_reference(image, decode_kernel(ek), conv)
    for name, result in (
        ("weightshared", conv_weight_shared(image, ek, conv)),
        ("pasm", conv_pasm(image, ek, conv)),
    ):
        mism = first_mismatch(ref, result)
        _check(mism is None, f"reference vs {name}: mismatch {mism}")


def _selftest_quantizer() -> None:
    run = kmeans_iterate([0, 10, 90, 100], 2)
    _check(run.dictionary.centroids.tolist() == [5, 95],
           f"centroids {run.dictionary.centroids.tolist()}, want [5, 95]")
    _check(run.sse == 100, f"SSE {run.sse}, want 100")
    run = kmeans_iterate([17, 4, 13, 20], 4)
    _check(run.sse == 0, f"SSE {run.sse}, want 0 when B >= distinct count")


def cmd_selftest(args) -> int:
    checks = (
        ("worked-example-conv", _selftest_worked_conv),
        ("worked-example-stream", _selftest_worked_stream),
        ("macops-table", _selftest_macops),
        ("cycle-arithmetic", _selftest_cycles),
        ("random-equivalence", _selftest_random_equivalence),
        ("quantizer-oracle", _selftest_quantizer),
    )
    failures = 0
    for name, fn in checks:
        try:
            fn()
        except Exception as e:  # noqa: BLE001 - report and keep going
            failures += 1
            print(f"FAIL {name}: {e}")
        else:
            print(f"PASS {name}")
    print(f"{len(checks) - failures}/{len(checks)} fixtures pass")
    return 0 if failures == 0 else 2


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pasmconv",
        description="Weight-shared convolution schedules, cost model and array simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--config", help="experiment config JSON (defaults built in)")
        p.add_argument("--seed", type=int, help="override the config seed")
        if fmt:
            p.add_argument("--format", choices=FORMATS, default="text-v1",
                           help="tensor file format")

    p = sub.add_parser("quantize", help="k-means bin kernel weights into a dictionary")
    common(p)
    p.add_argument("--weights", required=True, help="input weight tensor")
    p.add_argument("--dict-out", required=True, help="output centroid tensor (1-D)")
    p.add_argument("--indices-out", required=True, help="output bin-index tensor")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("run", help="run convolution backends and check equivalence")
    common(p)
    p.add_argument("--image", required=True, help="input image tensor [C][IH][IW]")
    p.add_argument("--kernel", help="raw kernel tensor [M][C][KY][KX] (reference only)")
    p.add_argument("--dict", help="centroid tensor (with --indices)")
    p.add_argument("--indices", help="bin-index tensor (with --dict)")
    p.add_argument("--out", help="write the output feature map here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="cycle-level array simulation vs analytic model")
    common(p, fmt=False)
    p.add_argument("--trace", help="write a cycle,unit,action,lane,bin,value trace here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cost", help="gate totals for the configured accelerator")
    common(p, fmt=False)
    p.add_argument("--out", help="also write the single-point CSV rows here")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("sweep", help="emit the W x B x kind comparison CSV")
    common(p, fmt=False)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the bundled fixtures")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EquivalenceFailure as e:
        print(f"equivalence failure: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
