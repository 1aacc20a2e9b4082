import json

import numpy as np
import pytest

from pasmconv import ExperimentConfig, QTensor, WordSpec, gate_constants_from_env, load_tensor, store_tensor
from pasmconv.cli import main
from pasmconv.config import GATE_CONSTANTS_ENV


def write_config(tmp_path, overrides=None, name="cfg.json"):
    raw = {} if overrides is None else overrides
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


# ----------------------------------------------------------------- config


def test_default_config_is_desk_scale():
    cfg = ExperimentConfig.default()
    assert (cfg.conv.ih, cfg.conv.iw, cfg.conv.c, cfg.conv.m) == (5, 5, 15, 2)
    assert (cfg.conv.ky, cfg.conv.kx, cfg.conv.s) == (3, 3, 1)
    assert cfg.conv.n_per_output == 135
    assert cfg.accelerator.n_units == 16 and cfg.accelerator.n_shared_mac == 4
    assert cfg.sweep.widths == (4, 8, 16, 32)
    assert cfg.sweep.bins == (4, 8, 16, 64, 256)


def test_config_diagnostics_name_the_field(tmp_path):
    cases = [
        ({"conv": {"ky": 4}}, "ky"),
        ({"conv": {"s": 0}}, "s"),
        ({"quantizer": {"b": 300}}, "quantizer.b"),
        ({"backend": "fast"}, "backend"),
        ({"accelerator": {"kind": "gpu"}}, "kind"),
        ({"gate_constants": {"k_mul": 0}}, "k_mul"),
        ({"sweep": {"widths": [1]}}, "sweep.widths"),
        ({"conv": {"ihh": 5}}, "conv.ihh"),
        ({"bogus": 1}, "bogus"),
    ]
    for raw, needle in cases:
        with pytest.raises(ValueError) as e:
            ExperimentConfig.from_dict(raw)
        msg = str(e.value)
        assert needle in msg and "\n" not in msg


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValueError, match="JSON"):
        ExperimentConfig.from_file(path)
    path.write_text("[1, 2]")
    with pytest.raises(ValueError, match="object"):
        ExperimentConfig.from_file(path)


def test_gate_constants_env_override(monkeypatch):
    base = ExperimentConfig.default().gate_constants
    monkeypatch.delenv(GATE_CONSTANTS_ENV, raising=False)
    assert gate_constants_from_env(base) == base
    monkeypatch.setenv(GATE_CONSTANTS_ENV, "2,3,4,5")
    k = gate_constants_from_env(base)
    assert (k.k_add, k.k_mul, k.k_reg, k.k_port) == (2, 3, 4, 5)
    monkeypatch.setenv(GATE_CONSTANTS_ENV, "2,3,4")
    with pytest.raises(ValueError, match=GATE_CONSTANTS_ENV):
        gate_constants_from_env(base)
    monkeypatch.setenv(GATE_CONSTANTS_ENV, "a,b,c,d")
    with pytest.raises(ValueError, match=GATE_CONSTANTS_ENV):
        gate_constants_from_env(base)


# ----------------------------------------------------------------- fixtures


@pytest.fixture
def worked_files(tmp_path):
    """Worked five-pair example as tensor files plus a matching config."""
    image = QTensor((5, 1, 1), WordSpec(16), [267, 34, 48, 177, 61])
    dict_t = QTensor((4,), WordSpec(16), [4, 13, 17, 20])
    idx_t = QTensor((1, 5, 1, 1), WordSpec(3), [2, 0, 1, 3, 2])
    paths = {}
    for name, t in (("image", image), ("dict", dict_t), ("indices", idx_t)):
        paths[name] = str(tmp_path / f"{name}.txt")
        store_tensor(t, paths[name])
    paths["config"] = write_config(tmp_path, {
        "backend": "all",
        "conv": {"ih": 1, "iw": 1, "c": 5, "m": 1, "ky": 1, "kx": 1,
                 "bias": [0], "image_width": 16, "weight_width": 16},
    })
    return paths


# -------------------------------------------------------------------- run


def test_cmd_run_worked_example(tmp_path, worked_files, capsys):
    out = str(tmp_path / "out.txt")
    rc = main(["run", "--config", worked_files["config"], "--image", worked_files["image"],
               "--dict", worked_files["dict"], "--indices", worked_files["indices"],
               "--out", out])
    assert rc == 0
    assert "equivalence=pass" in capsys.readouterr().out
    result = load_tensor(out)
    assert result.flat().tolist() == [9876]


def test_cmd_run_zero_image_gives_bias(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "backend": "all",
        "conv": {"ih": 3, "iw": 3, "c": 2, "m": 2, "ky": 3, "kx": 3,
                 "bias": [7, -9], "image_width": 16, "weight_width": 16},
    })
    store_tensor(QTensor.zeros((2, 3, 3), WordSpec(16)), tmp_path / "img.txt")
    store_tensor(QTensor((2,), WordSpec(16), [3, 5]), tmp_path / "d.txt")
    store_tensor(QTensor((2, 2, 3, 3), WordSpec(2),
                         np.zeros((2, 2, 3, 3), dtype=np.int64)), tmp_path / "i.txt")
    out = tmp_path / "o.txt"
    rc = main(["run", "--config", cfg, "--image", str(tmp_path / "img.txt"),
               "--dict", str(tmp_path / "d.txt"), "--indices", str(tmp_path / "i.txt"),
               "--out", str(out)])
    assert rc == 0
    assert load_tensor(out).flat().tolist() == [7, -9]


def test_cmd_run_validation_failures(tmp_path, worked_files, capsys):
    # missing indices
    rc = main(["run", "--config", worked_files["config"], "--image", worked_files["image"],
               "--dict", worked_files["dict"]])
    assert rc == 1
    # kernel plus dict is ambiguous
    rc = main(["run", "--config", worked_files["config"], "--image", worked_files["image"],
               "--kernel", worked_files["dict"], "--dict", worked_files["dict"],
               "--indices", worked_files["indices"]])
    assert rc == 1
    # raw kernel needs the reference backend
    rc = main(["run", "--config", worked_files["config"], "--image", worked_files["image"],
               "--kernel", worked_files["dict"]])
    assert rc == 1
    # missing file
    rc = main(["run", "--config", worked_files["config"], "--image", "/nonexistent",
               "--dict", worked_files["dict"], "--indices", worked_files["indices"]])
    assert rc == 1


def test_cmd_run_reference_with_raw_kernel(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "backend": "reference",
        "conv": {"ih": 1, "iw": 1, "c": 5, "m": 1, "ky": 1, "kx": 1,
                 "bias": [0], "image_width": 16, "weight_width": 16},
    })
    store_tensor(QTensor((5, 1, 1), WordSpec(16), [267, 34, 48, 177, 61]),
                 tmp_path / "img.txt")
    store_tensor(QTensor((1, 5, 1, 1), WordSpec(16), [17, 4, 13, 20, 17]),
                 tmp_path / "k.txt")
    out = tmp_path / "o.txt"
    rc = main(["run", "--config", cfg, "--image", str(tmp_path / "img.txt"),
               "--kernel", str(tmp_path / "k.txt"), "--out", str(out)])
    assert rc == 0
    assert load_tensor(out).flat().tolist() == [9876]


# --------------------------------------------------------------- quantize


def test_cmd_quantize_roundtrip(tmp_path, capsys):
    store_tensor(QTensor((2, 2, 1, 1), WordSpec(16), [17, 4, 13, 20]), tmp_path / "w.txt")
    cfg = write_config(tmp_path, {"quantizer": {"b": 4}})
    rc = main(["quantize", "--config", cfg, "--weights", str(tmp_path / "w.txt"),
               "--dict-out", str(tmp_path / "d.txt"),
               "--indices-out", str(tmp_path / "i.txt")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "SSE=0" in out and "B=4" in out
    assert load_tensor(tmp_path / "d.txt").flat().tolist() == [4, 13, 17, 20]
    assert load_tensor(tmp_path / "i.txt").flat().tolist() == [2, 0, 1, 3]


def test_cmd_quantize_matches_oracle(tmp_path, capsys):
    store_tensor(QTensor((4,), WordSpec(16), [0, 10, 90, 100]), tmp_path / "w.txt")
    cfg = write_config(tmp_path, {"quantizer": {"b": 2}})
    rc = main(["quantize", "--config", cfg, "--weights", str(tmp_path / "w.txt"),
               "--dict-out", str(tmp_path / "d.txt"),
               "--indices-out", str(tmp_path / "i.txt")])
    assert rc == 0
    assert "SSE=100" in capsys.readouterr().out
    assert load_tensor(tmp_path / "d.txt").flat().tolist() == [5, 95]


def test_cmd_quantize_rejects_bad_bins(tmp_path, capsys):
    store_tensor(QTensor((2,), WordSpec(16), [1, 2]), tmp_path / "w.txt")
    cfg = write_config(tmp_path, {"quantizer": {"b": 300}})
    rc = main(["quantize", "--config", cfg, "--weights", str(tmp_path / "w.txt"),
               "--dict-out", str(tmp_path / "d.txt"),
               "--indices-out", str(tmp_path / "i.txt")])
    assert rc == 1
    assert "quantizer.b" in capsys.readouterr().err


# --------------------------------------------------------------- simulate


def test_cmd_simulate_cycle_cases(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "conv": {"ih": 33, "iw": 33, "c": 32, "ky": 1, "kx": 1, "m": 1, "bias": [0]},
        "accelerator": {"kind": "pas-array-shared-mac", "n_units": 16,
                        "n_shared_mac": 4, "w": 32, "b": 16},
    })
    rc = main(["simulate", "--config", cfg])
    assert rc == 0
    out = capsys.readouterr().out
    assert "cycles=96" in out  # 32 + 4*16
    assert "verdict=pass" in out


def test_cmd_simulate_ws_and_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    cfg = write_config(tmp_path, {
        "conv": {"ih": 5, "iw": 5, "c": 15, "ky": 3, "kx": 3, "m": 2, "bias": [0, 0]},
        "accelerator": {"kind": "ws-mac-array", "n_units": 4, "w": 16, "b": 8},
    })
    rc = main(["simulate", "--config", cfg, "--trace", str(trace)])
    assert rc == 0
    assert "cycles=135" in capsys.readouterr().out
    lines = trace.read_text().splitlines()
    assert len(lines) == 4 * 135
    assert all(len(line.split(",")) == 6 for line in lines[:10])


def test_cmd_simulate_16_lanes_4_macs_1024_pairs(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "conv": {"ih": 1, "iw": 1, "c": 1024, "ky": 1, "kx": 1, "m": 1, "bias": [0]},
        "accelerator": {"kind": "pas-array-shared-mac", "n_units": 16,
                        "n_shared_mac": 4, "w": 32, "b": 16},
    })
    rc = main(["simulate", "--config", cfg])
    assert rc == 0
    out = capsys.readouterr().out
    assert "cycles=1088" in out  # 1024 + 4*16
    assert "verdict=pass" in out


def test_cmd_simulate_rejects_mac_array(tmp_path, capsys):
    cfg = write_config(tmp_path, {"accelerator": {"kind": "mac-array", "n_units": 4,
                                                  "w": 16, "b": 8}})
    assert main(["simulate", "--config", cfg]) == 1


# ------------------------------------------------------------- cost/sweep


def test_cmd_cost_prints_totals(tmp_path, capsys):
    rc = main(["cost"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "total_gates=127360" in out


def test_cmd_cost_env_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(GATE_CONSTANTS_ENV, "1,1,1,1")
    rc = main(["cost"])
    assert rc == 0
    out = capsys.readouterr().out
    # 16 PAS (32 + 512 + 1024) + 4 WS-MAC (32 + 1024 + 544 + 512)
    assert "total_gates=33536" in out


def test_cmd_sweep_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--out", str(a)]) == 0
    assert main(["sweep", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cmd_sweep_rows_and_ordering(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    assert header == ["W", "B", "kind", "n_units", "n_shared_mac", "total_gates",
                      "mult_gates", "reg_gates", "cycles", "overhead_pct"]
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 4 * 5 * 3  # W x B x kind
    keys = [(int(r[0]), int(r[1]), r[2]) for r in rows]
    assert keys == sorted(keys)
    # paired-row self consistency: overhead = 100*(cycles_pasm - cycles_mac)/cycles_mac
    by_key = {(r[0], r[1], r[2]): r for r in rows}
    for w in ("4", "8", "16", "32"):
        for b in ("4", "8", "16", "64", "256"):
            mac = by_key[(w, b, "mac-array")]
            pas = by_key[(w, b, "pas-array-shared-mac")]
            want = 100 * (int(pas[8]) - int(mac[8])) / int(mac[8])
            assert abs(float(pas[9]) - want) < 5e-5
            assert float(mac[9]) == 0.0


def test_cmd_sweep_single_point(tmp_path):
    cfg = write_config(tmp_path, {
        "sweep": {"widths": [32], "bins": [16], "kinds": ["ws-mac-array"]}})
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("32,16,ws-mac-array,16,0,228864,")


def test_cmd_sweep_crossover_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--out", str(out)]) == 0
    rows = {}
    for line in out.read_text().splitlines()[1:]:
        f = line.split(",")
        rows[(f[0], f[1], f[2])] = int(f[5])
    assert rows[("32", "16", "pas-array-shared-mac")] < rows[("32", "16", "ws-mac-array")]
    assert rows[("32", "256", "pas-array-shared-mac")] > rows[("32", "256", "ws-mac-array")]


# --------------------------------------------------------------- selftest


def test_cmd_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "6/6 fixtures pass" in out


def test_cmd_selftest_fails_on_corrupt_fixture(tmp_path, capsys, monkeypatch):
    import contextlib

    import pasmconv.cli as cli

    corrupt = tmp_path / "worked_image.txt"
    corrupt.write_text("dims 5 1 1\nwidth 16\n267 34 48\n")  # truncated body
    real = cli._fixture_path

    def patched(name):
        if name == "worked_image.txt":
            return contextlib.nullcontext(corrupt)
        return real(name)

    monkeypatch.setattr(cli, "_fixture_path", patched)
    assert main(["selftest"]) == 2
    assert "FAIL worked-example-conv" in capsys.readouterr().out


def test_invalid_config_path_is_validation_error(capsys):
    assert main(["sweep", "--config", "/nonexistent.json"]) == 1
