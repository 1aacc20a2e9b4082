import pytest

from pasmconv import (
    AcceleratorSpec,
    GateConstants,
    gates_accelerator,
    gates_pas,
    gates_simple_mac,
    gates_ws_mac,
    latency_mac,
    latency_pasm,
    latency_report,
    macops_per_output,
)

K = GateConstants()

# all twelve (C, KxK) cells of the per-output MAC-op table
MACOPS_CELLS = {
    (32, 1): 32, (128, 1): 128, (512, 1): 512,
    (32, 3): 288, (128, 3): 1152, (512, 3): 4608,
    (32, 5): 800, (128, 5): 3200, (512, 5): 12800,
    (32, 7): 1568, (128, 7): 6272, (512, 7): 25088,
}


def test_gates_simple_mac():
    assert gates_simple_mac(8, K).total == 760  # 72 + 640 + 48
    assert gates_simple_mac(32, K).total == 10720  # 288 + 10240 + 192
    # doubling W multiplies the multiplier term by exactly 4
    assert gates_simple_mac(16, K).multiplier_gates * 4 == gates_simple_mac(32, K).multiplier_gates


def test_gates_ws_mac():
    g = gates_ws_mac(32, 16, K)
    assert (g.adder_gates, g.multiplier_gates, g.register_gates, g.port_gates) == (
        288, 10240, 192 + 3072, 512)
    assert g.total == 14304
    assert gates_ws_mac(32, 256, K).total == 68064
    # B term scales linearly
    delta = gates_ws_mac(32, 32, K).total - gates_ws_mac(32, 16, K).total
    assert delta == 16 * (K.k_reg + K.k_port) * 32


def test_gates_pas():
    g = gates_pas(32, 16, K)
    assert (g.adder_gates, g.multiplier_gates, g.register_gates, g.port_gates) == (
        288, 0, 3072, 1024)
    assert g.total == 4384
    assert gates_pas(32, 256, K).total == 65824
    for w in (4, 8, 16, 32):
        for b in (4, 16, 256):
            assert gates_pas(w, b, K).multiplier_gates == 0


def test_unit_gates_total_is_sum():
    for g in (gates_simple_mac(8, K), gates_ws_mac(16, 4, K), gates_pas(32, 64, K)):
        assert g.total == g.adder_gates + g.multiplier_gates + g.register_gates + g.port_gates


def test_gates_validation():
    with pytest.raises(ValueError):
        gates_simple_mac(1, K)
    with pytest.raises(ValueError):
        gates_ws_mac(8, 1, K)
    with pytest.raises(ValueError):
        GateConstants(k_add=0)


def test_gates_accelerator_configurations():
    ws16 = AcceleratorSpec("ws-mac-array", 16, 32, 16)
    assert gates_accelerator(ws16, K).total == 16 * 14304 == 228864
    pas16_4 = AcceleratorSpec("pas-array-shared-mac", 16, 32, 16, n_shared_mac=4)
    assert gates_accelerator(pas16_4, K).total == 16 * 4384 + 4 * 14304 == 127360
    mac16 = AcceleratorSpec("mac-array", 16, 32, 16)
    assert gates_accelerator(mac16, K).total == 16 * 10720


def test_pas_array_loses_at_256_bins():
    ws = gates_accelerator(AcceleratorSpec("ws-mac-array", 16, 32, 256), K).total
    pas = gates_accelerator(
        AcceleratorSpec("pas-array-shared-mac", 16, 32, 256, n_shared_mac=4), K).total
    assert (pas, ws) == (1325440, 1089024)
    assert pas > ws


def test_pas_cheaper_than_ws_when_multiplier_dominates():
    # holds whenever k_mul*W^2 > B*k_port*W
    for b in (2, 4, 8, 16):
        assert K.k_mul * 32 * 32 > b * K.k_port * 32
        assert gates_pas(32, b, K).total < gates_ws_mac(32, b, K).total


def test_accelerator_spec_validation():
    with pytest.raises(ValueError):
        AcceleratorSpec("systolic", 16, 32, 16)
    with pytest.raises(ValueError):
        AcceleratorSpec("pas-array-shared-mac", 16, 32, 16)  # missing shared macs
    with pytest.raises(ValueError):
        AcceleratorSpec("pas-array-shared-mac", 4, 32, 16, n_shared_mac=8)
    with pytest.raises(ValueError):
        AcceleratorSpec("pas-array-shared-mac", 16, 32, 16, n_shared_mac=5).lanes_per_mac


def test_macops_table():
    for (c, k), want in MACOPS_CELLS.items():
        assert macops_per_output(c, k, k) == want
    with pytest.raises(ValueError):
        macops_per_output(0, 3, 3)


def test_latency_mac():
    assert latency_mac(1024) == 1024
    assert latency_mac(1) == 1
    assert latency_mac(800) == 800
    assert latency_mac(800, fill=3) == 803


def test_latency_pasm():
    assert latency_pasm(1024, 16, 1) == 1040
    assert latency_pasm(1024, 16, 4) == 1088
    assert latency_pasm(135, 16, 1) == 151


def test_latency_difference_is_exactly_pb():
    for n in (1, 7, 135, 1024):
        for b in (2, 4, 16):
            for p in (1, 2, 4):
                assert latency_pasm(n, b, p) - latency_mac(n) == p * b


def test_overhead_report():
    r = latency_report(135, 16, 1)
    assert r.total_cycles == 151
    assert abs(r.overhead_pct - 11.8519) < 5e-5
    assert latency_report(135).overhead_pct == 0.0


def test_overhead_monotonicity():
    # strictly increasing in B and P, strictly decreasing in N
    base = latency_report(135, 16, 1).overhead_ratio
    assert latency_report(135, 32, 1).overhead_ratio > base
    assert latency_report(135, 16, 2).overhead_ratio > base
    assert latency_report(270, 16, 1).overhead_ratio < base
