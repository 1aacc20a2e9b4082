import numpy as np
import pytest

from pasmconv import QTensor, WordSpec, load_tensor, store_tensor


@pytest.mark.parametrize("fmt", ["text-v1", "bin-v1"])
def test_roundtrip_randomized(tmp_path, fmt):
    rng = np.random.default_rng(0)
    for trial in range(20):
        rank = int(rng.integers(1, 5))
        shape = tuple(int(d) for d in rng.integers(1, 5, size=rank))
        width = int(rng.choice([2, 8, 16, 33, 64]))
        word = WordSpec(width)
        data = rng.integers(word.min_value, word.max_value, size=shape,
                            endpoint=True, dtype=np.int64)
        t = QTensor(shape, word, data)
        path = tmp_path / f"t{trial}"
        store_tensor(t, path, fmt)
        assert load_tensor(path, fmt) == t


def test_text_format_layout(tmp_path):
    t = QTensor((2, 3), WordSpec(8), [1, -2, 3, 4, 5, -6])
    path = tmp_path / "t.txt"
    store_tensor(t, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "dims 2 3"
    assert lines[1] == "width 8"
    assert lines[2:] == ["1 -2 3", "4 5 -6"]


def test_text_accepts_any_whitespace_split(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("dims 2 2\nwidth 8\n1 2\n3\n4\n")
    assert load_tensor(path).flat().tolist() == [1, 2, 3, 4]


def test_text_rejects_out_of_range(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("dims 1 1\nwidth 8\n300\n")
    with pytest.raises(ValueError, match="range"):
        load_tensor(path)


def test_text_rejects_malformed(tmp_path):
    cases = {
        "empty-dims": "dims\nwidth 8\n",
        "no-dims-keyword": "shape 2\nwidth 8\n1 2\n",
        "bad-width-line": "dims 2\nbits 8\n1 2\n",
        "non-integer": "dims 2\nwidth 8\n1 x\n",
        "truncated": "dims 2 2\nwidth 8\n1 2 3\n",
        "extra": "dims 1\nwidth 8\n1 2\n",
        "too-short": "dims 2\n",
        "zero-dim": "dims 0\nwidth 8\n",
    }
    for name, content in cases.items():
        path = tmp_path / name
        path.write_text(content)
        with pytest.raises(ValueError):
            load_tensor(path)


def test_bin_header_layout(tmp_path):
    t = QTensor((2, 1), WordSpec(16), [-5, 7])
    path = tmp_path / "t.bin"
    store_tensor(t, path, "bin-v1")
    raw = path.read_bytes()
    assert raw[:4] == b"QT01"
    # rank=2, dims 2,1, width 16, then two little-endian i64
    assert raw[4:20] == (2).to_bytes(4, "little") + (2).to_bytes(4, "little") + \
        (1).to_bytes(4, "little") + (16).to_bytes(4, "little")
    assert len(raw) == 20 + 16


def test_bin_rejects_corruption(tmp_path):
    t = QTensor((2, 2), WordSpec(8), [1, 2, 3, 4])
    path = tmp_path / "t.bin"
    store_tensor(t, path, "bin-v1")
    raw = path.read_bytes()

    bad_magic = tmp_path / "m.bin"
    bad_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        load_tensor(bad_magic, "bin-v1")

    truncated = tmp_path / "tr.bin"
    truncated.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="bytes"):
        load_tensor(truncated, "bin-v1")

    short_header = tmp_path / "sh.bin"
    short_header.write_bytes(raw[:10])
    with pytest.raises(ValueError):
        load_tensor(short_header, "bin-v1")


def test_unknown_format_rejected(tmp_path):
    t = QTensor((1,), WordSpec(8), [1])
    with pytest.raises(ValueError, match="format"):
        store_tensor(t, tmp_path / "x", "text-v2")
    with pytest.raises(ValueError, match="format"):
        load_tensor(tmp_path / "x", "csv")
