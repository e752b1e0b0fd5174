"""Checkpoint format: byte-exact round trips and corruption detection."""

import numpy as np
import pytest

from layoutkie.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    IntegrityError,
    load_checkpoint,
    save_checkpoint,
)


def sample_state(rng):
    return {
        "emb.tok": rng.standard_normal((7, 4)).astype(np.float32),
        "layer0.ffn.w1": rng.standard_normal((4, 8)).astype(np.float32),
        "bias.x": rng.standard_normal((5, 1)).astype(np.float64),
        "counter": np.array([3], dtype=np.int64),
    }


def test_roundtrip_values_and_metadata(tmp_path, rng):
    state = sample_state(rng)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, state, {"task": "demo", "seed": 3}, rng_state=[1, 2, 3])
    loaded, config, rng_state = load_checkpoint(path)
    assert config == {"task": "demo", "seed": 3}
    assert rng_state == [1, 2, 3]
    assert set(loaded) == set(state)
    for k in state:
        assert loaded[k].dtype == state[k].dtype
        np.testing.assert_array_equal(loaded[k], state[k])


def test_save_load_save_is_byte_identical(tmp_path, rng):
    state = sample_state(rng)
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, state, {"n": 1})
    loaded, config, rng_state = load_checkpoint(p1)
    save_checkpoint(p2, loaded, config, rng_state)
    assert p1.read_bytes() == p2.read_bytes()


def test_name_insertion_order_does_not_change_bytes(tmp_path, rng):
    state = sample_state(rng)
    reordered = dict(reversed(list(state.items())))
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, state, {})
    save_checkpoint(p2, reordered, {})
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic(tmp_path, rng):
    p = tmp_path / "x.ckpt"
    save_checkpoint(p, sample_state(rng), {})
    blob = bytearray(p.read_bytes())
    blob[0] ^= 0xFF
    p.write_bytes(bytes(blob))
    with pytest.raises(IntegrityError, match="magic"):
        load_checkpoint(p)


def test_single_payload_byte_flip_is_detected(tmp_path, rng):
    p = tmp_path / "x.ckpt"
    save_checkpoint(p, sample_state(rng), {})
    blob = bytearray(p.read_bytes())
    blob[-1] ^= 0x01  # last payload byte
    p.write_bytes(bytes(blob))
    with pytest.raises(IntegrityError, match="checksum mismatch"):
        load_checkpoint(p)


def test_truncation_is_detected_with_offset(tmp_path, rng):
    p = tmp_path / "x.ckpt"
    save_checkpoint(p, sample_state(rng), {})
    blob = p.read_bytes()
    p.write_bytes(blob[: len(blob) - 5])
    with pytest.raises(IntegrityError, match="truncated"):
        load_checkpoint(p)
    p.write_bytes(blob[: len(MAGIC) + 8 + 3])
    with pytest.raises(IntegrityError, match="truncated header"):
        load_checkpoint(p)


def test_corrupt_header_json(tmp_path, rng):
    p = tmp_path / "x.ckpt"
    save_checkpoint(p, sample_state(rng), {})
    blob = bytearray(p.read_bytes())
    blob[len(MAGIC) + 8] = ord("!")
    p.write_bytes(bytes(blob))
    with pytest.raises(IntegrityError, match="header"):
        load_checkpoint(p)


def test_newer_format_version_is_refused(tmp_path, rng):
    import json
    import struct

    p = tmp_path / "x.ckpt"
    save_checkpoint(p, {}, {})
    blob = p.read_bytes()
    hlen = struct.unpack_from("<Q", blob, len(MAGIC))[0]
    header = json.loads(blob[len(MAGIC) + 8 : len(MAGIC) + 8 + hlen])
    header["version"] = FORMAT_VERSION + 1
    raw = json.dumps(header).encode()
    p.write_bytes(MAGIC + struct.pack("<Q", len(raw)) + raw)
    with pytest.raises(IntegrityError, match="newer"):
        load_checkpoint(p)


def test_empty_state_roundtrip(tmp_path):
    p = tmp_path / "x.ckpt"
    save_checkpoint(p, {}, {"empty": True})
    state, config, _ = load_checkpoint(p)
    assert state == {} and config == {"empty": True}
