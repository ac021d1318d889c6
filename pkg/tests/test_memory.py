import numpy as np
import pytest

from openended import memory, perception as P
from openended.explorer import propose_action
from openended.sim import PushAction


def make_store(rng, geometry, n, shape=(6, 8)):
    store = memory.TripletStore(shape)
    for _ in range(n):
        memory.record(store, rng.random(shape), propose_action(rng, "round2", geometry),
                      rng.random(shape))
    return store


def fitted(store, m=3):
    enc = P.fit_encoder(store.pre_images + store.post_images, m=m)
    return enc


def test_record_indices_dense(rng, geometry):
    store = memory.TripletStore()
    img = np.zeros((4, 4))
    assert memory.record(store, img, PushAction(((0, 0), (0.1, 0.1))), img) == 0
    assert memory.record(store, img, PushAction(((0, 0), (0.1, 0.1))), img) == 1
    assert len(store) == 2


def test_record_after_encoding_is_phase_error(rng, geometry):
    store = make_store(rng, geometry, 4)
    memory.encode_all(store, fitted(store))
    with pytest.raises(memory.PhaseError):
        memory.record(store, np.zeros((6, 8)), PushAction(((0, 0), (0.1, 0.1))), np.zeros((6, 8)))


def test_record_rejects_shape_mismatch():
    store = memory.TripletStore((4, 4))
    with pytest.raises(ValueError):
        memory.record(store, np.zeros((4, 5)), PushAction(((0, 0), (0.1, 0.1))), np.zeros((4, 5)))


def test_encode_all_shapes_and_idempotence(rng, geometry):
    store = make_store(rng, geometry, 3)
    enc = fitted(store, m=3)
    memory.encode_all(store, enc)
    assert store.pre_latents.shape == (3, 3) and store.post_latents.shape == (3, 3)
    first = store.pre_latents
    fp = store.encoder_fingerprint
    memory.encode_all(store, enc)
    assert store.pre_latents is first
    assert store.encoder_fingerprint == fp


def test_encode_all_matches_manual_encoding(rng, geometry):
    store = make_store(rng, geometry, 30)
    bg = P.BackgroundModel((6, 8), burn_in=5)
    for im in store.pre_images[:10]:
        P.update_background(bg, im)
    enc = fitted(store, m=4)
    memory.encode_all(store, enc, bg, smoothing=1.5)
    for t in store:
        fg = np.where(P.foreground_mask(bg, t.pre_image), t.pre_image, 0)
        manual = P.encode(enc, P.smooth(fg, 1.5)).astype(np.float32)
        assert np.array_equal(t.pre_latent, manual)


def test_latents_all_or_nothing(rng, geometry):
    store = make_store(rng, geometry, 5)
    assert store.pre_latents is None and store.encoder_fingerprint is None
    assert all(t.pre_latent is None for t in store)
    memory.encode_all(store, fitted(store))
    assert store.encoder_fingerprint is not None
    assert all(t.pre_latent is not None and t.post_latent is not None for t in store)


def test_empty_store_roundtrip(tmp_path):
    memory.save(memory.TripletStore(), tmp_path / "s.oelt")
    back = memory.load(tmp_path / "s.oelt")
    assert len(back) == 0
    assert back == memory.TripletStore()


@pytest.mark.parametrize("encode", [False, True])
def test_hundred_triplet_roundtrip(tmp_path, rng, geometry, encode):
    store = make_store(rng, geometry, 100)
    if encode:
        memory.encode_all(store, fitted(store, m=7))
    memory.save(store, tmp_path / "s.oelt")
    back = memory.load(tmp_path / "s.oelt")
    assert back == store
    for a, b in zip(store, back):
        assert np.array_equal(a.pre_image, b.pre_image)
        assert np.array_equal(a.post_image, b.post_image)
        assert a.action == b.action
        if encode:
            assert np.array_equal(a.pre_latent, b.pre_latent)
    assert back.encoder_fingerprint == store.encoder_fingerprint


def test_file_header_layout(tmp_path, rng, geometry):
    store = make_store(rng, geometry, 2, shape=(3, 5))
    memory.save(store, tmp_path / "s.oelt")
    raw = (tmp_path / "s.oelt").read_bytes()
    assert raw[:5] == b"OELT1"
    assert np.frombuffer(raw[5:21], "<u4").tolist() == [2, 5, 3, 0]
    k = raw[21 + 4 * 15]
    assert k == len(store.actions[0].waypoints)


def test_corrupted_magic(tmp_path, rng, geometry):
    memory.save(make_store(rng, geometry, 2), tmp_path / "s.oelt")
    raw = bytearray((tmp_path / "s.oelt").read_bytes())
    raw[0:5] = b"OELX9"
    (tmp_path / "s.oelt").write_bytes(bytes(raw))
    with pytest.raises(P.FormatError, match="magic"):
        memory.load(tmp_path / "s.oelt")


def test_truncated_file(tmp_path, rng, geometry):
    memory.save(make_store(rng, geometry, 3), tmp_path / "s.oelt")
    raw = (tmp_path / "s.oelt").read_bytes()
    (tmp_path / "s.oelt").write_bytes(raw[:-7])
    with pytest.raises(P.FormatError, match="truncated"):
        memory.load(tmp_path / "s.oelt")


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        memory.load(tmp_path / "nope.oelt")
