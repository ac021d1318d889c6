"""Append-only store of (pre image, action, post image) experience triplets.

On disk (little-endian)::

    b"OELT1" | u32 count | u32 W | u32 H | u32 m (0 while unencoded)
    per triplet:
        f32[W*H] pre | u8 k | f32[2k] waypoints | f32[W*H] post
        [f32[m] pre latent | f32[m] post latent]      only when m > 0
    [32-byte encoder fingerprint]                     only when m > 0
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .perception import FormatError, perceive, pipeline_fingerprint
from .sim import PushAction

STORE_MAGIC = b"OELT1"
_HEADER = struct.Struct("<5sIIII")


class PhaseError(RuntimeError):
    """Operation not allowed in the store's current phase."""


@dataclass(frozen=True, eq=False)
class Triplet:
    pre_image: np.ndarray
    action: PushAction
    post_image: np.ndarray
    pre_latent: np.ndarray | None = None
    post_latent: np.ndarray | None = None


class TripletStore:
    def __init__(self, shape: tuple[int, int] | None = None):
        self.shape = tuple(shape) if shape is not None else None
        self.pre_images: list[np.ndarray] = []
        self.post_images: list[np.ndarray] = []
        self.actions: list[PushAction] = []
        self.pre_latents: np.ndarray | None = None
        self.post_latents: np.ndarray | None = None
        self.encoder_fingerprint: bytes | None = None

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i: int) -> Triplet:
        encoded = self.encoded
        return Triplet(
            self.pre_images[i], self.actions[i], self.post_images[i],
            self.pre_latents[i] if encoded else None,
            self.post_latents[i] if encoded else None,
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def encoded(self) -> bool:
        return self.encoder_fingerprint is not None

    @property
    def m(self) -> int:
        return 0 if self.pre_latents is None else self.pre_latents.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TripletStore):
            return NotImplemented
        return to_bytes(self) == to_bytes(other)

    __hash__ = None


def record(store: TripletStore, pre_image, action: PushAction, post_image) -> int:
    """Append one experience and return its index."""
    if store.encoded:
        raise PhaseError("store is encoded; triplets can only be recorded before encode_all")
    pre = np.asarray(pre_image, dtype=np.float32)
    post = np.asarray(post_image, dtype=np.float32)
    if pre.shape != post.shape or pre.ndim != 2:
        raise ValueError("pre and post images must be 2-D with equal shape")
    if store.shape is None:
        store.shape = pre.shape
    elif pre.shape != store.shape:
        raise ValueError(f"image shape {pre.shape} differs from store shape {store.shape}")
    store.pre_images.append(pre)
    store.post_images.append(post)
    store.actions.append(action)
    return len(store.actions) - 1


def encode_all(store: TripletStore, encoder, background=None,
               smoothing: float = 0.0) -> TripletStore:
    """Cache the latent of every pre and post image (foreground-filtered)."""
    fp = pipeline_fingerprint(encoder, background, smoothing)
    if store.encoder_fingerprint == fp:
        return store
    m = encoder.m
    pre = np.empty((len(store), m), dtype=np.float32)
    post = np.empty((len(store), m), dtype=np.float32)
    for i in range(len(store)):
        pre[i] = perceive(store.pre_images[i], encoder, background, smoothing)
        post[i] = perceive(store.post_images[i], encoder, background, smoothing)
    store.pre_latents, store.post_latents = pre, post
    store.encoder_fingerprint = fp
    return store


def to_bytes(store: TripletStore) -> bytes:
    h, w = store.shape if store.shape is not None else (0, 0)
    m = store.m if store.encoded else 0
    parts = [_HEADER.pack(STORE_MAGIC, len(store), w, h, m)]
    for i in range(len(store)):
        wp = store.actions[i].waypoints
        parts.append(store.pre_images[i].astype("<f4").tobytes())
        parts.append(struct.pack("<B", len(wp)))
        parts.append(np.asarray(wp, dtype="<f4").tobytes())
        parts.append(store.post_images[i].astype("<f4").tobytes())
        if m:
            parts.append(store.pre_latents[i].astype("<f4").tobytes())
            parts.append(store.post_latents[i].astype("<f4").tobytes())
    if m:
        parts.append(store.encoder_fingerprint)
    return b"".join(parts)


def save(store: TripletStore, path) -> None:
    Path(path).write_bytes(to_bytes(store))


def from_bytes(data: bytes, source: str = "<bytes>") -> TripletStore:
    if data[:5] != STORE_MAGIC:
        raise FormatError(f"{source}: bad magic, not a triplet store file")
    if len(data) < _HEADER.size:
        raise FormatError(f"{source}: truncated header")
    _, count, w, h, m = _HEADER.unpack_from(data, 0)
    npix = w * h
    store = TripletStore((h, w) if npix else None)
    off = _HEADER.size
    pre_l, post_l = [], []

    def take(nbytes: int) -> int:
        nonlocal off
        if off + nbytes > len(data):
            raise FormatError(f"{source}: truncated at triplet {len(store.actions)}")
        start = off
        off += nbytes
        return start

    for _ in range(count):
        pre = np.frombuffer(data, "<f4", npix, take(4 * npix)).reshape(h, w).astype(np.float32)
        (k,) = struct.unpack_from("<B", data, take(1))
        wp = np.frombuffer(data, "<f4", 2 * k, take(8 * k)).reshape(k, 2)
        post = np.frombuffer(data, "<f4", npix, take(4 * npix)).reshape(h, w).astype(np.float32)
        store.pre_images.append(pre)
        store.post_images.append(post)
        store.actions.append(PushAction(tuple((float(x), float(y)) for x, y in wp)))
        if m:
            pre_l.append(np.frombuffer(data, "<f4", m, take(4 * m)))
            post_l.append(np.frombuffer(data, "<f4", m, take(4 * m)))
    if m:
        store.pre_latents = np.array(pre_l, dtype=np.float32).reshape(count, m)
        store.post_latents = np.array(post_l, dtype=np.float32).reshape(count, m)
        store.encoder_fingerprint = bytes(data[take(32):off])
    if off != len(data):
        raise FormatError(f"{source}: {len(data) - off} trailing bytes")
    return store


def load(path) -> TripletStore:
    return from_bytes(Path(path).read_bytes(), str(path))
