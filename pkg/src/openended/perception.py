"""Background filtering and linear latent encoding of camera images."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy.ndimage import gaussian_filter

from .sim import ConfigurationError

ENCODER_MAGIC = b"OELE1"
BACKGROUND_MAGIC = b"OELB1"


class NotReadyError(RuntimeError):
    """Background model has not seen enough frames to separate foreground."""


class FormatError(ValueError):
    """Artifact file has a bad magic string or is truncated."""


@dataclass
class BackgroundModel:
    """Running single-Gaussian-per-pixel background estimate."""

    shape: tuple[int, int]
    learning_rate: float = 0.05
    threshold_k: float = 4.0
    variance_floor: float = 1e-6
    burn_in: int = 50
    mean: np.ndarray | None = None
    variance: np.ndarray | None = None
    frames_seen: int = 0

    def __post_init__(self):
        if not 0.0 < self.learning_rate < 1.0:
            raise ConfigurationError("learning_rate must lie in (0, 1)")
        if self.threshold_k <= 0 or self.variance_floor <= 0:
            raise ConfigurationError("threshold_k and variance_floor must be positive")
        self.shape = tuple(int(s) for s in self.shape)

    @property
    def ready(self) -> bool:
        return self.frames_seen >= self.burn_in


def update_background(model: BackgroundModel, image: np.ndarray) -> BackgroundModel:
    """Blend ``image`` into the running mean and variance (in place).

    The first frame initialises the mean exactly, with the variance at its
    floor.
    """
    x = np.asarray(image, dtype=np.float64)
    if x.shape != model.shape:
        raise ValueError(f"image shape {x.shape} does not match model {model.shape}")
    a = model.learning_rate
    if model.frames_seen == 0 or model.mean is None:
        model.mean = x.copy()
        model.variance = np.full(model.shape, model.variance_floor)
    else:
        delta = x - model.mean
        model.mean = (1.0 - a) * model.mean + a * x
        model.variance = np.maximum((1.0 - a) * model.variance + a * delta * delta,
                                    model.variance_floor)
    model.frames_seen += 1
    return model


def foreground_mask(model: BackgroundModel, image: np.ndarray) -> np.ndarray:
    if not model.ready:
        raise NotReadyError(
            f"background model has seen {model.frames_seen} frames, needs {model.burn_in}"
        )
    x = np.asarray(image, dtype=np.float64)
    if x.shape != model.shape:
        raise ValueError(f"image shape {x.shape} does not match model {model.shape}")
    d = x - model.mean
    return d * d > model.threshold_k ** 2 * model.variance


def foreground(model: BackgroundModel, image: np.ndarray) -> np.ndarray:
    """Input pixels that deviate from the background by more than k sigma, else 0."""
    mask = foreground_mask(model, image)
    return np.where(mask, image, 0).astype(np.float32)


def save_background(model: BackgroundModel, path) -> None:
    h, w = model.shape
    mean = model.mean if model.mean is not None else np.zeros(model.shape)
    var = model.variance if model.variance is not None else np.zeros(model.shape)
    with open(path, "wb") as f:
        f.write(BACKGROUND_MAGIC)
        f.write(struct.pack("<IIIdddd", w, h, model.frames_seen, model.learning_rate,
                            model.threshold_k, model.variance_floor, float(model.burn_in)))
        f.write(np.ascontiguousarray(mean, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(var, dtype="<f8").tobytes())


def load_background(path) -> BackgroundModel:
    data = Path(path).read_bytes()
    if data[:5] != BACKGROUND_MAGIC:
        raise FormatError(f"{path}: bad magic, not a background model file")
    head = struct.calcsize("<IIIdddd")
    if len(data) < 5 + head:
        raise FormatError(f"{path}: truncated header")
    w, h, frames, lr, k, floor, burn = struct.unpack_from("<IIIdddd", data, 5)
    n = w * h
    if len(data) != 5 + head + 16 * n:
        raise FormatError(f"{path}: truncated or oversized body")
    body = np.frombuffer(data, dtype="<f8", offset=5 + head)
    model = BackgroundModel((h, w), lr, k, floor, int(burn))
    model.frames_seen = frames
    if frames:
        model.mean = body[:n].reshape(h, w).astype(np.float64)
        model.variance = body[n:].reshape(h, w).astype(np.float64)
    return model


# Encoders


class ImageEncoder(Protocol):
    """Anything that maps an image to an m-vector can drive the planner."""

    m: int

    def encode(self, image: np.ndarray) -> np.ndarray: ...

    def fingerprint(self) -> str: ...


@dataclass(frozen=True, eq=False)
class Encoder:
    """Linear principal-component encoder.

    ``components`` has shape (m, W*H) with orthonormal rows; images are
    flattened in row-major order.
    """

    width: int
    height: int
    mean_image: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray = field(default=None, compare=False)

    @property
    def m(self) -> int:
        return self.components.shape[0]

    def encode(self, image: np.ndarray) -> np.ndarray:
        return encode(self, image)

    def decode(self, latent: np.ndarray) -> np.ndarray:
        flat = self.mean_image + np.asarray(latent, dtype=np.float64) @ self.components
        return flat.reshape(self.height, self.width)

    def to_bytes(self) -> bytes:
        head = ENCODER_MAGIC + struct.pack("<III", self.width, self.height, self.m)
        return (head + np.asarray(self.mean_image, dtype="<f4").tobytes()
                + np.asarray(self.components, dtype="<f4").tobytes())

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def _power_iteration(matvec, dim: int, rng: np.random.Generator, tol: float,
                     max_iter: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = matvec(v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v
        w /= norm
        if w @ v < 0:
            w = -w
        if np.linalg.norm(w - v) < tol:
            return w
        v = w
    return v


def fit_encoder(images, m: int = 7, tol: float = 1e-8, max_iter: int = 1000,
                seed: int = 0) -> Encoder:
    """Fit the top-``m`` principal directions by power iteration with deflation.

    Iteration runs on the smaller of the pixel covariance and the sample Gram
    matrix; components are reported in nonincreasing order of explained
    variance.
    """
    images = list(images)
    if m < 1:
        raise ConfigurationError("latent count m must be >= 1")
    if len(images) < m:
        raise ConfigurationError(f"need at least m={m} images to fit, got {len(images)}")
    height, width = np.asarray(images[0]).shape
    X = np.stack([np.asarray(im, dtype=np.float64).reshape(-1) for im in images])
    mean = X.mean(axis=0)
    Xc = X - mean
    n, d = Xc.shape
    if m > d:
        raise ConfigurationError(f"m={m} exceeds the pixel count {d}")
    rng = np.random.default_rng(seed)

    use_gram = n < d
    M = Xc @ Xc.T if use_gram else Xc.T @ Xc
    M /= n
    dim = M.shape[0]

    vecs: list[np.ndarray] = []
    for _ in range(m):
        basis = np.array(vecs) if vecs else None

        def matvec(v, basis=basis):
            if basis is not None:
                v = v - basis.T @ (basis @ v)
            w = M @ v
            if basis is not None:
                w = w - basis.T @ (basis @ w)
            return w

        v = _power_iteration(matvec, dim, rng, tol, max_iter)
        if basis is not None:
            v = v - basis.T @ (basis @ v)
            v /= np.linalg.norm(v)
        vecs.append(v)

    V = np.array(vecs)
    if use_gram:
        comps = V @ Xc
        comps = _orthonormal_rows(comps, rng)
    else:
        comps = V
    variance = np.sum((Xc @ comps.T) ** 2, axis=0) / n
    order = np.argsort(-variance, kind="stable")
    comps = _orthonormal_rows(comps[order], rng)
    # Round to the on-disk precision so a reloaded encoder is identical.
    return Encoder(width, height, _f32(mean), _f32(comps), variance[order])


def _f32(a: np.ndarray) -> np.ndarray:
    return a.astype(np.float32).astype(np.float64)


def _orthonormal_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Gram-Schmidt on rows, replacing degenerate rows with random directions."""
    out: list[np.ndarray] = []
    for r in rows:
        v = r.astype(np.float64).copy()
        for _ in range(2):
            for q in out:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        while norm < 1e-10:
            v = rng.standard_normal(rows.shape[1])
            for _ in range(2):
                for q in out:
                    v -= (q @ v) * q
            norm = np.linalg.norm(v)
        out.append(v / norm)
    return np.array(out)


def encode(encoder: Encoder, image: np.ndarray) -> np.ndarray:
    x = np.asarray(image, dtype=np.float64).reshape(-1)
    if x.size != encoder.mean_image.size:
        raise ValueError(f"image has {x.size} pixels, encoder expects {encoder.mean_image.size}")
    return encoder.components @ (x - encoder.mean_image)


def save_encoder(encoder: Encoder, path) -> None:
    Path(path).write_bytes(encoder.to_bytes())


def load_encoder(path) -> Encoder:
    data = Path(path).read_bytes()
    if data[:5] != ENCODER_MAGIC:
        raise FormatError(f"{path}: bad magic, not an encoder file")
    if len(data) < 17:
        raise FormatError(f"{path}: truncated header")
    w, h, m = struct.unpack_from("<III", data, 5)
    n = w * h
    if len(data) != 17 + 4 * n * (m + 1):
        raise FormatError(f"{path}: truncated or oversized body")
    body = np.frombuffer(data, dtype="<f4", offset=17).astype(np.float64)
    return Encoder(w, h, body[:n].copy(), body[n:].reshape(m, n).copy())


def smooth(image: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur with zero padding; identity for ``sigma == 0``."""
    if sigma <= 0:
        return np.asarray(image, dtype=np.float32)
    blurred = gaussian_filter(np.asarray(image, dtype=np.float64), sigma, mode="constant")
    return blurred.astype(np.float32)


def filtered(image: np.ndarray, background: BackgroundModel | None,
             smoothing: float = 0.0) -> np.ndarray:
    """Smoothed foreground of ``image``.

    While the background is not ready the raw image stands in for the
    foreground.
    """
    if background is None or not background.ready:
        fg = np.asarray(image, dtype=np.float32)
    else:
        fg = foreground(background, image)
    return smooth(fg, smoothing)


def perceive(image: np.ndarray, encoder, background: BackgroundModel | None,
             smoothing: float = 0.0) -> np.ndarray:
    """The latent used everywhere downstream, rounded to storage precision."""
    return np.asarray(encoder.encode(filtered(image, background, smoothing)), dtype=np.float32)


def pipeline_fingerprint(encoder, background: BackgroundModel | None,
                         smoothing: float = 0.0) -> bytes:
    h = hashlib.sha256(encoder.fingerprint().encode())
    h.update(struct.pack("<d", smoothing))
    if background is not None and background.mean is not None:
        h.update(np.ascontiguousarray(background.mean).tobytes())
        h.update(np.ascontiguousarray(background.variance).tobytes())
        h.update(struct.pack("<Iddd", background.frames_seen, background.threshold_k,
                             background.variance_floor, float(background.burn_in)))
    return h.digest()
