"""Multi-channel vector quantization of key frames.

A frame is cut into P x P patches; each colour plane of each patch becomes
one ``d``-dimensional feature row (raw samples or zig-zag DCT coefficients),
and every row is replaced by the index of its nearest codeword. Index
sequences are channel-major: entry ``j*U + u`` is grid cell ``u`` (row-major)
of colour channel ``j``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    BadConfig,
    DimensionMismatch,
    IndexOutOfRange,
    NotPowerOfTwo,
    TooFewSamples,
)
from .validation import check_frame, check_patch_divides, check_sequence, to_uint8

TRANSFORMS = ("identity_patch", "dct_patch")
N_CHANNELS = 3

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def bits_per_index(L: int) -> int:
    if L < 2 or L & (L - 1):
        raise NotPowerOfTwo(f"codebook size {L} is not a power of two >= 2")
    return L.bit_length() - 1


@dataclass(frozen=True)
class VqConfig:
    patch_size: int = 4
    dim: int = 16
    transform: str = "identity_patch"
    codebook_size: int = 256
    channels: int = N_CHANNELS

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise BadConfig(f"unknown transform {self.transform!r}")
        if self.channels != N_CHANNELS:
            raise BadConfig("exactly one feature channel per colour plane is supported")
        if self.patch_size <= 0 or self.dim <= 0:
            raise BadConfig("patch size and feature dimension must be positive")
        if self.transform == "identity_patch" and self.dim != self.patch_size**2:
            raise BadConfig("identity_patch requires dim == patch_size**2")
        bits_per_index(self.codebook_size)

    @property
    def bits(self) -> int:
        return bits_per_index(self.codebook_size)

    def grid(self, height, width):
        check_patch_divides(height, width, self.patch_size)
        return height // self.patch_size, width // self.patch_size

    def sequence_length(self, height, width) -> int:
        h, w = self.grid(height, width)
        return h * w * self.channels


def _serialize_entries(entries: np.ndarray) -> str:
    return "".join(" ".join(repr(float(x)) for x in row) + "\n" for row in entries)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Shared embedding table; ``id`` is FNV-1a 64 of the serialized rows."""

    entries: np.ndarray
    id: int = field(init=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64)
        if entries.ndim != 2:
            raise BadConfig("codebook entries must be a 2-D array")
        bits_per_index(entries.shape[0])
        if not np.all(np.isfinite(entries)):
            raise BadConfig("codebook entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "id", fnv1a_64(_serialize_entries(entries).encode()))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.size} {self.dim} {self.id}\n")
            fh.write(_serialize_entries(self.entries))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline().split()
            rows = [[float(x) for x in line.split()] for line in fh if line.strip()]
        L, d, ident = int(header[0]), int(header[1]), int(header[2])
        entries = np.array(rows, dtype=np.float64).reshape(-1, d) if rows else np.zeros((0, d))
        if entries.shape != (L, d):
            raise BadConfig(f"{path}: header says {L}x{d}, body is {entries.shape}")
        book = cls(entries)
        if book.id != ident:
            raise BadConfig(f"{path}: stored id {ident} does not match content id {book.id}")
        return book


def _zigzag(p):
    cells = [(i, j) for i in range(p) for j in range(p)]
    cells.sort(key=lambda c: (c[0] + c[1], c[0] if (c[0] + c[1]) % 2 else -c[0]))
    return np.array([i * p + j for i, j in cells])


def _patches(plane, p):
    """(H, W) -> (h, w, p*p) row-major patches."""
    h, w = plane.shape[0] // p, plane.shape[1] // p
    return plane.reshape(h, p, w, p).transpose(0, 2, 1, 3).reshape(h, w, p * p)


def _unpatches(patches, p):
    h, w = patches.shape[:2]
    return patches.reshape(h, w, p, p).transpose(0, 2, 1, 3).reshape(h * p, w * p)


def extract_features(frame, cfg: VqConfig) -> np.ndarray:
    """Frame -> feature tensor of shape ``(h, w, d, c)``."""
    frame = check_frame(frame)
    p = cfg.patch_size
    h, w = cfg.grid(frame.shape[1], frame.shape[2])
    z = np.empty((h, w, cfg.dim, cfg.channels), dtype=np.float64)
    for j in range(cfg.channels):
        patches = (_patches(frame[j].astype(np.float64), p) - 127.5) / 127.5
        if cfg.transform == "identity_patch":
            z[..., j] = patches
        else:
            # unnormalised DCT-II (cosine sums) scaled by 1/P; scipy's type-2 carries 2 per axis
            coef = dctn(patches.reshape(h, w, p, p), type=2, axes=(2, 3)) / (4.0 * p)
            coef = coef.reshape(h, w, p * p)[..., _zigzag(p)]
            k = min(cfg.dim, p * p)
            z[..., j] = 0.0
            z[..., :k, j] = coef[..., :k]
    return z


def reconstruct_frame(z, cfg: VqConfig) -> np.ndarray:
    """Inverse of :func:`extract_features`, rounded and clamped to uint8."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 4 or z.shape[2] != cfg.dim or z.shape[3] != cfg.channels:
        raise BadConfig(f"feature tensor shape {z.shape} does not fit {cfg}")
    p = cfg.patch_size
    h, w = z.shape[:2]
    out = np.empty((cfg.channels, h * p, w * p), dtype=np.float64)
    zz = _zigzag(p)
    for j in range(cfg.channels):
        if cfg.transform == "identity_patch":
            patches = z[..., j]
        else:
            k = min(cfg.dim, p * p)
            coef = np.zeros((h, w, p * p))
            coef[..., zz[:k]] = z[..., :k, j]
            patches = idctn(coef.reshape(h, w, p, p) * (4.0 * p), type=2, axes=(2, 3))
            patches = patches.reshape(h, w, p * p)
        out[j] = _unpatches(patches * 127.5 + 127.5, p)
    return to_uint8(out)


def feature_rows(z) -> np.ndarray:
    """(h, w, d, c) -> (U*c, d) in channel-major order."""
    z = np.asarray(z, dtype=np.float64)
    h, w, d, c = z.shape
    return z.transpose(3, 0, 1, 2).reshape(c * h * w, d)


def rows_to_tensor(rows, h, w, c) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    return rows.reshape(c, h, w, rows.shape[1]).transpose(1, 2, 3, 0)


def nearest_codeword(rows, entries, chunk=4096) -> np.ndarray:
    """Euclidean nearest row of ``entries`` for each row; ties go to the lowest index."""
    rows = np.asarray(rows, dtype=np.float64)
    out = np.empty(rows.shape[0], dtype=np.int64)
    step = max(1, chunk * 64 // max(entries.shape[0], 1))
    for start in range(0, rows.shape[0], step):
        block = rows[start : start + step]
        diff = block[:, None, :] - entries[None, :, :]
        out[start : start + step] = np.argmin(np.einsum("ijk,ijk->ij", diff, diff), axis=1)
    return out


def quantize(z, codebook: Codebook) -> np.ndarray:
    rows = feature_rows(z)
    if rows.shape[1] != codebook.dim:
        raise DimensionMismatch(f"feature dim {rows.shape[1]} != codebook dim {codebook.dim}")
    return nearest_codeword(rows, codebook.entries)


def dequantize(s, codebook: Codebook, cfg: VqConfig, height, width) -> np.ndarray:
    h, w = cfg.grid(height, width)
    s = np.asarray(s, dtype=np.int64)
    if s.size != h * w * cfg.channels:
        raise DimensionMismatch(f"index sequence length {s.size} != {h * w * cfg.channels}")
    if s.size and (s.min() < 0 or s.max() >= codebook.size):
        raise IndexOutOfRange("index outside the codebook")
    return rows_to_tensor(codebook.entries[s], h, w, cfg.channels)


def _kmeanspp(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers[i] = x[idx]
        d2 = np.minimum(d2, ((x - centers[i]) ** 2).sum(axis=1))
    return centers


def _assign(x, centers):
    d2 = (x * x).sum(1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(1)[None, :]
    labels = np.argmin(d2, axis=1)
    dist = ((x - centers[labels]) ** 2).sum(axis=1)
    return labels, dist


def _separate_duplicates(centers):
    d = centers.shape[1]
    unit = np.zeros(d)
    unit[0] = 1.0
    seen = {}
    for i in range(centers.shape[0]):
        key = centers[i].tobytes()
        while key in seen:
            centers[i] = centers[i] + 1e-6 * unit
            key = centers[i].tobytes()
        seen[key] = i
    return centers


def kmeans(x, k, seed=0, max_iters=100, tol=1e-9):
    """Lloyd's algorithm with k-means++ seeding.

    Returns ``(centers, distortion_history)``; the history holds the mean
    squared quantisation error after each assignment step.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < k:
        raise TooFewSamples(f"{x.shape[0]} samples cannot train {k} codewords")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(x, k, rng)
    history = []
    for _ in range(max_iters):
        labels, dist = _assign(x, centers)
        history.append(float(dist.mean()))
        new = centers.copy()
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        for empty in np.flatnonzero(~filled):
            far = int(np.argmax(dist))
            new[empty] = x[far]
            dist[far] = 0.0
        shift = float(np.max(np.abs(new - centers)))
        centers = new
        if shift < tol:
            break
    return centers, history


def train_codebook(frames, cfg: VqConfig, L=None, seed=0, max_iters=100, return_history=False):
    """Learn an ``L``-entry codebook from the feature rows of ``frames``."""
    L = cfg.codebook_size if L is None else L
    bits_per_index(L)
    frames = np.asarray(frames)
    if frames.ndim == 3:
        frames = frames[None]
    rows = np.concatenate([feature_rows(extract_features(f, cfg)) for f in frames])
    centers, history = kmeans(rows, L, seed=seed, max_iters=max_iters)
    book = Codebook(_separate_duplicates(centers))
    return (book, history) if return_history else book


class VectorQuantizer(TransformerMixin, BaseEstimator):
    """Frame codec: ``transform`` maps frames to index sequences, ``inverse_transform`` back.

    Parameters
    ----------
    patch_size, dim, codebook_size
        See :class:`VqConfig`.
    feature_transform : str
        ``VqConfig.transform``; renamed so it does not shadow :meth:`transform`.
    max_iter : int
        Lloyd iterations for codebook training.
    random_state : int
        Seed for k-means++ initialisation.
    codebook : Codebook, optional
        Pre-trained codebook; ``fit`` then only records the frame geometry.
    """

    def __init__(
        self,
        patch_size=4,
        dim=16,
        feature_transform="identity_patch",
        codebook_size=256,
        max_iter=100,
        random_state=0,
        codebook=None,
    ):
        self.patch_size = patch_size
        self.dim = dim
        self.feature_transform = feature_transform
        self.codebook_size = codebook_size
        self.max_iter = max_iter
        self.random_state = random_state
        self.codebook = codebook

    @property
    def config(self):
        return VqConfig(self.patch_size, self.dim, self.feature_transform, self.codebook_size)

    def fit(self, X, y=None):
        frames = check_sequence(X, min_frames=1)
        cfg = self.config
        self.frame_shape_ = frames.shape[2:]
        cfg.grid(*self.frame_shape_)
        if self.codebook is not None:
            if self.codebook.size != cfg.codebook_size or self.codebook.dim != cfg.dim:
                raise BadConfig("supplied codebook does not match the configuration")
            self.codebook_ = self.codebook
            self.distortion_history_ = []
        else:
            self.codebook_, self.distortion_history_ = train_codebook(
                frames, cfg, seed=self.random_state, max_iters=self.max_iter, return_history=True
            )
        return self

    def transform(self, X):
        check_is_fitted(self, "codebook_")
        frames = check_sequence(X, min_frames=1)
        return np.stack([quantize(extract_features(f, self.config), self.codebook_) for f in frames])

    def inverse_transform(self, X):
        check_is_fitted(self, "codebook_")
        s = np.atleast_2d(np.asarray(X))
        h, w = self.frame_shape_
        cfg = self.config
        return np.stack([reconstruct_frame(dequantize(row, self.codebook_, cfg, h, w), cfg) for row in s])
