"""
Multi-band raster container and the resampling primitives everything else
is built on: cubic-convolution upsampling, filtered decimation, integer
shifts and per-band statistics.

Samples are stored as float64 with shape (bands, height, width).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse

from .errors import InvalidArgument

# Keys cubic-convolution parameter (Catmull-Rom)
CUBIC_A = -0.5

# scipy's "reflect" is half-sample symmetric: d c b a | a b c d | d c b a
EDGE_MODE = "reflect"


@dataclass(frozen=True, eq=False)
class Raster:
    """Band-sequential image with samples of shape (bands, height, width)."""

    data: np.ndarray
    pixel_size: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3:
            raise InvalidArgument(f"raster data must be 2-D or 3-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise InvalidArgument(f"empty raster shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("raster samples must be finite")
        arr = np.ascontiguousarray(arr)
        if arr is self.data:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "pixel_size", float(self.pixel_size))

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def band(self, k: int) -> "Raster":
        if not 0 <= k < self.bands:
            raise InvalidArgument(f"band {k} out of range for {self.bands} bands")
        return Raster(self.data[k : k + 1], self.pixel_size)

    def with_data(self, data, pixel_size: float | None = None) -> "Raster":
        return Raster(data, self.pixel_size if pixel_size is None else pixel_size)

    @classmethod
    def stack(cls, rasters: list["Raster"]) -> "Raster":
        if not rasters:
            raise InvalidArgument("cannot stack an empty list of rasters")
        return cls(np.concatenate([r.data for r in rasters], axis=0), rasters[0].pixel_size)

    def __repr__(self):
        return f"Raster(bands={self.bands}, height={self.height}, width={self.width}, pixel_size={self.pixel_size})"


@dataclass(frozen=True)
class BandStats:
    mean: float
    std: float
    min: float
    _sorted: np.ndarray

    def percentile(self, p: float) -> float:
        """Nearest-rank percentile, p in [0, 100]."""
        if not 0.0 <= p <= 100.0:
            raise InvalidArgument(f"percentile must be in [0, 100], got {p}")
        n = self._sorted.size
        rank = max(1, math.ceil(p / 100.0 * n))
        return float(self._sorted[rank - 1])


def cubic_kernel(x, a: float = CUBIC_A):
    """Keys cubic-convolution weight at offset x."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.zeros_like(x)
    near = x <= 1.0
    far = (x > 1.0) & (x < 2.0)
    xn = x[near]
    xf = x[far]
    out[near] = (a + 2.0) * xn**3 - (a + 3.0) * xn**2 + 1.0
    out[far] = a * xf**3 - 5.0 * a * xf**2 + 8.0 * a * xf - 4.0 * a
    return out


def reflect_index(idx, n: int):
    """Map integer indices onto [0, n) by half-sample symmetric reflection."""
    idx = np.asarray(idx)
    period = 2 * n
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - 1 - idx, idx)


def source_coordinate(j, factor: int):
    """Low-resolution coordinate of high-resolution pixel j (pixel centres aligned)."""
    return (np.asarray(j, dtype=np.float64) + 0.5) / factor - 0.5


def _interp_matrix(n_in: int, factor: int) -> sparse.csr_matrix:
    n_out = n_in * factor
    x = source_coordinate(np.arange(n_out), factor)
    base = np.floor(x).astype(np.int64)
    rows, cols, vals = [], [], []
    for t in range(-1, 3):
        src = base + t
        w = cubic_kernel(x - src)
        rows.append(np.arange(n_out))
        cols.append(reflect_index(src, n_in))
        vals.append(w)
    m = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_out, n_in),
    )
    # duplicates from reflection are summed by the csr conversion
    return m.tocsr()


def upsample_bicubic(img: Raster, factor: int) -> Raster:
    """Separable cubic-convolution upsampling by an integer factor."""
    if int(factor) != factor or factor < 2:
        raise InvalidArgument(f"upsampling factor must be an integer >= 2, got {factor}")
    factor = int(factor)
    my = _interp_matrix(img.height, factor)
    mxt = _interp_matrix(img.width, factor).T.tocsc()
    out = np.empty((img.bands, img.height * factor, img.width * factor))
    for k in range(img.bands):
        out[k] = np.asarray((my @ img.data[k]) @ mxt)
    return Raster(out, img.pixel_size / factor)


def _separable_factors(kernel: np.ndarray, tol: float = 1e-12):
    """Return (col, row) with kernel == outer(col, row), or None."""
    u, s, vt = np.linalg.svd(kernel)
    if s.size > 1 and s[1] > tol * max(s[0], 1e-300):
        return None
    col = u[:, 0] * math.sqrt(s[0])
    row = vt[0] * math.sqrt(s[0])
    if col.sum() < 0:
        col, row = -col, -row
    return col, row


def convolve_same(img: Raster, kernel: np.ndarray) -> Raster:
    """Per-band correlation with a centred kernel, half-sample mirror edges."""
    kernel = np.asarray(kernel, dtype=np.float64)
    out = np.empty_like(img.data)
    factors = _separable_factors(kernel)
    for k in range(img.bands):
        if factors is not None:
            col, row = factors
            tmp = ndimage.correlate1d(img.data[k], col, axis=0, mode=EDGE_MODE)
            out[k] = ndimage.correlate1d(tmp, row, axis=1, mode=EDGE_MODE)
        else:
            out[k] = ndimage.correlate(img.data[k], kernel, mode=EDGE_MODE)
    return Raster(out, img.pixel_size)


def _half_sample_pad(kernel: np.ndarray, axis: int) -> np.ndarray:
    k0 = np.moveaxis(kernel, axis, 0)
    padded = np.zeros((k0.shape[0] + 1,) + k0.shape[1:])
    padded[:-1] += 0.5 * k0
    padded[1:] += 0.5 * k0
    return np.moveaxis(padded, 0, axis)


def decimate(img: Raster, kernel, factor: int) -> Raster:
    """
    Low-pass filter with ``kernel`` and keep one sample per factor x factor block.

    Output pixel i sits at the centre of input block [factor*i, factor*(i+1)).
    A kernel whose length has the wrong parity to be centred there (odd kernel,
    even factor) is first widened by a two-tap half-sample average.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim == 1:
        kernel = np.outer(kernel, kernel)
    if kernel.ndim != 2:
        raise InvalidArgument("kernel must be 1-D or 2-D")
    if int(factor) != factor or factor < 1:
        raise InvalidArgument(f"decimation factor must be a positive integer, got {factor}")
    factor = int(factor)
    if abs(kernel.sum() - 1.0) > 1e-9:
        raise InvalidArgument(f"kernel must sum to 1, sums to {kernel.sum():.12g}")
    if img.width % factor or img.height % factor:
        raise InvalidArgument(
            f"image {img.height}x{img.width} not divisible by factor {factor}"
        )
    for axis in (0, 1):
        if (factor - kernel.shape[axis]) % 2:
            kernel = _half_sample_pad(kernel, axis)
    filtered = convolve_same(img, kernel).data
    # scipy centres an even kernel of length L at index L//2
    oy = (factor - kernel.shape[0]) // 2 + kernel.shape[0] // 2
    ox = (factor - kernel.shape[1]) // 2 + kernel.shape[1] // 2
    out = filtered[:, oy::factor, ox::factor]
    return Raster(out, img.pixel_size * factor)


def box_kernel(size: int) -> np.ndarray:
    return np.full((size, size), 1.0 / (size * size))


def shift_image(img: Raster, dx: int, dy: int) -> Raster:
    """Translate content by (dx, dy) pixels; vacated borders replicate the edge."""
    if int(dx) != dx or int(dy) != dy:
        raise InvalidArgument("only integer shifts are supported")
    dx, dy = int(dx), int(dy)
    limit = min(img.width, img.height) / 2
    if abs(dx) >= limit or abs(dy) >= limit:
        raise InvalidArgument(f"shift ({dx}, {dy}) out of range for {img.height}x{img.width} image")
    ys = np.clip(np.arange(img.height) - dy, 0, img.height - 1)
    xs = np.clip(np.arange(img.width) - dx, 0, img.width - 1)
    return Raster(img.data[:, ys][:, :, xs], img.pixel_size)


def band_stats(img: Raster, band: int = 0) -> BandStats:
    if not 0 <= band < img.bands:
        raise InvalidArgument(f"band {band} out of range for {img.bands} bands")
    values = img.data[band].ravel()
    mean = float(values.mean())
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    srt = np.sort(values)
    return BandStats(mean=mean, std=std, min=float(srt[0]), _sorted=srt)
