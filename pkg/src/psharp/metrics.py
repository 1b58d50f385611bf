"""Reference-based quality measures (RMSE, ERGAS, SAM) and Pearson correlation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidInput
from .raster import Raster

log = logging.getLogger(__name__)

ORIGINAL = "original_consistency"
REDUCED_4 = "reduced_4"
REDUCED_2 = "reduced_2"
PROTOCOLS = (ORIGINAL, REDUCED_4, REDUCED_2)

SAM_NORM_EPS = 1e-12


@dataclass(frozen=True)
class QualityRecord:
    dataset: str
    protocol: str
    method: str
    correction: str
    ergas: float | None = None
    sam: float | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise InvalidArgument(f"unknown protocol {self.protocol!r}")
        if self.ergas is not None and self.ergas < 0:
            raise InvalidArgument("ERGAS must be non-negative")
        if self.sam is not None and not 0.0 <= self.sam <= 180.0:
            raise InvalidArgument("SAM must be within [0, 180] degrees")

    @property
    def is_na(self) -> bool:
        return self.ergas is None and self.sam is None


def _same_shape(a: Raster, b: Raster):
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch: {a.shape} vs {b.shape}")


def rmse(a, b) -> float:
    a = a.data if isinstance(a, Raster) else np.asarray(a, dtype=np.float64)
    b = b.data if isinstance(b, Raster) else np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch: {a.shape} vs {b.shape}")
    return math.sqrt(float(np.mean((a - b) ** 2)))


def ergas(test: Raster, ref: Raster, scale: float = 4) -> float:
    _same_shape(test, ref)
    terms = []
    for k in range(ref.bands):
        mu = float(ref.data[k].mean())
        if mu == 0.0:
            raise InvalidInput(f"reference band {k} has zero mean")
        terms.append((rmse(test.data[k], ref.data[k]) / mu) ** 2)
    return 100.0 / scale * math.sqrt(sum(terms) / len(terms))


def sam(test: Raster, ref: Raster, return_skipped: bool = False):
    """Mean per-pixel spectral angle in degrees."""
    _same_shape(test, ref)
    if ref.bands < 2:
        raise InvalidArgument("SAM needs at least two bands")
    t = test.data.reshape(test.bands, -1)
    r = ref.data.reshape(ref.bands, -1)
    nt = np.sqrt(np.sum(t * t, axis=0))
    nr = np.sqrt(np.sum(r * r, axis=0))
    ok = (nt >= SAM_NORM_EPS) & (nr >= SAM_NORM_EPS)
    skipped = int(ok.size - ok.sum())
    if not ok.any():
        raise InvalidInput("all pixels have zero spectral vectors")
    if skipped:
        log.info("SAM skipped %d zero-norm pixels", skipped)
    # 2*atan2(|u - v|, |u + v|) on unit vectors is the arccos angle without
    # its loss of precision near 0 and 180 degrees
    u = t[:, ok] / nt[ok]
    v = r[:, ok] / nr[ok]
    per_pixel = 2.0 * np.arctan2(np.linalg.norm(u - v, axis=0), np.linalg.norm(u + v, axis=0))
    angle = float(np.degrees(per_pixel).mean())
    if return_skipped:
        return angle, skipped
    return angle


def pearson(x, y) -> float:
    """Sample Pearson correlation after dropping pairs where either side is None/NaN."""
    pairs = [
        (float(a), float(b))
        for a, b in zip(x, y, strict=True)
        if a is not None and b is not None and not (math.isnan(a) or math.isnan(b))
    ]
    if len(pairs) < 2:
        raise InvalidInput("need at least two valid pairs")
    xv, yv = np.array(pairs).T
    dx = xv - xv.mean()
    dy = yv - yv.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise InvalidInput("zero variance")
    return float(dx @ dy) / math.sqrt(sxx * syy)
