"""
Corrections applied around the fusion step: haze removal, Pan histogram
matching (full and first-order), virtual-band Pan correction and
histogram matching of the fused result.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidInput
from .filters import FilterSpec, realize_kernel
from .raster import Raster, band_stats, decimate, upsample_bicubic
from .spectral import as_weights, intensity

log = logging.getLogger(__name__)

HAZE_BAND_MIN = "band_min"
HAZE_PERCENTILE4 = "four_band_percentile"
HAZE_MODES = (HAZE_BAND_MIN, HAZE_PERCENTILE4)

# fractions of the 1-percentile for B, G, R, NIR
PERCENTILE4_FACTORS = (0.95, 0.65, 0.45, 0.05)

HIST_BINS = 65536
RATIO_EPS = 1e-6


class DegenerateHistogramWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HazeSpec:
    per_band: tuple[float, ...]
    intensity_haze: float

    @classmethod
    def zero(cls, bands: int) -> "HazeSpec":
        return cls((0.0,) * bands, 0.0)


def haze_estimate(ms: Raster, w, mode: str = HAZE_BAND_MIN) -> HazeSpec:
    """Per-band path radiance and the matching intensity haze sum(w_k * H_k)."""
    w = as_weights(w, ms.bands)
    if mode == HAZE_BAND_MIN:
        per_band = [float(ms.data[k].min()) for k in range(ms.bands)]
    elif mode == HAZE_PERCENTILE4:
        if ms.bands != 4:
            raise InvalidArgument(
                f"four-band percentile haze needs B, G, R, NIR bands, got {ms.bands}"
            )
        per_band = [
            f * band_stats(ms, k).percentile(1.0) for k, f in enumerate(PERCENTILE4_FACTORS)
        ]
    else:
        raise InvalidArgument(f"unknown haze mode {mode!r}")
    per_band = [max(0.0, h) for h in per_band]
    return HazeSpec(tuple(per_band), float(np.dot(w, per_band)))


def clamp_denominator(den: np.ndarray, eps: float) -> tuple[np.ndarray, int]:
    small = np.abs(den) < eps
    n = int(small.sum())
    if n:
        den = np.where(small, np.where(den < 0, -eps, eps), den)
    return den, n


def haze_correct_ratio(num: Raster, den: Raster, ms_band: Raster, Hk: float = 0.0,
                       H: float = 0.0, return_clamped: bool = False):
    """
    (ms_band - Hk) * (num - H) / (den - H) + Hk

    With zero haze this is the plain multiplicative injection used by the
    fusion code. Near-zero denominators are clamped to +/- eps, where eps is
    1e-6 of |mean(den)|.
    """
    for r in (num, den, ms_band):
        if r.bands != 1:
            raise InvalidArgument("haze_correct_ratio works on single-band rasters")
    if not (num.shape == den.shape == ms_band.shape):
        raise InvalidArgument("haze_correct_ratio inputs differ in size")
    d = den.data[0] - H
    eps = RATIO_EPS * abs(float(den.data[0].mean()))
    if eps == 0.0:
        eps = RATIO_EPS
    d, n_clamped = clamp_denominator(d, eps)
    if n_clamped:
        log.info("clamped %d near-zero ratio denominators", n_clamped)
    out = (ms_band.data[0] - Hk) * (num.data[0] - H) / d + Hk
    result = ms_band.with_data(out)
    if return_clamped:
        return result, n_clamped
    return result


def _piecewise_cdf(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(values, bins=edges)
    return np.concatenate([[0.0], np.cumsum(counts) / values.size])


def hist_match_full(src: Raster, target: Raster, bins: int = HIST_BINS) -> Raster:
    """
    Map src through its cumulative histogram onto the target's.

    Both CDFs are built on the same ``bins`` uniform bins spanning the joint
    value range and treated as piecewise linear, so the mapping is monotone
    and exact up to one bin width. Sizes of src and target may differ.
    """
    if src.bands != 1 or target.bands != 1:
        raise InvalidArgument("histogram matching works on single-band rasters")
    s = src.data[0]
    t = target.data[0].ravel()
    tmin, tmax = float(t.min()), float(t.max())
    if tmin == tmax:
        warnings.warn("constant target histogram; mapping to a constant",
                      DegenerateHistogramWarning, stacklevel=2)
        return src.with_data(np.full_like(s, tmin))
    lo = min(float(s.min()), tmin)
    hi = max(float(s.max()), tmax)
    edges = np.linspace(lo, hi, bins + 1)
    cdf_s = _piecewise_cdf(s.ravel(), edges)
    cdf_t = _piecewise_cdf(t, edges)
    q = np.interp(s, edges, cdf_s)
    # invert the target CDF inside the first bin whose upper CDF reaches q
    b = np.searchsorted(cdf_t, q, side="left")
    b = np.clip(b, 1, bins)
    first = int(np.argmax(cdf_t > 0))
    b = np.maximum(b, first)
    c0 = cdf_t[b - 1]
    c1 = cdf_t[b]
    frac = np.clip((q - c0) / (c1 - c0), 0.0, 1.0)
    return src.with_data(edges[b - 1] + frac * (edges[b] - edges[b - 1]))


def hist_match_simple(src: Raster, target_mean: float, target_std: float) -> Raster:
    """Affine match of mean and standard deviation."""
    if src.bands != 1:
        raise InvalidArgument("histogram matching works on single-band rasters")
    st = band_stats(src)
    if st.std == 0.0:
        raise InvalidInput("source image is constant; cannot match its variance")
    out = (src.data[0] - st.mean) * (target_std / st.std) + target_mean
    return src.with_data(out)


def pan_hist_match(pan: Raster, i_lr: Raster, variant: str = "full") -> Raster:
    """Match the Pan image to the low-resolution intensity image."""
    if variant == "full":
        return hist_match_full(pan, i_lr)
    if variant == "simple":
        st = band_stats(i_lr)
        return hist_match_simple(pan, st.mean, st.std)
    raise InvalidArgument(f"unknown histogram matching variant {variant!r}")


def virtual_band(pan: Raster, ms: Raster, w, pan_lowpass: FilterSpec) -> tuple[Raster, Raster]:
    """Return (V_lr, V_hr): the Pan energy not explained by the weighted MS bands."""
    if pan.bands != 1:
        raise InvalidArgument("pan must be single-band")
    scale = pan.width // ms.width
    if scale < 2 or pan.width != ms.width * scale or pan.height != ms.height * scale:
        raise InvalidArgument(
            f"pan {pan.height}x{pan.width} is not an integer multiple of ms {ms.height}x{ms.width}"
        )
    p_lr = decimate(pan, realize_kernel(pan_lowpass), scale)
    v_lr = p_lr.with_data(p_lr.data - intensity(ms, w).data)
    return v_lr, upsample_bicubic(v_lr, scale)


def pan_correct(pan: Raster, ms: Raster, w, pan_lowpass: FilterSpec) -> Raster:
    """Subtract the upsampled virtual band from Pan."""
    _, v_hr = virtual_band(pan, ms, w, pan_lowpass)
    return pan.with_data(pan.data - v_hr.data)


def result_hist_match(fused: Raster, original_ms: Raster) -> Raster:
    if fused.bands != original_ms.bands:
        raise InvalidArgument(
            f"band count mismatch: fused {fused.bands}, original {original_ms.bands}"
        )
    return Raster.stack(
        [hist_match_full(fused.band(k), original_ms.band(k)) for k in range(fused.bands)]
    )
