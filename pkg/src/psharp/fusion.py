"""
Component-substitution and high-pass-filter pansharpening, additive and
multiplicative, with the correction pipeline wrapped around them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .enhance import (
    HAZE_BAND_MIN,
    HAZE_MODES,
    HazeSpec,
    haze_correct_ratio,
    haze_estimate,
    pan_correct,
    pan_hist_match,
    result_hist_match,
)
from .errors import InvalidArgument
from .filters import GAUSSIAN, MTF_PAPER, FilterSpec, lowpass, realize_kernel
from .raster import Raster, decimate, upsample_bicubic
from .spectral import SensorProfile, estimate_weights, get_profile, intensity

log = logging.getLogger(__name__)

CS_A = "CS_additive"
CS_M = "CS_multiplicative"
HPF_A = "HPF_additive"
HPF_M = "HPF_multiplicative"
METHODS = (CS_A, CS_M, HPF_A, HPF_M)

NC, HC, PHM, WE, WE_PC, MHM = "NC", "HC", "PHM", "WE", "WE_PC", "MHM"
CORRECTIONS = (NC, HC, PHM, WE, WE_PC, MHM)

METHOD_ALIASES = {
    "cs_a": CS_A, "cs a": CS_A, "csa": CS_A, "cs_additive": CS_A,
    "cs_m": CS_M, "cs m": CS_M, "csm": CS_M, "cs_multiplicative": CS_M,
    "hpf_a": HPF_A, "hpf a": HPF_A, "hpfa": HPF_A, "hpf_additive": HPF_A,
    "hpf_m": HPF_M, "hpf m": HPF_M, "hpfm": HPF_M, "hpf_multiplicative": HPF_M,
}
CORRECTION_ALIASES = {c.lower(): c for c in CORRECTIONS}
CORRECTION_ALIASES.update({"we+pc": WE_PC, "we + pc": WE_PC, "wepc": WE_PC, "pc": WE_PC})

SHORT_METHOD = {CS_A: "CS a", CS_M: "CS m", HPF_A: "HPF a", HPF_M: "HPF m"}


def parse_method(name: str) -> str:
    try:
        return METHOD_ALIASES[name.strip().lower()]
    except KeyError:
        raise InvalidArgument(f"unknown method {name!r}") from None


def parse_correction(name: str) -> str:
    try:
        return CORRECTION_ALIASES[name.strip().lower()]
    except KeyError:
        raise InvalidArgument(f"unknown correction {name!r}") from None


def is_multiplicative(method: str) -> bool:
    return method in (CS_M, HPF_M)


def is_cs(method: str) -> bool:
    return method in (CS_A, CS_M)


def applicable(method: str, correction: str) -> bool:
    """Which (method, correction) cells are defined; the rest are na."""
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}")
    if correction not in CORRECTIONS:
        raise InvalidArgument(f"unknown correction {correction!r}")
    if correction == HC:
        return is_multiplicative(method)
    if correction == WE:
        return is_cs(method)
    return True


def mtf_filter(profile: SensorProfile, scale: int = 4, kind: str = GAUSSIAN,
               cutoff_mode: str = MTF_PAPER, length: int | None = None) -> FilterSpec:
    """Pan low-pass filter matched to the profile's Pan MTF."""
    kw = {} if length is None else {"length": length}
    return FilterSpec(kind=kind, scale=scale, mtf_nyquist=profile.mtf_pan,
                      cutoff_mode=cutoff_mode, **kw)


def ms_matched_filter(profile: SensorProfile, bands: int, like: FilterSpec) -> FilterSpec:
    """Filter bringing Pan to the MS resolution: mean of the per-band MS MTF values."""
    mtf = float(np.mean(profile.ms_mtf_for(bands)))
    return replace(like, mtf_nyquist=mtf)


def lowres_pan(pan: Raster, cfg: "FusionConfig", bands: int) -> Raster:
    """Pan degraded to the MS grid for weight estimation."""
    spec = ms_matched_filter(cfg.profile, bands, cfg.filter)
    return decimate(pan, realize_kernel(spec), cfg.scale)


@dataclass(frozen=True)
class FusionConfig:
    method: str = CS_A
    correction: str = NC
    hist_variant: str = "full"
    haze_mode: str = HAZE_BAND_MIN
    profile: SensorProfile = field(default_factory=lambda: get_profile("Default"))
    scale: int = 4
    filter: FilterSpec | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgument(f"unknown method {self.method!r}")
        if self.correction not in CORRECTIONS:
            raise InvalidArgument(f"unknown correction {self.correction!r}")
        if self.hist_variant not in ("full", "simple"):
            raise InvalidArgument(f"unknown histogram variant {self.hist_variant!r}")
        if self.haze_mode not in HAZE_MODES:
            raise InvalidArgument(f"unknown haze mode {self.haze_mode!r}")
        if int(self.scale) != self.scale or self.scale < 2:
            raise InvalidArgument("scale must be an integer >= 2")
        if self.filter is None:
            object.__setattr__(self, "filter", mtf_filter(self.profile, self.scale))
        elif self.filter.scale != self.scale:
            object.__setattr__(self, "filter", replace(self.filter, scale=self.scale))

    @property
    def is_applicable(self) -> bool:
        return applicable(self.method, self.correction)


@dataclass
class FusionResult:
    image: Raster
    weights: np.ndarray
    haze: HazeSpec | None
    clamped: int
    pan_used: Raster


def _check_pair(ms: Raster, pan: Raster, scale: int):
    if pan.bands != 1:
        raise InvalidArgument(f"pan must be single-band, got {pan.bands} bands")
    if pan.width != ms.width * scale or pan.height != ms.height * scale:
        raise InvalidArgument(
            f"pan {pan.height}x{pan.width} must be ms {ms.height}x{ms.width} times {scale}"
        )


def fuse_detailed(ms: Raster, pan: Raster, cfg: FusionConfig, weights=None) -> FusionResult:
    """
    Run the full pipeline and keep the intermediate diagnostics.

    ``weights`` overrides the profile's provider weights (equal weights are
    used when the profile has none for this band count).
    """
    if not cfg.is_applicable:
        raise InvalidArgument(f"correction {cfg.correction} is not applicable to {cfg.method}")
    _check_pair(ms, pan, cfg.scale)
    method, corr = cfg.method, cfg.correction
    K = ms.bands

    s_hr = upsample_bicubic(ms, cfg.scale)
    w = cfg.profile.weights_for(K) if weights is None else np.asarray(weights, dtype=np.float64)

    if corr in (WE, WE_PC):
        w = estimate_weights(ms, lowres_pan(pan, cfg, K), w)

    p_hat = pan
    if corr == PHM:
        p_hat = pan_hist_match(pan, intensity(ms, w), cfg.hist_variant)
    elif corr == WE_PC:
        p_hat = pan_correct(pan, ms, w, cfg.filter)
        p_hat = pan_hist_match(p_hat, intensity(ms, w), cfg.hist_variant)

    if is_cs(method):
        base = intensity(s_hr, w)
    else:
        base = lowpass(p_hat, cfg.filter)

    haze = None
    clamped = 0
    if is_multiplicative(method):
        haze = haze_estimate(s_hr, w, cfg.haze_mode) if corr == HC else HazeSpec.zero(K)
        bands = []
        for k in range(K):
            band, n = haze_correct_ratio(p_hat, base, s_hr.band(k), haze.per_band[k],
                                         haze.intensity_haze, return_clamped=True)
            bands.append(band.data[0])
            clamped += n
        out = Raster(np.stack(bands), s_hr.pixel_size)
    else:
        detail = p_hat.data[0] - base.data[0]
        out = s_hr.with_data(s_hr.data + detail[np.newaxis])

    if corr == MHM:
        out = result_hist_match(out, ms)

    return FusionResult(image=out, weights=w, haze=haze, clamped=clamped, pan_used=p_hat)


def fuse(ms: Raster, pan: Raster, cfg: FusionConfig, weights=None) -> Raster:
    return fuse_detailed(ms, pan, cfg, weights).image
