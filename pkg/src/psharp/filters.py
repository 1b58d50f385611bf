"""
Gaussian and Butterworth low-pass filters designed in the frequency domain,
with optional adaptation of the cutoff to a sensor's MTF at Nyquist.

Frequencies are measured in DFT bins of the L-tap window, so the Nyquist
frequency of the low-resolution grid sits at L / (2 * scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgument
from .raster import Raster, convolve_same, decimate

GAUSSIAN = "gaussian"
BUTTERWORTH = "butterworth"
KINDS = (GAUSSIAN, BUTTERWORTH)

PLAIN = "plain"
MTF_PAPER = "mtf_paper"
MTF_EXACT = "mtf_exact"
CUTOFF_MODES = (PLAIN, MTF_PAPER, MTF_EXACT)

DEFAULT_LENGTH = 41


@dataclass(frozen=True)
class FilterSpec:
    kind: str = GAUSSIAN
    length: int = DEFAULT_LENGTH
    scale: int = 4
    mtf_nyquist: float | None = None
    butterworth_c: float = math.sqrt(2.0)
    butterworth_n: int = 2
    cutoff_mode: str = MTF_PAPER

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown filter kind {self.kind!r}")
        if self.cutoff_mode not in CUTOFF_MODES:
            raise InvalidArgument(f"unknown cutoff mode {self.cutoff_mode!r}")
        if self.scale < 1:
            raise InvalidArgument("scale must be >= 1")
        if self.length % 2 == 0 or self.length < self.scale + 1:
            raise InvalidArgument(
                f"filter length must be odd and >= scale+1, got {self.length}"
            )
        if self.mtf_nyquist is not None and not 0.0 < self.mtf_nyquist <= 1.0:
            raise InvalidArgument(f"MTF at Nyquist must be in (0, 1], got {self.mtf_nyquist}")
        if int(self.butterworth_n) != self.butterworth_n or self.butterworth_n < 1:
            raise InvalidArgument("Butterworth order must be an integer >= 1")
        if self.butterworth_c <= 0:
            raise InvalidArgument("Butterworth constant must be positive")

    @property
    def nyquist(self) -> float:
        return self.length / 2.0 / self.scale

    def with_mtf(self, mtf: float | None) -> "FilterSpec":
        return replace(self, mtf_nyquist=mtf)

    def with_scale(self, scale: int) -> "FilterSpec":
        return replace(self, scale=scale)


def _needs_mtf(spec: FilterSpec) -> float | None:
    if spec.cutoff_mode == PLAIN:
        return None
    if spec.mtf_nyquist is None:
        raise InvalidArgument(f"cutoff mode {spec.cutoff_mode!r} requires mtf_nyquist")
    return spec.mtf_nyquist


def cutoff_frequency(spec: FilterSpec) -> float:
    f_n = spec.nyquist
    mtf = _needs_mtf(spec)
    if mtf is None:
        return f_n
    if mtf >= 1.0:
        # no attenuation requested at Nyquist
        return math.inf
    if spec.kind == GAUSSIAN:
        return f_n / math.sqrt(-2.0 * math.log(mtf))
    c, n = spec.butterworth_c, spec.butterworth_n
    if spec.cutoff_mode == MTF_PAPER:
        return f_n * (c / mtf) ** (1.0 / (2 * n))
    return f_n * (c * mtf / (1.0 - mtf)) ** (1.0 / (2 * n))


def gaussian_response(f, spec: FilterSpec):
    if spec.kind != GAUSSIAN:
        raise InvalidArgument("gaussian_response needs a gaussian spec")
    fc = cutoff_frequency(spec)
    return np.exp(-0.5 * (np.asarray(f, dtype=np.float64) / fc) ** 2)


def butterworth_response(f, spec: FilterSpec):
    if spec.kind != BUTTERWORTH:
        raise InvalidArgument("butterworth_response needs a butterworth spec")
    fc = cutoff_frequency(spec)
    ratio = np.asarray(f, dtype=np.float64) / fc
    return 1.0 / (1.0 + spec.butterworth_c * ratio ** (2 * spec.butterworth_n))


def response(f, spec: FilterSpec):
    if spec.kind == GAUSSIAN:
        return gaussian_response(f, spec)
    return butterworth_response(f, spec)


def realize_taps(spec: FilterSpec) -> np.ndarray:
    """1-D spatial taps from an inverse DFT of the sampled frequency response."""
    L = spec.length
    k = np.arange(L)
    freq = np.minimum(k, L - k)
    h = np.real(np.fft.ifft(response(freq, spec)))
    h = np.fft.fftshift(h)
    h = 0.5 * (h + h[::-1])
    return h / h.sum()


def realize_kernel(spec: FilterSpec) -> np.ndarray:
    """Separable L x L spatial kernel with unit sum."""
    taps = realize_taps(spec)
    kernel = np.outer(taps, taps)
    return kernel / kernel.sum()


def lowpass(img: Raster, spec: FilterSpec) -> Raster:
    """Filter every band with the realized kernel; output keeps the input size."""
    return convolve_same(img, realize_kernel(spec))


def degrade(img: Raster, specs: list[FilterSpec] | FilterSpec, factor: int) -> Raster:
    """Band-wise low-pass + decimation, one filter per band when a list is given."""
    if isinstance(specs, FilterSpec):
        specs = [specs] * img.bands
    if len(specs) != img.bands:
        raise InvalidArgument(f"need {img.bands} filter specs, got {len(specs)}")
    cache = {}
    out = []
    for k, spec in enumerate(specs):
        if spec not in cache:
            cache[spec] = realize_kernel(spec)
        out.append(decimate(img.band(k), cache[spec], factor))
    return Raster.stack(out)
