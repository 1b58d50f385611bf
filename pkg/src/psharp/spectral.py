"""
Spectral weights: intensity synthesis, bounded least-squares weight
estimation, sensor profiles and Pan/MS shift estimation.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .raster import Raster, shift_image, upsample_bicubic

log = logging.getLogger(__name__)

DEFAULT_SHIFT_WINDOW = 4


class RankDeficiencyWarning(UserWarning):
    pass


def as_weights(w, bands: int | None = None) -> np.ndarray:
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    if w.ndim != 1:
        raise InvalidArgument("weights must be a vector")
    if bands is not None and w.size != bands:
        raise InvalidArgument(f"expected {bands} weights, got {w.size}")
    return w


def equal_weights(bands: int) -> np.ndarray:
    return np.full(bands, 1.0 / bands)


def intensity(ms: Raster, w) -> Raster:
    """Pixel-wise weighted band sum."""
    w = as_weights(w, ms.bands)
    return Raster(np.tensordot(w, ms.data, axes=1)[np.newaxis], ms.pixel_size)


# ---------------------------------------------------------------------------
# bounded-variable least squares


@dataclass
class BVLSResult:
    x: np.ndarray
    residual: float
    iterations: int
    rank_deficient: bool = False


def bvls(A, b, lower, upper, x0=None, max_iter: int | None = None) -> BVLSResult:
    """
    Minimise ||A x - b|| subject to lower <= x <= upper.

    Active-set method after Stark & Parker (1995). Variables are split into a
    free set and sets pinned at the lower/upper bound; free variables are
    solved by unconstrained least squares and walked back into the box
    whenever the solution leaves it.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    lo = np.broadcast_to(np.asarray(lower, dtype=np.float64), (n,)).copy()
    hi = np.broadcast_to(np.asarray(upper, dtype=np.float64), (n,)).copy()
    if np.any(lo > hi):
        raise InvalidArgument("lower bound exceeds upper bound")
    max_iter = max_iter or 10 * (n + 1) ** 2

    rank_deficient = bool(np.linalg.matrix_rank(A) < n) if m else True

    x = np.clip(lo if x0 is None else np.asarray(x0, dtype=np.float64), lo, hi)
    # 0 free, -1 at lower, +1 at upper
    state = np.where(x <= lo, -1, np.where(x >= hi, 1, 0))
    state[lo == hi] = -1

    def solve_free(x):
        free = state == 0
        if not free.any():
            return x
        rhs = b - A[:, ~free] @ x[~free]
        z, *_ = np.linalg.lstsq(A[:, free], rhs, rcond=None)
        out = x.copy()
        out[free] = z
        return out

    def walk_into_box(x):
        # inner loop: repeatedly solve on the free set, stepping back to the box
        for _ in range(n + 1):
            z = solve_free(x)
            free = state == 0
            bad = free & ((z < lo) | (z > hi))
            if not bad.any():
                return z
            with np.errstate(divide="ignore", invalid="ignore"):
                target = np.where(z < lo, lo, hi)
                alpha = np.where(bad, (target - x) / (z - x), np.inf)
            alpha = np.clip(alpha, 0.0, 1.0)
            step = float(alpha.min())
            x = x + step * (z - x)
            hit = bad & (alpha <= step + 1e-15)
            x[hit & (z < lo)] = lo[hit & (z < lo)]
            x[hit & (z > hi)] = hi[hit & (z > hi)]
            state[hit & (z < lo)] = -1
            state[hit & (z > hi)] = 1
        return x

    x = walk_into_box(x)
    it = 0
    blocked = np.zeros(n, dtype=bool)
    while it < max_iter:
        it += 1
        grad = A.T @ (b - A @ x)
        scale = max(1.0, float(np.abs(A.T @ b).max(initial=0.0)))
        tol = 1e-12 * scale
        want = ((state == -1) & (grad > tol)) | ((state == 1) & (grad < -tol))
        want &= ~blocked
        want &= lo != hi
        if not want.any():
            break
        t = int(np.argmax(np.where(want, np.abs(grad), -np.inf)))
        prev_state = state.copy()
        state[t] = 0
        z = solve_free(x)
        # guard against freeing a variable that immediately wants to go the wrong way
        if (prev_state[t] == -1 and z[t] < x[t]) or (prev_state[t] == 1 and z[t] > x[t]):
            state[:] = prev_state
            blocked[t] = True
            continue
        blocked[:] = False
        x = walk_into_box(x)

    resid = float(np.linalg.norm(A @ x - b))
    return BVLSResult(x=x, residual=resid, iterations=it, rank_deficient=rank_deficient)


def estimate_weights(ms: Raster, pan_lr: Raster, w0=None, return_result: bool = False):
    """
    Box-constrained [0, 1] least-squares fit of pan_lr by a weighted band sum.

    ``w0`` only seeds the solver; the problem is convex so the answer does
    not depend on it. Equal weights 1/K are used when it is omitted.
    """
    if pan_lr.bands != 1:
        raise InvalidArgument("pan_lr must be single-band")
    if (ms.height, ms.width) != (pan_lr.height, pan_lr.width):
        raise InvalidArgument(
            f"ms {ms.height}x{ms.width} and pan {pan_lr.height}x{pan_lr.width} differ in size"
        )
    A = ms.data.reshape(ms.bands, -1).T
    b = pan_lr.data.ravel()
    w0 = equal_weights(ms.bands) if w0 is None else as_weights(w0, ms.bands)
    res = bvls(A, b, 0.0, 1.0, x0=w0)
    if res.rank_deficient:
        warnings.warn(
            "band matrix is rank deficient; returning a minimal-norm solution",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    if return_result:
        return res.x, res
    return res.x


def estimate_weights_hr(ms: Raster, pan: Raster, w0=None, scale: int = 4):
    """Same fit carried out on the upsampled MS grid against the full-resolution Pan."""
    return estimate_weights(upsample_bicubic(ms, scale), pan, w0)


# ---------------------------------------------------------------------------
# sensor profiles


@dataclass(frozen=True)
class SensorProfile:
    name: str
    mtf_pan: float
    mtf_ms: tuple[float, ...]
    provider_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        vals = (self.mtf_pan,) + tuple(self.mtf_ms)
        if any(not 0.0 < v <= 1.0 for v in vals):
            raise InvalidArgument(f"profile {self.name!r}: MTF values must lie in (0, 1]")
        if self.provider_weights is not None:
            if any(not 0.0 <= v <= 1.0 for v in self.provider_weights):
                raise InvalidArgument(f"profile {self.name!r}: weights must lie in [0, 1]")

    def ms_mtf_for(self, bands: int) -> tuple[float, ...]:
        if len(self.mtf_ms) == bands:
            return tuple(self.mtf_ms)
        # no per-band mapping exists for other band counts
        return (DEFAULT_MS_MTF,) * bands

    def weights_for(self, bands: int) -> np.ndarray:
        if self.provider_weights is not None and len(self.provider_weights) == bands:
            return np.asarray(self.provider_weights, dtype=np.float64)
        return equal_weights(bands)


DEFAULT_MS_MTF = 0.3


def _load_builtins() -> tuple[SensorProfile, ...]:
    text = resources.files("psharp").joinpath("data/sensors.tsv").read_text()
    out = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, mtf_pan, mtf_ms, weights = line.split("\t")
        out.append(SensorProfile(
            name=name,
            mtf_pan=float(mtf_pan),
            mtf_ms=_floats(mtf_ms),
            provider_weights=None if weights.strip() == "na" else _floats(weights),
        ))
    return tuple(out)


@lru_cache(maxsize=1)
def _builtins() -> tuple[SensorProfile, ...]:
    return _load_builtins()


def builtin_profiles() -> list[SensorProfile]:
    return list(_builtins())


def get_profile(name: str) -> SensorProfile:
    for p in _builtins():
        if p.name.lower() == name.lower():
            return p
    raise InvalidArgument(f"unknown sensor profile {name!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def parse_profile(text: str) -> SensorProfile:
    """
    Parse a key = value profile description::

        name = MySensor
        mtf_pan = 0.15
        mtf_ms = 0.3, 0.3, 0.3, 0.3
        weights = 0.25, 0.25, 0.25, 0.25   # optional
    """
    fields_ = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"profile line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        fields_[key.lower()] = value
    missing = {"name", "mtf_pan", "mtf_ms"} - fields_.keys()
    if missing:
        raise InvalidArgument(f"profile missing keys: {', '.join(sorted(missing))}")
    try:
        return SensorProfile(
            name=fields_["name"],
            mtf_pan=float(fields_["mtf_pan"]),
            mtf_ms=_floats(fields_["mtf_ms"]),
            provider_weights=_floats(fields_["weights"]) if "weights" in fields_ else None,
        )
    except ValueError as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise InvalidArgument(f"bad number in profile: {exc}") from None


def load_profile(path) -> SensorProfile:
    return parse_profile(Path(path).read_text())


def resolve_profile(name_or_path: str) -> SensorProfile:
    try:
        return get_profile(name_or_path)
    except InvalidArgument:
        if Path(name_or_path).is_file():
            return load_profile(name_or_path)
        raise


# ---------------------------------------------------------------------------
# shift estimation


def _shift_order(window: int):
    shifts = [(dx, dy) for dx in range(-window, window + 1) for dy in range(-window, window + 1)]
    # tie-break: smallest |dx|+|dy|, then lexicographic
    return sorted(shifts, key=lambda s: (abs(s[0]) + abs(s[1]), s))


def estimate_shift(ms: Raster, pan: Raster, w, window: int = DEFAULT_SHIFT_WINDOW) -> tuple[int, int]:
    """
    Integer (dx, dy) such that the intensity of the upsampled MS, shifted by
    (dx, dy), best matches pan in RMSE. The border of width ``window`` is
    excluded so replicated edges do not bias the score.
    """
    if pan.bands != 1:
        raise InvalidArgument("pan must be single-band")
    if pan.width % ms.width or pan.height % ms.height:
        raise InvalidArgument("pan dims must be an integer multiple of ms dims")
    scale = pan.width // ms.width
    if pan.height // ms.height != scale or scale < 1:
        raise InvalidArgument("pan/ms scale must be equal in both axes")
    if window < 0 or window > min(pan.width, pan.height) / 4:
        raise InvalidArgument(f"shift window {window} too large for image")
    s_hr = upsample_bicubic(ms, scale) if scale > 1 else ms
    ihr = intensity(s_hr, w)
    p = pan.data[0]
    inner = (slice(window, pan.height - window or None), slice(window, pan.width - window or None))
    best, best_err = None, math.inf
    for dx, dy in _shift_order(window):
        shifted = shift_image(ihr, dx, dy).data[0] if (dx or dy) else ihr.data[0]
        err = math.sqrt(float(np.mean((p[inner] - shifted[inner]) ** 2)))
        # strict improvement only, so earlier candidates in tie order win
        if best is None or err < best_err - 1e-12 * max(best_err, 1.0):
            best, best_err = (dx, dy), err
    log.debug("estimated shift %s (rmse %.6g)", best, best_err)
    return best


def align_pan(pan: Raster, shift: tuple[int, int]) -> Raster:
    """Undo an estimated shift on the Pan image."""
    dx, dy = shift
    if dx == 0 and dy == 0:
        return pan
    return shift_image(pan, -dx, -dy)
