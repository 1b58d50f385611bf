"""
Three-resolution validation: consistency at the original scale, synthesis
at 1:4 and synthesis at 1:2 brought back to the MS grid; the full
method x correction matrix; cross-resolution correlation of the results;
published fixture tables; synthetic scenes with known ground truth.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .errors import InvalidArgument, InvalidInput
from .filters import FilterSpec, degrade
from .fusion import (
    CORRECTIONS,
    METHODS,
    SHORT_METHOD,
    FusionConfig,
    fuse,
)
from .metrics import (
    ORIGINAL,
    PROTOCOLS,
    REDUCED_2,
    REDUCED_4,
    QualityRecord,
    ergas,
    pearson,
    sam,
)
from .raster import Raster, upsample_bicubic
from .spectral import SensorProfile, get_profile, intensity

log = logging.getLogger(__name__)

ERGAS_SCALE = 4

# (first, second) protocols of each correlation cell, in published row order
PROTOCOL_PAIRS = ((ORIGINAL, REDUCED_2), (ORIGINAL, REDUCED_4), (REDUCED_2, REDUCED_4))

PROTOCOL_LABEL = {ORIGINAL: "Original", REDUCED_4: "Reduced 4x4", REDUCED_2: "Reduced 2x2"}
CORRECTION_LABEL = {"NC": "NC", "HC": "HC", "PHM": "PHM", "WE": "WE", "WE_PC": "WE+PC", "MHM": "MHM"}


@dataclass
class ProtocolRun:
    protocol: str
    records: list[QualityRecord]
    provenance: dict = field(default_factory=dict)

    def get(self, method: str, correction: str) -> QualityRecord:
        for r in self.records:
            if r.method == method and r.correction == correction:
                return r
        raise KeyError((method, correction))


# ---------------------------------------------------------------------------
# degradation helpers


def ms_filters(cfg: FusionConfig, bands: int, factor: int) -> list[FilterSpec]:
    return [cfg.filter.with_scale(factor).with_mtf(m) for m in cfg.profile.ms_mtf_for(bands)]


def pan_filter(cfg: FusionConfig, factor: int) -> FilterSpec:
    return cfg.filter.with_scale(factor).with_mtf(cfg.profile.mtf_pan)


def degrade_ms(ms: Raster, cfg: FusionConfig, factor: int) -> Raster:
    return degrade(ms, ms_filters(cfg, ms.bands, factor), factor)


def degrade_pan(pan: Raster, cfg: FusionConfig, factor: int) -> Raster:
    return degrade(pan, pan_filter(cfg, factor), factor)


def _check_inputs(ms: Raster, pan: Raster, scale: int):
    if ms.bands < 1:
        raise InvalidArgument("ms has no bands")
    if pan.bands != 1:
        raise InvalidArgument("pan must be single-band")
    if pan.width != ms.width * scale or pan.height != ms.height * scale:
        raise InvalidArgument(
            f"pan {pan.height}x{pan.width} must be ms {ms.height}x{ms.width} times {scale}"
        )
    if ms.width % 4 or ms.height % 4:
        raise InvalidArgument("ms dims must be divisible by 4 for the reduced protocols")


def protocol_inputs(protocol: str, ms: Raster, pan: Raster, cfg: FusionConfig):
    """The (ms, pan) pair actually fused under each protocol."""
    if protocol == ORIGINAL:
        return ms, pan
    if protocol == REDUCED_4:
        return degrade_ms(ms, cfg, 4), degrade_pan(pan, cfg, 4)
    if protocol == REDUCED_2:
        return degrade_ms(ms, cfg, 2), degrade_pan(pan, cfg, 2)
    raise InvalidArgument(f"unknown protocol {protocol!r}")


def protocol_output(protocol: str, fused: Raster, cfg: FusionConfig) -> Raster:
    """Bring a fused product onto the original MS grid for comparison."""
    if protocol == ORIGINAL:
        return degrade_ms(fused, cfg, cfg.scale)
    if protocol == REDUCED_4:
        return fused
    if protocol == REDUCED_2:
        return degrade_ms(fused, cfg, 2)
    raise InvalidArgument(f"unknown protocol {protocol!r}")


def score(test: Raster, ref: Raster) -> tuple[float, float | None]:
    return ergas(test, ref, ERGAS_SCALE), (sam(test, ref) if ref.bands >= 2 else None)


def run_protocol(protocol: str, ms: Raster, pan: Raster, cfg: FusionConfig,
                 dataset: str = "input", inputs=None) -> QualityRecord:
    if not cfg.is_applicable:
        return QualityRecord(dataset, protocol, cfg.method, cfg.correction)
    _check_inputs(ms, pan, cfg.scale)
    ms_in, pan_in = inputs if inputs is not None else protocol_inputs(protocol, ms, pan, cfg)
    fused = fuse(ms_in, pan_in, cfg)
    e, s = score(protocol_output(protocol, fused, cfg), ms)
    return QualityRecord(dataset, protocol, cfg.method, cfg.correction, e, s)


def protocol_original(ms, pan, cfg, dataset="input") -> QualityRecord:
    return run_protocol(ORIGINAL, ms, pan, cfg, dataset)


def protocol_reduced4(ms, pan, cfg, dataset="input") -> QualityRecord:
    return run_protocol(REDUCED_4, ms, pan, cfg, dataset)


def protocol_reduced2(ms, pan, cfg, dataset="input") -> QualityRecord:
    return run_protocol(REDUCED_2, ms, pan, cfg, dataset)


def interpolation_baseline(ms: Raster, pan: Raster, cfg: FusionConfig, protocol: str = REDUCED_4):
    """ERGAS/SAM of plain cubic upsampling under the given protocol."""
    ms_in, _ = protocol_inputs(protocol, ms, pan, cfg)
    return score(protocol_output(protocol, upsample_bicubic(ms_in, cfg.scale), cfg), ms)


def max_threads() -> int:
    env = os.environ.get("PSHARP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer PSHARP_THREADS=%r", env)
    return os.cpu_count() or 1


def run_matrix(ms: Raster, pan: Raster, profile: SensorProfile | None = None,
               dataset: str = "input", base_cfg: FusionConfig | None = None,
               seed: int | None = None, threads: int | None = None) -> list[ProtocolRun]:
    """
    Every protocol x method x correction cell, in table order. Inapplicable
    cells are na records. Cells run concurrently but are merged by key, so
    the output does not depend on scheduling.
    """
    if base_cfg is None:
        base_cfg = FusionConfig(profile=profile or get_profile("Default"))
    elif profile is not None:
        base_cfg = replace(base_cfg, profile=profile, filter=None)
    _check_inputs(ms, pan, base_cfg.scale)

    inputs = {p: protocol_inputs(p, ms, pan, base_cfg) for p in PROTOCOLS}
    cells = [(p, m, c) for p in PROTOCOLS for m in METHODS for c in CORRECTIONS]

    def work(cell):
        p, m, c = cell
        cfg = replace(base_cfg, method=m, correction=c)
        return run_protocol(p, ms, pan, cfg, dataset, inputs[p])

    n = threads or max_threads()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = dict(zip(cells, pool.map(work, cells)))
    else:
        results = {cell: work(cell) for cell in cells}

    provenance = {
        "dataset": dataset,
        "profile": base_cfg.profile.name,
        "filter": base_cfg.filter,
        "hist_variant": base_cfg.hist_variant,
        "haze_mode": base_cfg.haze_mode,
        "seed": seed,
    }
    return [
        ProtocolRun(p, [results[(p, m, c)] for m in METHODS for c in CORRECTIONS], dict(provenance))
        for p in PROTOCOLS
    ]


# ---------------------------------------------------------------------------
# cross-resolution correlation

CONCAT, ERGAS_ONLY, SAM_ONLY = "concat", "ergas", "sam"


def _quality_vector(run: ProtocolRun, correction: str, mode: str) -> list[float | None]:
    out = []
    for m in METHODS:
        rec = run.get(m, correction)
        if mode in (CONCAT, ERGAS_ONLY):
            out.append(rec.ergas)
        if mode in (CONCAT, SAM_ONLY):
            out.append(rec.sam)
    return out


def cross_scale_correlation(runs: list[ProtocolRun], mode: str = CONCAT) -> dict[str, tuple]:
    """
    Pearson correlation of quality values between resolution pairs, per
    correction. Values for one correction are the (ERGAS, SAM) pairs of all
    methods laid end to end; na entries drop out pairwise.

    Returns correction -> (original/1:2, original/1:4, 1:2/1:4), None where
    the correlation is undefined.
    """
    if mode not in (CONCAT, ERGAS_ONLY, SAM_ONLY):
        raise InvalidArgument(f"unknown correlation mode {mode!r}")
    by_protocol = {r.protocol: r for r in runs}
    missing = set(PROTOCOLS) - by_protocol.keys()
    if missing:
        raise InvalidArgument(f"missing protocols: {', '.join(sorted(missing))}")
    table = {}
    for c in CORRECTIONS:
        cells = []
        for a, b in PROTOCOL_PAIRS:
            x = _quality_vector(by_protocol[a], c, mode)
            y = _quality_vector(by_protocol[b], c, mode)
            try:
                cells.append(pearson(x, y))
            except InvalidInput:
                cells.append(None)
        table[c] = tuple(cells)
    return table


# ---------------------------------------------------------------------------
# fixtures

FIXTURE_DATASETS = ("WV-2 ROI1", "WV-2 ROI2", "WV-4")


def _data_lines(name: str):
    text = resources.files("psharp").joinpath(f"data/{name}").read_text()
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            yield line.split("\t")


def _na(v: str) -> float | None:
    return None if v.strip() == "na" else float(v)


def fixture_records() -> list[QualityRecord]:
    return [
        QualityRecord(d, p, m, c, _na(e), _na(s))
        for d, p, m, c, e, s in _data_lines("quality_tables.tsv")
    ]


def runs_from_records(records: list[QualityRecord], dataset: str) -> list[ProtocolRun]:
    recs = [r for r in records if r.dataset == dataset]
    if not recs:
        raise InvalidArgument(f"no records for dataset {dataset!r}")
    runs = []
    for p in PROTOCOLS:
        index = {(r.method, r.correction): r for r in recs if r.protocol == p}
        ordered = [
            index.get((m, c), QualityRecord(dataset, p, m, c))
            for m in METHODS for c in CORRECTIONS
        ]
        runs.append(ProtocolRun(p, ordered, {"dataset": dataset, "source": "fixture"}))
    return runs


def fixture_runs(dataset: str) -> list[ProtocolRun]:
    return runs_from_records(fixture_records(), dataset)


def published_correlations() -> dict[str, dict[str, tuple[float, float, float]]]:
    out: dict = {}
    for d, c, a, b, e in _data_lines("correlation_table.tsv"):
        out.setdefault(d, {})[c] = (float(a), float(b), float(e))
    return out


# ---------------------------------------------------------------------------
# report formatting


def _fmt(v: float | None) -> str:
    return "na" if v is None else f"{v:.2f}"


def format_quality_table(runs: list[ProtocolRun]) -> str:
    """Aligned text: two rows per method (ERGAS then SAM), one column per correction."""
    header = ["Resolution", "Method"] + [CORRECTION_LABEL[c] for c in CORRECTIONS]
    rows = [header]
    for run in runs:
        for i, m in enumerate(METHODS):
            recs = [run.get(m, c) for c in CORRECTIONS]
            label = PROTOCOL_LABEL[run.protocol] if i == 0 else ""
            rows.append([label, SHORT_METHOD[m]] + [_fmt(r.ergas) for r in recs])
            rows.append(["", ""] + [_fmt(r.sam) for r in recs])
    widths = [max(len(r[j]) for r in rows) for j in range(len(header))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0]), r[1].ljust(widths[1])]
        cells += [v.rjust(w) for v, w in zip(r[2:], widths[2:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def parse_quality_table(text: str, dataset: str) -> list[QualityRecord]:
    """Inverse of format_quality_table."""
    label_to_protocol = {v: k for k, v in PROTOCOL_LABEL.items()}
    short_to_method = {v: k for k, v in SHORT_METHOD.items()}
    lines = text.splitlines()[1:]
    records = []
    protocol = None
    for ergas_line, sam_line in zip(lines[::2], lines[1::2]):
        for label, p in label_to_protocol.items():
            if ergas_line.startswith(label):
                protocol = p
                ergas_line = ergas_line[len(label):]
        tokens = ergas_line.split()
        method = short_to_method[" ".join(tokens[:2])]
        for c, e, s in zip(CORRECTIONS, tokens[2:], sam_line.split()):
            records.append(QualityRecord(dataset, protocol, method, c, _na(e), _na(s)))
    return records


def format_records(runs: list[ProtocolRun]) -> str:
    lines = ["dataset\tprotocol\tmethod\tcorrection\tergas\tsam"]
    for run in runs:
        for r in run.records:
            lines.append("\t".join([r.dataset, r.protocol, r.method, r.correction,
                                    _fmt(r.ergas), _fmt(r.sam)]))
    return "\n".join(lines) + "\n"


def format_correlation_table(tables: dict[str, dict[str, tuple]]) -> str:
    """Rows per dataset: original/1:2, original/1:4, 1:2/1:4."""
    header = ["Dataset"] + [CORRECTION_LABEL[c] for c in CORRECTIONS]
    rows = [header]
    for dataset, table in tables.items():
        for i in range(3):
            rows.append([dataset if i == 0 else ""] + [_fmt(table[c][i]) for c in CORRECTIONS])
    widths = [max(len(r[j]) for r in rows) for j in range(len(header))]
    out = []
    for r in rows:
        out.append("  ".join([r[0].ljust(widths[0])] +
                             [v.rjust(w) for v, w in zip(r[1:], widths[1:])]).rstrip())
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# synthetic scenes


@dataclass
class SyntheticScene:
    truth_ms: Raster
    pan: Raster
    ms: Raster
    weights: np.ndarray
    seed: int
    virtual: Raster | None = None
    base_profile: SensorProfile | None = None

    @property
    def profile(self) -> SensorProfile:
        """The generating sensor profile with the true weights as provider weights."""
        base = self.base_profile or get_profile("Default")
        return replace(base, name=f"synthetic-{self.seed}",
                       mtf_ms=base.ms_mtf_for(self.ms.bands),
                       provider_weights=tuple(float(x) for x in self.weights))


def smooth_field(rng: np.random.Generator, height: int, width: int, correlation: float) -> np.ndarray:
    """Zero-mean, unit-variance Gaussian random field with a Gaussian spectrum."""
    noise = rng.standard_normal((height, width))
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    spectrum = np.exp(-2.0 * (np.pi * correlation) ** 2 * (fx**2 + fy**2))
    field_ = np.real(np.fft.ifft2(np.fft.fft2(noise) * spectrum))
    field_ -= field_.mean()
    std = field_.std()
    return field_ / std if std > 0 else field_


def make_synthetic(seed: int, width: int = 256, height: int = 256, bands: int = 4,
                   smoothness: float = 3.0, offset: float = 0.0,
                   profile: SensorProfile | None = None, scale: int = 4) -> SyntheticScene:
    """
    Band-limited random scene with known truth.

    ``smoothness`` is the spatial correlation length in high-resolution
    pixels. Bands share a common structure plus a band-specific part, so
    they are correlated like real spectra but not collinear. A nonzero
    ``offset`` adds a smooth positive virtual band to the Pan.
    """
    if width % scale or height % scale or width <= 0 or height <= 0:
        raise InvalidArgument(f"scene dims {height}x{width} must be positive multiples of {scale}")
    if bands < 1:
        raise InvalidArgument("scene needs at least one band")
    profile = profile or get_profile("Default")
    rng = np.random.default_rng(seed)
    shared = smooth_field(rng, height, width, smoothness)
    coarse = smooth_field(rng, height, width, smoothness * 4)
    truth = np.empty((bands, height, width))
    for k in range(bands):
        own = smooth_field(rng, height, width, smoothness)
        level = rng.uniform(300.0, 500.0)
        truth[k] = level + 40.0 * shared + 25.0 * own + 30.0 * coarse
    truth_ms = Raster(truth)
    w = rng.uniform(0.05, 1.0, bands)
    w /= w.sum()
    pan_data = intensity(truth_ms, w).data
    virtual = None
    if offset:
        v = offset * (1.0 + 0.25 * smooth_field(rng, height, width, smoothness * 8))
        virtual = Raster(v)
        pan_data = pan_data + v
    pan = Raster(pan_data)
    cfg = FusionConfig(profile=profile, scale=scale)
    ms = degrade_ms(truth_ms, cfg, scale)
    return SyntheticScene(truth_ms=truth_ms, pan=pan, ms=ms, weights=w, seed=seed,
                          virtual=virtual, base_profile=profile)
