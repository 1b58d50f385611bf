"""
psharp command line.

    psharp fuse --ms MS.psr --pan PAN.psr --out FUSED.psr [--method CS_a] [--correction NC]
    psharp validate (--ms MS --pan PAN | --synthetic | --fixtures) --out DIR
    psharp estimate --ms MS.psr --pan PAN.psr
    psharp convert IN OUT

Exit codes: 0 success, 1 runtime/numeric error, 2 usage error. Errors are
reported as a single ``psharp: error: <reason>`` line on stderr.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as rio
from .enhance import HAZE_BAND_MIN, HAZE_PERCENTILE4
from .errors import InvalidArgument, PsharpError
from .filters import CUTOFF_MODES, KINDS
from .fusion import FusionConfig, fuse_detailed, lowres_pan, mtf_filter, parse_correction, parse_method
from .raster import Raster
from .spectral import align_pan, estimate_shift, estimate_weights, resolve_profile
from .validate import (
    FIXTURE_DATASETS,
    cross_scale_correlation,
    fixture_runs,
    format_correlation_table,
    format_quality_table,
    format_records,
    make_synthetic,
    run_matrix,
)

log = logging.getLogger("psharp")

HAZE_FLAGS = {"min": HAZE_BAND_MIN, "percentile4": HAZE_PERCENTILE4}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    ms: Path | None = None
    pan: Path | None = None
    out: Path | None = None
    profile: str = "Default"
    method: str = "CS_additive"
    correction: str = "NC"
    seed: int = 0
    scale: int = 4
    filter_kind: str = "gaussian"
    cutoff_mode: str = "mtf_paper"
    hist: str = "full"
    haze: str = HAZE_BAND_MIN

    def check_inputs(self):
        for p in (self.ms, self.pan):
            if p is not None and not p.is_file():
                raise UsageError(f"input file not found: {p}")


def _manifest(args) -> RunManifest:
    try:
        method = parse_method(args.method) if getattr(args, "method", None) else "CS_additive"
    except InvalidArgument:
        raise UsageError("unknown method " + repr(args.method)) from None
    try:
        correction = parse_correction(args.correction) if getattr(args, "correction", None) else "NC"
    except InvalidArgument:
        raise UsageError("unknown correction " + repr(args.correction)) from None
    m = RunManifest(
        command=args.command,
        ms=Path(args.ms) if getattr(args, "ms", None) else None,
        pan=Path(args.pan) if getattr(args, "pan", None) else None,
        out=Path(args.out) if getattr(args, "out", None) else None,
        profile=args.profile,
        method=method,
        correction=correction,
        seed=args.seed,
        scale=args.scale,
        filter_kind=args.filter,
        cutoff_mode=args.cutoff_mode,
        hist=args.hist,
        haze=HAZE_FLAGS[args.haze],
    )
    m.check_inputs()
    return m


def _config(m: RunManifest, **overrides) -> FusionConfig:
    try:
        profile = resolve_profile(m.profile)
    except InvalidArgument as exc:
        raise UsageError(str(exc)) from None
    profile = overrides.pop("profile", profile)
    spec = mtf_filter(profile, m.scale, kind=m.filter_kind, cutoff_mode=m.cutoff_mode)
    return FusionConfig(method=m.method, correction=m.correction, hist_variant=m.hist,
                        haze_mode=m.haze, profile=profile, scale=m.scale, filter=spec, **overrides)


def _fmt_vec(v) -> str:
    return " ".join(f"{x:.6g}" for x in v)


def _read_pair(m: RunManifest) -> tuple[Raster, Raster]:
    if m.ms is None or m.pan is None:
        raise UsageError("--ms and --pan are required")
    return rio.read_raster(m.ms), rio.read_raster(m.pan)


def cmd_fuse(args) -> int:
    m = _manifest(args)
    if m.out is None:
        raise UsageError("--out is required")
    cfg = _config(m)
    if not cfg.is_applicable:
        raise UsageError(f"correction {cfg.correction} is not applicable to {cfg.method}")
    ms, pan = _read_pair(m)
    w0 = cfg.profile.weights_for(ms.bands)
    shift = estimate_shift(ms, pan, w0, args.window)
    print(f"shift: {shift[0]} {shift[1]}")
    if args.align:
        pan = align_pan(pan, shift)
    res = fuse_detailed(ms, pan, cfg)
    print(f"weights: {_fmt_vec(res.weights)}")
    if res.haze is not None:
        print(f"haze: {_fmt_vec(res.haze.per_band)}")
        print(f"intensity_haze: {res.haze.intensity_haze:.6g}")
    print(f"clamped: {res.clamped}")
    out = res.image
    if args.clip_negative:
        n_neg = int((out.data < 0).sum())
        out = out.with_data(np.maximum(out.data, 0.0))
        print(f"clipped_negative: {n_neg}")
    rio.write_raster(m.out, out)
    print(f"wrote: {m.out} ({out.bands} bands, {out.height}x{out.width})")
    return 0


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()


def cmd_validate(args) -> int:
    m = _manifest(args)
    if m.out is None:
        raise UsageError("--out is required")
    sources = sum([bool(args.fixtures), bool(args.synthetic), m.ms is not None])
    if sources != 1:
        raise UsageError("choose exactly one of --fixtures, --synthetic, or --ms/--pan")
    datasets: dict[str, list] = {}
    if args.fixtures:
        for d in FIXTURE_DATASETS:
            datasets[d] = fixture_runs(d)
    elif args.synthetic:
        size = args.size
        scene = make_synthetic(m.seed, size, size, args.bands, profile=_config(m).profile,
                               scale=m.scale)
        cfg = _config(m, profile=scene.profile)
        datasets[f"synthetic-{m.seed}"] = run_matrix(scene.ms, scene.pan, dataset=f"synthetic-{m.seed}",
                                                     base_cfg=cfg, seed=m.seed)
    else:
        ms, pan = _read_pair(m)
        name = args.dataset or m.ms.stem
        datasets[name] = run_matrix(ms, pan, dataset=name, base_cfg=_config(m), seed=m.seed)

    m.out.mkdir(parents=True, exist_ok=True)
    tables = {}
    for name, runs in datasets.items():
        slug = _slug(name)
        (m.out / f"quality_{slug}.txt").write_text(format_quality_table(runs))
        (m.out / f"records_{slug}.tsv").write_text(format_records(runs))
        tables[name] = cross_scale_correlation(runs)
    corr = format_correlation_table(tables)
    (m.out / "correlation.txt").write_text(corr)
    n = sum(len(r.records) for runs in datasets.values() for r in runs)
    print(f"records: {n}")
    print(corr, end="")
    return 0


def cmd_estimate(args) -> int:
    m = _manifest(args)
    cfg = _config(m)
    ms, pan = _read_pair(m)
    w0 = cfg.profile.weights_for(ms.bands)
    w, res = estimate_weights(ms, lowres_pan(pan, cfg, ms.bands), w0, return_result=True)
    print(f"weights: {_fmt_vec(w)}")
    print(f"residual: {res.residual:.6g}")
    dx, dy = estimate_shift(ms, pan, w, args.window)
    print(f"shift: {dx} {dy}")
    return 0


def cmd_convert(args) -> int:
    src = Path(args.input)
    if not src.is_file():
        raise UsageError(f"input file not found: {src}")
    r = rio.read_raster(src)
    if args.band is not None:
        r = r.band(args.band)
    rio.write_raster(args.output, r)
    print(f"wrote: {args.output} ({r.bands} bands, {r.height}x{r.width})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psharp", description="CS/HPF pansharpening and validation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, pair_required=False):
        p.add_argument("--ms", required=pair_required, help="multispectral raster (PSRAS1 or PGM)")
        p.add_argument("--pan", required=pair_required, help="panchromatic raster")
        p.add_argument("--profile", default="Default", help="built-in sensor name or profile file")
        p.add_argument("--scale", type=int, default=4)
        p.add_argument("--filter", choices=KINDS, default="gaussian")
        p.add_argument("--cutoff-mode", choices=CUTOFF_MODES, default="mtf_paper")
        p.add_argument("--hist", choices=("full", "simple"), default="full")
        p.add_argument("--haze", choices=tuple(HAZE_FLAGS), default="min")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--window", type=int, default=4, help="shift search half-width (pixels)")

    p = sub.add_parser("fuse", help="pansharpen one MS/Pan pair")
    common(p, pair_required=True)
    p.add_argument("--method", default="CS_a")
    p.add_argument("--correction", default="NC")
    p.add_argument("--out", required=True)
    p.add_argument("--align", action="store_true", help="apply the estimated Pan shift before fusion")
    p.add_argument("--clip-negative", action="store_true", help="clamp negative radiances to 0")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("validate", help="run the method x correction x protocol matrix")
    common(p)
    p.add_argument("--fixtures", action="store_true", help="use the published quality tables")
    p.add_argument("--synthetic", action="store_true", help="generate a synthetic scene")
    p.add_argument("--size", type=int, default=256, help="synthetic Pan size")
    p.add_argument("--bands", type=int, default=4, help="synthetic band count")
    p.add_argument("--dataset", help="dataset label for --ms/--pan input")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_validate, method=None, correction=None)

    p = sub.add_parser("estimate", help="estimate band weights and Pan/MS shift")
    common(p, pair_required=True)
    p.set_defaults(func=cmd_estimate, method=None, correction=None, out=None)

    p = sub.add_parser("convert", help="convert between PGM and PSRAS1")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--band", type=int)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command (fuse, validate, estimate, convert)")
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except UsageError as exc:
        print(f"psharp: error: {exc}", file=sys.stderr)
        return 2
    except (PsharpError, OSError) as exc:
        print(f"psharp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
