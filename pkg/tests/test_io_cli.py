import numpy as np
import pytest

from psharp import io as rio
from psharp.cli import main
from psharp.raster import Raster, shift_image
from psharp.validate import make_synthetic


def f32_raster(rng, shape=(3, 5, 7), pixel_size=0.5):
    return Raster(rng.normal(100, 30, shape).astype(np.float32).astype(np.float64), pixel_size)


# ---- PSRAS1


def test_psras_round_trip_bit_exact(tmp_path, rng):
    r = f32_raster(rng)
    path = tmp_path / "a.psr"
    rio.write_psras(path, r)
    back = rio.read_psras(path)
    assert back.data.tobytes() == r.data.tobytes()
    assert back.pixel_size == r.pixel_size
    rio.write_psras(tmp_path / "b.psr", back)
    assert (tmp_path / "b.psr").read_bytes() == path.read_bytes()


def test_psras_layout(rng):
    r = f32_raster(rng, (2, 3, 4), 2.0)
    blob = rio.encode_psras(r)
    head = b"PSRAS1\nwidth=4\nheight=3\nbands=2\npixel_size=2.0\n"
    assert blob.startswith(head)
    payload = np.frombuffer(blob[len(head):], dtype="<f4")
    assert payload.size == 24
    np.testing.assert_array_equal(payload.reshape(2, 3, 4), r.data)


@pytest.mark.parametrize(
    "blob",
    [
        b"PSRAS2\nwidth=1\nheight=1\nbands=1\npixel_size=1\n\x00\x00\x00\x00",
        b"PSRAS1\nwidth=1\nheight=1\n",
        b"PSRAS1\nwidth=1\nheight=1\nbands=1\npixel_size=1\n\x00\x00",
        b"PSRAS1\nheight=1\nwidth=1\nbands=1\npixel_size=1\n\x00\x00\x00\x00",
        b"PSRAS1\nwidth=x\nheight=1\nbands=1\npixel_size=1\n\x00\x00\x00\x00",
        b"PSRAS1\nwidth=0\nheight=1\nbands=1\npixel_size=1\n",
    ],
)
def test_psras_malformed(blob):
    with pytest.raises(rio.FormatError):
        rio.decode_psras(blob)


# ---- PGM


def test_pgm_ascii_round_trip(tmp_path):
    data = np.array([[[0.0, 1.0, 2.0], [300.0, 4.0, 65535.0]]])
    path = tmp_path / "x.pgm"
    rio.write_pgm(path, Raster(data))
    assert path.read_text().startswith("P2\n3 2\n65535\n")
    np.testing.assert_array_equal(rio.read_pgm(path).data, data)


def test_pgm_binary_and_comments(tmp_path):
    path = tmp_path / "b.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([1, 2, 3, 250]))
    np.testing.assert_array_equal(rio.read_pgm(path).data[0], [[1, 2], [3, 250]])
    path.write_bytes(b"P5 2 1 1000\n" + np.array([7, 999], dtype=">u2").tobytes())
    np.testing.assert_array_equal(rio.read_pgm(path).data[0], [[7, 999]])


def test_pgm_errors(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(rio.FormatError):
        rio.read_pgm(path)
    path.write_text("P2\n2 2\n255\n1 2 3\n")
    with pytest.raises(rio.FormatError):
        rio.read_pgm(path)
    with pytest.raises(rio.FormatError):
        rio.write_raster(tmp_path / "multi.pgm", Raster(np.ones((2, 2, 2))))


# ---- CLI


@pytest.fixture(scope="module")
def pair(tmp_path_factory):
    d = tmp_path_factory.mktemp("pair")
    sc = make_synthetic(21, 128, 128)
    rio.write_raster(d / "ms.psr", sc.ms)
    rio.write_raster(d / "pan.psr", sc.pan)
    return d, sc


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def parse_vec(out, key):
    line = next(l for l in out.splitlines() if l.startswith(key + ":"))
    return [float(v) for v in line.split(":", 1)[1].split()]


def test_cli_fuse(pair, capsys, tmp_path):
    d, sc = pair
    out_path = tmp_path / "f.psr"
    code, out, err = run(capsys, "fuse", "--ms", d / "ms.psr", "--pan", d / "pan.psr",
                         "--out", out_path, "--method", "CS_a", "--correction", "NC")
    assert code == 0, err
    fused = rio.read_raster(out_path)
    assert fused.shape == (sc.ms.bands, sc.pan.height, sc.pan.width)
    assert parse_vec(out, "shift") == [0, 0]
    assert len(parse_vec(out, "weights")) == 4
    assert "clamped: 0" in out


def test_cli_fuse_hc_prints_haze(pair, capsys, tmp_path):
    d, _ = pair
    code, out, _ = run(capsys, "fuse", "--ms", d / "ms.psr", "--pan", d / "pan.psr",
                       "--out", tmp_path / "h.psr", "--method", "hpf_m", "--correction", "HC",
                       "--haze", "percentile4", "--clip-negative")
    assert code == 0
    assert len(parse_vec(out, "haze")) == 4
    assert parse_vec(out, "intensity_haze")[0] > 0
    assert "clipped_negative:" in out


def test_cli_unknown_method(pair, capsys, tmp_path):
    d, _ = pair
    code, _, err = run(capsys, "fuse", "--ms", d / "ms.psr", "--pan", d / "pan.psr",
                       "--out", tmp_path / "x.psr", "--method", "wavelet")
    assert code == 2
    assert "unknown method" in err
    assert len(err.strip().splitlines()) == 1 and err.startswith("psharp: error:")


def test_cli_usage_errors(pair, capsys, tmp_path):
    d, _ = pair
    assert run(capsys, "fuse", "--ms", tmp_path / "nope.psr", "--pan", d / "pan.psr",
               "--out", tmp_path / "x.psr")[0] == 2
    assert run(capsys, "fuse", "--ms", d / "ms.psr", "--pan", d / "pan.psr",
               "--out", tmp_path / "x.psr", "--method", "CS_a", "--correction", "HC")[0] == 2
    assert run(capsys, "fuse", "--ms", d / "ms.psr")[0] == 2
    assert run(capsys, "fuse", "--ms", d / "ms.psr", "--pan", d / "pan.psr",
               "--out", tmp_path / "x.psr", "--filter", "box")[0] == 2
    assert run(capsys)[0] == 2


def test_cli_runtime_error(pair, capsys, tmp_path):
    d, _ = pair
    bad = tmp_path / "bad.psr"
    bad.write_bytes(b"NOTRASTER\n")
    code, _, err = run(capsys, "fuse", "--ms", bad, "--pan", d / "pan.psr", "--out", tmp_path / "o.psr")
    assert code == 1
    assert err.startswith("psharp: error:")


def test_cli_estimate_weights(pair, capsys):
    d, sc = pair
    code, out, _ = run(capsys, "estimate", "--ms", d / "ms.psr", "--pan", d / "pan.psr")
    assert code == 0
    np.testing.assert_allclose(parse_vec(out, "weights"), sc.weights, atol=1e-3)
    assert parse_vec(out, "shift") == [0, 0]
    assert parse_vec(out, "residual")[0] >= 0


def test_cli_estimate_shift(pair, capsys, tmp_path):
    d, sc = pair
    rio.write_raster(tmp_path / "moved.psr", shift_image(sc.pan, -2, 3))
    code, out, _ = run(capsys, "estimate", "--ms", d / "ms.psr", "--pan", tmp_path / "moved.psr")
    assert code == 0
    assert parse_vec(out, "shift") == [-2, 3]


def test_cli_estimate_single_band(capsys, tmp_path):
    sc = make_synthetic(2, 64, 64, bands=1)
    rio.write_raster(tmp_path / "ms.psr", sc.ms)
    rio.write_raster(tmp_path / "pan.psr", sc.pan)
    code, out, _ = run(capsys, "estimate", "--ms", tmp_path / "ms.psr", "--pan", tmp_path / "pan.psr")
    assert code == 0
    assert parse_vec(out, "weights")[0] == pytest.approx(1.0, abs=1e-3)


def test_cli_validate_synthetic(capsys, tmp_path):
    args = ("validate", "--synthetic", "--size", 64, "--seed", 4)
    code, out, err = run(capsys, *args, "--out", tmp_path / "a")
    assert code == 0, err
    assert "records: 72" in out
    records = (tmp_path / "a" / "records_synthetic_4.tsv").read_text().splitlines()[1:]
    assert len(records) == 72
    assert sum(l.endswith("na\tna") for l in records) == 12
    run(capsys, *args, "--out", tmp_path / "b")
    for name in ("records_synthetic_4.tsv", "quality_synthetic_4.txt", "correlation.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_validate_pair(pair, capsys, tmp_path):
    d, _ = pair
    code, out, _ = run(capsys, "validate", "--ms", d / "ms.psr", "--pan", d / "pan.psr",
                       "--dataset", "scene A", "--out", tmp_path)
    assert code == 0
    assert (tmp_path / "quality_scene_a.txt").exists()


def test_cli_validate_fixtures(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", "--fixtures", "--out", tmp_path)
    assert code == 0
    assert "records: 216" in out
    lines = (tmp_path / "correlation.txt").read_text().splitlines()
    assert lines[1].split()[:3] == ["WV-2", "ROI1", "0.23"]
    row1 = lines[1].split()[2:]
    assert row1[3] == "-0.96"


def test_cli_validate_source_choice(capsys, tmp_path):
    assert run(capsys, "validate", "--out", tmp_path)[0] == 2
    assert run(capsys, "validate", "--fixtures", "--synthetic", "--out", tmp_path)[0] == 2


def test_cli_convert(pair, capsys, tmp_path):
    d, _ = pair
    assert run(capsys, "convert", d / "ms.psr", tmp_path / "b2.psr", "--band", 2)[0] == 0
    assert run(capsys, "convert", d / "pan.psr", tmp_path / "p.pgm")[0] == 0
    assert run(capsys, "convert", tmp_path / "p.pgm", tmp_path / "p.psr")[0] == 0
    back = rio.read_raster(tmp_path / "p.psr")
    pan = rio.read_raster(d / "pan.psr")
    np.testing.assert_allclose(back.data, np.rint(pan.data), atol=0)
    assert run(capsys, "convert", tmp_path / "missing.pgm", tmp_path / "y.psr")[0] == 2


def test_cli_profile_file(pair, capsys, tmp_path):
    d, _ = pair
    cfg = tmp_path / "toy.cfg"
    cfg.write_text("name = Toy\nmtf_pan = 0.2\nmtf_ms = 0.3, 0.3, 0.3, 0.3\n")
    code, _, err = run(capsys, "estimate", "--ms", d / "ms.psr", "--pan", d / "pan.psr", "--profile", cfg)
    assert code == 0, err
    assert run(capsys, "estimate", "--ms", d / "ms.psr", "--pan", d / "pan.psr", "--profile", "Nope")[0] == 2
