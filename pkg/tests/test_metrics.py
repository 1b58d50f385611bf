import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psharp.errors import InvalidArgument, InvalidInput
from psharp.metrics import QualityRecord, ergas, pearson, rmse, sam
from psharp.raster import Raster


def px(*spectra):
    """Raster of shape (bands, 1, n) from per-pixel spectra."""
    return Raster(np.array(spectra, dtype=float).T[:, None, :])


def test_rmse_cases():
    a = np.array([0.0, 0.0])
    assert rmse(a, a) == 0.0
    assert rmse(a, np.array([3.0, 4.0])) == pytest.approx(math.sqrt(12.5))
    assert rmse(np.full(5, 2.0), np.full(5, -1.5)) == 3.5
    with pytest.raises(InvalidArgument):
        rmse(np.zeros(2), np.zeros(3))


def test_rmse_symmetry_and_triangle(rng):
    for _ in range(20):
        a, b, c = rng.normal(size=(3, 50))
        assert rmse(a, b) == pytest.approx(rmse(b, a), rel=1e-15)
        assert rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12


def test_ergas_cases():
    ref = Raster(np.full((1, 3, 3), 10.0))
    assert ergas(ref, ref) == 0.0
    assert ergas(Raster(np.full((1, 3, 3), 11.0)), ref, 4) == pytest.approx(2.5)
    ref2 = Raster(np.stack([np.full((2, 2), 10.0), np.full((2, 2), 50.0)]))
    test2 = Raster(np.stack([np.full((2, 2), 11.0), np.full((2, 2), 45.0)]))
    assert ergas(test2, ref2, 4) == pytest.approx(2.5)


def test_ergas_zero_mean():
    ref = Raster(np.array([[[1.0, -1.0]]]))
    with pytest.raises(InvalidInput):
        ergas(ref, ref)


def test_sam_cases():
    assert sam(px((1, 2), (3, 1)), px((1, 2), (3, 1))) == 0.0
    assert sam(px((1, 0)), px((0, 1))) == pytest.approx(90.0)
    assert sam(px((1, 1)), px((1, 0))) == pytest.approx(45.0)


def test_sam_matches_arccos(rng):
    t = Raster(rng.uniform(0, 10, (5, 6, 6)))
    r = Raster(rng.uniform(0, 10, (5, 6, 6)))
    a, b = t.data.reshape(5, -1), r.data.reshape(5, -1)
    cos = (a * b).sum(0) / np.linalg.norm(a, axis=0) / np.linalg.norm(b, axis=0)
    assert sam(t, r) == pytest.approx(np.degrees(np.arccos(cos)).mean(), abs=1e-9)


def test_sam_skips_zero_vectors():
    angle, skipped = sam(px((1, 1), (0, 0)), px((1, 0), (1, 0)), return_skipped=True)
    assert skipped == 1
    assert angle == pytest.approx(45.0)
    with pytest.raises(InvalidInput):
        sam(px((0, 0)), px((1, 0)))
    with pytest.raises(InvalidArgument):
        sam(Raster(np.ones((1, 2, 2))), Raster(np.ones((1, 2, 2))))


def test_ergas_scale_invariance(rng):
    for _ in range(10):
        ref = Raster(rng.uniform(10, 100, (3, 8, 8)))
        test = Raster(ref.data + rng.normal(0, 3, ref.shape))
        c = rng.uniform(0.01, 100)
        base = ergas(test, ref)
        assert abs(ergas(Raster(c * test.data), Raster(c * ref.data)) - base) < 1e-9


def test_sam_gain_invariance(rng):
    for _ in range(10):
        ref = Raster(rng.uniform(10, 100, (4, 8, 8)))
        test = Raster(ref.data + rng.normal(0, 5, ref.shape))
        gain = rng.uniform(0.1, 10, (1, 8, 8))
        assert abs(sam(Raster(gain * test.data), ref) - sam(test, ref)) < 1e-9


def test_pearson_cases():
    assert pearson((1, 2, 3), (2, 4, 6)) == pytest.approx(1.0)
    assert pearson((1, 2, 3), (6, 4, 2)) == pytest.approx(-1.0)
    assert pearson((1, None, 2, 3, float("nan")), (2, 5, 4, 6, 1)) == pytest.approx(1.0)
    with pytest.raises(InvalidInput):
        pearson((1, 1, 1), (1, 2, 3))
    with pytest.raises(InvalidInput):
        pearson((1, None), (2, 3))
    with pytest.raises(ValueError):
        pearson((1, 2), (1, 2, 3))


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    a=st.floats(0.01, 100),
    b=st.floats(-100, 100),
)
def test_pearson_affine_invariance(seed, a, b):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=(2, 12))
    base = pearson(x, y)
    assert pearson(a * x + b, y) == pytest.approx(base, abs=1e-9)
    assert pearson(x, a * y + b) == pytest.approx(base, abs=1e-9)


def test_quality_record_validation():
    r = QualityRecord("d", "reduced_4", "CS_additive", "HC")
    assert r.is_na
    with pytest.raises(InvalidArgument):
        QualityRecord("d", "reduced_8", "CS_additive", "NC", 1.0, 1.0)
    with pytest.raises(InvalidArgument):
        QualityRecord("d", "reduced_4", "CS_additive", "NC", -1.0, 1.0)
    with pytest.raises(InvalidArgument):
        QualityRecord("d", "reduced_4", "CS_additive", "NC", 1.0, 200.0)
