import numpy as np
import pytest

from fringelab.core import (
    GradientField,
    InvalidInputError,
    RgbImage,
    Rng,
    ScalarField,
    Spectrum,
    SymmetryViolationError,
    area_matrix,
    central_gradient,
    direct_dft2,
    even_extend,
    fft2,
    ifft2,
    resize_area,
)


def test_fft2_matches_definition_sum_small_grids():
    rng = np.random.default_rng(1)
    for h in (2, 3, 5, 8):
        for w in (2, 4, 7, 16):
            x = rng.normal(size=(h, w))
            assert np.max(np.abs(fft2(x).coeffs - direct_dft2(x))) < 1e-9


def test_direct_dft_known_values():
    # delta at the origin has a flat spectrum; a constant has only DC
    d = np.zeros((4, 6))
    d[0, 0] = 1.0
    assert np.allclose(direct_dft2(d), 1.0)
    c = direct_dft2(np.full((4, 6), 2.0))
    assert c[2, 3] == pytest.approx(48.0)
    c[2, 3] = 0
    assert np.max(np.abs(c)) < 1e-12


def test_fft2_dc_at_centre_and_frequency_axes():
    s = fft2(np.ones((8, 10)))
    assert s.dc_index == (4, 5)
    assert s.coeffs[4, 5] == pytest.approx(80.0)
    assert s.fx[5] == 0.0 and s.fy[4] == 0.0
    assert s.fx[0] == pytest.approx(-0.5)


def test_fft2_rejects_degenerate_grid():
    with pytest.raises(InvalidInputError):
        fft2(np.ones((1, 8)))


def test_roundtrip_and_hermitian_two_tone():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(12, 9))
    back = ifft2(fft2(ScalarField(x)))
    assert np.max(np.abs(back.data - x)) < 1e-12
    # Hermitian pair at +-f0 -> pure cosine
    n, k = 24, 4
    c = np.zeros((n, n), complex)
    c[n // 2, n // 2 + k] = c[n // 2, n // 2 - k] = n * n / 2
    out = ifft2(Spectrum(c)).data
    xs = np.arange(n)
    assert np.allclose(out, np.cos(2 * np.pi * k * xs / n)[None, :], atol=1e-12)


def test_ifft2_rejects_non_hermitian():
    c = np.zeros((8, 8), complex)
    c[4, 5] = 10.0
    with pytest.raises(SymmetryViolationError):
        ifft2(Spectrum(c))
    _, res = ifft2(Spectrum(np.ones((8, 8))), return_residue=True)
    assert res < 1e-12


def test_central_gradient_exact_on_quadratic():
    x = np.arange(32.0)
    g = central_gradient(np.tile(x**2, (5, 1)))
    assert np.allclose(g.dx[:, 1:-1], 2 * x[1:-1])
    assert np.allclose(g.dy, 0.0)
    with pytest.raises(InvalidInputError):
        central_gradient(np.ones((2, 5)))


def test_containers_are_read_only_and_validated():
    f = ScalarField(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        f.data[0, 0] = 1.0
    with pytest.raises(InvalidInputError):
        RgbImage(np.full((2, 2, 3), 1.5))
    with pytest.raises(InvalidInputError):
        ScalarField(np.array([[np.nan]]))
    with pytest.raises(InvalidInputError):
        GradientField(np.zeros((2, 2)), np.zeros((2, 3)))
    assert RgbImage.clipped(np.full((2, 2, 3), -1.0)).data.max() == 0.0


def test_rng_streams_reproducible_and_keyed():
    a = Rng(7).child(3, 1).normal(size=5)
    b = Rng(7, (3, 1)).normal(size=5)
    c = Rng(7).child(3, 2).normal(size=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert Rng(7).describe()["algorithm"] == "numpy.PCG64"
    with pytest.raises(InvalidInputError):
        Rng(-1)


def test_even_extend_symmetry():
    a = np.arange(12.0).reshape(3, 4)
    e = even_extend(a)
    assert e.shape == (6, 8)
    assert np.array_equal(e[:3, :4], a)
    assert np.array_equal(e[:, ::-1], e)
    assert np.array_equal(e[::-1, :], e)


def test_resize_area_block_mean_and_mass():
    rng = np.random.default_rng(3)
    a = rng.uniform(size=(12, 12, 3))
    r = resize_area(a, 4, 4)
    blocks = a.reshape(4, 3, 4, 3, 3).mean(axis=(1, 3))
    assert np.allclose(r, blocks)
    m = area_matrix(7, 20)
    assert np.allclose(m.sum(axis=1), 1.0)
    # non-integer factor keeps the mean
    b = rng.uniform(size=(480, 480))
    assert resize_area(b, 112, 112).mean() == pytest.approx(b.mean())
