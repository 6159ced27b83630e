import math

import numpy as np
import pytest

from fringelab.core import InvalidInputError
from fringelab.pattern import (
    FringePattern,
    UndefinedRatioError,
    UndersampledPatternError,
    make_pattern,
    profile_csv,
    smoothness_check,
    spectral_profile,
)


def _numeric_coefficient(p, n, samples=60000):
    x = (np.arange(samples) + 0.5) / samples * p.period_px
    return np.mean(p.evaluate(x) * np.exp(-2j * np.pi * n * x / p.period_px))


@pytest.mark.parametrize("profile", ["sinusoid", "binary"])
def test_coefficients_match_numerical_integral(profile):
    p = make_pattern(6, profile, 0.8)
    for n in range(0, 6):
        assert abs(p.coefficient(n) - _numeric_coefficient(p, n)) < 1e-4


def test_square_wave_coefficients():
    p = make_pattern(6, "binary", 1.0)
    assert p.a0 == pytest.approx(0.5)
    assert abs(p.coefficient(1)) == pytest.approx(1 / math.pi)
    assert p.coefficient(2) == 0
    s = make_pattern()
    assert s.a0 == 0.5 and s.coefficient(1) == 0.25 and s.coefficient(2) == 0


def test_reconstruction_converges_for_sinusoid():
    p = make_pattern()
    x = np.linspace(0, 12, 97)
    assert np.max(np.abs(p.reconstruct(x, 1) - p.evaluate(x))) < 1e-12


def test_sampled_tile_close_to_profile():
    p = make_pattern()
    x = np.linspace(-30, 30, 1001)
    # linear interpolation of a 32x oversampled cosine
    assert np.max(np.abs(p.sample(x) - p.evaluate(x))) < 1e-3
    img = p.image(4, 12)
    assert img.shape == (4, 12) and np.allclose(img[0], img[3])


def test_pattern_limits():
    with pytest.raises(UndersampledPatternError):
        make_pattern(3)
    with pytest.raises(InvalidInputError):
        make_pattern(6, "triangle")
    with pytest.raises(InvalidInputError):
        make_pattern(6, "sinusoid", 0.0)
    p = make_pattern()
    assert p.fringe_width_mm() == pytest.approx(2.5)
    assert p.validate_width()
    assert not make_pattern(18).validate_width()
    assert FringePattern.from_json(p.to_json()) == p


def test_smoothness_check():
    n = 480
    y, x = np.mgrid[0:n, 0:n]
    blob = np.exp(-((x - 240) ** 2 + (y - 240) ** 2) / (2 * 40.0**2))
    assert smoothness_check(blob, 1 / 6)
    rng = np.random.default_rng(0)
    rep = smoothness_check(0.5 + 0.2 * (rng.uniform(size=(n, n)) > 0.5), 1 / 6)
    assert not rep and rep.worst_ratio > 1e-3
    with pytest.raises(UndefinedRatioError):
        smoothness_check(np.cos(2 * np.pi * x / 8.0), 1 / 6)


def test_spectral_profile_sections():
    p = make_pattern()
    prof = spectral_profile(p.image(96, 96), (0.0, 45.0, 90.0))
    r = prof["radius"]
    # the carrier appears on the horizontal section only
    k = int(np.argmin(np.abs(r - 1 / 6)))
    assert prof[0.0][k] > prof[90.0][k] + 5
    assert profile_csv(prof).splitlines()[0] == "radius,deg_0,deg_45,deg_90"
    with pytest.raises(InvalidInputError):
        spectral_profile(np.ones((4, 6)))
