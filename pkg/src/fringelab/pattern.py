"""Periodic, y-invariant projection profiles and spectral checks on scene content."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import _kernels
from .core import DEFAULT_PITCH_MM, FringelabError, InvalidInputError, ScalarField, fft2

PROFILES = ("sinusoid", "binary")
N_MAX = 10
#: widest admissible fringe period over the face, in mm
MAX_FRINGE_MM = 7.2
SMOOTHNESS_RATIO = 1e-3


class UndersampledPatternError(InvalidInputError):
    """Period too short to separate the first sideband from the second."""


class UndefinedRatioError(FringelabError, ZeroDivisionError):
    pass


@dataclass(frozen=True)
class FringePattern:
    """Illumination profile ``p(x, y) = sum_n a_n exp(i 2 pi n f0 x)``.

    ``x`` is measured in camera pixels from the left edge of the first
    pixel, so pixel ``j`` is centred on ``x = j + 0.5``.  The profile is even
    about ``x = 0`` and takes values in ``[1 - contrast, 1]``.

    The projector image is represented by a tile of one period sampled
    ``oversample`` times per camera pixel; :meth:`sample` interpolates it
    linearly, as a projector with finer resolution than the camera would.
    """

    period_px: int = 6
    profile: str = "sinusoid"
    contrast: float = 1.0
    oversample: int = 32
    _tile: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise InvalidInputError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if int(self.period_px) != self.period_px:
            raise InvalidInputError("period_px must be an integer")
        object.__setattr__(self, "period_px", int(self.period_px))
        if self.period_px < 4:
            raise UndersampledPatternError(
                f"period {self.period_px} px < 4 px cannot isolate q1 from q2"
            )
        if not (0.0 <= self.contrast <= 1.0):
            raise InvalidInputError("contrast must lie in [0, 1]")
        if self.oversample < 1:
            raise InvalidInputError("oversample must be >= 1")
        xs = np.arange(self.period_px * self.oversample) / self.oversample
        tile = self.evaluate(xs)
        tile.setflags(write=False)
        object.__setattr__(self, "_tile", tile)

    @property
    def f0(self) -> float:
        return 1.0 / self.period_px

    @property
    def a0(self) -> float:
        return float(self.coefficient(0).real)

    def coefficient(self, n: int) -> complex:
        """Analytic Fourier-series coefficient ``a_n``."""
        c = self.contrast
        if n == 0:
            return complex(1.0 - c / 2.0)
        if self.profile == "sinusoid":
            return complex(c / 4.0) if abs(n) == 1 else 0j
        # square wave, bright for |x mod T| < T/4: c sin(n pi/2) / (n pi)
        if n % 2 == 0:
            return 0j
        sign = 1.0 if (abs(n) - 1) % 4 == 0 else -1.0
        return complex(c * sign / (abs(n) * np.pi))

    @property
    def coefficients(self) -> dict[int, complex]:
        return {n: self.coefficient(n) for n in range(-N_MAX, N_MAX + 1)}

    def evaluate(self, x) -> np.ndarray:
        """Exact profile at continuous positions ``x`` (pixels)."""
        x = np.asarray(x, dtype=float)
        c = self.contrast
        phase = 2.0 * np.pi * x / self.period_px
        if self.profile == "sinusoid":
            return (1.0 - c / 2.0) + (c / 2.0) * np.cos(phase)
        bright = np.cos(phase) >= 0.0
        return np.where(bright, 1.0, 1.0 - c)

    def reconstruct(self, x, n_max: int = N_MAX) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=complex)
        for n in range(-n_max, n_max + 1):
            out += self.coefficient(n) * np.exp(2j * np.pi * n * self.f0 * x)
        return out.real

    @property
    def tile(self) -> np.ndarray:
        return self._tile

    def sample(self, x) -> np.ndarray:
        """Linearly interpolated tile at positions ``x`` (pixels)."""
        pos = np.asarray(x, dtype=float) * self.oversample
        return _kernels.bilinear_periodic(self._tile, pos)

    def image(self, height: int, width: int) -> np.ndarray:
        """Undeformed pattern over an ``height x width`` frame (pixel centres)."""
        row = self.sample(np.arange(width) + 0.5)
        return np.broadcast_to(row, (height, width)).copy()

    def fringe_width_mm(self, pitch_mm: float = DEFAULT_PITCH_MM) -> float:
        return self.period_px * pitch_mm

    def validate_width(self, pitch_mm: float = DEFAULT_PITCH_MM) -> bool:
        """True when one period over the face is within :data:`MAX_FRINGE_MM`."""
        return self.fringe_width_mm(pitch_mm) <= MAX_FRINGE_MM

    def to_json(self) -> dict:
        return {"period_px": self.period_px, "profile": self.profile, "contrast": self.contrast}

    @classmethod
    def from_json(cls, d: dict) -> "FringePattern":
        return cls(int(d["period_px"]), d.get("profile", "sinusoid"), float(d.get("contrast", 1.0)))


def make_pattern(period_px: int = 6, profile: str = "sinusoid", contrast: float = 1.0) -> FringePattern:
    if not contrast > 0.0:
        raise InvalidInputError("contrast must lie in (0, 1]")
    return FringePattern(period_px, profile, contrast)


@dataclass(frozen=True)
class SmoothnessReport:
    smooth: bool
    worst_ratio: float
    worst_frequency: tuple[float, float]  # (fx, fy) cycles/pixel

    def __bool__(self):
        return self.smooth


def smoothness_check(field: ScalarField | np.ndarray, f0: float, threshold: float = SMOOTHNESS_RATIO) -> SmoothnessReport:
    """Spectral magnitude beyond ``|fx| > f0/2`` relative to DC must stay below ``threshold``."""
    spec = fft2(field)
    mag = np.abs(spec.coeffs)
    dc = mag[spec.dc_index]
    if dc <= 1e-12 * mag.max():
        raise UndefinedRatioError("DC coefficient is zero; smoothness ratio undefined")
    outside = np.abs(spec.fx) > f0 / 2.0
    if not outside.any():
        return SmoothnessReport(True, 0.0, (0.0, 0.0))
    sub = mag[:, outside]
    i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
    ratio = float(sub[i, j] / dc)
    freq = (float(spec.fx[outside][j]), float(spec.fy[i]))
    return SmoothnessReport(ratio < threshold, ratio, freq)


def spectral_profile(field: ScalarField | np.ndarray, orientations_deg=(0.0, 45.0, 90.0)) -> dict:
    """Log10-magnitude radial sections through DC.

    Returns ``{"radius": r, angle: values, ...}`` with ``r`` in cycles/pixel.
    Sections are read from the DC-centred log-magnitude by linear
    interpolation.
    """
    data = field.data if isinstance(field, ScalarField) else np.asarray(field, dtype=float)
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise InvalidInputError("spectral_profile needs a square field")
    n = data.shape[0]
    spec = fft2(data)
    mag = np.abs(spec.coeffs)
    logmag = np.log10(mag + 1e-300)
    c = n // 2
    radii = np.arange(0, n // 2)
    out: dict = {"radius": radii / n}
    for ang in orientations_deg:
        t = np.deg2rad(ang)
        cols = c + radii * np.cos(t)
        rows = c - radii * np.sin(t)
        out[float(ang)] = ndimage.map_coordinates(logmag, [rows, cols], order=1, mode="nearest")
    return out


def profile_csv(profile: dict) -> str:
    angles = [k for k in profile if k != "radius"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["radius"] + [f"deg_{a:g}" for a in angles])
    for i, r in enumerate(profile["radius"]):
        w.writerow([f"{r:.6f}"] + [f"{profile[a][i]:.6f}" for a in angles])
    return buf.getvalue()


def write_pattern_png(path: Path | str, pattern: FringePattern, height: int = 480, width: int = 480) -> None:
    from .io import save_png

    save_png(path, pattern.image(height, width))
