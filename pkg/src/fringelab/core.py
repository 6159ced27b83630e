"""Grid types, the DFT engine and its brute-force oracle.

All arrays are row-major numpy arrays indexed ``[y, x]``.  Containers are
frozen and their arrays are marked read-only, so they can be shared freely
between threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft

#: 20 cm face bounding box sampled with 480 pixels.
DEFAULT_PITCH_MM = 200.0 / 480.0

RNG_ALGORITHM = "numpy.PCG64"


class FringelabError(Exception):
    """Base class for all errors raised by the package."""


class InvalidInputError(FringelabError, ValueError):
    pass


class SymmetryViolationError(FringelabError, ValueError):
    """Spectrum handed to :func:`ifft2` is not Hermitian."""


class NumericError(FringelabError, ArithmeticError):
    pass


def _frozen(a: np.ndarray, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScalarField:
    """Real H x W grid: depth maps (mm), gray images, phase maps (pixels)."""

    data: np.ndarray
    pitch_mm: float | None = DEFAULT_PITCH_MM

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2:
            raise InvalidInputError(f"ScalarField needs a 2-D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("ScalarField contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> "ScalarField":
        return ScalarField(data, self.pitch_mm)


@dataclass(frozen=True)
class RgbImage:
    """H x W x 3 linear RGB image with channel values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise InvalidInputError(f"RgbImage needs an H x W x 3 array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("RgbImage contains non-finite values")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise InvalidInputError("RgbImage channel values must lie in [0, 1]")
        object.__setattr__(self, "data", data)

    @classmethod
    def clipped(cls, data: np.ndarray) -> "RgbImage":
        return cls(np.clip(data, 0.0, 1.0))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    def luminance(self) -> np.ndarray:
        """Unweighted channel mean."""
        return self.data.mean(axis=2)


@dataclass(frozen=True)
class GradientField:
    """Two-channel grid of partial derivatives along x (columns) and y (rows)."""

    dx: np.ndarray
    dy: np.ndarray
    units: str = "per-pixel"

    def __post_init__(self):
        dx, dy = _frozen(self.dx), _frozen(self.dy)
        if dx.ndim != 2 or dx.shape != dy.shape:
            raise InvalidInputError("GradientField channels must be 2-D with equal shapes")
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
            raise InvalidInputError("GradientField contains non-finite values")
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)

    @property
    def height(self) -> int:
        return self.dx.shape[0]

    @property
    def width(self) -> int:
        return self.dx.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.dx.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.dx, self.dy)

    def stacked(self) -> np.ndarray:
        """H x W x 2 array with channels (dx, dy)."""
        return np.stack([self.dx, self.dy], axis=-1)


@dataclass(frozen=True)
class Spectrum:
    """DC-centred 2-D spectrum.

    ``coeffs[H//2, W//2]`` holds the DC term; ``fx`` and ``fy`` give the
    frequency (cycles/pixel) of every column and row.
    """

    coeffs: np.ndarray
    pitch_mm: float | None = DEFAULT_PITCH_MM

    def __post_init__(self):
        c = _frozen(self.coeffs, np.complex128)
        if c.ndim != 2:
            raise InvalidInputError("Spectrum needs a 2-D coefficient array")
        object.__setattr__(self, "coeffs", c)

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    @property
    def fx(self) -> np.ndarray:
        return np.fft.fftshift(np.fft.fftfreq(self.width))

    @property
    def fy(self) -> np.ndarray:
        return np.fft.fftshift(np.fft.fftfreq(self.height))

    @property
    def dc_index(self) -> tuple[int, int]:
        return self.height // 2, self.width // 2

    def at(self, fx: float, fy: float) -> complex:
        """Coefficient of the bin nearest to ``(fx, fy)``."""
        i = int(np.argmin(np.abs(self.fy - fy)))
        j = int(np.argmin(np.abs(self.fx - fx)))
        return complex(self.coeffs[i, j])


class Rng:
    """Seeded generator with a documented algorithm (numpy PCG64).

    Child streams are derived with :meth:`child`, which hashes the seed and
    a key path through ``SeedSequence``, so a sample's stream does not depend
    on how many other samples were drawn before it.
    """

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int, key: Sequence[int] = ()):
        if seed < 0 or seed >= 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int) -> "Rng":
        return Rng(self.seed, self.key + tuple(key))

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def describe(self) -> dict:
        return {"algorithm": self.algorithm, "seed": self.seed, "key": list(self.key)}


# ---------------------------------------------------------------------------
# transforms


def fft2(field: ScalarField | np.ndarray) -> Spectrum:
    """Forward 2-D DFT with the DC term moved to the centre."""
    data = field.data if isinstance(field, ScalarField) else np.asarray(field)
    pitch = field.pitch_mm if isinstance(field, ScalarField) else DEFAULT_PITCH_MM
    if data.ndim != 2 or min(data.shape) < 2:
        raise InvalidInputError(f"fft2 needs a 2-D grid with both sides >= 2, got {data.shape}")
    return Spectrum(np.fft.fftshift(scipy.fft.fft2(data)), pitch)


def ifft2(spec: Spectrum, *, tol: float = 1e-6, return_residue: bool = False):
    """Inverse of :func:`fft2` returning a real field.

    The imaginary part of the inverse is the Hermitian-symmetry residue.  If
    it exceeds ``tol`` relative to the field scale a
    :class:`SymmetryViolationError` is raised.
    """
    full = scipy.fft.ifft2(np.fft.ifftshift(spec.coeffs))
    residue = float(np.max(np.abs(full.imag))) if full.size else 0.0
    scale = max(1.0, float(np.max(np.abs(full.real))))
    if residue > tol * scale:
        raise SymmetryViolationError(
            f"imaginary residue {residue:.3g} exceeds {tol:g}; spectrum is not Hermitian"
        )
    out = ScalarField(full.real, spec.pitch_mm)
    return (out, residue) if return_residue else out


def direct_dft2(data: np.ndarray) -> np.ndarray:
    """DFT evaluated from the definition sum, DC-centred like :func:`fft2`.

    Each coefficient is ``sum_{m,n} x[m, n] exp(-2 pi i (k m / H + l n / W))``.
    The exponent tensor is built explicitly, so cost and memory grow as
    (H W)^2; meant for grids up to a few dozen pixels a side.
    """
    x = np.asarray(data, dtype=np.complex128)
    h, w = x.shape
    # integer reduction keeps the angles small and exact
    km = (np.arange(h)[:, None] * np.arange(h)[None, :]) % h
    ln = (np.arange(w)[:, None] * np.arange(w)[None, :]) % w
    ey = np.exp(-2j * np.pi * km / h)  # [k, m]
    ex = np.exp(-2j * np.pi * ln / w)  # [l, n]
    kernel = ey[:, None, :, None] * ex[None, :, None, :]  # [k, l, m, n]
    out = np.einsum("klmn,mn->kl", kernel, x)
    return np.fft.fftshift(out)


def central_gradient(field: ScalarField | np.ndarray) -> GradientField:
    """Central differences in the interior, one-sided differences at borders."""
    data = field.data if isinstance(field, ScalarField) else np.asarray(field, dtype=float)
    if data.ndim != 2 or min(data.shape) < 3:
        raise InvalidInputError(f"central_gradient needs at least 3 x 3 pixels, got {data.shape}")
    dy, dx = np.gradient(data)
    return GradientField(dx, dy)


# ---------------------------------------------------------------------------
# grid helpers used across modules


def even_extend(a: np.ndarray) -> np.ndarray:
    """Mirror ``a`` into a 2H x 2W tile that is even about the pixel edges.

    Treated as periodic, the tile is symmetric about x = -1/2 and x = W - 1/2,
    which removes the border jumps of a plain periodic DFT.
    """
    a = np.asarray(a)
    top = np.concatenate([a, a[:, ::-1]], axis=1)
    return np.concatenate([top, top[::-1, :]], axis=0)


def _area_matrix(n_out: int, n_in: int) -> np.ndarray:
    edges_in = np.arange(n_in + 1, dtype=float)
    edges_out = np.linspace(0.0, n_in, n_out + 1)
    lo = np.maximum(edges_out[:-1, None], edges_in[None, :-1])
    hi = np.minimum(edges_out[1:, None], edges_in[None, 1:])
    weights = np.clip(hi - lo, 0.0, None)
    return weights / weights.sum(axis=1, keepdims=True)


_AREA_CACHE: dict[tuple[int, int], np.ndarray] = {}


def area_matrix(n_out: int, n_in: int) -> np.ndarray:
    key = (n_out, n_in)
    m = _AREA_CACHE.get(key)
    if m is None:
        m = _area_matrix(n_out, n_in)
        m.setflags(write=False)
        _AREA_CACHE[key] = m
    return m


def resize_area(a: np.ndarray, height: int, width: int) -> np.ndarray:
    """Area-weighted resampling of the two leading axes (box filter)."""
    a = np.asarray(a, dtype=float)
    ry = area_matrix(height, a.shape[0])
    rx = area_matrix(width, a.shape[1])
    if a.ndim == 2:
        return ry @ a @ rx.T
    # channel-major copy keeps each matmul operand contiguous
    planes = np.ascontiguousarray(np.moveaxis(a, -1, 0))
    return np.moveaxis(ry @ planes @ rx.T, 0, -1)


def pixel_grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Column and row index grids ``(x, y)``."""
    y, x = np.mgrid[0:height, 0:width]
    return x.astype(float), y.astype(float)
