"""Analytic inverse of the fringe projection: texture and wrapped-phase gradient.

The captured gray image is even-extended, transformed, and split into the
DC band (``q0 = a0 I0``) and the first sideband (``q1 = a1 I0 exp(i u)``,
``u = 2 pi f0 phi``).  The ratio ``q1 / q0`` gives the phase modulo pi,
and wrapping the gradient of that phase returns the true phase gradient
wherever ``|grad u| < pi/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft

from . import _kernels
from .core import (
    FringelabError,
    GradientField,
    InvalidInputError,
    NumericError,
    RgbImage,
    ScalarField,
    even_extend,
    resize_area,
)
from .projector import CapturedImage

OUTPUT_SIZE = 112
OVERLAP_LIMIT = 1e-3
VIOLATION_FRACTION = 0.9  # of pi/2


class FilterDesignError(FringelabError, ValueError):
    pass


class InsufficientDataError(NumericError):
    pass


class MissingPatternError(InvalidInputError):
    pass


def wrap(u):
    """``atan(tan(u))`` into (-pi/2, pi/2], with ``W(pi/2) = pi/2``."""
    out = _kernels.wrap(u)
    return float(out) if np.ndim(out) == 0 else out


def wrap_vector(v: GradientField | tuple) -> GradientField | tuple:
    """Wrap the modulus of a vector field, keeping its direction; ``W(0) = 0``."""
    if isinstance(v, GradientField):
        gx, gy = _kernels.wrap_vector(v.dx, v.dy)
        return GradientField(gx, gy, v.units)
    gx, gy = _kernels.wrap_vector(np.asarray(v[0], float), np.asarray(v[1], float))
    if np.ndim(gx) == 0:
        return float(gx), float(gy)
    return gx, gy


@dataclass(frozen=True)
class BandFilter:
    """Gaussian pass band centred on ``center`` (cycles/pixel).

    The Gaussian width is ``rolloff * half_width``.
    """

    center: tuple[float, float]
    half_width: float
    rolloff: float = 0.4

    @property
    def sigma(self) -> float:
        return self.rolloff * self.half_width

    def gain(self, fx, fy):
        d2 = (np.asarray(fx) - self.center[0]) ** 2 + (np.asarray(fy) - self.center[1]) ** 2
        return np.exp(-d2 / (2.0 * self.sigma**2))

    def leakage_into(self, other: "BandFilter") -> float:
        """Gain of this band at the centre of ``other``, relative to its peak."""
        return float(self.gain(*other.center))


def band_filters(f0: float, half_width: float | None = None, rolloff: float = 0.4) -> tuple[BandFilter, BandFilter]:
    """DC and first-sideband filters; raises if they leak into each other."""
    hw = f0 / 2.0 if half_width is None else half_width
    if not (hw > 0 and rolloff > 0):
        raise FilterDesignError("half width and rolloff must be positive")
    b0 = BandFilter((0.0, 0.0), hw, rolloff)
    b1 = BandFilter((f0, 0.0), hw, rolloff)
    leak = max(b0.leakage_into(b1), b1.leakage_into(b0))
    if leak > OVERLAP_LIMIT:
        raise FilterDesignError(f"q0 and q1 bands overlap: cross gain {leak:.3g} > {OVERLAP_LIMIT:g}")
    return b0, b1


@lru_cache(maxsize=16)
def _masks(shape: tuple[int, int], f0: float, half_width: float, rolloff: float):
    """Gains on the half spectrum of the 2H x 2W extension, plus the H x W DCT low pass.

    The extension is real, so only non-negative ``fx`` columns are kept; the
    energy weights fold in the mirrored columns.  The sideband is synthesised
    from the non-negative half alone: its gain at ``fx < 0`` never exceeds
    its gain at DC, which the overlap guard already bounds.
    """
    b0, b1 = band_filters(f0, half_width, rolloff)
    fy = scipy.fft.fftfreq(shape[0])[:, None]
    fx = scipy.fft.rfftfreq(shape[1])[None, :]
    m0 = b0.gain(fx, fy)
    m1 = b1.gain(fx, fy)
    twice = np.full(fx.shape, 2.0)
    twice[:, 0] = twice[:, -1] = 1.0  # DC and Nyquist columns are unpaired
    w0 = twice * m0**2
    w1 = m1**2 + (twice - 1.0) * b1.gain(-fx, fy) ** 2
    # DCT-II bin k of an N-sample signal sits at k / 2N cycles/pixel
    m0_dct = b0.gain(fx[:, : shape[1] // 2], fy[: shape[0] // 2])
    guard = (fx >= 0.4 * f0) & (fx <= 0.6 * f0) & np.ones_like(fy, dtype=bool)
    for m in (m1, w0, w1, m0_dct, guard):
        m.setflags(write=False)
    return m1, w0, w1, m0_dct, guard


@dataclass(frozen=True)
class FilterConfig:
    half_width: float | None = None  # cycles/pixel; default f0 / 2
    rolloff: float = 0.4
    floor: float = 1e-4  # of median |q0|
    output_size: int = OUTPUT_SIZE

    def resolved_half_width(self, f0: float) -> float:
        return f0 / 2.0 if self.half_width is None else self.half_width


@dataclass(frozen=True)
class Bands:
    q0: np.ndarray  # real, a0 * I0 (gray)
    q1: np.ndarray  # complex, demodulated first sideband
    lowpass_rgb: np.ndarray  # per-channel DC band, H x W x 3
    band_energy_ratio: float
    guard_band_ratio: float


def _pattern_of(captured: CapturedImage):
    if captured.pattern is None:
        raise MissingPatternError("captured image carries no pattern metadata")
    return captured.pattern


def isolate_bands(captured: CapturedImage, f0: float | None = None, config: FilterConfig = FilterConfig()) -> Bands:
    """Split the capture into the DC band and the demodulated first sideband."""
    if f0 is None:
        f0 = _pattern_of(captured).f0
    img = captured.image.data
    h, w = img.shape[:2]
    shape = (2 * h, 2 * w)
    m1, w0, w1, m0_dct, guard = _masks(shape, float(f0), float(config.resolved_half_width(f0)), float(config.rolloff))

    # An even filter on the even extension is a DCT-domain filter on the
    # original grid, at a quarter of the transform size.
    planes = np.ascontiguousarray(np.moveaxis(img, -1, 0))
    coeffs = scipy.fft.dctn(planes, type=2, axes=(1, 2))
    low = np.moveaxis(scipy.fft.idctn(coeffs * m0_dct, type=2, axes=(1, 2)), 0, -1)

    gray_spec = scipy.fft.rfft2(even_extend(img.mean(axis=2)))
    # inverse over rows first, then columns, keeping only the first quadrant
    rows = scipy.fft.ifft(gray_spec * m1, axis=0)[:h]
    side = scipy.fft.ifft(rows, n=2 * w, axis=1)[:, :w]
    carrier = np.exp(-2j * np.pi * f0 * (np.arange(w) + 0.5))
    q1 = side * carrier[None, :]
    q0 = low.mean(axis=2)

    power = gray_spec.real**2 + gray_spec.imag**2
    e0 = float(np.sum(power * w0))
    e1 = float(np.sum(power * w1))
    mag = np.sqrt(power)
    dc = float(mag[0, 0])
    guard_ratio = float(mag[guard].max() / dc) if dc > 0 else float("inf")
    return Bands(q0, q1, low, e1 / e0 if e0 > 0 else float("inf"), guard_ratio)


@dataclass(frozen=True)
class WrappedPhase:
    phase: ScalarField  # pixels, in (-T/4, T/4]; 0 where invalid
    valid: np.ndarray

    @property
    def masked_fraction(self) -> float:
        return float(1.0 - self.valid.mean())


def extract_wrapped_phase(q0: np.ndarray, q1: np.ndarray, f0: float, floor: float = 1e-4, pitch_mm=None) -> WrappedPhase:
    """Phase of ``q1 / q0`` folded into (-pi/2, pi/2], in pixels.

    Uses ``atan(Im/Re)`` rather than the two-argument arctangent, so the
    result is defined modulo half a period.
    """
    q0 = np.asarray(q0, dtype=float)
    ref = np.median(np.abs(q0))
    valid = np.abs(q0) > floor * ref
    ratio = np.zeros(q1.shape, dtype=complex)
    ratio[valid] = q1[valid] / q0[valid]
    u = wrap(np.arctan2(ratio.imag, ratio.real))
    u = np.where(valid, u, 0.0)
    return WrappedPhase(ScalarField(u / (2.0 * np.pi * f0), pitch_mm), valid)


@dataclass(frozen=True)
class PhaseGradient:
    grad: GradientField  # d(phi)/dx, d(phi)/dy in pixels per pixel
    violations: np.ndarray
    valid: np.ndarray

    @property
    def violation_count(self) -> int:
        return int(self.violations.sum())


def extract_gradient(wrapped: WrappedPhase | ScalarField, f0: float, valid: np.ndarray | None = None) -> PhaseGradient:
    """True phase gradient from the wrapped phase.

    One-sided differences of ``u = 2 pi f0 phi_W`` are wrapped before being
    averaged into the central estimate, which absorbs the pi jumps of
    ``phi_W``; the vector result is then wrapped as a whole.  Pixels whose
    one-sided steps come within 10% of pi/2 are flagged as violations.
    """
    if isinstance(wrapped, WrappedPhase):
        field_, valid = wrapped.phase, wrapped.valid
    else:
        field_ = wrapped
    data = field_.data
    if valid is None:
        valid = np.ones(data.shape, dtype=bool)
    if valid.mean() < 0.5:
        raise InsufficientDataError(f"only {100 * valid.mean():.0f}% of phase pixels are valid")
    k = 2.0 * np.pi * f0
    gx, gy, worst = _kernels.wrapped_gradient(k * data)
    gx, gy = _kernels.wrap_vector(gx, gy)
    # a pixel is usable only when it and its 4 neighbours are valid
    ok = valid.copy()
    ok[1:, :] &= valid[:-1, :]
    ok[:-1, :] &= valid[1:, :]
    ok[:, 1:] &= valid[:, :-1]
    ok[:, :-1] &= valid[:, 1:]
    bound = VIOLATION_FRACTION * np.pi / 2.0
    violations = ok & ((worst > bound) | (np.hypot(gx, gy) > bound))
    gx = np.where(ok, gx / k, 0.0)
    gy = np.where(ok, gy / k, 0.0)
    return PhaseGradient(GradientField(gx, gy, "phase-px/px"), violations, ok)


def recover_texture(captured: CapturedImage, f0: float | None = None, config: FilterConfig = FilterConfig(), bands: Bands | None = None) -> RgbImage:
    """Low-resolution texture: DC band of each channel over ``a0``."""
    pattern = _pattern_of(captured)
    a0 = pattern.a0
    if not a0 > 0:
        raise InvalidInputError("pattern mean a0 must be positive")
    if bands is None:
        bands = isolate_bands(captured, f0 if f0 is not None else pattern.f0, config)
    tex = np.clip(bands.lowpass_rgb / a0, 0.0, 1.0)
    n = config.output_size
    return RgbImage.clipped(resize_area(tex, n, n))


@dataclass(frozen=True)
class DecompositionResult:
    texture: RgbImage  # output_size^2 x 3
    grad: GradientField  # output_size^2, phase px per full-resolution px
    phase_wrapped: ScalarField  # full resolution
    grad_full: GradientField  # full resolution
    valid: np.ndarray
    violations: np.ndarray
    phase_per_mm: float | None
    diagnostics: dict = field(default_factory=dict)

    def depth_gradient(self) -> GradientField:
        """grad z in mm per full-resolution pixel (phase gradient over b f / q^2 / pitch)."""
        if not self.phase_per_mm:
            raise InvalidInputError("rig or pitch unknown; depth scale unavailable")
        s = 1.0 / self.phase_per_mm
        return GradientField(self.grad.dx * s, self.grad.dy * s, "mm/px")


def decompose(captured: CapturedImage, config: FilterConfig = FilterConfig()) -> DecompositionResult:
    pattern = _pattern_of(captured)
    f0 = pattern.f0
    bands = isolate_bands(captured, f0, config)
    wrapped = extract_wrapped_phase(bands.q0, bands.q1, f0, config.floor, captured.pitch_mm)
    pg = extract_gradient(wrapped, f0)
    texture = recover_texture(captured, f0, config, bands)
    n = config.output_size
    grad = GradientField(resize_area(pg.grad.dx, n, n), resize_area(pg.grad.dy, n, n), pg.grad.units)
    phase_per_mm = None
    if captured.rig is not None and captured.pitch_mm:
        phase_per_mm = captured.rig.phase_per_mm(captured.pitch_mm)
    diagnostics = {
        "band_energy_ratio": bands.band_energy_ratio,
        "guard_band_ratio": bands.guard_band_ratio,
        "masked_fraction": wrapped.masked_fraction,
        "wrap_violations": pg.violation_count,
        "sideband_present": bool(bands.band_energy_ratio > 1e-4),
        "texture_smooth": bool(bands.guard_band_ratio < 1e-3),
    }
    return DecompositionResult(texture, grad, wrapped.phase, pg.grad, pg.valid, pg.violations, phase_per_mm, diagnostics)
