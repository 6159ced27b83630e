"""Presentation-attack synthesis: spectral-matched texture blur and flat/curved media."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft
import scipy.signal

from .core import InvalidInputError, RgbImage, Rng, ScalarField, resize_area

SPOOF_KINDS = ("planar", "parabolic", "polynomial")
EPSILON = 1e-6
DEFAULT_KERNEL_SIZE = 31
#: depth amplitude (mm) of one unit of the dimensionless spoof profiles
DEFAULT_DEPTH_SCALE_MM = 100.0


@dataclass(frozen=True)
class SpoofKernel:
    kernel: np.ndarray
    epsilon: float = EPSILON
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
            raise InvalidInputError("spoof kernel must be square with odd size")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    @classmethod
    def identity(cls, size: int = 1) -> "SpoofKernel":
        k = np.zeros((size, size))
        k[size // 2, size // 2] = 1.0
        return cls(k)


def _common_frame(images: Sequence, frame: tuple[int, int]) -> list[np.ndarray]:
    out = []
    for im in images:
        a = im.data if isinstance(im, ScalarField) else np.asarray(im, dtype=float)
        if a.ndim == 3:
            a = a.mean(axis=2)
        out.append(a if a.shape == frame else resize_area(a, *frame))
    return out


def _crop_kernel(full: np.ndarray, size: int) -> np.ndarray:
    """Centre, crop, symmetrise and normalise a transfer-function inverse."""
    h, w = full.shape
    if size > min(h, w):
        raise InvalidInputError(f"kernel size {size} exceeds exemplar frame {full.shape}")
    centred = np.fft.fftshift(full)
    cy, cx = h // 2, w // 2
    r = size // 2
    k = centred[cy - r : cy + r + 1, cx - r : cx + r + 1].copy()
    k = 0.5 * (k + k[::-1, ::-1])
    s = k.sum()
    if s == 0:
        raise InvalidInputError("kernel has zero DC gain")
    return k / s


def transfer_function(spoof_exemplars, genuine_exemplars, frame=None, epsilon: float = EPSILON) -> np.ndarray:
    """Mean spoof spectral magnitude over mean genuine magnitude (unshifted layout)."""
    if not spoof_exemplars or not genuine_exemplars:
        raise InvalidInputError("need at least one spoof and one genuine exemplar")
    if frame is None:
        g0 = genuine_exemplars[0]
        a = g0.data if isinstance(g0, ScalarField) else np.asarray(g0)
        frame = a.shape[:2]
    spoofs = _common_frame(spoof_exemplars, frame)
    genuine = _common_frame(genuine_exemplars, frame)
    g_mag = np.mean([np.abs(scipy.fft.fft2(a)) for a in spoofs], axis=0)
    q_mag = np.mean([np.abs(scipy.fft.fft2(a)) for a in genuine], axis=0)
    return g_mag / (q_mag + epsilon)


def estimate_kernel(
    spoof_exemplars: Sequence,
    genuine_exemplars: Sequence,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    frame: tuple[int, int] | None = None,
    epsilon: float = EPSILON,
) -> SpoofKernel:
    """Null-phase kernel that maps genuine spectral magnitudes onto spoof ones.

    Exemplars (gray or RGB) are resampled to a common ``frame``; the
    transfer function is the ratio of mean spectral magnitudes, its inverse
    transform is centred, cropped to ``kernel_size`` and renormalised to unit
    DC gain.  Taking magnitudes only makes the kernel even.
    """
    if kernel_size % 2 == 0 or kernel_size < 1:
        raise InvalidInputError("kernel_size must be a positive odd integer")
    ratio = transfer_function(spoof_exemplars, genuine_exemplars, frame, epsilon)
    full = scipy.fft.ifft2(ratio).real
    k = _crop_kernel(full, kernel_size)
    return SpoofKernel(k, epsilon, {"M": len(spoof_exemplars), "N": len(genuine_exemplars), "frame": list(ratio.shape)})


def apply_kernel(texture: RgbImage, kernel: SpoofKernel) -> RgbImage:
    """Per-channel convolution with even-symmetric borders."""
    k = kernel.kernel
    r = k.shape[0] // 2
    if k.shape[0] > min(texture.shape):
        raise InvalidInputError("kernel larger than image")
    if k.shape[0] == 1:
        return RgbImage.clipped(texture.data * k[0, 0])
    padded = np.pad(texture.data, ((r, r), (r, r), (0, 0)), mode="symmetric")
    out = np.stack(
        [scipy.signal.fftconvolve(padded[:, :, c], k, mode="valid") for c in range(3)], axis=-1
    )
    return RgbImage.clipped(out)


def surrogate_spoof_exemplar(texture: RgbImage | np.ndarray, factor: int = 2, blur_sigma: float = 1.5) -> np.ndarray:
    """Recapture stand-in: area downsample by ``factor``, linear upsample, Gaussian blur."""
    from scipy import ndimage

    a = texture.data if isinstance(texture, RgbImage) else np.asarray(texture, dtype=float)
    gray = a.mean(axis=2) if a.ndim == 3 else a
    h, w = gray.shape
    small = resize_area(gray, h // factor, w // factor)
    up = ndimage.zoom(small, (h / small.shape[0], w / small.shape[1]), order=1, mode="nearest", grid_mode=True)
    return ndimage.gaussian_filter(up, blur_sigma, mode="reflect")


@dataclass(frozen=True)
class SpoofDepthSpec:
    kind: str
    params: dict
    width: int = 480
    height: int = 480


def centred_coords(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel-centre coordinates relative to the frame centre."""
    y, x = np.mgrid[0:height, 0:width].astype(float)
    return x + 0.5 - width / 2.0, y + 0.5 - height / 2.0


def parabolic_profile(x, y, theta: float, a: float, c: float, w: float):
    u = np.asarray(x) * np.cos(theta) + np.asarray(y) * np.sin(theta)
    return (4.0 * a / w**2) * (u - c * w / 2.0) ** 2


def polynomial_profile(x, y, a, b, c, w: float, h: float):
    """Sum over i, j in 0..3 of w_ij a_ij (x/w - b_ij)^i (y/h - c_ij)^j, x and y from the corner."""
    x = np.asarray(x, dtype=float) / w
    y = np.asarray(y, dtype=float) / h
    z = np.zeros(np.broadcast(x, y).shape)
    for i in range(4):
        for j in range(4):
            wij = 10.0 ** (max(0, i - 1) * max(0, j - 1))
            z = z + wij * a[i, j] * (x - b[i, j]) ** i * (y - c[i, j]) ** j
    return z


def sample_spoof_spec(kind: str, rng: Rng, dims: tuple[int, int] = (480, 480)) -> SpoofDepthSpec:
    h, w = dims
    if kind == "planar":
        params = {}
    elif kind == "parabolic":
        params = {
            "theta": float(rng.normal(0.0, np.pi / 20.0)),
            "a": float(rng.normal(0.0, 0.2)),
            "c": float(rng.normal(0.0, 0.1)),
        }
    elif kind == "polynomial":
        params = {k: rng.uniform(0.0, 1.0, (4, 4)).tolist() for k in ("a", "b", "c")}
    else:
        raise InvalidInputError(f"unknown spoof kind {kind!r}; expected one of {SPOOF_KINDS}")
    return SpoofDepthSpec(kind, params, w, h)


def render_spoof_depth(spec: SpoofDepthSpec, scale_mm: float = DEFAULT_DEPTH_SCALE_MM, pitch_mm=None) -> ScalarField:
    from .core import DEFAULT_PITCH_MM

    pitch = DEFAULT_PITCH_MM if pitch_mm is None else pitch_mm
    h, w = spec.height, spec.width
    if spec.kind == "planar":
        return ScalarField(np.zeros((h, w)), pitch)
    if spec.kind == "parabolic":
        x, y = centred_coords(h, w)
        p = spec.params
        z = parabolic_profile(x, y, p["theta"], p["a"], p["c"], w)
        return ScalarField(z * scale_mm, pitch)
    x = np.arange(w, dtype=float)[None, :] + 0.5
    y = np.arange(h, dtype=float)[:, None] + 0.5
    p = {k: np.asarray(v) for k, v in spec.params.items()}
    z = polynomial_profile(x, y, p["a"], p["b"], p["c"], w, h)
    rng_ = z.max() - z.min()
    z = (z - z.mean()) / rng_ if rng_ > 0 else np.zeros_like(z)
    return ScalarField(z * scale_mm, pitch)


def sample_spoof_depth(kind: str, rng: Rng, dims: tuple[int, int] = (480, 480), scale_mm: float = DEFAULT_DEPTH_SCALE_MM, pitch_mm=None) -> ScalarField:
    return render_spoof_depth(sample_spoof_spec(kind, rng, dims), scale_mm, pitch_mm)


def make_spoof_sample(genuine_texture: RgbImage, genuine_depth: ScalarField, kernel: SpoofKernel, kind: str, rng: Rng, scale_mm: float = DEFAULT_DEPTH_SCALE_MM):
    """Attack presenting ``genuine_texture`` on a flat or curved medium.

    Returns ``(texture, depth, spec)``; the genuine depth is discarded.
    """
    texture = apply_kernel(genuine_texture, kernel)
    spec = sample_spoof_spec(kind, rng, genuine_depth.shape)
    depth = render_spoof_depth(spec, scale_mm, genuine_depth.pitch_mm)
    return texture, depth, spec
