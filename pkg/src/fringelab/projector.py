"""Forward active-stereo simulator: texture x deformed fringe pattern."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import FringelabError, GradientField, InvalidInputError, RgbImage, ScalarField
from .pattern import FringePattern, UndefinedRatioError, smoothness_check

log = logging.getLogger(__name__)


class UnitError(FringelabError, ValueError):
    pass


@dataclass(frozen=True)
class StereoRig:
    """Projector-camera rig.  Depth is measured from the reference plane at ``standoff_mm``."""

    baseline_mm: float = 80.0
    focal_mm: float = 4.0
    standoff_mm: float = 500.0

    def __post_init__(self):
        if min(self.baseline_mm, self.focal_mm, self.standoff_mm) <= 0:
            raise InvalidInputError("baseline, focal length and standoff must be positive")
        if self.standoff_mm < 50.0 * self.focal_mm:
            raise InvalidInputError("standoff must be at least 50x the focal length (q >> f)")

    @property
    def disparity_gain(self) -> float:
        """b f / q^2: disparity per mm of depth (divide by pitch for pixels)."""
        return self.baseline_mm * self.focal_mm / self.standoff_mm**2

    def phase_per_mm(self, pitch_mm: float) -> float:
        return self.disparity_gain / pitch_mm

    def to_json(self) -> dict:
        return {"baseline_mm": self.baseline_mm, "focal_mm": self.focal_mm, "standoff_mm": self.standoff_mm}

    @classmethod
    def from_json(cls, d: dict) -> "StereoRig":
        return cls(float(d["baseline_mm"]), float(d["focal_mm"]), float(d["standoff_mm"]))


@dataclass(frozen=True)
class CapturedImage:
    image: RgbImage
    pattern: FringePattern | None
    rig: StereoRig | None = None
    pitch_mm: float | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.image.shape


def depth_to_phase(depth: ScalarField, rig: StereoRig) -> ScalarField:
    """Disparity in pixels: ``depth * b f / q^2 / pitch``."""
    if depth.pitch_mm is None or not depth.pitch_mm > 0:
        raise UnitError("depth map has no pixel pitch; cannot convert mm to pixels")
    return depth.with_data(depth.data * rig.phase_per_mm(depth.pitch_mm))


def project(
    texture: RgbImage,
    depth: ScalarField,
    pattern: FringePattern,
    rig: StereoRig,
    *,
    check_smoothness: bool = True,
    provenance: dict | None = None,
) -> CapturedImage:
    """Image of ``texture`` lit by ``pattern`` deformed by ``depth``.

    Each pixel samples the pattern at ``x + phi(x, y)`` (linear
    interpolation) and multiplies all three channels by it; the result is
    clipped to [0, 1].  No shadowing or occlusion is modelled.
    """
    if texture.shape != depth.shape:
        raise InvalidInputError(f"texture {texture.shape} and depth {depth.shape} differ in size")
    phi = depth_to_phase(depth, rig)
    prov = dict(provenance or {})
    if check_smoothness:
        try:
            rep = smoothness_check(phi, pattern.f0)
            prov["phase_smooth"] = rep.smooth
            if not rep.smooth:
                log.info("depth-induced phase fails the smoothness check (ratio %.3g)", rep.worst_ratio)
        except UndefinedRatioError:
            prov["phase_smooth"] = True  # phi == 0 on average; nothing to separate
    h, w = depth.shape
    xs = np.arange(w, dtype=float)[None, :] + 0.5 + phi.data
    p = pattern.sample(xs)
    out = texture.data * p[:, :, None]
    prov.setdefault("pattern", pattern.to_json())
    prov.setdefault("rig", rig.to_json())
    return CapturedImage(RgbImage.clipped(out), pattern, rig, depth.pitch_mm, prov)


def decomposition_error(recovered: RgbImage, truth: RgbImage) -> float:
    """Mean squared error between two textures."""
    if recovered.data.shape != truth.data.shape:
        raise InvalidInputError("texture dimensions differ")
    return float(np.mean((recovered.data - truth.data) ** 2))


def gradient_error(recovered: GradientField, truth: GradientField) -> float:
    """Mean squared error over both gradient channels."""
    if recovered.shape != truth.shape:
        raise InvalidInputError("gradient dimensions differ")
    return float(np.mean(np.concatenate([(recovered.dx - truth.dx).ravel(), (recovered.dy - truth.dy).ravel()]) ** 2))
