"""Extra ambient light over a textured depth map, Lambertian shading."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import InvalidInputError, RgbImage, Rng, ScalarField, central_gradient

DEFAULT_SMOOTHING_PX = 2.0
ELEVATION_RANGE_DEG = (30.0, 90.0)


@dataclass(frozen=True)
class LightSource:
    """``direction`` points from the surface towards the light."""

    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    power: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if d.shape != (3,) or n == 0:
            raise InvalidInputError("light direction must be a non-zero 3-vector")
        if abs(n - 1.0) > 1e-9:
            raise InvalidInputError("light direction must be a unit vector")
        if self.power < 0:
            raise InvalidInputError("light power must be non-negative")
        object.__setattr__(self, "direction", tuple(float(v) for v in d))

    @classmethod
    def from_angles(cls, azimuth: float, elevation: float, power: float) -> "LightSource":
        ce = np.cos(elevation)
        d = np.array([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)])
        return cls(tuple(d / np.linalg.norm(d)), power)

    @classmethod
    def random(cls, rng: Rng, power: float, elevation_deg=ELEVATION_RANGE_DEG) -> "LightSource":
        az = float(rng.uniform(0.0, 2.0 * np.pi))
        el = float(np.deg2rad(rng.uniform(*elevation_deg)))
        return cls.from_angles(az, el, power)

    def to_json(self) -> dict:
        return {"direction": list(self.direction), "power": self.power}


def surface_normals(depth: ScalarField, smoothing_sigma: float = DEFAULT_SMOOTHING_PX) -> np.ndarray:
    """Unit normals ``(-z_x, -z_y, 1) / norm`` as an H x W x 3 array.

    Slopes are taken in depth units per pixel-pitch unit, so a depth map in
    mm with ``pitch_mm`` set gives geometric normals.
    """
    z = depth.data
    if smoothing_sigma > 0:
        z = ndimage.gaussian_filter(z, smoothing_sigma, mode="nearest")
    g = central_gradient(z)
    pitch = depth.pitch_mm or 1.0
    zx, zy = g.dx / pitch, g.dy / pitch
    n = np.stack([-zx, -zy, np.ones_like(zx)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def shading(depth: ScalarField, light: LightSource, smoothing_sigma: float = DEFAULT_SMOOTHING_PX) -> np.ndarray:
    """Additional light factor ``p0 * max(n . l, 0)``."""
    n = surface_normals(depth, smoothing_sigma)
    return light.power * np.maximum(n @ np.asarray(light.direction), 0.0)


def add_ambient_light(
    texture: RgbImage,
    depth: ScalarField,
    light: LightSource,
    smoothing_sigma: float = DEFAULT_SMOOTHING_PX,
    clip: bool = True,
):
    """``texture * (1 + p0 max(n . l, 0))``, clipped to [0, 1] (camera saturation).

    With ``clip=False`` the raw array is returned instead of an image.
    """
    if texture.shape != depth.shape:
        raise InvalidInputError("texture and depth differ in size")
    extra = shading(depth, light, smoothing_sigma)
    out = texture.data * (1.0 + extra[:, :, None])
    return RgbImage.clipped(out) if clip else out
