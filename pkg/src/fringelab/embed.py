"""Training-free texture and depth-gradient embeddings and the fused distance.

Both halves are 512-dimensional and L2-normalised.  They are low-frequency
DCT blocks, so they respond to the same coarse content the recovered
modalities carry; a learned extractor can replace either function without
touching the distance or evaluation code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .core import FringelabError, GradientField, InvalidInputError, RgbImage
from .decompose import DecompositionResult, FilterConfig, decompose
from .projector import CapturedImage

HALF_DIM = 512
TEXTURE_BLOCK = 13  # 3 * 13 * 13 = 507, plus 5 moments
GRADIENT_BLOCK = 16  # 2 * 16 * 16 = 512
INPUT_SIZE = 112
#: gradient fields whose largest component is below this are treated as flat
ZERO_GRADIENT_FLOOR = 1e-9
#: weight of the 5 global moments relative to the DCT coefficients
MOMENT_WEIGHT = 8.0


class ParameterError(FringelabError, ValueError):
    pass


def _normalise(v: np.ndarray) -> tuple[np.ndarray, bool]:
    n = float(np.linalg.norm(v))
    if n == 0.0 or not math.isfinite(n):
        return np.zeros_like(v), False
    return v / n, True


def _check_size(shape, what):
    if tuple(shape) != (INPUT_SIZE, INPUT_SIZE):
        raise InvalidInputError(f"{what} must be {INPUT_SIZE}x{INPUT_SIZE}, got {tuple(shape)}")


def texture_features(texture: RgbImage) -> np.ndarray:
    """Unnormalised 512-vector: DC-free DCT blocks per channel + 5 global moments."""
    _check_size(texture.shape, "texture")
    a = texture.data
    means = a.mean(axis=(0, 1))
    blocks = []
    for c in range(3):
        coeffs = scipy.fft.dctn(a[:, :, c] - means[c], type=2, norm="ortho")
        blocks.append(coeffs[:TEXTURE_BLOCK, :TEXTURE_BLOCK].ravel())
    lum = a.mean(axis=2)
    gy, gx = np.gradient(lum)
    moments = np.array([means[0], means[1], means[2], lum.std(), np.hypot(gx, gy).mean() * INPUT_SIZE])
    return np.concatenate(blocks + [MOMENT_WEIGHT * INPUT_SIZE * moments])


def embed_texture(texture: RgbImage) -> np.ndarray:
    v, ok = _normalise(texture_features(texture))
    if not ok:
        raise InvalidInputError("texture embedding is degenerate (all-zero image)")
    return v


def gradient_features(grad: GradientField) -> np.ndarray:
    _check_size(grad.shape, "gradient field")
    blocks = []
    for ch in (grad.dx, grad.dy):
        coeffs = scipy.fft.dctn(ch, type=2, norm="ortho")
        blocks.append(coeffs[:GRADIENT_BLOCK, :GRADIENT_BLOCK].ravel())
    return np.concatenate(blocks)


def embed_gradient(grad: GradientField) -> tuple[np.ndarray, bool]:
    """Return ``(vector, valid)``; a flat field gives the zero vector and ``valid=False``."""
    if max(np.abs(grad.dx).max(initial=0.0), np.abs(grad.dy).max(initial=0.0)) < ZERO_GRADIENT_FLOOR:
        _check_size(grad.shape, "gradient field")
        return np.zeros(HALF_DIM), False
    return _normalise(gradient_features(grad))


@dataclass(frozen=True)
class Embedding:
    x_rgb: np.ndarray
    x_grad: np.ndarray
    rgb_valid: bool = True
    grad_valid: bool = True

    def __post_init__(self):
        for name in ("x_rgb", "x_grad"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != (HALF_DIM,):
                raise InvalidInputError(f"{name} must have {HALF_DIM} entries")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.x_rgb, self.x_grad])

    @classmethod
    def from_vector(cls, v: np.ndarray, rgb_valid=True, grad_valid=True) -> "Embedding":
        v = np.asarray(v, dtype=float)
        return cls(v[:HALF_DIM], v[HALF_DIM:], rgb_valid, grad_valid)


@dataclass(frozen=True)
class DistanceParams:
    gamma: float = 0.3
    beta: float = 0.35
    alpha: float = 10.0

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ParameterError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if not self.alpha >= 1:
            raise ParameterError(f"alpha must be >= 1, got {self.alpha}")

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "beta": "inf" if math.isinf(self.beta) else self.beta, "alpha": self.alpha}

    @classmethod
    def from_json(cls, d: dict) -> "DistanceParams":
        beta = d.get("beta", 0.35)
        beta = math.inf if beta in ("inf", "infinity", None) else float(beta)
        return cls(float(d.get("gamma", 0.3)), beta, float(d.get("alpha", 10.0)))


def cosine_distance(a: np.ndarray, b: np.ndarray, a_valid: bool = True, b_valid: bool = True) -> float:
    """``(1 - cos) / 2`` in [0, 1]; 1 whenever either side is flagged."""
    if not (a_valid and b_valid):
        return 1.0
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0
    cos = float(np.dot(a, b) / (na * nb))
    return (1.0 - min(1.0, max(-1.0, cos))) / 2.0


def fuse(d_rgb, d_grad, params: DistanceParams):
    """``(1-g) d_rgb + g d_grad (1 + (d_grad/beta)^alpha)``, elementwise."""
    d_rgb = np.asarray(d_rgb, dtype=float)
    d_grad = np.asarray(d_grad, dtype=float)
    g = params.gamma
    if math.isinf(params.beta):
        penalty = 0.0
    else:
        penalty = (d_grad / params.beta) ** params.alpha
    out = (1.0 - g) * d_rgb + g * d_grad * (1.0 + penalty)
    return float(out) if out.ndim == 0 else out


def fused_distance(a: Embedding, b: Embedding, params: DistanceParams = DistanceParams()) -> float:
    d_rgb = cosine_distance(a.x_rgb, b.x_rgb, a.rgb_valid, b.rgb_valid)
    d_grad = cosine_distance(a.x_grad, b.x_grad, a.grad_valid, b.grad_valid)
    return fuse(d_rgb, d_grad, params)


def cosine_distance_matrix(a: np.ndarray, b: np.ndarray, a_valid=None, b_valid=None) -> np.ndarray:
    """Pairwise ``(1 - cos) / 2`` between rows of ``a`` and ``b`` (rows unit-norm or zero)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (a @ b.T) / np.outer(na, nb)
    d = (1.0 - np.clip(cos, -1.0, 1.0)) / 2.0
    bad = (na == 0)[:, None] | (nb == 0)[None, :]
    if a_valid is not None:
        bad |= ~np.asarray(a_valid, bool)[:, None]
    if b_valid is not None:
        bad |= ~np.asarray(b_valid, bool)[None, :]
    d[bad] = 1.0
    return d


def embed_decomposition(result: DecompositionResult) -> Embedding:
    x_rgb = embed_texture(result.texture)
    x_grad, ok = embed_gradient(result.grad)
    return Embedding(x_rgb, x_grad, True, ok)


def facial_embedding(captured: CapturedImage, config: FilterConfig = FilterConfig()) -> Embedding:
    """Decompose the capture, embed both modalities, concatenate."""
    return embed_decomposition(decompose(captured, config))
