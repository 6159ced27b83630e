"""Procedural face-like texture and depth pairs.

Faces are smooth compositions: a polynomial dome for the head, Gaussian
bumps for nose, brows, cheeks and chin, and a texture built from a skin
tone, smooth colour blobs and windowed low-frequency stripes.  Everything
is band-limited well below the default carrier, so the capture model's
smoothness premise holds by construction.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core import DEFAULT_PITCH_MM, RgbImage, Rng, ScalarField

FRAME = 480
N_BLOBS = 8
N_STRIPES = 4
BACKGROUND_RGB = (0.25, 0.25, 0.25)
HEAD_DEPTH_MM = 90.0
#: logistic scale of the soft face-mask edge, in pixels
MASK_EDGE_PX = 8.0
BUMP_NAMES = ("nose", "brow_l", "brow_r", "cheek_l", "cheek_r", "chin")


@dataclass(frozen=True)
class Bump:
    x: float  # offset from the head centre, in units of the head semi-axis
    y: float
    amplitude: float  # mm
    sx: float  # px
    sy: float


@dataclass(frozen=True)
class Blob:
    x: float
    y: float
    sigma: float  # px
    rgb: tuple[float, float, float]  # signed colour offset


@dataclass(frozen=True)
class Stripe:
    theta: float
    frequency: float  # cycles/px
    phase: float
    weight: float


@dataclass(frozen=True)
class IdentitySpec:
    seed: int
    semi_axes: tuple[float, float]  # px (horizontal, vertical)
    head_depth: float  # mm
    bumps: tuple[Bump, ...]
    skin: tuple[float, float, float]
    blobs: tuple[Blob, ...]
    stripes: tuple[Stripe, ...]

    def parameter_vector(self) -> np.ndarray:
        parts = [list(self.semi_axes), [self.head_depth], list(self.skin)]
        for b in self.bumps:
            parts.append([b.x, b.y, b.amplitude, b.sx, b.sy])
        for b in self.blobs:
            parts.append([b.x, b.y, b.sigma, *b.rgb])
        for s in self.stripes:
            parts.append([s.theta, s.frequency, s.phase, s.weight])
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Variation:
    """Per-render jitter: expression (relative), pose (px) and pixel noise."""

    expression: float = 0.0
    pose: float = 0.0
    noise: float = 0.0


# mean bump layout: (x, y, amplitude mm, sx px, sy px); y grows downwards
_BUMP_MEANS = {
    "nose": (0.0, 0.05, 22.0, 14.0, 40.0),
    "brow_l": (-0.35, -0.30, 8.0, 26.0, 10.0),
    "brow_r": (0.35, -0.30, 8.0, 26.0, 10.0),
    "cheek_l": (-0.45, 0.20, 10.0, 28.0, 28.0),
    "cheek_r": (0.45, 0.20, 10.0, 28.0, 28.0),
    "chin": (0.0, 0.65, 12.0, 30.0, 20.0),
}


def generate_identity(seed: int) -> IdentitySpec:
    rng = Rng(seed, (0x1D,))
    axes = (float(rng.uniform(150.0, 180.0)), float(rng.uniform(175.0, 205.0)))
    depth = float(rng.uniform(0.8, 1.2) * HEAD_DEPTH_MM)
    bumps = []
    for name in BUMP_NAMES:
        x, y, a, sx, sy = _BUMP_MEANS[name]
        bumps.append(
            Bump(
                x + float(rng.normal(0.0, 0.06)),
                y + float(rng.normal(0.0, 0.06)),
                a * float(rng.uniform(0.5, 1.5)),
                sx * float(rng.uniform(0.75, 1.3)),
                sy * float(rng.uniform(0.75, 1.3)),
            )
        )
    skin = tuple(float(v) for v in np.array([0.62, 0.48, 0.40]) + rng.uniform(-0.12, 0.12, 3))
    blobs = []
    for _ in range(N_BLOBS):
        xy = rng.uniform(-0.7, 0.7, 2)
        blobs.append(
            Blob(float(xy[0]), float(xy[1]), float(rng.uniform(14.0, 40.0)), tuple(float(v) for v in rng.uniform(-0.15, 0.15, 3)))
        )
    stripes = tuple(
        Stripe(
            float(rng.uniform(0.0, np.pi)),
            float(rng.uniform(1.0 / 120.0, 1.0 / 40.0)),
            float(rng.uniform(0.0, 2.0 * np.pi)),
            float(rng.uniform(-0.05, 0.05)),
        )
        for _ in range(N_STRIPES)
    )
    return IdentitySpec(int(seed), axes, depth, tuple(bumps), skin, tuple(blobs), stripes)


def _jitter_bump(b: Bump, rng: Rng, s: float) -> Bump:
    if s == 0:
        return b
    d = rng.normal(0.0, s, 3)
    return Bump(b.x + 0.1 * d[0], b.y + 0.1 * d[1], b.amplitude * (1.0 + d[2]), b.sx, b.sy)


def _gauss_columns(xs, params):
    """Row and column factors, one column per axis-aligned Gaussian (bx, by, sx, sy)."""
    p = np.asarray(params, dtype=float).reshape(-1, 4)
    gy = np.exp(-0.5 * ((xs[:, None] - p[:, 1]) / p[:, 3]) ** 2)
    gx = np.exp(-0.5 * ((xs[:, None] - p[:, 0]) / p[:, 2]) ** 2)
    return gy, gx


def _soft_mask(r2: np.ndarray, ax: float) -> np.ndarray:
    r = np.sqrt(r2)
    return 1.0 / (1.0 + np.exp((r - 1.0) * ax / MASK_EDGE_PX))


def render_sample(
    spec: IdentitySpec,
    variation: Variation = Variation(),
    rng: Rng | None = None,
    size: int = FRAME,
    pitch_mm: float = DEFAULT_PITCH_MM,
) -> tuple[RgbImage, ScalarField]:
    """One texture/depth pair of ``spec``, jittered by ``variation``.

    Depth is zero on the background and non-negative everywhere; texture
    is the basis composition inside a soft head mask over a constant
    background, plus Gaussian pixel noise.
    """
    if rng is None:
        rng = Rng(spec.seed, (0x2E,))
    shift = rng.normal(0.0, variation.pose, 2) if variation.pose > 0 else np.zeros(2)
    c = size / 2.0
    cx, cy = c + shift[0], c + shift[1]
    ax, ay = spec.semi_axes
    xs = np.arange(size) + 0.5
    y, x = np.meshgrid(xs, xs, indexing="ij")
    dxn, dyn = (x - cx) / ax, (y - cy) / ay
    r2 = dxn**2 + dyn**2
    support = np.clip(1.0 - r2, 0.0, None)

    # sums of separable Gaussians are low-rank products: (Gy * w) @ Gx.T
    bumps = [_jitter_bump(b0, rng, variation.expression) for b0 in spec.bumps]
    gy, gx = _gauss_columns(xs, [(cx + b.x * ax, cy + b.y * ay, b.sx, b.sy) for b in bumps])
    amp = np.array([max(b.amplitude, 0.0) for b in bumps])
    s2 = support * support
    z = spec.head_depth * s2 * support + s2 * ((gy * amp) @ gx.T)

    mask = _soft_mask(r2, min(ax, ay))
    gy, gx = _gauss_columns(xs, [(cx + bl.x * ax, cy + bl.y * ay, bl.sigma, bl.sigma) for bl in spec.blobs])
    rgb = np.array([bl.rgb for bl in spec.blobs])
    tex = np.stack([(gy * rgb[:, c]) @ gx.T + spec.skin[c] for c in range(3)], axis=-1)
    lum = np.zeros((size, size))
    for s in spec.stripes:
        u = (x - cx) * np.cos(s.theta) + (y - cy) * np.sin(s.theta)
        lum += s.weight * np.cos(2.0 * np.pi * s.frequency * u + s.phase)
    tex += lum[:, :, None]
    tex = mask[:, :, None] * tex + (1.0 - mask[:, :, None]) * np.asarray(BACKGROUND_RGB)
    if variation.noise > 0:
        tex = tex + rng.normal(0.0, variation.noise, tex.shape)
    return RgbImage.clipped(tex), ScalarField(z, pitch_mm)


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    subject_id: str
    label: str
    subject_seed: int
    index: int


def subject_seeds(seed: int, n_identities: int) -> list[int]:
    """Identity seeds for a benchmark; disjoint streams per subject."""
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1, np.uint64)[0]) for s in ss.spawn(n_identities)]


def benchmark_records(seed: int, n_identities: int = 50, n_genuine: int = 6, spoof_kinds: Sequence[str] = ()) -> list[SampleRecord]:
    """Manifest rows: ``n_genuine`` renders plus one attack per spoof kind and subject."""
    out = []
    for s, sseed in enumerate(subject_seeds(seed, n_identities)):
        sid = f"s{s:03d}"
        for k in range(n_genuine):
            out.append(SampleRecord(f"{sid}_g{k}", sid, "genuine", sseed, k))
        for k, kind in enumerate(spoof_kinds):
            out.append(SampleRecord(f"{sid}_x{k}", sid, f"spoof-{kind}", sseed, k))
    return out


@dataclass(frozen=True)
class BenchmarkConfig:
    n_identities: int = 50
    n_genuine: int = 6
    variation: Variation = field(default_factory=lambda: Variation(0.15, 3.0, 0.004))
