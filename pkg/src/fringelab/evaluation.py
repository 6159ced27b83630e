"""Recognition and anti-spoofing protocols: rank-n, FAR/FRR sweep, TPR@FPR, ACER."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import InvalidInputError, NumericError
from .embed import HALF_DIM, DistanceParams, cosine_distance_matrix, fuse

DEFAULT_LAMBDAS = np.linspace(0.0, 2.0, 401)
DEFAULT_RANKS = (1, 2, 5, 10)
FPR_TARGETS = (1e-3, 1e-2)


class DegenerateSweepError(InvalidInputError):
    pass


@dataclass(frozen=True)
class Record:
    sample_id: str
    subject_id: str
    label: str = "genuine"  # or spoof-<kind>

    @property
    def genuine(self) -> bool:
        return self.label == "genuine"


@dataclass
class EmbeddingSet:
    """Embeddings as an N x 1024 array with per-half validity flags, aligned with ``records``."""

    records: list[Record]
    vectors: np.ndarray
    rgb_valid: np.ndarray
    grad_valid: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        n = len(self.records)
        if self.vectors.shape != (n, 2 * HALF_DIM):
            raise InvalidInputError(f"expected {n} x {2 * HALF_DIM} embeddings, got {self.vectors.shape}")
        self.rgb_valid = np.asarray(self.rgb_valid, dtype=bool)
        self.grad_valid = np.asarray(self.grad_valid, dtype=bool)

    def subset(self, idx) -> "EmbeddingSet":
        idx = list(idx)
        return EmbeddingSet([self.records[i] for i in idx], self.vectors[idx], self.rgb_valid[idx], self.grad_valid[idx])

    def __len__(self):
        return len(self.records)


def split_gallery_probe(records: Sequence[Record], seed: int | None = None) -> tuple[list[int], list[int]]:
    """Per subject, the first ceil(n/2) genuine samples (by sample_id) go to the gallery.

    Spoofs always go to the probe set.  With ``seed`` the per-subject order
    is shuffled deterministically instead of sorted.
    """
    by_subject: dict[str, list[int]] = {}
    probe: list[int] = []
    for i, r in enumerate(records):
        if r.genuine:
            by_subject.setdefault(r.subject_id, []).append(i)
        else:
            probe.append(i)
    gallery: list[int] = []
    rng = np.random.Generator(np.random.PCG64(seed)) if seed is not None else None
    for subj in sorted(by_subject):
        idx = sorted(by_subject[subj], key=lambda i: records[i].sample_id)
        if rng is not None:
            idx = [idx[k] for k in rng.permutation(len(idx))]
        k = math.ceil(len(idx) / 2)
        gallery += idx[:k]
        probe += idx[k:]
    return sorted(gallery), sorted(probe)


@dataclass(frozen=True)
class HalfDistances:
    """Cosine distances of both halves between probe rows and gallery columns."""

    d_rgb: np.ndarray
    d_grad: np.ndarray

    def fused(self, params: DistanceParams) -> np.ndarray:
        return fuse(self.d_rgb, self.d_grad, params)


def half_distances(probe: EmbeddingSet, gallery: EmbeddingSet) -> HalfDistances:
    h = HALF_DIM
    d_rgb = cosine_distance_matrix(probe.vectors[:, :h], gallery.vectors[:, :h], probe.rgb_valid, gallery.rgb_valid)
    d_grad = cosine_distance_matrix(probe.vectors[:, h:], gallery.vectors[:, h:], probe.grad_valid, gallery.grad_valid)
    return HalfDistances(d_rgb, d_grad)


def _order(gallery: EmbeddingSet) -> np.ndarray:
    """Gallery column order used to break distance ties (lowest sample_id first)."""
    return np.argsort(np.array([r.sample_id for r in gallery.records]), kind="stable")


def rank_n_accuracy(
    gallery: EmbeddingSet,
    probe: EmbeddingSet,
    params: DistanceParams,
    n_values: Sequence[int] = DEFAULT_RANKS,
    distances: HalfDistances | None = None,
) -> tuple[dict[int, float], list[str]]:
    """Percentage of probes with a same-subject sample among their n nearest gallery entries.

    Returns the accuracy map and the ids of probes skipped because their
    subject has no gallery sample.
    """
    if len(gallery) == 0:
        raise InvalidInputError("gallery is empty")
    if len(probe) == 0:
        raise InvalidInputError("probe set is empty")
    if distances is None:
        distances = half_distances(probe, gallery)
    d = distances.fused(params)
    g_subj = np.array([r.subject_id for r in gallery.records])
    known = set(g_subj.tolist())
    keep = [i for i, r in enumerate(probe.records) if r.subject_id in known]
    skipped = [r.sample_id for r in probe.records if r.subject_id not in known]
    if not keep:
        raise InvalidInputError("no probe subject appears in the gallery")
    order = _order(gallery)
    d = d[:, order]
    g_subj = g_subj[order]
    hits_at = {}
    ranked = np.argsort(d[keep], axis=1, kind="stable")
    p_subj = np.array([probe.records[i].subject_id for i in keep])
    match = g_subj[ranked] == p_subj[:, None]
    first = np.where(match.any(axis=1), match.argmax(axis=1), np.iinfo(np.int64).max)
    for n in n_values:
        hits_at[int(n)] = float(100.0 * np.mean(first < n))
    return hits_at, skipped


def spoof_pair_distances(
    gallery: EmbeddingSet,
    probe: EmbeddingSet,
    params: DistanceParams,
    distances: HalfDistances | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Distance of each probe to its nearest same-subject gallery sample.

    Returns ``(distances, is_genuine)`` for probes whose subject is enrolled.
    Ties go to the lowest gallery sample_id.
    """
    if distances is None:
        distances = half_distances(probe, gallery)
    d = distances.fused(params)
    order = _order(gallery)
    d = d[:, order]
    g_subj = np.array([r.subject_id for r in gallery.records])[order]
    out, truth = [], []
    for i, r in enumerate(probe.records):
        cols = np.flatnonzero(g_subj == r.subject_id)
        if cols.size == 0:
            continue
        out.append(d[i, cols].min())
        truth.append(r.genuine)
    return np.array(out), np.array(truth, dtype=bool)


@dataclass(frozen=True)
class RocPoint:
    lam: float
    far: float
    frr: float


def threshold_sweep(distances, is_genuine, lambdas=DEFAULT_LAMBDAS) -> list[RocPoint]:
    """Accept a probe as genuine when its distance is strictly below the threshold."""
    d = np.asarray(distances, dtype=float)
    g = np.asarray(is_genuine, dtype=bool)
    n_gen, n_spoof = int(g.sum()), int((~g).sum())
    if n_gen == 0 or n_spoof == 0:
        raise DegenerateSweepError("threshold sweep needs both genuine and spoof samples")
    lam = np.asarray(lambdas, dtype=float)
    accept = d[None, :] < lam[:, None]
    far = accept[:, ~g].sum(axis=1) / n_spoof
    frr = (~accept[:, g]).sum(axis=1) / n_gen
    return [RocPoint(float(a), float(b), float(c)) for a, b, c in zip(lam, far, frr)]


def acer_from_rates(far: float, frr: float) -> float:
    """Average classification error, in percent."""
    return 100.0 * (far + frr) / 2.0


def acer(roc: Sequence[RocPoint]) -> tuple[float, RocPoint]:
    """Minimum ACER over the sweep and the operating point achieving it."""
    if not roc:
        raise InvalidInputError("empty ROC")
    best = min(roc, key=lambda p: (p.far + p.frr, p.lam))
    return acer_from_rates(best.far, best.frr), best


@dataclass(frozen=True)
class TprAtFpr:
    tpr: float  # percent
    reached: bool


def tpr_at_fpr(roc: Sequence[RocPoint], targets: Sequence[float] = FPR_TARGETS) -> dict[float, TprAtFpr]:
    """Genuine acceptance at each false-acceptance target, linear between grid points."""
    far = np.array([p.far for p in roc])
    tpr = 1.0 - np.array([p.frr for p in roc])
    out = {}
    for t in targets:
        below = np.flatnonzero(far <= t)
        if below.size == 0:
            out[t] = TprAtFpr(100.0 * float(tpr[0]), False)
            continue
        i = below[-1]
        if i + 1 >= far.size:
            out[t] = TprAtFpr(100.0 * float(tpr[i]), bool(far[i] >= t))
            continue
        f0_, f1_ = far[i], far[i + 1]
        if f1_ == f0_:
            val = tpr[i]
        else:
            w = (t - f0_) / (f1_ - f0_)
            val = tpr[i] + w * (tpr[i + 1] - tpr[i])
        out[t] = TprAtFpr(100.0 * float(val), True)
    return out


@dataclass
class EvalReport:
    params: DistanceParams
    rank_accuracy: dict[int, float]
    roc: list[RocPoint] = field(default_factory=list)
    tpr_at_fpr: dict[float, TprAtFpr] = field(default_factory=dict)
    acer: float | None = None
    acer_point: RocPoint | None = None
    skipped_probes: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "rank_accuracy": {str(k): v for k, v in self.rank_accuracy.items()},
            "tpr_at_fpr": {f"{k:g}": {"tpr": v.tpr, "reached": v.reached} for k, v in self.tpr_at_fpr.items()},
            "acer": self.acer,
            "acer_operating_point": None if self.acer_point is None else vars(self.acer_point),
            "roc_points": len(self.roc),
            "skipped_probes": self.skipped_probes,
            "config": self.config,
        }

    def cmc_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "accuracy"])
        for n, acc in sorted(self.rank_accuracy.items()):
            w.writerow([n, f"{acc:.6f}"])
        return buf.getvalue()

    def roc_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "far", "frr"])
        for p in self.roc:
            w.writerow([f"{p.lam:.6f}", f"{p.far:.6f}", f"{p.frr:.6f}"])
        return buf.getvalue()

    def write(self, out_dir: Path | str) -> None:
        from .io import write_json

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", self.to_json())
        (out / "cmc.csv").write_text(self.cmc_csv())
        (out / "roc.csv").write_text(self.roc_csv())


def evaluate(
    embeddings: EmbeddingSet,
    params: DistanceParams = DistanceParams(),
    n_values: Sequence[int] = DEFAULT_RANKS,
    lambdas=DEFAULT_LAMBDAS,
    split_seed: int | None = None,
    config: dict | None = None,
) -> EvalReport:
    """Full protocol on a labelled embedding set.

    Rank-n uses genuine probes only; the FAR/FRR sweep, TPR@FPR and ACER
    are computed when spoof probes are present.
    """
    g_idx, p_idx = split_gallery_probe(embeddings.records, split_seed)
    gallery, probe = embeddings.subset(g_idx), embeddings.subset(p_idx)
    if len(probe) == 0:
        raise InvalidInputError("probe set is empty")
    dist = half_distances(probe, gallery)
    genuine_rows = [i for i, r in enumerate(probe.records) if r.genuine]
    if not genuine_rows:
        raise InvalidInputError("probe set holds no genuine samples")
    gen_probe = probe.subset(genuine_rows)
    gen_dist = HalfDistances(dist.d_rgb[genuine_rows], dist.d_grad[genuine_rows])
    ranks, skipped = rank_n_accuracy(gallery, gen_probe, params, n_values, gen_dist)
    report = EvalReport(params, ranks, skipped_probes=skipped, config=dict(config or {}))
    if any(not r.genuine for r in probe.records):
        d, truth = spoof_pair_distances(gallery, probe, params, dist)
        if not np.all(np.isfinite(d)):
            raise NumericError("non-finite fused distance")
        report.roc = threshold_sweep(d, truth, lambdas)
        report.acer, report.acer_point = acer(report.roc)
        report.tpr_at_fpr = tpr_at_fpr(report.roc)
    return report
