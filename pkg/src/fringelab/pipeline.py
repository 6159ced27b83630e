"""File-based pipeline stages shared by the command line and the benchmark tests.

Each stage reads the manifest of the previous stage directory and writes
its own directory holding raw arrays, a ``manifest.json`` and the effective
configuration with its hash.  Per-sample random streams are keyed by
subject seed and sample index, so results do not depend on job count or
processing order.
"""
from __future__ import annotations

import logging
import math
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .core import InvalidInputError, RgbImage, Rng, ScalarField
from .decompose import DecompositionResult, FilterConfig, decompose
from .embed import HALF_DIM, DistanceParams, Embedding, embed_decomposition
from .evaluation import DEFAULT_RANKS, EmbeddingSet, EvalReport, Record, evaluate
from .io import (
    DataFileError,
    load_gradient,
    load_raw,
    load_rgb,
    load_scalar,
    read_json,
    save_gradient,
    save_raw,
    save_rgb,
    save_scalar,
    write_json,
)
from .pattern import FringePattern
from .projector import CapturedImage, StereoRig, project
from .relight import LightSource, add_ambient_light
from .spoof import SpoofKernel, estimate_kernel, make_spoof_sample, surrogate_spoof_exemplar
from .synthface import Variation, generate_identity, render_sample, subject_seeds

log = logging.getLogger("fringelab")

DATASET, RELIT, CAPTURES, DECOMPOSED, EMBEDDINGS, REPORT = (
    "dataset", "relit", "captures", "decomposed", "embeddings", "report"
)
MANIFEST = "manifest.json"

# stream keys under a subject seed
_GENUINE, _SPOOF, _LIGHT = 1, 2, 3


# ---------------------------------------------------------------------------
# configured components


@dataclass(frozen=True)
class Components:
    pattern: FringePattern
    rig: StereoRig
    pitch_mm: float
    filter: FilterConfig
    params: DistanceParams


def components(cfg: ExperimentConfig) -> Components:
    p, r, f, d = cfg.pattern, cfg.rig, cfg.filter, cfg.distance
    pattern = FringePattern(p.period_px, p.profile, p.contrast, p.oversample)
    rig = StereoRig(r.baseline_mm, r.focal_mm, r.standoff_mm)
    filt = FilterConfig(f.half_width, f.rolloff, f.floor, f.output_size)
    return Components(pattern, rig, r.pitch_mm, filt, DistanceParams(d.gamma, d.beta, d.alpha))


def variation(cfg: ExperimentConfig) -> Variation:
    d = cfg.dataset
    return Variation(d.expression, d.pose_px, d.noise)


# ---------------------------------------------------------------------------
# per-sample operations (in memory)


def genuine_sample(cfg: ExperimentConfig, subject_seed: int, k: int) -> tuple[RgbImage, ScalarField]:
    spec = generate_identity(subject_seed)
    return render_sample(spec, variation(cfg), Rng(subject_seed, (_GENUINE, k)), cfg.dataset.size, cfg.rig.pitch_mm)


def spoof_kernel_from(cfg: ExperimentConfig, genuine_textures: Sequence[RgbImage]) -> SpoofKernel:
    """Kernel from recapture surrogates of the given genuine textures."""
    spoofs = [surrogate_spoof_exemplar(t) for t in genuine_textures]
    return estimate_kernel(spoofs, [t.data for t in genuine_textures], cfg.spoof.kernel_size, epsilon=cfg.spoof.epsilon)


def spoof_sample(cfg, subject_seed: int, k: int, kind: str, texture: RgbImage, depth: ScalarField, kernel: SpoofKernel):
    return make_spoof_sample(texture, depth, kernel, kind, Rng(subject_seed, (_SPOOF, k)), cfg.spoof.depth_scale_mm)


def relight_sample(cfg: ExperimentConfig, subject_seed: int, stream: int, texture: RgbImage, depth: ScalarField):
    rng = Rng(subject_seed, (_LIGHT, stream))
    power = float(rng.uniform(0.0, cfg.relight.max_power))
    light = LightSource.random(rng, power, cfg.relight.elevation_deg)
    return add_ambient_light(texture, depth, light, cfg.relight.smoothing_px), light


def capture(comps: Components, texture: RgbImage, depth: ScalarField) -> CapturedImage:
    return project(texture, depth, comps.pattern, comps.rig, check_smoothness=False)


def analyse(comps: Components, captured: CapturedImage) -> tuple[Embedding, DecompositionResult]:
    res = decompose(captured, comps.filter)
    return embed_decomposition(res), res


# ---------------------------------------------------------------------------
# helpers


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _progress(stage: str, i: int, n: int) -> None:
    if log.isEnabledFor(logging.INFO) and (i + 1 == n or (i + 1) % 50 == 0):
        log.info("%s: %d/%d", stage, i + 1, n)


def _header(cfg: ExperimentConfig, stage: str) -> dict:
    return {"stage": stage, "config": cfg.to_dict(), "config_hash": cfg.hash, "version": __version__}


def read_manifest(stage_dir: Path | str) -> dict:
    path = Path(stage_dir) / MANIFEST
    if not path.exists():
        raise DataFileError(f"missing file: {path}")
    return read_json(path)


def _fresh_dir(path: Path) -> Path:
    if path.exists():
        if not (path / MANIFEST).exists() and any(path.iterdir()):
            raise DataFileError(f"refusing to overwrite non-stage directory {path}")
        shutil.rmtree(path)
    path.mkdir(parents=True)
    return path


def _rel(target: Path, base: Path) -> str:
    return os.path.relpath(target, base)


# ---------------------------------------------------------------------------
# stages


def _synth_one(args):
    cfg, out, entry = args
    tex, depth = genuine_sample(cfg, entry["subject_seed"], entry["index"])
    stem = out / "samples" / entry["sample_id"]
    save_rgb(f"{stem}_texture", tex, config_hash=cfg.hash)
    save_scalar(f"{stem}_depth", depth, config_hash=cfg.hash)
    return {**entry, "texture": f"samples/{entry['sample_id']}_texture", "depth": f"samples/{entry['sample_id']}_depth"}


def run_synth(cfg: ExperimentConfig, out_dir: Path | str, jobs: int = 1) -> dict:
    """Render the genuine samples, then add attacks when ``[dataset].spoofs`` is set."""
    out = _fresh_dir(Path(out_dir))
    d = cfg.dataset
    entries = []
    for s, seed in enumerate(subject_seeds(cfg.seed, d.n_identities)):
        sid = f"s{s:03d}"
        for k in range(d.n_genuine):
            entries.append({"sample_id": f"{sid}_g{k}", "subject_id": sid, "label": "genuine", "subject_seed": seed, "index": k})
    samples = _run(_synth_one, [(cfg, out, e) for e in entries], jobs, "synth")
    manifest = {**_header(cfg, DATASET), "samples": samples}
    write_json(out / MANIFEST, manifest)
    if d.spoofs and cfg.spoof.kinds:
        manifest = run_spoof(cfg, out, jobs)
    return manifest


def _spoof_one(args):
    cfg, out, entry, src, kernel = args
    tex = load_rgb(out / src["texture"])
    depth = load_scalar(out / src["depth"])
    kind = entry["label"].removeprefix("spoof-")
    st, sd, spec = spoof_sample(cfg, entry["subject_seed"], entry["index"], kind, tex, depth, kernel)
    stem = out / "samples" / entry["sample_id"]
    save_rgb(f"{stem}_texture", st, config_hash=cfg.hash)
    save_scalar(f"{stem}_depth", sd, config_hash=cfg.hash)
    return {
        **entry,
        "texture": f"samples/{entry['sample_id']}_texture",
        "depth": f"samples/{entry['sample_id']}_depth",
        "source": src["sample_id"],
        "spoof_params": spec.params,
    }


def run_spoof(cfg: ExperimentConfig, dataset_dir: Path | str, jobs: int = 1) -> dict:
    """Add one attack per subject and spoof kind to a dataset directory.

    Attack ``k`` of a subject reuses the texture of its ``k``-th most recent
    genuine sample (cycling when there are fewer genuine samples than kinds),
    so attacks imitate later captures rather than the enrolment ones.
    """
    out = Path(dataset_dir)
    manifest = read_manifest(out)
    genuine = [s for s in manifest["samples"] if s["label"] == "genuine"]
    if not genuine:
        raise InvalidInputError(f"{out / MANIFEST}: no genuine samples to attack")
    by_subject: dict[str, list[dict]] = {}
    for s in genuine:
        by_subject.setdefault(s["subject_id"], []).append(s)
    for v in by_subject.values():
        v.sort(key=lambda s: s["index"])
    subjects = sorted(by_subject)
    ex = [load_rgb(out / by_subject[sid][0]["texture"]) for sid in subjects[: max(1, cfg.spoof.exemplars)]]
    kernel = spoof_kernel_from(cfg, ex)
    save_raw(out / "spoof_kernel", kernel.kernel, None, config_hash=cfg.hash, **kernel.provenance)
    tasks = []
    for sid in subjects:
        srcs = by_subject[sid]
        for k, kind in enumerate(cfg.spoof.kinds):
            src = srcs[-1 - k % len(srcs)]
            e = {"sample_id": f"{sid}_x{k}", "subject_id": sid, "label": f"spoof-{kind}", "subject_seed": src["subject_seed"], "index": k}
            tasks.append((cfg, out, e, src, kernel))
    added = _run(_spoof_one, tasks, jobs, "spoof")
    keep = [s for s in manifest["samples"] if not s["label"].startswith("spoof-")]
    manifest = {**_header(cfg, DATASET), "samples": keep + added}
    write_json(out / MANIFEST, manifest)
    return manifest


def _relight_one(args):
    cfg, src_dir, out, entry, stream = args
    tex = load_rgb(src_dir / entry["texture"])
    depth = load_scalar(src_dir / entry["depth"])
    lit, light = relight_sample(cfg, entry["subject_seed"], stream, tex, depth)
    stem = out / "samples" / entry["sample_id"]
    save_rgb(f"{stem}_texture", lit, png=False, config_hash=cfg.hash)
    return {
        **entry,
        "texture": f"samples/{entry['sample_id']}_texture",
        "depth": _rel(src_dir / entry["depth"], out),
        "light": light.to_json(),
    }


def run_relight(cfg: ExperimentConfig, in_dir: Path | str, out_dir: Path | str, jobs: int = 1) -> dict:
    """Extra ambient light on every sample; depth maps are referenced, not copied."""
    src_dir = Path(in_dir)
    manifest = read_manifest(src_dir)
    out = _fresh_dir(Path(out_dir))
    tasks = []
    for e in manifest["samples"]:
        # genuine and attack samples of a subject get disjoint light streams
        stream = e["index"] if e["label"] == "genuine" else 1000 + e["index"]
        tasks.append((cfg, src_dir, out, e, stream))
    samples = _run(_relight_one, tasks, jobs, "relight")
    result = {**_header(cfg, RELIT), "samples": samples}
    write_json(out / MANIFEST, result)
    return result


def _run(fn, tasks, jobs, stage):
    if jobs <= 1:
        out = []
        for i, t in enumerate(tasks):
            out.append(fn(t))
            _progress(stage, i, len(tasks))
        return out
    return _map(fn, tasks, jobs)


def _project_one(args):
    cfg, src_dir, out, entry = args
    comps = components(cfg)
    tex = load_rgb(src_dir / entry["texture"])
    depth = load_scalar(src_dir / entry["depth"])
    cap = capture(comps, tex, depth)
    stem = out / "samples" / f"{entry['sample_id']}_capture"
    save_raw(stem, cap.image.data, cap.pitch_mm, config_hash=cfg.hash)
    return {k: v for k, v in entry.items() if k not in ("texture", "depth")} | {
        "capture": f"samples/{entry['sample_id']}_capture",
    }


def run_project(cfg: ExperimentConfig, in_dir: Path | str, out_dir: Path | str, jobs: int = 1) -> dict:
    src_dir = Path(in_dir)
    manifest = read_manifest(src_dir)
    out = _fresh_dir(Path(out_dir))
    comps = components(cfg)
    samples = _run(_project_one, [(cfg, src_dir, out, e) for e in manifest["samples"]], jobs, "project")
    result = {**_header(cfg, CAPTURES), "pattern": comps.pattern.to_json(), "rig": comps.rig.to_json(), "samples": samples}
    write_json(out / MANIFEST, result)
    return result


def _decompose_one(args):
    cfg, src_dir, out, entry = args
    comps = components(cfg)
    a, header = load_raw(src_dir / entry["capture"])
    if a.shape[2] != 3:
        raise DataFileError(f"{src_dir / entry['capture']}: expected 3 channels")
    cap = CapturedImage(RgbImage.clipped(a), comps.pattern, comps.rig, header.get("pitch_mm"))
    res = decompose(cap, comps.filter)
    stem = out / "samples" / entry["sample_id"]
    save_rgb(f"{stem}_texture", res.texture, config_hash=cfg.hash)
    save_gradient(f"{stem}_grad", res.grad, config_hash=cfg.hash)
    return {k: v for k, v in entry.items() if k != "capture"} | {
        "texture": f"samples/{entry['sample_id']}_texture",
        "grad": f"samples/{entry['sample_id']}_grad",
        "diagnostics": res.diagnostics,
    }


def run_decompose(cfg: ExperimentConfig, in_dir: Path | str, out_dir: Path | str, jobs: int = 1) -> dict:
    src_dir = Path(in_dir)
    manifest = read_manifest(src_dir)
    out = _fresh_dir(Path(out_dir))
    samples = _run(_decompose_one, [(cfg, src_dir, out, e) for e in manifest["samples"]], jobs, "decompose")
    result = {**_header(cfg, DECOMPOSED), "samples": samples}
    write_json(out / MANIFEST, result)
    return result


def run_embed(cfg: ExperimentConfig, in_dir: Path | str, out_dir: Path | str, jobs: int = 1) -> dict:
    from .embed import embed_gradient, embed_texture

    src_dir = Path(in_dir)
    manifest = read_manifest(src_dir)
    out = _fresh_dir(Path(out_dir))
    rows, records = [], []
    for i, e in enumerate(manifest["samples"]):
        x_rgb = embed_texture(load_rgb(src_dir / e["texture"]))
        x_grad, ok = embed_gradient(load_gradient(src_dir / e["grad"]))
        rows.append(np.concatenate([x_rgb, x_grad]))
        records.append({"sample_id": e["sample_id"], "subject_id": e["subject_id"], "label": e["label"], "rgb_valid": True, "grad_valid": bool(ok)})
        _progress("embed", i, len(manifest["samples"]))
    if not rows:
        raise InvalidInputError(f"{src_dir / MANIFEST}: no samples to embed")
    save_raw(out / "embeddings", np.asarray(rows), None, config_hash=cfg.hash)
    result = {**_header(cfg, EMBEDDINGS), "dim": 2 * HALF_DIM, "file": "embeddings", "samples": records}
    write_json(out / MANIFEST, result)
    return result


def load_embeddings(stage_dir: Path | str) -> EmbeddingSet:
    stage_dir = Path(stage_dir)
    manifest = read_manifest(stage_dir)
    a, _ = load_raw(stage_dir / manifest.get("file", "embeddings"))
    recs = manifest["samples"]
    records = [Record(r["sample_id"], r["subject_id"], r["label"]) for r in recs]
    return EmbeddingSet(records, a[:, :, 0], [r["rgb_valid"] for r in recs], [r["grad_valid"] for r in recs])


def _gamma_tag(g: float) -> str:
    return f"gamma_{g:g}"


def run_evaluate(cfg: ExperimentConfig, in_dir: Path | str, out_dir: Path | str) -> dict[str, EvalReport]:
    """Report at the configured distance, plus one per ``[eval].gammas`` value."""
    emb = load_embeddings(in_dir)
    out = _fresh_dir(Path(out_dir))
    ev = cfg.eval
    lambdas = np.linspace(0.0, ev.lambda_max, ev.n_lambdas)
    base = components(cfg).params
    runs = {"": base}
    for g in ev.gammas:
        runs[_gamma_tag(g)] = DistanceParams(g, base.beta, base.alpha)
    reports = {}
    for tag, params in runs.items():
        rep = evaluate(emb, params, ev.ranks or DEFAULT_RANKS, lambdas, ev.split_seed, {"effective": cfg.to_dict(), "config_hash": cfg.hash})
        rep.write(out / tag if tag else out)
        reports[tag] = rep
        log.info("evaluate %s: rank-1 %.1f%%, ACER %s", tag or "default", rep.rank_accuracy.get(1, math.nan), rep.acer)
    write_json(out / MANIFEST, {**_header(cfg, REPORT), "reports": sorted(t or "." for t in reports)})
    return reports


def default_input(root: Path, stage: str) -> Path:
    """Where a stage reads from when no input directory is given."""
    if stage == "project":
        return root / RELIT if (root / RELIT / MANIFEST).exists() else root / DATASET
    prev = {"relight": DATASET, "spoof": DATASET, "decompose": CAPTURES, "embed": DECOMPOSED, "evaluate": EMBEDDINGS}
    return root / prev[stage]


def run_all(cfg: ExperimentConfig, root: Path | str, jobs: int = 1) -> dict[str, EvalReport]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    run_synth(cfg, root / DATASET, jobs)
    src = root / DATASET
    if cfg.relight.enabled:
        run_relight(cfg, src, root / RELIT, jobs)
        src = root / RELIT
    elif (root / RELIT).exists():
        shutil.rmtree(root / RELIT)
    run_project(cfg, src, root / CAPTURES, jobs)
    run_decompose(cfg, root / CAPTURES, root / DECOMPOSED, jobs)
    run_embed(cfg, root / DECOMPOSED, root / EMBEDDINGS, jobs)
    return run_evaluate(cfg, root / EMBEDDINGS, root / REPORT)
