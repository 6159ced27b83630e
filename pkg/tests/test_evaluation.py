import math

import numpy as np
import pytest

from fringelab.core import InvalidInputError
from fringelab.embed import HALF_DIM, DistanceParams
from fringelab.evaluation import (
    DegenerateSweepError,
    EmbeddingSet,
    Record,
    acer,
    acer_from_rates,
    evaluate,
    rank_n_accuracy,
    split_gallery_probe,
    threshold_sweep,
    tpr_at_fpr,
)


def _set(n_subjects=5, per=4, noise=0.05, seed=0, spoofs=0):
    rng = np.random.default_rng(seed)
    recs, vecs = [], []
    for s in range(n_subjects):
        centre = rng.normal(size=2 * HALF_DIM)
        for k in range(per):
            recs.append(Record(f"s{s}_g{k}", f"s{s}"))
            vecs.append(centre + noise * rng.normal(size=2 * HALF_DIM))
        for k in range(spoofs):
            recs.append(Record(f"s{s}_x{k}", f"s{s}", "spoof-planar"))
            v = centre + noise * rng.normal(size=2 * HALF_DIM)
            v[HALF_DIM:] = rng.normal(size=HALF_DIM)
            vecs.append(v)
    vecs = np.array(vecs)
    vecs[:, :HALF_DIM] /= np.linalg.norm(vecs[:, :HALF_DIM], axis=1, keepdims=True)
    vecs[:, HALF_DIM:] /= np.linalg.norm(vecs[:, HALF_DIM:], axis=1, keepdims=True)
    n = len(recs)
    return EmbeddingSet(recs, vecs, np.ones(n, bool), np.ones(n, bool))


def test_split_halves_by_sample_id():
    recs = [Record(f"a_{k}", "a") for k in (3, 1, 2, 0, 4)] + [Record("a_x", "a", "spoof-planar")]
    g, p = split_gallery_probe(recs)
    assert sorted(recs[i].sample_id for i in g) == ["a_0", "a_1", "a_2"]
    assert "a_x" in {recs[i].sample_id for i in p}
    g2, _ = split_gallery_probe(recs, seed=5)
    assert len(g2) == 3


def test_gallery_equals_probe_gives_full_rank1():
    e = _set(noise=1.0)
    acc, skipped = rank_n_accuracy(e, e, DistanceParams(0.5, math.inf, 1), [1])
    assert acc[1] == 100.0 and not skipped


def test_single_subject_and_monotone_ranks():
    e = _set(1, 6)
    rep = evaluate(e, DistanceParams())
    assert rep.rank_accuracy[1] == 100.0
    rep = evaluate(_set(20, 4, noise=3.0), DistanceParams(0.5, math.inf, 1), n_values=(1, 2, 5, 10))
    vals = [rep.rank_accuracy[n] for n in (1, 2, 5, 10)]
    assert vals == sorted(vals)


def test_rank_invariant_under_relabelling():
    e = _set(6, 4, noise=1.5, seed=4)
    p = DistanceParams(0.5, math.inf, 1)
    base = evaluate(e, p).rank_accuracy
    mapping = {f"s{i}": f"subj{(i * 7) % 6}z" for i in range(6)}
    recs = [Record(r.sample_id.replace(r.subject_id, mapping[r.subject_id]), mapping[r.subject_id], r.label) for r in e.records]
    e2 = EmbeddingSet(recs, e.vectors, e.rgb_valid, e.grad_valid)
    assert evaluate(e2, p).rank_accuracy == base


def test_errors():
    e = _set(2, 2)
    empty = e.subset([])
    with pytest.raises(InvalidInputError):
        rank_n_accuracy(empty, e, DistanceParams(), [1])
    with pytest.raises(DegenerateSweepError):
        threshold_sweep([0.1, 0.2], [True, True])
    only_spoofs = EmbeddingSet([Record("a", "s0", "spoof-planar")], e.vectors[:1], [True], [True])
    with pytest.raises(InvalidInputError):
        evaluate(only_spoofs)


def test_sweep_boundaries_and_separation():
    d = np.array([0.05, 0.1, 0.15, 0.8, 0.9, 1.0])
    t = np.array([True, True, True, False, False, False])
    roc = threshold_sweep(d, t)
    assert roc[0].lam == 0.0 and roc[0].frr == 1.0 and roc[0].far == 0.0
    far = [p.far for p in roc]
    frr = [p.frr for p in roc]
    assert far == sorted(far) and frr == sorted(frr, reverse=True)
    value, best = acer(roc)
    assert value == 0.0 and best.far == best.frr == 0.0
    tpr = tpr_at_fpr(roc)
    assert all(v.tpr == 100.0 for v in tpr.values())


def test_identical_distributions_have_no_discrimination():
    rng = np.random.default_rng(1)
    d = rng.uniform(0, 2, 4000)
    t = np.arange(4000) % 2 == 0
    roc = threshold_sweep(d, t)
    gap = [p.far - (1 - p.frr) for p in roc]
    assert max(abs(g) for g in gap) < 0.05
    v = tpr_at_fpr(roc, [0.1, 0.5])
    assert v[0.5].tpr == pytest.approx(50.0, abs=5.0)


def test_acer_arithmetic():
    assert acer_from_rates(0.1, 0.2) == pytest.approx(15.0)
    assert acer_from_rates(0.0, 0.0) == 0.0


def test_fused_distance_detects_spoofs(tmp_path):
    e = _set(8, 4, noise=0.3, spoofs=2)
    rgb_only = evaluate(e, DistanceParams(0.0, math.inf, 1))
    fused = evaluate(e, DistanceParams(0.3, 0.35, 10))
    assert fused.acer < rgb_only.acer
    fused.write(tmp_path)
    assert (tmp_path / "cmc.csv").read_text().splitlines()[0] == "n,accuracy"
    assert (tmp_path / "roc.csv").read_text().splitlines()[0] == "lambda,far,frr"
    assert len((tmp_path / "roc.csv").read_text().splitlines()) == 402
