import numpy as np
import pytest

import rpisynth

A = np.array([[-0.5844, -0.2378, -0.2015], [-0.2378, 0.0368, 0.6915], [-0.2015, 0.6915, -0.0162]])
B = np.array([[0, 0.8974], [0, -1.8597], [0.8903, 0.9479]])
C = np.array([[0, 2.0091, -0.1402], [-0.9894, 0, 1.1447]])
D = np.array([[-0.8078, 0], [0.9676, 0.6751]])
G = np.array([[-0.4489, 2.1848], [-1.9691, 1.2596], [1.0364, 0.8726], [1.4018, -0.3397], [-0.9868, -2.0995]])
g = np.ones(5)


def test_select_params():
    p = rpisynth.select_params(A, B, C, D, G, g, gamma=0.2, mu=1e-3)
    assert p.s == 60
    c = rpisynth.compute_constants(A, B, C, D, G, g, p.s)
    assert p.lambda_ <= (1 - p.alpha) * c.theta + 1e-12
    assert (p.gamma + p.lambda_) * c.zeta <= p.alpha * p.lambda_ + 1e-15


def test_support_hull_matches_corners():
    rng = np.random.default_rng(0)
    centers = rng.normal(size=(3, 2))
    hw = rng.uniform(0, 1, size=(3, 2))
    T = rng.normal(size=(2, 2))
    p = rng.normal(size=2)
    best = -np.inf
    for c, h in zip(centers, hw):
        for sx in (-1, 1):
            for sy in (-1, 1):
                best = max(best, p @ T @ (c + h * np.array([sx, sy])))
    assert rpisynth.support_hull(T, p, centers, hw) == pytest.approx(best, abs=1e-10)
    assert rpisynth.contains_point(centers, hw, centers[1])


def test_generate_synth_verify():
    spec = rpisynth.generate(2, 2, 2, 0.5, 3)
    spec["options"].update({"N": 2, "l": 3, "max_iters": 5, "mc_runs": 2, "mc_steps": 100})
    res = rpisynth.synth(spec)
    assert res["objective"] >= res["distance"] - 1e-6
    ok, checks = rpisynth.verify(spec, res)
    assert ok, checks
    res["W"][0]["halfwidth"] = [h * 100 for h in res["W"][0]["halfwidth"]]
    ok, _ = rpisynth.verify(spec, res)
    assert not ok


def test_errors_map_to_exceptions():
    with pytest.raises(ValueError):
        rpisynth.params("{")
    spec = rpisynth.generate(2, 2, 2, 0.5, 3)
    spec["system"]["A"] = [[2.0, 0.0], [0.0, 0.0]]
    with pytest.raises(rpisynth.AssumptionError):
        rpisynth.params(spec)


def test_keyword_options_override_the_spec():
    spec = rpisynth.generate(2, 2, 2, 0.5, 4)
    res = rpisynth.synth(spec, N=1, l=2, max_iters=3, mc_runs=1, mc_steps=10)
    assert res["N"] == 1 and res["l"] == 2
    assert spec["options"]["N"] != 1 or spec["options"]["l"] != 2
