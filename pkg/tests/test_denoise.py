import inspect

import numpy as np
import pytest

from epipocs.costs import tv_eval
from epipocs.denoise import (
    BaselineConfig,
    baseline_objective,
    chambolle_denoise,
    lambda_grid_search,
    pocs_denoise,
)
from epipocs.epigraph import oracle_project_epigraph
from epipocs.costs import TVCost
from epipocs.geometry import LiftedPoint
from epipocs.metrics import NoiseModel, add_noise, snr_db


def two_level(n=32):
    x = np.full((n, n), 50.0)
    x[:, n // 2 :] = 200.0
    return x


def test_constant_input_is_returned_unchanged():
    v = np.full((8, 8), 42.0)
    r = pocs_denoise(v)
    np.testing.assert_array_equal(r.estimate, v)
    assert r.iterations_run <= 1


def test_two_level_image_improves():
    x = two_level()
    v = add_noise(x, NoiseModel.gaussian(25), 2024)
    r = pocs_denoise(v, truth=x)
    assert r.estimate.shape == v.shape
    assert r.output_snr > r.input_snr
    # golden values from the seeded run
    assert r.input_snr == pytest.approx(15.15, abs=0.01)
    assert r.output_snr == pytest.approx(23.96, abs=0.01)


def test_small_1d_case_against_grid_oracle():
    v = np.array([0.0, 2.0, 0.0])
    r = pocs_denoise(v)
    assert tv_eval(r.estimate) < 4.0
    o = oracle_project_epigraph(TVCost("1d"), LiftedPoint(v, 0.0), box=(-1, 3), step=1e-3)
    assert np.linalg.norm(r.estimate - o.w) <= 1e-2
    assert np.linalg.norm(v - r.estimate) <= np.linalg.norm(v - o.w) + 1e-2


def test_pocs_has_no_tradeoff_parameter():
    params = set(inspect.signature(pocs_denoise).parameters)
    assert params == {"v", "alpha", "tol", "max_iter", "truth"}


def test_tv_never_increases_and_determinism():
    rng = np.random.default_rng(9)
    for k in range(10):
        v = rng.normal(size=(12, 12)) * 30 + 100 if k % 2 else rng.normal(size=40) * 5
        a = pocs_denoise(v)
        b = pocs_denoise(v)
        assert tv_eval(a.estimate) <= tv_eval(v) + 1e-9
        assert np.array_equal(a.estimate, b.estimate)


def test_alpha_monotone_smoothing():
    # larger alpha should never give a rougher estimate
    x = two_level()
    v = add_noise(x, NoiseModel.gaussian(30), 5)
    tvs = [tv_eval(pocs_denoise(v, alpha=a).estimate) for a in (0.5, 1.0, 2.0)]
    assert tvs[2] <= tvs[1] <= tvs[0]


def test_baseline_limits():
    rng = np.random.default_rng(4)
    v = 100 + rng.normal(size=(32, 32)) * 25
    r = chambolle_denoise(v, BaselineConfig(1e-6))
    assert np.linalg.norm(r.estimate - v) <= 1e-3 * np.linalg.norm(v)
    r = chambolle_denoise(v, BaselineConfig(1e4))
    assert tv_eval(r.estimate) <= 0.01 * tv_eval(v)


@pytest.mark.parametrize("lam", [0.5, 4.0, 32.0, 256.0])
def test_baseline_objective_non_increasing(lam):
    x = two_level()
    v = add_noise(x, NoiseModel.gaussian(25), 1)
    r = chambolle_denoise(v, BaselineConfig(lam))
    obj = np.array(r.objective)
    assert np.all(np.diff(obj) <= 1e-6 * (1 + np.abs(obj[:-1])))
    assert obj[-1] <= baseline_objective(v, v, lam)


def test_baseline_rejects_bad_input():
    with pytest.raises(ValueError):
        chambolle_denoise(np.zeros(10), BaselineConfig(1.0))
    with pytest.raises(ValueError):
        BaselineConfig(0.0)
    with pytest.raises(ValueError):
        BaselineConfig(1.0, step=0.3)


def test_grid_search_examples():
    x = two_level()
    v = add_noise(x, NoiseModel.gaussian(15), 3)
    assert lambda_grid_search(v, x, [8.0])[0] == 8.0
    lam, _ = lambda_grid_search(x, x, [4.0, 0.5, 2.0])
    assert lam == 0.5
    grid = [0.5 * 2**k for k in range(8)]
    lam, best = lambda_grid_search(v, x, grid)
    assert grid[0] < lam < grid[-1]
    assert best == pytest.approx(snr_db(x, chambolle_denoise(v, BaselineConfig(lam)).estimate))
    # golden value from the seeded run
    assert lam == 32.0
    with pytest.raises(ValueError):
        lambda_grid_search(v, x, [])
