import math

import numpy as np
import pytest

from jumpsift import (
    SOURCE_FINITE_ACTIVITY,
    SOURCE_IA_SMALL,
    CustomModel,
    InvalidArgumentError,
    Model1,
    Model2,
    Model3,
    SamplePath,
    TimeGrid,
    UnsupportedError,
    build_irregular_grid,
    build_uniform_grid,
    path_seed,
    sample_gamma_increment,
    simulate,
    true_integrated_variance,
)


def grid(n=100, t=1.0):
    return build_uniform_grid(n, t)


def test_same_seed_bit_identical():
    g = grid(200)
    a = simulate(Model1(), g, 1, 42)
    b = simulate(Model1(), g, 1, 42)
    assert np.array_equal(a.observations, b.observations)
    assert a.ground_truth.jumps == b.ground_truth.jumps


def test_different_seeds_differ():
    g = grid(200)
    a = simulate(Model1(), g, 1, 42)
    b = simulate(Model1(), g, 1, 43)
    assert not np.array_equal(a.observations, b.observations)


def test_path_seed_is_xor():
    assert path_seed(0b1100, 0b1010) == 0b0110
    assert path_seed(42, 0) == 42
    # stays inside 64 bits for any index
    assert path_seed(2**63, 2**63) == 0


def test_path_shape_and_start():
    g = grid(150)
    p = simulate(Model1(), g, 1, 7)
    assert p.observations.shape == (151,)
    assert p.observations[0] == 0.0
    assert p.grid is g
    assert p.ground_truth is not None


def test_substeps_refine_truth_but_not_observations():
    g = grid(40)
    p = simulate(Model1(), g, 3, 9)
    assert p.observations.shape == (41,)
    assert p.ground_truth.spot_variance.values.shape == (3 * 40 + 1,)
    assert p.ground_truth.spot_variance.refinement == 3
    assert p.ground_truth.continuous_part.shape == (41,)


def test_jump_events_land_in_their_intervals():
    g = grid(100)
    p = simulate(Model1(), g, 1, 12345)
    events = p.ground_truth.jumps
    assert len(events) > 0
    times = g.times
    for ev in events:
        assert 0.0 < ev.time <= 1.0
        assert ev.size != 0.0
        assert ev.source == SOURCE_FINITE_ACTIVITY
    # intervals holding a jump: observed increment = continuous increment + sizes
    dx = np.diff(p.observations)
    dc = np.diff(p.ground_truth.continuous_part)
    jump_per_interval = {}
    for ev in events:
        idx = int(np.searchsorted(times, ev.time, side="left")) - 1
        jump_per_interval[idx] = jump_per_interval.get(idx, 0.0) + ev.size
    for i in range(100):
        expect = dc[i] + jump_per_interval.get(i, 0.0)
        assert math.isclose(dx[i], expect, rel_tol=1e-12, abs_tol=1e-15)


def test_mean_jump_count_matches_intensity():
    g = grid(50)
    counts = [len(simulate(Model1(), g, 1, path_seed(3000, i)).ground_truth.jumps)
              for i in range(500)]
    assert 4.6 < np.mean(counts) < 5.4   # lambda=5, se ~ 0.1


def test_model1_terminal_value_centered():
    g = grid(100)
    xs = [simulate(Model1(), g, 1, path_seed(4000, i)).observations[-1]
          for i in range(400)]
    # Var(X_1) = 0.09 + 5 * 0.36, so the 400-path mean has se ~ 0.07
    assert abs(np.mean(xs)) < 0.29


def test_true_integrated_variance_constant_vol():
    g = grid(128)
    p = simulate(Model1(), g, 1, 5)
    assert math.isclose(true_integrated_variance(p, 2), 0.09, rel_tol=1e-12)
    assert math.isclose(true_integrated_variance(p, 4), 0.0081, rel_tol=1e-12)


def test_true_integrated_variance_requires_truth_and_known_power():
    g = grid(16)
    p = simulate(Model1(), g, 1, 5)
    with pytest.raises(InvalidArgumentError):
        true_integrated_variance(p, 3)
    bare = SamplePath(g, p.observations)
    with pytest.raises(UnsupportedError):
        true_integrated_variance(bare, 2)


def test_simulate_on_irregular_grid():
    g = build_irregular_grid(300, 1.0, 0.5, seed=2)
    p = simulate(Model1(), g, 1, 8)
    assert p.observations.shape == (301,)
    assert math.isclose(true_integrated_variance(p, 2), 0.09, rel_tol=1e-12)


# ---------------------------------------------------------------------------
# Model 2

def test_model2_terminal_logvol_matches_ou_law():
    g = grid(100)
    k, t = 1.0, 1.0
    ends = []
    for i in range(400):
        p = simulate(Model2(), g, 1, path_seed(1000, i))
        h_path = 0.5 * np.log(p.ground_truth.spot_variance.values)
        ends.append(h_path[-1])
    ends = np.array(ends)
    mean_theory = math.log(0.3) * math.exp(-k * t) + math.log(0.25) * (1 - math.exp(-k * t))
    sd_theory = 0.01 * math.sqrt((1 - math.exp(-2 * k * t)) / (2 * k))
    assert abs(ends.mean() - mean_theory) < 4 * sd_theory / math.sqrt(400)
    assert 0.0055 < ends.std(ddof=1) < 0.0080   # sd_theory ~ 0.00658


def test_model2_leverage_is_negative():
    g = grid(100)
    dxs, dhs = [], []
    for i in range(200):
        p = simulate(Model2(), g, 1, path_seed(1000, i))
        h_path = 0.5 * np.log(p.ground_truth.spot_variance.values)
        dxs.append(np.diff(p.observations))
        dhs.append(np.diff(h_path))
    corr = np.corrcoef(np.concatenate(dxs), np.concatenate(dhs))[0, 1]
    # rho = -0.7, diluted by the jump component of dX
    assert corr < -0.3


def test_model2_subgrid_refinement_converges():
    # left Riemann sums of one simulated variance path: full 100-point
    # subgrid vs its every-10th subsample must agree closely
    g = build_uniform_grid(50, 1.0)
    p = simulate(Model2(), g, 100, 7)
    spot = p.ground_truth.spot_variance.values
    w = 1.0 / 5000
    full = math.fsum((spot[:-1] * w).tolist())
    sub = spot[::10]
    coarse = math.fsum((sub[:-1] * (10 * w)).tolist())
    assert abs(full - coarse) / full < 1e-3


def test_model2_spot_variance_positive_and_varying():
    g = grid(200)
    p = simulate(Model2(), g, 1, 3)
    spot = p.ground_truth.spot_variance.values
    assert np.all(spot > 0)
    assert spot.std() > 0


# ---------------------------------------------------------------------------
# Model 3

def test_model3_terminal_variance():
    g = grid(200)
    xs = np.array([simulate(Model3(), g, 1, path_seed(2000, i)).observations[-1]
                   for i in range(2000)])
    # Var(X_1) = eta^2 + c^2 b + sigma^2 = 0.04 + 0.0092 + 0.09 = 0.1392;
    # se of the sample variance at 2000 paths is ~ 0.0044
    assert abs(xs.var(ddof=1) - 0.1392) < 4 * 0.0045


def test_model3_jumps_are_small_aggregate_events():
    g = grid(100)
    p = simulate(Model3(), g, 1, 11)
    events = p.ground_truth.jumps
    assert len(events) > 0
    for ev in events:
        assert ev.source == SOURCE_IA_SMALL
        assert ev.size != 0.0
        assert 0.0 < ev.time <= 1.0


def test_model3_constant_spot_variance():
    g = grid(64)
    p = simulate(Model3(), g, 1, 4)
    assert np.all(p.ground_truth.spot_variance.values == 0.09)
    assert math.isclose(true_integrated_variance(p, 2), 0.09, rel_tol=1e-12)


def test_sample_gamma_increment_never_zero():
    # shape h/b ~ 7e-4 drives the raw numpy draw to exact 0.0 more than
    # half the time; the sampler must resample those away
    rng = np.random.Generator(np.random.Philox(key=5))
    draws = [sample_gamma_increment(7.25e-4, 0.23, rng) for _ in range(500)]
    assert all(d > 0.0 for d in draws)


def test_sample_gamma_increment_moments():
    rng = np.random.Generator(np.random.Philox(key=6))
    shape, scale = 2.0, 0.5
    draws = np.array([sample_gamma_increment(shape, scale, rng) for _ in range(4000)])
    assert abs(draws.mean() - shape * scale) < 4 * math.sqrt(shape) * scale / math.sqrt(4000)


def test_sample_gamma_increment_validates():
    rng = np.random.Generator(np.random.Philox(key=1))
    with pytest.raises(InvalidArgumentError):
        sample_gamma_increment(0.0, 1.0, rng)
    with pytest.raises(InvalidArgumentError):
        sample_gamma_increment(1.0, -1.0, rng)


# ---------------------------------------------------------------------------
# custom model

def test_custom_diffusion_only():
    g = grid(100)
    model = CustomModel(drift="zero", spot_vol="constant:0.3", jumps="none")
    p = simulate(model, g, 1, 21)
    assert p.ground_truth.jumps == ()
    assert math.isclose(true_integrated_variance(p, 2), 0.09, rel_tol=1e-12)


def test_custom_constant_drift():
    g = grid(100)
    model = CustomModel(drift="constant:0.5", spot_vol="constant:0.01", jumps="none")
    xs = [simulate(model, g, 1, path_seed(0, i)).observations[-1] for i in range(100)]
    assert abs(np.mean(xs) - 0.5) < 0.01 * 4 / math.sqrt(100)


def test_custom_zero_intensity_has_no_jumps():
    g = grid(50)
    model = CustomModel(drift="zero", spot_vol="constant:0.3",
                        jumps="compound-poisson:0,0.6")
    p = simulate(model, g, 1, 33)
    assert p.ground_truth.jumps == ()


def test_custom_model_rejects_malformed_specs():
    with pytest.raises(InvalidArgumentError):
        CustomModel(drift="linear:1", spot_vol="constant:0.3", jumps="none")
    with pytest.raises(InvalidArgumentError):
        CustomModel(drift="zero", spot_vol="constant:-0.3", jumps="none")
    with pytest.raises(InvalidArgumentError):
        CustomModel(drift="zero", spot_vol="constant:0.3", jumps="poisson")
