import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from manifold_fit.contraction import (
    ContractionFitter,
    ContractionFrame,
    FitConfig,
    alpha_weights,
    auto_radii,
    axial_weight,
    bump,
    cylinder_weights,
    decompose_uv,
    f_map,
    fit_batch,
    g_map,
)
from manifold_fit.exceptions import ConfigError, DegenerateDirection, EmptyCylinder, EmptyNeighborhood
from manifold_fit.geometry import is_projector
from manifold_fit.manifolds import Circle, InitialBand, NoiseModel, add_noise, initial_points, sample_uniform
from manifold_fit.neighbors import NeighborIndex

# empirical constant for |G(z) - z*| <= C2 sigma^2 log(1/sigma), pinned from a
# pilot of 250 on-manifold points (largest observed ratio 1.25 at sigma=0.06)
BOUND_C2 = 3.0


@pytest.fixture(scope="module")
def circle_cloud():
    clean = sample_uniform(Circle(), 50_000, seed=100)
    return add_noise(clean, NoiseModel(0.06), seed=101).noisy


def manual(r0=1.0, r1=1.0, r2=2.0, k=2, min_neighbors=1):
    return FitConfig(sigma=0.06, k=k, r0=r0, r1=r1, r2=r2, schedule="manual", min_neighbors=min_neighbors)


def test_auto_radii_values():
    r0, r1, r2 = auto_radii(0.06, 1000)
    assert r0 == r1 == pytest.approx(0.1)
    assert r2 == pytest.approx(10 * 0.06 * math.sqrt(math.log(1 / 0.06)) / 3)
    assert r2 > r1


def test_config_has_no_intrinsic_dimension():
    assert "d" not in FitConfig.__dataclass_fields__
    assert "d" not in ContractionFitter().get_params()


def test_config_validation():
    with pytest.raises(ConfigError):
        FitConfig(sigma=-1)
    with pytest.raises(ConfigError):
        FitConfig(sigma=0.1, k=1)


@pytest.mark.parametrize("sq, expected", [(0.0, 1.0), (0.5, 0.25), (1.0, 0.0), (1.5, 0.0)])
def test_bump_examples(sq, expected):
    assert bump(sq, 1.0, 2) == pytest.approx(expected, abs=1e-15)


def test_alpha_weights_collinear():
    r0 = 0.4
    z = np.array([0.0, 0.0])
    pts = np.array([[0.0, 0.0], [r0 / math.sqrt(2), 0.0], [r0, 0.0]])
    a = alpha_weights(z, pts, r0, 2)
    np.testing.assert_allclose(a, np.array([1.0, 0.25, 0.0]) / 1.25, atol=1e-15)
    index = NeighborIndex(pts)
    np.testing.assert_allclose(f_map(z, index, manual(r0=r0)), a @ pts, atol=1e-15)


def test_alpha_weights_empty():
    with pytest.raises(EmptyNeighborhood):
        alpha_weights([0.0, 0.0], [[5.0, 0.0]], 1.0, 2)


def test_f_map_single_and_symmetric():
    assert np.array_equal(f_map([0.0, 0.0], [[0.3, 0.1]], manual()), [0.3, 0.1])
    np.testing.assert_allclose(f_map([0.0, 0.0], [[0.3, 0.1], [-0.3, -0.1]], manual()), [0.0, 0.0], atol=1e-16)


@pytest.mark.parametrize(
    "u, v, expected", [(0.3, 0.0, 1.0), (0.75, 0.0, 0.5625), (1.0, 0.0, 0.0), (0.0, 0.5, 0.0), (0.0, 0.25, 0.5625)]
)
def test_cylinder_weight_examples(u, v, expected):
    # r2 = 1, r1 = 0.5
    w = cylinder_weights(np.array([u, 0.0]), np.array([0.0, v]), 0.5, 1.0, 2)
    assert w == pytest.approx(expected, abs=1e-15)


def test_axial_weight_plateau_and_support():
    t = np.linspace(0, 1.2, 121)
    w = axial_weight(t, 1.0, 2)
    assert np.all(w[t <= 0.5] == 1.0)
    assert np.all(w[t >= 1.0] == 0.0)
    assert np.all(np.diff(w) <= 0)


def test_decompose_uv():
    frame = ContractionFrame.from_points(np.zeros(2), np.array([2.0, 0.0]))
    assert is_projector(frame.U_hat, 1)
    u, v = decompose_uv(frame, np.array([3.0, 4.0]))
    np.testing.assert_array_equal(u, [3.0, 0.0])
    np.testing.assert_array_equal(v, [0.0, 4.0])
    u, v = decompose_uv(frame, np.zeros(2))
    assert not u.any() and not v.any()


def test_decompose_uv_random(rng):
    for _ in range(50):
        z, f, y = rng.standard_normal((3, 3))
        frame = ContractionFrame.from_points(z, f)
        u, v = decompose_uv(frame, y)
        np.testing.assert_allclose(u + v, y - z, atol=1e-12)
        assert abs(u @ v) <= 1e-12 * max(1.0, np.linalg.norm(y - z) ** 2)
        assert np.linalg.norm(np.cross(u, f - z)) <= 1e-12 * max(1.0, np.linalg.norm(u) * np.linalg.norm(f - z))


def test_g_map_single_point_in_cylinder():
    # F(z) = (0.5, 0); the only sample in the cylinder is itself
    pts = np.array([[0.5, 0.0], [0.5, 5.0]])
    np.testing.assert_array_equal(g_map([0.0, 0.0], pts, manual()), [0.5, 0.0])


def test_g_map_symmetric_about_axis():
    pts = np.array([[0.4, 0.0], [0.3, 0.2], [0.3, -0.2], [0.6, 0.1], [0.6, -0.1]])
    g, frame = g_map([0.0, 0.0], pts, manual(), return_frame=True)
    assert abs(g[1]) < 1e-15
    np.testing.assert_allclose(frame.direction_point[1], 0.0, atol=1e-15)


def test_g_map_degenerate_and_empty():
    with pytest.raises(DegenerateDirection):
        g_map([0.0, 0.0], [[0.3, 0.0], [-0.3, 0.0]], manual())
    with pytest.raises(EmptyNeighborhood):
        g_map([0.0, 0.0], [[5.0, 0.0]], manual())
    # F points along +x but every sample sits off the cylinder laterally except none
    with pytest.raises(EmptyCylinder):
        g_map([0.0, 0.0], [[0.5, 0.0]], manual(r1=1.0, r2=0.2, r0=1.0))


def test_rigid_motion_equivariance(rng, circle_cloud):
    pts = circle_cloud[:5000]
    cfg = FitConfig(sigma=0.06)
    z = np.array([1.07, 0.05])
    g = g_map(z, pts, cfg)
    Q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    t = np.array([3.0, -2.0])
    g_moved = g_map(Q @ z + t, pts @ Q.T + t, cfg)
    np.testing.assert_allclose(g_moved, Q @ g + t, atol=1e-9)


def test_outputs_within_neighbor_bounding_box(circle_cloud):
    index = NeighborIndex(circle_cloud)
    cfg = FitConfig(sigma=0.06)
    r0, r1, r2 = cfg.radii(len(index))
    W = initial_points(Circle(), InitialBand.for_sigma(0.06, 30), NoiseModel(0.06), seed=5)
    for z in W:
        f = f_map(z, index, cfg)
        ball = index.points[index.radius_query(z, r0)]
        assert np.all(f >= ball.min(0) - 1e-12) and np.all(f <= ball.max(0) + 1e-12)
        g = g_map(z, index, cfg)
        cyl = index.points[index.radius_query(z, math.hypot(r1, r2))]
        assert np.all(g >= cyl.min(0) - 1e-12) and np.all(g <= cyl.max(0) + 1e-12)


def test_fit_batch_statuses():
    pts = np.array([[1.0, 0.0], [1.0, 0.01], [1.0, -0.01], [0.99, 0.0]])
    W = np.array([[1.05, 0.0], [9.0, 9.0]])
    out = fit_batch(W, pts, manual(r0=0.2, r1=0.2, r2=0.4, min_neighbors=3))
    assert list(out.status) == ["ok", "empty_sphere"]
    np.testing.assert_array_equal(out.outputs[1], W[1])
    assert len(out) == 2


def test_fit_batch_degenerate_emits_ball_mean():
    pts = np.array([[0.3, 0.0], [-0.3, 0.0]])
    out = fit_batch([[0.0, 0.0]], pts, manual())
    assert out.status[0] == "degenerate_direction"
    np.testing.assert_allclose(out.outputs[0], [0.0, 0.0], atol=1e-16)


def test_worker_count_does_not_change_outputs(circle_cloud):
    W = initial_points(Circle(), InitialBand.for_sigma(0.06, 100), NoiseModel(0.06), seed=3)
    one = fit_batch(W, circle_cloud, FitConfig(sigma=0.06), n_jobs=1)
    eight = fit_batch(W, circle_cloud, FitConfig(sigma=0.06), n_jobs=8)
    assert one.outputs.tobytes() == eight.outputs.tobytes()
    np.testing.assert_array_equal(one.status, eight.status)


def test_contraction_moves_band_points_closer(circle_cloud):
    W = initial_points(Circle(), InitialBand.for_sigma(0.06, 100), NoiseModel(0.06), seed=4)
    out = ContractionFitter(sigma=0.06).fit(circle_cloud).project(W)
    assert out.ok.all()
    assert Circle().distance(out.outputs).mean() < Circle().distance(W).mean()


def test_on_manifold_points_stay_within_second_order_bound(circle_cloud):
    sigma = 0.06
    z = sample_uniform(Circle(), 40, seed=77)
    out = ContractionFitter(sigma=sigma).fit(circle_cloud).project(z)
    assert out.ok.all()
    err = np.linalg.norm(out.outputs - z, axis=1)
    assert err.max() <= BOUND_C2 * sigma**2 * math.log(1 / sigma)


def test_estimator_api(circle_cloud):
    est = ContractionFitter(sigma=0.05, k=3)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        est.transform([[1.0, 0.0]])
    est.fit(circle_cloud[:2000])
    assert est.n_features_in_ == 2
    Y = est.transform([[1.05, 0.0]])
    assert Y.shape == (1, 2)
    F = est.direction([[1.05, 0.0], [50.0, 0.0]])
    assert np.isnan(F[1]).all() and np.isfinite(F[0]).all()
