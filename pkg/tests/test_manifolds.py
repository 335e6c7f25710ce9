import math

import numpy as np
import pytest
from scipy import integrate, stats

from manifold_fit.exceptions import AmbiguousProjection
from manifold_fit.manifolds import (
    CalabiYauProjection,
    Circle,
    InitialBand,
    NoiseModel,
    Sphere,
    Torus,
    add_noise,
    calabi_yau_grid,
    initial_points,
    make_manifold,
    sample_uniform,
)

MODELS = [Circle(), Sphere(), Torus(), Circle(radius=2.5), Torus(R=2.0, r=0.5)]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"{m.kind}-{m.params()}")
def test_samples_lie_on_manifold(model):
    pts = sample_uniform(model, 2000, seed=5)
    assert pts.shape == (2000, model.ambient_dim)
    assert np.max(model.distance(pts)) <= 1e-9
    np.testing.assert_array_equal(pts, sample_uniform(model, 2000, seed=5))


def test_circle_four_points():
    pts = sample_uniform(Circle(), 4, seed=123)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_sphere_mean_near_origin():
    pts = sample_uniform(Sphere(), 100_000, seed=1)
    assert np.linalg.norm(pts.mean(axis=0)) < 0.02


def test_torus_implicit_equation():
    t = Torus()
    p = sample_uniform(t, 5000, seed=2)
    lhs = (np.hypot(p[:, 0], p[:, 1]) - t.R) ** 2 + p[:, 2] ** 2
    np.testing.assert_allclose(lhs, t.r**2, atol=1e-9)


def test_torus_major_angle_uniform():
    p = sample_uniform(Torus(), 100_000, seed=3)
    phi = np.arctan2(p[:, 1], p[:, 0])
    counts, _ = np.histogram(phi, bins=36, range=(-np.pi, np.pi))
    assert stats.chisquare(counts).pvalue > 0.001


def test_torus_minor_angle_follows_area_density():
    t = Torus()
    p = sample_uniform(t, 100_000, seed=4)
    theta = np.arctan2(p[:, 2], np.hypot(p[:, 0], p[:, 1]) - t.R)
    edges = np.linspace(-np.pi, np.pi, 25)
    counts, _ = np.histogram(theta, bins=edges)
    # expected mass per bin from the area element (R + r cos t), by quadrature
    mass = np.array([integrate.quad(lambda s: t.R + t.r * np.cos(s), a, b)[0] for a, b in zip(edges[:-1], edges[1:])])
    expected = len(theta) * mass / mass.sum()
    assert stats.chisquare(counts, expected).pvalue > 0.001


def test_noise_covariance():
    clean = sample_uniform(Sphere(), 100_000, seed=0)
    batch = add_noise(clean, NoiseModel(0.06), seed=9)
    cov = np.cov((batch.noisy - batch.clean).T)
    np.testing.assert_allclose(np.diag(cov), 0.0036, rtol=0.05)
    assert np.max(np.abs(cov - np.diag(np.diag(cov)))) < 0.05 * 0.0036


def test_noise_vanishing_and_deterministic():
    clean = sample_uniform(Circle(), 500, seed=0)
    tiny = add_noise(clean, NoiseModel(1e-12), seed=1)
    assert np.max(np.abs(tiny.noisy - clean)) < 1e-10
    a = add_noise(clean, NoiseModel(0.06), seed=2)
    b = add_noise(clean, NoiseModel(0.06), seed=2)
    np.testing.assert_array_equal(a.noisy, b.noisy)
    assert a.clean.tobytes() == clean.tobytes()


def test_noise_rejects_bad_sigma():
    with pytest.raises(ValueError):
        NoiseModel(0.0)


@pytest.mark.parametrize(
    "model, z, expected",
    [
        (Circle(), (2.0, 0.0), (1.0, 0.0)),
        (Sphere(), (0.0, 0.0, 3.0), (0.0, 0.0, 1.0)),
        (Torus(), (1.9, 0.0, 0.0), (1.4, 0.0, 0.0)),
        (Torus(), (0.0, 1.0, 0.65), (0.0, 1.0, 0.4)),
    ],
)
def test_projection_examples(model, z, expected):
    np.testing.assert_allclose(model.project(np.array(z)), expected, atol=1e-12)


def test_torus_projection_matches_surface_grid():
    t = Torus()
    a, b = np.meshgrid(np.linspace(0, 2 * np.pi, 1201), np.linspace(0, 2 * np.pi, 1201))
    ring = t.R + t.r * np.cos(a)
    surf = np.stack([ring * np.cos(b), ring * np.sin(b), t.r * np.sin(a)], -1).reshape(-1, 3)
    z = np.array([1.9, 0.0, 0.0])
    brute = surf[np.argmin(np.linalg.norm(surf - z, axis=1))]
    np.testing.assert_allclose(t.project(z), brute, atol=1e-6)


@pytest.mark.parametrize(
    "model, z, expected",
    [
        (Circle(), (2.0, 0.0), 1.0),
        (Torus(), (1.0, 0.0, 0.65), 0.25),
        (Sphere(), (0.5, 0.5, 0.5), 0.1339746),
    ],
)
def test_distance_examples(model, z, expected):
    assert model.distance(np.array(z)) == pytest.approx(expected, abs=1e-7)


@pytest.mark.parametrize(
    "model, z",
    [(Circle(), (0.0, 0.0)), (Sphere(), (0.0, 0.0, 0.0)), (Torus(), (0.0, 0.0, 0.3)), (Torus(), (1.0, 0.0, 0.0))],
)
def test_ambiguous_projection(model, z):
    with pytest.raises(AmbiguousProjection):
        model.project(np.array(z))


@pytest.mark.parametrize("model", MODELS[:3], ids=lambda m: m.kind)
def test_projection_idempotent_and_consistent(model, rng):
    Z = rng.standard_normal((500, model.ambient_dim)) * 0.3 + sample_uniform(model, 500, seed=8)
    P = model.project(Z)
    np.testing.assert_allclose(model.project(P), P, atol=1e-9)
    np.testing.assert_allclose(model.distance(Z), np.linalg.norm(Z - P, axis=1), atol=1e-9)


def test_initial_band_circle():
    band = InitialBand.for_sigma(0.06, 100)
    W = initial_points(Circle(), band, NoiseModel(0.06), seed=11)
    d = Circle().distance(W)
    assert W.shape == (100, 2)
    assert d.min() >= 0.03 and d.max() <= 0.12
    np.testing.assert_array_equal(W, initial_points(Circle(), band, NoiseModel(0.06), seed=11))


def test_initial_band_validation():
    with pytest.raises(ValueError):
        InitialBand(0.2, 0.1)


def test_calabi_yau_origin():
    P4, P3 = calabi_yau_grid((0.0, 0.0), 0.05, (0.0, 0.0), k1_set=(0,), k2_set=(0,), psi=math.pi / 4)
    np.testing.assert_allclose(P4, [[1.0, 0.0, 0.0, 0.0]], atol=1e-15)
    np.testing.assert_allclose(P3, [[1.0, 0.0, 0.0]], atol=1e-15)


def _quartic_residual(P4):
    x = P4[:, 0] + 1j * P4[:, 2]
    y = P4[:, 1] + 1j * P4[:, 3]
    return np.abs(x**4 + y**4 - 1)


def test_calabi_yau_full_grid():
    cy = CalabiYauProjection()
    assert len(cy.grid4) == 313296
    assert len(cy.grid4) == 61 * 321 * 16
    assert np.max(_quartic_residual(cy.grid4)) <= 1e-8
    assert cy.grid.shape == (313296, 4)


def test_calabi_yau_projection_3d():
    cy = CalabiYauProjection(theta_step=0.25, zeta_step=np.pi / 32, psi=math.pi / 4)
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    np.testing.assert_allclose(cy.grid[:, 2], c * cy.grid4[:, 2] + s * cy.grid4[:, 3], atol=1e-15)
    assert cy.ambient_dim == 3


def test_calabi_yau_distance_and_sampling():
    cy = CalabiYauProjection(theta_step=0.25, zeta_step=np.pi / 32, reference_theta_step=0.05, reference_zeta_step=np.pi / 128)
    pts = cy.sample(200, seed=1)
    assert np.max(cy.distance(pts)) == 0.0
    np.testing.assert_array_equal(pts, cy.sample(200, seed=1))
    np.testing.assert_array_equal(cy.sample(len(cy.grid), seed=0), cy.grid)
    with pytest.raises(NotImplementedError):
        sample_uniform(cy, 10, seed=0)


def test_make_manifold():
    assert make_manifold("torus", R=2.0, r=0.5) == Torus(2.0, 0.5)
    with pytest.raises(ValueError):
        make_manifold("klein")
    with pytest.raises(ValueError):
        Torus(R=1.0, r=1.0)
