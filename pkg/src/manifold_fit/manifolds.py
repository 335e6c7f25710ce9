"""Analytic test manifolds, the Gaussian noise model and initial-point bands.

Each model knows how to draw points on itself and carries exact projection
and distance oracles used to score fits.  All random draws go through the
counter-based streams in :mod:`manifold_fit._random`, so point ``i`` of any
sample depends only on ``(seed, i)``.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _random
from .exceptions import AmbiguousProjection, RejectionBudgetExceeded
from .neighbors import NeighborIndex
from .validation import as_point_cloud, check_positive

MAX_REJECTION_ATTEMPTS = 10_000


def _as_rows(Z, dim):
    Z = np.asarray(Z, dtype=np.float64)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    if Z.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {Z.shape[1]}")
    return Z, single


def _unwrap(values, single):
    return values[0] if single else values


class ManifoldModel:
    """Base class for the analytic manifolds.

    Subclasses define ``kind``, ``intrinsic_dim``, ``ambient_dim``, ``reach``
    and implement ``points_at``, ``_distance`` and ``_project``.
    """

    kind = "abstract"
    surface_uniform = True

    def points_at(self, seed, index):
        raise NotImplementedError

    def sample(self, n, seed):
        """``n`` clean points on the manifold; point ``i`` depends on ``(seed, i)`` only."""
        check_positive(n, "n", integer=True, minimum=1)
        return self.points_at(seed, np.arange(n, dtype=np.int64))

    def distance(self, Z):
        """Exact Euclidean distance to the manifold (scalar for a single point)."""
        Z, single = _as_rows(Z, self.ambient_dim)
        return _unwrap(self._distance(Z), single)

    def project(self, Z):
        """Nearest point on the manifold; raises AmbiguousProjection on the medial axis."""
        Z, single = _as_rows(Z, self.ambient_dim)
        return _unwrap(self._project(Z), single)

    def params(self):
        raise NotImplementedError

    def describe(self):
        return {
            "kind": self.kind,
            "d": self.intrinsic_dim,
            "D": self.ambient_dim,
            "reach": self.reach,
            "params": self.params(),
        }


@dataclass(frozen=True)
class Circle(ManifoldModel):
    """Circle of the given radius, centred at the origin of R^2."""

    radius: float = 1.0

    kind = "circle"
    intrinsic_dim = 1
    ambient_dim = 2

    def __post_init__(self):
        check_positive(self.radius, "radius")

    @property
    def reach(self):
        return self.radius

    def params(self):
        return {"radius": self.radius}

    def points_at(self, seed, index):
        index = np.asarray(index, dtype=np.int64)
        t = 2.0 * np.pi * _random.uniform(seed, _random.SAMPLE, index, 0)
        return self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def _distance(self, Z):
        return np.abs(np.linalg.norm(Z, axis=1) - self.radius)

    def _project(self, Z):
        nrm = np.linalg.norm(Z, axis=1)
        if np.any(nrm == 0.0):
            raise AmbiguousProjection("the centre is equidistant from every point of the circle")
        return Z * (self.radius / nrm)[:, None]


@dataclass(frozen=True)
class Sphere(ManifoldModel):
    """Sphere of the given radius in R^dim (default the 2-sphere in R^3)."""

    radius: float = 1.0
    dim: int = 3

    kind = "sphere"

    def __post_init__(self):
        check_positive(self.radius, "radius")
        check_positive(self.dim, "dim", integer=True, minimum=2)

    @property
    def ambient_dim(self):
        return self.dim

    @property
    def intrinsic_dim(self):
        return self.dim - 1

    @property
    def reach(self):
        return self.radius

    def params(self):
        return {"radius": self.radius, "dim": self.dim}

    def points_at(self, seed, index):
        g = _random.normal(seed, _random.SAMPLE, np.asarray(index, dtype=np.int64), self.dim)
        return self.radius * g / np.linalg.norm(g, axis=-1, keepdims=True)

    def _distance(self, Z):
        return np.abs(np.linalg.norm(Z, axis=1) - self.radius)

    def _project(self, Z):
        nrm = np.linalg.norm(Z, axis=1)
        if np.any(nrm == 0.0):
            raise AmbiguousProjection("the centre is equidistant from every point of the sphere")
        return Z * (self.radius / nrm)[:, None]


@dataclass(frozen=True)
class Torus(ManifoldModel):
    """Ring torus in R^3 with major radius ``R`` and minor radius ``r``.

    Uniform sampling w.r.t. surface area: the major angle is uniform, the
    minor angle is accepted with probability ``(R + r cos t) / (R + r)``.
    """

    R: float = 1.0
    r: float = 0.4

    kind = "torus"
    intrinsic_dim = 2
    ambient_dim = 3

    def __post_init__(self):
        check_positive(self.R, "R")
        check_positive(self.r, "r")
        if self.r >= self.R:
            raise ValueError("a ring torus needs r < R")

    @property
    def reach(self):
        return min(self.r, self.R - self.r)

    def params(self):
        return {"R": self.R, "r": self.r}

    def points_at(self, seed, index):
        index = np.asarray(index, dtype=np.int64)
        theta = np.empty(index.shape)
        phi = np.empty(index.shape)
        pending = np.arange(index.size)
        for attempt in range(MAX_REJECTION_ATTEMPTS):
            idx = index[pending]
            t = 2.0 * np.pi * _random.uniform(seed, _random.SAMPLE, idx, 3 * attempt)
            p = 2.0 * np.pi * _random.uniform(seed, _random.SAMPLE, idx, 3 * attempt + 1)
            coin = _random.uniform(seed, _random.SAMPLE, idx, 3 * attempt + 2)
            ok = coin * (self.R + self.r) <= self.R + self.r * np.cos(t)
            theta[pending[ok]] = t[ok]
            phi[pending[ok]] = p[ok]
            pending = pending[~ok]
            if pending.size == 0:
                break
        else:
            raise RejectionBudgetExceeded("torus sampler did not accept every point")
        ring = self.R + self.r * np.cos(theta)
        return np.stack([ring * np.cos(phi), ring * np.sin(phi), self.r * np.sin(theta)], axis=-1)

    def _distance(self, Z):
        rho = np.hypot(Z[:, 0], Z[:, 1])
        return np.abs(np.hypot(rho - self.R, Z[:, 2]) - self.r)

    def _project(self, Z):
        rho = np.hypot(Z[:, 0], Z[:, 1])
        if np.any(rho == 0.0):
            raise AmbiguousProjection("points on the symmetry axis have no unique projection")
        core = np.stack([self.R * Z[:, 0] / rho, self.R * Z[:, 1] / rho, np.zeros(len(Z))], axis=1)
        off = Z - core
        nrm = np.linalg.norm(off, axis=1)
        if np.any(nrm == 0.0):
            raise AmbiguousProjection("points on the core circle have no unique projection")
        return core + off * (self.r / nrm)[:, None]


def _grid(start, stop, step):
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _cy_points(thetas, zetas, k1_set, k2_set, n):
    k1, k2, th, ze = np.meshgrid(
        np.asarray(k1_set, dtype=np.float64),
        np.asarray(k2_set, dtype=np.float64),
        thetas,
        zetas,
        indexing="ij",
    )
    s = th.ravel() + 1j * ze.ravel()
    k1 = k1.ravel()
    k2 = k2.ravel()
    x = np.exp(2j * np.pi * k1 / n) * np.power(np.cosh(s), 2.0 / n)
    y = np.exp(2j * np.pi * k2 / n) * np.power(np.sinh(s) / 1j, 2.0 / n)
    return np.stack([x.real, y.real, x.imag, y.imag], axis=1)


def calabi_yau_grid(
    theta_range=(-1.5, 1.5),
    theta_step=0.05,
    zeta_range=(0.0, np.pi / 2),
    zeta_step=np.pi / 640,
    k1_set=(0, 1, 2, 3),
    k2_set=(0, 1, 2, 3),
    n=4,
    *,
    psi,
):
    """Parametric grid on the quartic slice ``x^4 + y^4 = 1`` in C^2.

    Returns the 4-D points ``(Re x, Re y, Im x, Im y)`` and their 3-D
    projection ``(Re x, Re y, cos(psi) Im x + sin(psi) Im y)``.  The grid is
    ordered with ``k1`` slowest and ``zeta`` fastest.
    """
    check_positive(theta_step, "theta_step")
    check_positive(zeta_step, "zeta_step")
    P4 = _cy_points(
        _grid(*theta_range, theta_step), _grid(*zeta_range, zeta_step), k1_set, k2_set, n
    )
    return P4, project_to_3d(P4, psi)


def project_to_3d(P4, psi):
    P4 = np.asarray(P4, dtype=np.float64)
    return np.stack(
        [P4[:, 0], P4[:, 1], math.cos(psi) * P4[:, 2] + math.sin(psi) * P4[:, 3]], axis=1
    )


@dataclass(frozen=True)
class CalabiYauProjection(ManifoldModel):
    """Real 2-D surface ``x^4 + y^4 = 1`` (x, y complex) embedded in R^4.

    With ``psi`` set the surface is mapped to R^3 by the linear projection of
    :func:`project_to_3d`.  Samples are vertices of the parametric grid
    (``theta_step`` x ``zeta_step``); distances and projections are taken
    against a denser reference grid that also contains every sample vertex.
    """

    theta_range: tuple = (-1.5, 1.5)
    theta_step: float = 0.05
    zeta_range: tuple = (0.0, np.pi / 2)
    zeta_step: float = np.pi / 640
    k1_set: tuple = (0, 1, 2, 3)
    k2_set: tuple = (0, 1, 2, 3)
    n: int = 4
    psi: float = None
    reference_theta_step: float = 0.01
    reference_zeta_step: float = np.pi / 640

    kind = "cy"
    intrinsic_dim = 2
    surface_uniform = False
    reach = None

    @property
    def ambient_dim(self):
        return 4 if self.psi is None else 3

    def params(self):
        return {
            "theta_range": list(self.theta_range),
            "theta_step": self.theta_step,
            "zeta_range": list(self.zeta_range),
            "zeta_step": self.zeta_step,
            "k1_set": list(self.k1_set),
            "k2_set": list(self.k2_set),
            "n": self.n,
            "psi": self.psi,
            "reference_theta_step": self.reference_theta_step,
            "reference_zeta_step": self.reference_zeta_step,
        }

    def _embed(self, P4):
        return P4 if self.psi is None else project_to_3d(P4, self.psi)

    @cached_property
    def grid4(self):
        """Sample-grid vertices in R^4."""
        P = _cy_points(
            _grid(*self.theta_range, self.theta_step),
            _grid(*self.zeta_range, self.zeta_step),
            self.k1_set,
            self.k2_set,
            self.n,
        )
        P.flags.writeable = False
        return P

    @cached_property
    def grid(self):
        P = np.ascontiguousarray(self._embed(self.grid4))
        P.flags.writeable = False
        return P

    @cached_property
    def reference(self):
        dense = _cy_points(
            _grid(*self.theta_range, self.reference_theta_step),
            _grid(*self.zeta_range, self.reference_zeta_step),
            self.k1_set,
            self.k2_set,
            self.n,
        )
        return NeighborIndex(np.concatenate([self.grid, self._embed(dense)]))

    def points_at(self, seed, index):
        index = np.asarray(index, dtype=np.int64)
        u = _random.uniform(seed, _random.SAMPLE, index, 0)
        return self.grid[np.minimum((u * len(self.grid)).astype(np.int64), len(self.grid) - 1)]

    def sample(self, n, seed):
        """``n`` distinct grid vertices (the whole grid, in order, when ``n`` equals its size)."""
        size = len(self.grid)
        check_positive(n, "n", integer=True, minimum=1)
        if n > size:
            raise ValueError(f"the sample grid has only {size} vertices, asked for {n}")
        if n == size:
            return np.array(self.grid)
        pick = np.sort(np.random.default_rng(seed).choice(size, n, replace=False))
        return self.grid[pick]

    def _distance(self, Z):
        dist, _ = self.reference.nearest(Z)
        return dist

    def _project(self, Z):
        _, idx = self.reference.nearest(Z)
        return np.array(self.reference.points[idx])


MANIFOLDS = {"circle": Circle, "sphere": Sphere, "torus": Torus, "cy": CalabiYauProjection}


def make_manifold(kind, **params):
    """Build a manifold model from its kind name and keyword parameters."""
    try:
        cls = MANIFOLDS[kind]
    except KeyError:
        raise ValueError(f"unknown manifold kind {kind!r}; choose from {sorted(MANIFOLDS)}") from None
    for key in ("theta_range", "zeta_range", "k1_set", "k2_set"):
        if key in params and params[key] is not None:
            params[key] = tuple(params[key])
    return cls(**{k: v for k, v in params.items() if v is not None})


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic Gaussian noise ``N(0, sigma^2 I_D)``."""

    sigma: float

    def __post_init__(self):
        check_positive(self.sigma, "sigma")


@dataclass(frozen=True)
class SampleBatch:
    clean: np.ndarray
    noisy: np.ndarray
    seed: int
    model: ManifoldModel = None
    noise: NoiseModel = None

    def __len__(self):
        return len(self.clean)


@dataclass(frozen=True)
class InitialBand:
    """Distance band ``lower <= d(w, M) <= upper`` for initial points."""

    lower: float
    upper: float
    count: int = 100

    def __post_init__(self):
        if not 0 < self.lower < self.upper:
            raise ValueError(f"need 0 < lower < upper, got {self.lower}, {self.upper}")
        check_positive(self.count, "count", integer=True, minimum=1)

    @classmethod
    def for_sigma(cls, sigma, count=100):
        return cls(lower=sigma / 2, upper=2 * sigma, count=count)


def sample_uniform(model, n, seed):
    """``n`` points distributed uniformly w.r.t. the surface measure of ``model``."""
    if not model.surface_uniform:
        raise NotImplementedError(
            f"{model.kind!r} has no surface-uniform sampler; use model.sample() for grid vertices"
        )
    return as_point_cloud(model.sample(n, seed))


def add_noise(clean, noise, seed, model=None):
    """Add i.i.d. ``N(0, sigma^2 I_D)`` noise; noise for row ``i`` uses stream index ``i``."""
    if not isinstance(noise, NoiseModel):
        noise = NoiseModel(float(noise))
    clean = as_point_cloud(clean, name="clean")
    xi = _random.normal(seed, _random.NOISE, np.arange(len(clean)), clean.shape[1])
    noisy = clean + noise.sigma * xi
    noisy.flags.writeable = False
    return SampleBatch(clean=clean, noisy=noisy, seed=seed, model=model, noise=noise)


def initial_points(model, band, noise, seed, max_attempts=MAX_REJECTION_ATTEMPTS):
    """Points whose distance to ``model`` lies inside ``band``.

    Each candidate is an on-manifold draw plus an isotropic Gaussian offset
    of scale ``sigma``; candidates outside the band are redrawn.  Point ``j``
    depends only on ``(seed, j)``.
    """
    sigma = noise.sigma if isinstance(noise, NoiseModel) else float(noise)
    D = model.ambient_dim
    out = np.empty((band.count, D))
    pending = np.arange(band.count, dtype=np.int64)
    for attempt in range(max_attempts):
        base = model.points_at(_random.derive_seed(seed, attempt), pending)
        offset = _random.normal(seed, _random.INIT_OFFSET, pending, D, offset=2 * D * attempt)
        cand = base + sigma * offset
        d = model.distance(cand)
        ok = (d >= band.lower) & (d <= band.upper)
        out[pending[ok]] = cand[ok]
        pending = pending[~ok]
        if pending.size == 0:
            break
    else:
        raise RejectionBudgetExceeded(
            f"{pending.size} initial points not placed in the band after {max_attempts} attempts"
        )
    out.flags.writeable = False
    return out
