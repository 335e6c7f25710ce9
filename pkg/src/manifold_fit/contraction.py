"""Two-step smooth contraction of noisy points toward a latent manifold.

For a query point ``z`` and noisy samples ``y_i``:

1. ``F(z)`` is a bump-weighted mean of the samples in the ball ``B(z, r0)``;
   ``F(z) - z`` estimates the direction from ``z`` to its projection.
2. ``G(z)`` is a weighted mean over the cylinder around the line through
   ``z`` along ``F(z) - z`` -- half-length ``r2`` along the axis, radius
   ``r1`` across it.  ``G(z)`` is the contracted point.

Neither step needs the intrinsic dimension of the manifold.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, DegenerateDirection, EmptyCylinder, EmptyNeighborhood
from .geometry import rank_one_projector
from .neighbors import NeighborIndex
from .validation import as_point_cloud, as_vector, check_positive

OK = "ok"
EMPTY_SPHERE = "empty_sphere"
EMPTY_CYLINDER = "empty_cylinder"
DEGENERATE_DIRECTION = "degenerate_direction"
STATUSES = (OK, EMPTY_SPHERE, EMPTY_CYLINDER, DEGENERATE_DIRECTION)

# |F(z) - z| below this fraction of r0 counts as a vanishing direction
_DEGENERATE_REL = 1e-12


def auto_radii(sigma, n_samples, lg_base=10.0, log_base=math.e):
    """Default radius schedule ``r0 = r1 = 5 s / lg N``, ``r2 = 10 s sqrt(log(1/s)) / lg N``."""
    if n_samples < 2:
        raise ConfigError("the automatic radius schedule needs at least 2 samples")
    lg_n = math.log(n_samples, lg_base)
    r0 = 5.0 * sigma / lg_n
    log_inv = math.log(1.0 / sigma, log_base)
    if log_inv <= 0:
        raise ConfigError("the automatic r2 needs sigma < 1")
    r2 = 10.0 * sigma * math.sqrt(log_inv) / lg_n
    return r0, r0, r2


@dataclass(frozen=True)
class FitConfig:
    """Tuning of the contraction map.

    Radii left as ``None`` follow the automatic schedule (see
    :func:`auto_radii`); with ``schedule="manual"`` all three are required.
    """

    sigma: float
    k: int = 2
    r0: float = None
    r1: float = None
    r2: float = None
    schedule: str = "auto"
    min_neighbors: int = 3
    lg_base: float = 10.0
    log_base: float = math.e

    def __post_init__(self):
        check_positive(self.sigma, "sigma")
        check_positive(self.k, "k", integer=True, minimum=2)
        check_positive(self.min_neighbors, "min_neighbors", integer=True, minimum=1)
        if self.schedule not in ("auto", "manual"):
            raise ConfigError(f"schedule must be 'auto' or 'manual', got {self.schedule!r}")
        for name in ("r0", "r1", "r2"):
            value = getattr(self, name)
            if value is None:
                if self.schedule == "manual":
                    raise ConfigError(f"manual schedule needs {name}")
            else:
                check_positive(value, name)

    def radii(self, n_samples):
        """Resolved ``(r0, r1, r2)`` for a sample of size ``n_samples``."""
        if self.schedule == "manual" or None not in (self.r0, self.r1, self.r2):
            return self.r0, self.r1, self.r2
        a0, a1, a2 = auto_radii(self.sigma, n_samples, self.lg_base, self.log_base)
        return (
            a0 if self.r0 is None else self.r0,
            a1 if self.r1 is None else self.r1,
            a2 if self.r2 is None else self.r2,
        )

    def snapshot(self, n_samples):
        r0, r1, r2 = self.radii(n_samples)
        return {**asdict(self), "r0": r0, "r1": r1, "r2": r2, "n_samples": n_samples}


@dataclass(frozen=True)
class ContractionFrame:
    """Local frame at ``base``: the direction point ``F(base)`` and the axis projector."""

    base: np.ndarray
    direction_point: np.ndarray
    U_hat: np.ndarray

    @classmethod
    def from_points(cls, z, f_z):
        return cls(base=z, direction_point=f_z, U_hat=rank_one_projector(f_z - z))


@dataclass
class FitOutcome:
    inputs: np.ndarray
    outputs: np.ndarray
    status: np.ndarray
    frames: list = None
    radii: tuple = None

    @property
    def ok(self):
        return self.status == OK

    def __len__(self):
        return len(self.inputs)


def bump(sq_dist, radius, k):
    """Raw weight ``(1 - t^2 / r^2)^k`` inside the closed ball, 0 outside."""
    base = 1.0 - np.asarray(sq_dist, dtype=np.float64) / (radius * radius)
    return np.where(base > 0.0, np.maximum(base, 0.0) ** k, 0.0)


def axial_weight(t, r2, k):
    """Plateau weight along the cylinder axis: 1 up to r2/2, tapering to 0 at r2."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    s = (2.0 * t - r2) / r2
    taper = np.maximum(1.0 - s * s, 0.0) ** k
    return np.where(t <= 0.5 * r2, 1.0, np.where(t < r2, taper, 0.0))


def alpha_weights(z, points, r0, k):
    """Normalised ball weights of ``points`` around ``z``."""
    z = as_vector(z)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    raw = bump(np.sum((points - z) ** 2, axis=1), r0, k) if len(points) else np.zeros(0)
    total = raw.sum()
    if not total > 0.0:
        raise EmptyNeighborhood("no neighbor carries positive weight")
    return raw / total


def decompose_uv(frame, y):
    """Split ``y - base`` into the component along the frame axis and the rest."""
    diff = np.asarray(y, dtype=np.float64) - frame.base
    u = diff @ frame.U_hat
    return u, diff - u


def cylinder_weights(u, v, r1, r2, k):
    """Raw cylinder weight ``w_u(|u|) * w_v(|v|)`` (vectorised over leading axes)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u, axis=-1)
    nv2 = np.sum(v * v, axis=-1)
    return axial_weight(nu, r2, k) * bump(nv2, r1, k)


def _weighted_mean(weights, points):
    return (weights / weights.sum()) @ points


def _direction(z, index, r0, k, min_neighbors):
    idx = index.radius_query(z, r0)
    if idx.size == 0:
        raise EmptyNeighborhood(f"no samples within r0={r0:g}")
    pts = index.points[idx]
    raw = bump(np.sum((pts - z) ** 2, axis=1), r0, k)
    if np.count_nonzero(raw) < min_neighbors:
        raise EmptyNeighborhood(
            f"{np.count_nonzero(raw)} samples with positive weight within r0={r0:g}, need {min_neighbors}"
        )
    return _weighted_mean(raw, pts)


def _contract(z, f_z, index, r1, r2, k, min_neighbors):
    axis = f_z - z
    axis = axis / np.linalg.norm(axis)
    idx = index.radius_query(z, math.hypot(r1, r2))
    pts = index.points[idx]
    diff = pts - z
    along = diff @ axis
    across = diff - along[:, None] * axis
    raw = axial_weight(along, r2, k) * bump(np.sum(across * across, axis=1), r1, k)
    if np.count_nonzero(raw) < min_neighbors:
        raise EmptyCylinder(
            f"{np.count_nonzero(raw)} samples with positive weight in the cylinder, need {min_neighbors}"
        )
    return _weighted_mean(raw, pts)


def _resolve(index, cfg):
    if not isinstance(index, NeighborIndex):
        index = NeighborIndex(index)
    return index, cfg.radii(len(index))


def f_map(z, index, cfg):
    """Ball-weighted mean ``F(z)`` of the samples around ``z``."""
    index, (r0, _, _) = _resolve(index, cfg)
    return _direction(as_vector(z, index.dim), index, r0, cfg.k, cfg.min_neighbors)


def g_map(z, index, cfg, return_frame=False):
    """Contracted point ``G(z)``."""
    index, (r0, r1, r2) = _resolve(index, cfg)
    z = as_vector(z, index.dim)
    f_z = _direction(z, index, r0, cfg.k, cfg.min_neighbors)
    if np.linalg.norm(f_z - z) <= _DEGENERATE_REL * r0:
        raise DegenerateDirection("F(z) coincides with z")
    g = _contract(z, f_z, index, r1, r2, cfg.k, cfg.min_neighbors)
    if return_frame:
        return g, ContractionFrame.from_points(z, f_z)
    return g


def _fit_one(z, index, radii, cfg, keep_frame):
    r0, r1, r2 = radii
    try:
        f_z = _direction(z, index, r0, cfg.k, cfg.min_neighbors)
    except EmptyNeighborhood:
        return z, EMPTY_SPHERE, None
    if np.linalg.norm(f_z - z) <= _DEGENERATE_REL * r0:
        return f_z, DEGENERATE_DIRECTION, None
    frame = ContractionFrame.from_points(z, f_z) if keep_frame else None
    try:
        g = _contract(z, f_z, index, r1, r2, cfg.k, cfg.min_neighbors)
    except EmptyCylinder:
        return z, EMPTY_CYLINDER, frame
    return g, OK, frame


def fit_batch(W, samples, cfg, n_jobs=None, keep_frames=False):
    """Contract every row of ``W`` using ``samples`` (array or NeighborIndex).

    Per-point failures are recorded in ``status`` and do not abort the
    batch: empty neighborhoods copy the input, a vanishing direction emits
    the ball mean ``F(w)``.  Each point is computed independently, so the
    result is identical for any ``n_jobs``.
    """
    W = as_point_cloud(W, name="W")
    index, radii = _resolve(samples, cfg)
    if W.shape[1] != index.dim:
        raise ValueError(f"W has dimension {W.shape[1]}, samples have {index.dim}")
    outputs = np.empty_like(W)
    status = np.empty(len(W), dtype=object)
    frames = [None] * len(W) if keep_frames else None

    def work(rows):
        for j in rows:
            out, st, frame = _fit_one(W[j], index, radii, cfg, keep_frames)
            outputs[j] = out
            status[j] = st
            if keep_frames:
                frames[j] = frame

    n_jobs = 1 if not n_jobs or n_jobs < 1 else n_jobs
    if n_jobs == 1:
        work(range(len(W)))
    else:
        chunks = np.array_split(np.arange(len(W)), n_jobs)
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(work, chunks))
    outputs.flags.writeable = False
    return FitOutcome(inputs=W, outputs=outputs, status=status.astype(str), frames=frames, radii=radii)


class ContractionFitter(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_batch`.

    ``fit`` indexes the noisy samples and resolves the radius schedule;
    ``transform`` maps query points onto the fitted manifold.

    Parameters
    ----------
    sigma : float
        Noise level of the samples.
    k : int, default=2
        Exponent of the bump weights.
    r0, r1, r2 : float or None
        Radii; ``None`` uses the automatic schedule.
    min_neighbors : int, default=3
        Minimum number of positively weighted samples per neighborhood.
    lg_base : float, default=10
        Base of the logarithm of N in the radius schedule.
    n_jobs : int or None
        Worker threads used by ``transform``.
    """

    def __init__(self, sigma=0.06, k=2, r0=None, r1=None, r2=None, min_neighbors=3, lg_base=10.0, n_jobs=None):
        self.sigma = sigma
        self.k = k
        self.r0 = r0
        self.r1 = r1
        self.r2 = r2
        self.min_neighbors = min_neighbors
        self.lg_base = lg_base
        self.n_jobs = n_jobs

    def _config(self):
        return FitConfig(
            sigma=self.sigma,
            k=self.k,
            r0=self.r0,
            r1=self.r1,
            r2=self.r2,
            min_neighbors=self.min_neighbors,
            lg_base=self.lg_base,
        )

    def fit(self, X, y=None):
        X = as_point_cloud(X, name="X")
        self.config_ = self._config()
        self.index_ = NeighborIndex(X)
        self.radii_ = self.config_.radii(len(X))
        self.n_features_in_ = X.shape[1]
        return self

    def project(self, X, keep_frames=False):
        """Full :class:`FitOutcome` (outputs, per-point status, optional frames)."""
        check_is_fitted(self, "index_")
        return fit_batch(X, self.index_, self.config_, n_jobs=self.n_jobs, keep_frames=keep_frames)

    def transform(self, X):
        return np.array(self.project(X).outputs)

    def direction(self, X):
        """``F(x)`` for each row; rows with an empty ball give NaN."""
        check_is_fitted(self, "index_")
        X = as_point_cloud(X, name="X")
        r0 = self.radii_[0]
        out = np.full_like(X, np.nan)
        for j, z in enumerate(X):
            try:
                out[j] = _direction(z, self.index_, r0, self.config_.k, self.config_.min_neighbors)
            except EmptyNeighborhood:
                pass
        return out
