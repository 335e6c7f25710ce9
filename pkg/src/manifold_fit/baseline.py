"""Local-PCA bias-map baseline.

Normal spaces are estimated by local PCA at every sample, averaged with
bump weights and re-projected to rank ``D - d``.  The bias map

    f(y) = P(y) (y - sum_i a_i(y) y_i)

vanishes on the fitted manifold; query points are moved onto that zero set
by the fixed-point iteration ``y <- y - f(y)``.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .contraction import FitOutcome, bump
from .exceptions import ConfigError, EmptyNeighborhood, InsufficientNeighbors, NotConverged
from .geometry import complement, top_eigen_projector, top_eigen_projectors
from .neighbors import NeighborIndex
from .validation import as_point_cloud, as_vector, check_positive

OK = "ok"
EMPTY_SPHERE = "empty_sphere"
NOT_CONVERGED = "not_converged"


@dataclass(frozen=True)
class Yx19Config:
    sigma: float
    d: int
    radius: float = None
    beta: int = 2
    max_iters: int = 100
    tol: float = None

    def __post_init__(self):
        check_positive(self.sigma, "sigma")
        check_positive(self.d, "d", integer=True, minimum=1)
        check_positive(self.beta, "beta", integer=True, minimum=2)
        check_positive(self.max_iters, "max_iters", integer=True, minimum=1)
        if self.radius is not None:
            check_positive(self.radius, "radius")
        if self.tol is not None:
            check_positive(self.tol, "tol")

    @property
    def r(self):
        return 2.0 * math.sqrt(self.sigma) if self.radius is None else self.radius

    @property
    def tolerance(self):
        return 1e-10 * self.sigma if self.tol is None else self.tol

    def snapshot(self):
        return {**asdict(self), "radius": self.r, "tol": self.tolerance}


@dataclass(frozen=True)
class PcaEstimate:
    center: np.ndarray
    Pi_perp: np.ndarray
    radius: float


class ZeroSetResult(NamedTuple):
    point: np.ndarray
    converged: bool
    n_iter: int


def _normal_projector(pts, d):
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    return complement(top_eigen_projector(cov, d))


def local_pca(samples, index, y_i, r, d):
    """Normal-space projector at ``y_i`` from the samples within ``r``."""
    y_i = as_vector(y_i)
    idx = index.radius_query(y_i, r)
    if idx.size < d + 1:
        raise InsufficientNeighbors(f"{idx.size} neighbors within r={r:g}, need at least {d + 1}")
    return PcaEstimate(center=y_i, Pi_perp=_normal_projector(index.points[idx], d), radius=r)


def normal_projectors(index, r, d):
    """Local-PCA normal projectors at every indexed sample, shape (n, D, D).

    Samples with fewer than ``d + 1`` neighbors get a NaN projector and are
    skipped when projectors are averaged.
    """
    pts = index.points
    n, D = pts.shape
    covs = np.full((n, D, D), np.nan)
    for i in range(n):
        nb = pts[index.radius_query(pts[i], r)]
        if len(nb) >= d + 1:
            c = nb - nb.mean(axis=0)
            covs[i] = c.T @ c / len(nb)
    good = ~np.isnan(covs[:, 0, 0])
    out = np.full((n, D, D), np.nan)
    out[good] = np.eye(D) - top_eigen_projectors(covs[good], d)
    return out


def _bias(y, index, cfg, projectors):
    r = cfg.r
    D = index.dim
    idx = index.radius_query(y, r)
    if idx.size == 0:
        raise EmptyNeighborhood(f"no samples within r={r:g}")
    pts = index.points[idx]
    raw = bump(np.sum((pts - y) ** 2, axis=1), r, cfg.beta)
    if projectors is None:
        P_i = np.stack([
            local_pca(None, index, p, r, cfg.d).Pi_perp if w > 0 else np.full((D, D), np.nan)
            for p, w in zip(pts, raw)
        ])
    else:
        P_i = projectors[idx]
    usable = (raw > 0) & ~np.isnan(P_i[:, 0, 0])
    if not usable.any():
        raise EmptyNeighborhood("no neighbor carries positive weight")
    alpha = raw / raw.sum()
    mean = alpha @ pts
    a_u = raw[usable] / raw[usable].sum()
    A = np.einsum("i,ijk->jk", a_u, P_i[usable])
    P_y = top_eigen_projector(0.5 * (A + A.T), D - cfg.d)
    return P_y @ (y - mean), P_y


def bias_map_f(y, samples, index, cfg, projectors=None):
    """Bias vector ``f(y)``; lies in the estimated normal space at ``y``."""
    if index is None:
        index = NeighborIndex(samples)
    f, _ = _bias(as_vector(y, index.dim), index, cfg, projectors)
    return f


def project_to_zero_set(w, samples, index, cfg, projectors=None, strict=False):
    """Iterate ``y <- y - f(y)`` until ``|f(y)| <= tol`` or ``max_iters`` steps.

    Returns a :class:`ZeroSetResult`; with ``strict=True`` a run that does not
    converge raises :class:`NotConverged` carrying the last iterate.
    """
    if index is None:
        index = NeighborIndex(samples)
    y = as_vector(w, index.dim).copy()
    tol = cfg.tolerance
    for it in range(cfg.max_iters + 1):
        f, _ = _bias(y, index, cfg, projectors)
        if np.linalg.norm(f) <= tol:
            return ZeroSetResult(y, True, it)
        if it == cfg.max_iters:
            break
        y = y - f
    if strict:
        raise NotConverged(f"no convergence after {cfg.max_iters} iterations", point=y, n_iter=cfg.max_iters)
    return ZeroSetResult(y, False, cfg.max_iters)


class LocalPCAFitter(TransformerMixin, BaseEstimator):
    """Estimator for the local-PCA baseline.

    Unlike :class:`~manifold_fit.contraction.ContractionFitter` it needs the
    intrinsic dimension ``d``.  ``fit`` runs local PCA at every sample.
    """

    def __init__(self, sigma=0.06, d=1, radius=None, beta=2, max_iters=100, tol=None, n_jobs=None):
        self.sigma = sigma
        self.d = d
        self.radius = radius
        self.beta = beta
        self.max_iters = max_iters
        self.tol = tol
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = as_point_cloud(X, name="X")
        if not 1 <= self.d < X.shape[1]:
            raise ConfigError(f"d must lie in [1, {X.shape[1] - 1}], got {self.d}")
        self.config_ = Yx19Config(
            sigma=self.sigma, d=self.d, radius=self.radius, beta=self.beta, max_iters=self.max_iters, tol=self.tol
        )
        self.index_ = NeighborIndex(X)
        self.projectors_ = normal_projectors(self.index_, self.config_.r, self.d)
        self.n_features_in_ = X.shape[1]
        return self

    def project(self, X):
        check_is_fitted(self, "index_")
        W = as_point_cloud(X, name="X")
        outputs = np.empty_like(W)
        status = np.empty(len(W), dtype=object)

        def work(rows):
            for j in rows:
                try:
                    res = project_to_zero_set(W[j], None, self.index_, self.config_, self.projectors_)
                except EmptyNeighborhood:
                    outputs[j], status[j] = W[j], EMPTY_SPHERE
                    continue
                outputs[j] = res.point if res.converged else W[j]
                status[j] = OK if res.converged else NOT_CONVERGED

        n_jobs = 1 if not self.n_jobs or self.n_jobs < 1 else self.n_jobs
        if n_jobs == 1:
            work(range(len(W)))
        else:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                list(pool.map(work, np.array_split(np.arange(len(W)), n_jobs)))
        outputs.flags.writeable = False
        return FitOutcome(inputs=W, outputs=outputs, status=status.astype(str))

    def transform(self, X):
        return np.array(self.project(X).outputs)
