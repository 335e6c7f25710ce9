"""Error statistics for fitted points."""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import AllExcluded, InsufficientNeighbors
from .geometry import complement, sin_angle, sorted_eigh
from .neighbors import NeighborIndex
from .validation import as_point_cloud, as_vector

REACH_ALL_PAIRS_MAX = 2000
REACH_SAMPLED_PAIRS = 2_000_000
REACH_DEVIATION_FLOOR = 1e-9


@dataclass
class FitReport:
    """Scores of one method on one batch of initial points."""

    method: str
    sup_error: float
    avg_error: float
    n_scored: int
    n_excluded: int
    wall_clock_seconds: float
    config: dict = field(default_factory=dict)
    seed: int = None

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def sup_and_avg_error(outputs, model, mask=None):
    """``max_j d(w_j, M)`` and ``mean_j d(w_j, M)`` over the scored points.

    ``mask`` selects the points to score (all when ``None``).  The mean uses
    exactly rounded summation so it does not depend on point order.
    """
    outputs = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    if mask is not None:
        outputs = outputs[np.asarray(mask, dtype=bool)]
    if len(outputs) == 0:
        raise AllExcluded("no points left to score")
    d = np.asarray(model.distance(outputs), dtype=np.float64)
    return float(d.max()), math.fsum(d.tolist()) / len(d)


def directed_hausdorff(A, B):
    """``sup_{a in A} inf_{b in B} |a - b|``."""
    A = as_point_cloud(A, name="A")
    B = as_point_cloud(B, name="B")
    dist, _ = NeighborIndex(B).nearest(A)
    return float(dist.max())


def hausdorff(A, B):
    """Symmetric Hausdorff distance between two finite point sets."""
    return max(directed_hausdorff(A, B), directed_hausdorff(B, A))


def direction_error(w, F_w, model):
    """Sine of the angle between ``F(w) - w`` and ``w* - w``."""
    w = as_vector(w, model.ambient_dim)
    return sin_angle(np.asarray(F_w, dtype=np.float64) - w, model.project(w) - w)


def reach_proxy(points, d, pca_radius, seed=0):
    """Diagnostic reach estimate from Federer's condition.

    Returns ``min |a - b|^2 / (2 dist(b, a + T_a))`` over pairs, with the
    tangent space ``T_a`` estimated by local PCA within ``pca_radius``.
    Pairs whose normal deviation is below 1e-9 are ignored; ``inf`` is
    returned when no pair remains (e.g. affine data).  All pairs are used
    for up to 2000 points, otherwise 2e6 pairs drawn with ``seed``.
    """
    P = as_point_cloud(points, name="points")
    n, D = P.shape
    if n < d + 2:
        raise InsufficientNeighbors(f"need at least {d + 2} points, got {n}")
    index = NeighborIndex(P)
    normals = np.full((n, D, D), np.nan)
    for i in range(n):
        nb = P[index.radius_query(P[i], pca_radius)]
        if len(nb) < d + 1:
            continue
        c = nb - nb.mean(axis=0)
        _, V = sorted_eigh(c.T @ c / len(nb))
        normals[i] = complement(V[:, :d] @ V[:, :d].T)
    usable = np.flatnonzero(~np.isnan(normals[:, 0, 0]))
    if usable.size == 0:
        raise InsufficientNeighbors(f"no point has {d + 1} neighbors within {pca_radius:g}")

    if n <= REACH_ALL_PAIRS_MAX:
        best = math.inf
        for a in usable:
            diff = P - P[a]
            dev = np.linalg.norm(diff @ normals[a], axis=1)
            sq = np.einsum("ij,ij->i", diff, diff)
            ok = dev > REACH_DEVIATION_FLOOR
            if ok.any():
                best = min(best, float(np.min(sq[ok] / (2.0 * dev[ok]))))
        return best

    rng = np.random.default_rng(seed)
    a = usable[rng.integers(0, usable.size, REACH_SAMPLED_PAIRS)]
    b = rng.integers(0, n, REACH_SAMPLED_PAIRS)
    best = math.inf
    for lo in range(0, REACH_SAMPLED_PAIRS, 100_000):
        aa, bb = a[lo:lo + 100_000], b[lo:lo + 100_000]
        diff = P[bb] - P[aa]
        dev = np.linalg.norm(np.einsum("ij,ijk->ik", diff, normals[aa]), axis=1)
        sq = np.einsum("ij,ij->i", diff, diff)
        ok = dev > REACH_DEVIATION_FLOOR
        if ok.any():
            best = min(best, float(np.min(sq[ok] / (2.0 * dev[ok]))))
    return best
