"""Exact fixed-radius neighbor search."""
import numpy as np
from scipy.spatial import cKDTree

from .validation import as_point_cloud, as_vector

LEAF_SIZE = 32
BRUTE_FORCE_DIM = 12
# the tree is asked for a slightly larger ball; membership is then decided by
# the same squared-distance expression the brute-force scan uses
_PAD = 1e-9


def squared_distances(points, z):
    diff = points - z
    return np.einsum("ij,ij->i", diff, diff)


def brute_force_radius(points, z, radius):
    """Indices ``i`` with ``|z - points[i]| <= radius``, ascending."""
    return np.flatnonzero(squared_distances(points, z) <= radius * radius)


class NeighborIndex:
    """Immutable radius-query index over a point cloud.

    Results are exact: ``radius_query(z, r)`` always equals the closed-ball
    brute-force scan, including points at exactly distance ``r``.

    Parameters
    ----------
    points : array-like of shape (n, D)
    leaf_size : int, default=32
    """

    def __init__(self, points, leaf_size=LEAF_SIZE):
        self.points = as_point_cloud(points, name="points")
        self.leaf_size = leaf_size
        self.n, self.dim = self.points.shape
        if self.dim > BRUTE_FORCE_DIM:
            self._tree = None
        else:
            self._tree = cKDTree(
                self.points, leafsize=leaf_size, balanced_tree=True, compact_nodes=True, copy_data=False
            )

    def __len__(self):
        return self.n

    def __repr__(self):
        kind = "brute-force" if self._tree is None else "kd-tree"
        return f"NeighborIndex(n={self.n}, dim={self.dim}, {kind})"

    def radius_query(self, z, radius):
        """Sorted indices of the points in the closed ball ``B(z, radius)``."""
        z = as_vector(z, self.dim)
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        if self._tree is None:
            return brute_force_radius(self.points, z, radius)
        cand = self._tree.query_ball_point(z, radius * (1.0 + _PAD), return_sorted=True)
        cand = np.asarray(cand, dtype=np.intp)
        if cand.size == 0:
            return cand
        keep = squared_distances(self.points[cand], z) <= radius * radius
        return cand[keep]

    def radius_query_many(self, Z, radius):
        return [self.radius_query(z, radius) for z in np.atleast_2d(Z)]

    def nearest(self, Z):
        """Distance to and index of the nearest indexed point, for each row of ``Z``."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if self._tree is None:
            d2 = np.stack([squared_distances(self.points, z) for z in Z])
            idx = np.argmin(d2, axis=1)
            return np.sqrt(d2[np.arange(len(Z)), idx]), idx
        dist, idx = self._tree.query(Z, k=1)
        return dist, idx


def build(cloud, leaf_size=LEAF_SIZE):
    return NeighborIndex(cloud, leaf_size=leaf_size)


def radius_query(index, z, radius):
    return index.radius_query(z, radius)
