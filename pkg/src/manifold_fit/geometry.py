"""Small dense linear algebra: projectors and angles.

Every projector returned here is a symmetric, idempotent ``(D, D)`` float64
array.  Dimensions are assumed small (``D`` up to a dozen or so).
"""
import numpy as np

from .exceptions import DegenerateDirection, InvalidMatrix

SYMMETRY_TOL = 1e-10
IDEMPOTENCE_TOL = 1e-8
TRACE_TOL = 1e-6
# input matrices for eigen-projectors may carry round-off from accumulation
INPUT_SYMMETRY_TOL = 1e-8


def rank_one_projector(v):
    """Orthogonal projector ``v v^T / |v|^2`` onto the line spanned by ``v``."""
    v = np.asarray(v, dtype=np.float64)
    nrm2 = float(v @ v)
    if not nrm2 > 0.0 or not np.isfinite(nrm2):
        raise DegenerateDirection("cannot build a projector from a zero vector")
    return np.outer(v, v) / nrm2


def complement(P):
    """Projector onto the orthogonal complement, ``I - P``."""
    P = np.asarray(P, dtype=np.float64)
    return np.eye(P.shape[0]) - P


def sin_angle(a, b):
    """Sine of the angle between two non-zero vectors, in [0, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateDirection("angle undefined for a zero vector")
    ua, ub = a / na, b / nb
    # the residual of ub off ua stays accurate near parallel, unlike sqrt(1 - cos^2)
    return float(min(1.0, np.linalg.norm(ub - (ua @ ub) * ua)))


def sorted_eigh(A):
    """Eigen-decomposition with a deterministic ordering.

    Eigenvalues are returned in descending order.  Each eigenvector is
    flipped so that its first non-zero coordinate is positive, and exact
    eigenvalue ties are ordered lexicographically (descending) on the
    sign-normalised vectors.
    """
    A = _check_symmetric(A)
    w, V = np.linalg.eigh(A)
    V = V.copy()
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > 1e-14)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    # lexsort: last key is primary
    keys = tuple(-V[i, :] for i in reversed(range(V.shape[0]))) + (-w,)
    order = np.lexsort(keys)
    return w[order], V[:, order]


def top_eigen_projector(A, m):
    """Projector onto the span of the eigenvectors of the ``m`` largest eigenvalues."""
    A = np.asarray(A, dtype=np.float64)
    D = A.shape[0]
    if not 1 <= m <= D:
        raise ValueError(f"m must lie in [1, {D}], got {m}")
    _, V = sorted_eigh(A)
    top = V[:, :m]
    return top @ top.T


def top_eigen_projectors(A, m):
    """Vectorised :func:`top_eigen_projector` over a stack of shape (n, D, D).

    Ordering is by descending eigenvalue only; exact ties are broken by
    LAPACK's output order.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise InvalidMatrix(f"expected a stack of square matrices, got {A.shape}")
    D = A.shape[1]
    if not 1 <= m <= D:
        raise ValueError(f"m must lie in [1, {D}], got {m}")
    A = 0.5 * (A + np.swapaxes(A, 1, 2))
    _, V = np.linalg.eigh(A)
    # eigh is ascending; the top-m block is the last m columns
    top = V[:, :, D - m:]
    return top @ np.swapaxes(top, 1, 2)


def projector_defects(P, rank):
    """Return (asymmetry, idempotence error, trace error) of a candidate projector."""
    P = np.asarray(P, dtype=np.float64)
    return (
        float(np.max(np.abs(P - P.T))),
        float(np.max(np.abs(P @ P - P))),
        float(abs(np.trace(P) - rank)),
    )


def is_projector(P, rank, *, sym_tol=SYMMETRY_TOL, idem_tol=IDEMPOTENCE_TOL, trace_tol=TRACE_TOL):
    asym, idem, tr = projector_defects(P, rank)
    return asym <= sym_tol and idem <= idem_tol and tr <= trace_tol


def _check_symmetric(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > INPUT_SYMMETRY_TOL * scale:
        raise InvalidMatrix("matrix is not symmetric")
    return 0.5 * (A + A.T)
