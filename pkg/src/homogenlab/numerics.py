"""Dense linear algebra and proximal primitives shared by the rest of the package.

Everything works on float64 numpy arrays and is a pure function of its inputs.
Non-finite input, dimension mismatches and out-of-range parameters raise
``ValueError``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Singular values below RANK_TOLERANCE * sigma_max count as zero for rank
# decisions.
RANK_TOLERANCE = 1e-12

VECTOR_NORMS = ("l1", "l2", "linf")
MATRIX_NORMS = ("frobenius", "nuclear", "spectral")


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array, rejecting everything else."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Coerce to a finite float64 1-D array, rejecting everything else."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD of a matrix.

    ``left_vectors @ diag(singular_values) @ right_vectors.T`` reconstructs
    the input; singular values are sorted in non-increasing order and both
    vector blocks have orthonormal columns.
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def svd(m) -> SvdResult:
    m = as_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return SvdResult(u, s, vt.T)


def singular_values(m) -> np.ndarray:
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def numerical_rank(m) -> int:
    """Rank of ``m`` with singular values below ``RANK_TOLERANCE * sigma_max``
    treated as zero."""
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_TOLERANCE * s[0]))


def extreme_eigenvalues(g) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of a symmetric matrix."""
    g = as_matrix(g)
    if g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    w = np.linalg.eigvalsh(g)
    return float(w[0]), float(w[-1])


def soft_threshold(t, z: float):
    """Shrink ``t`` towards zero by ``z``: sign(t) * max(|t| - z, 0).

    Works componentwise on arrays; scalars come back as floats.
    """
    if z < 0:
        raise ValueError(f"threshold must be non-negative, got {z}")
    t = np.asarray(t, dtype=np.float64)
    out = np.sign(t) * np.maximum(np.abs(t) - z, 0.0)
    return float(out) if out.ndim == 0 else out


def norm(v, kind: str) -> float:
    v = as_vector(v)
    if kind == "l1":
        return float(np.sum(np.abs(v)))
    if kind == "l2":
        return float(np.linalg.norm(v))
    if kind == "linf":
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise ValueError(f"unknown vector norm {kind!r}; expected one of {VECTOR_NORMS}")


def matrix_norm(m, kind: str) -> float:
    m = as_matrix(m)
    if kind == "frobenius":
        return float(np.linalg.norm(m))
    if kind == "nuclear":
        return float(np.sum(singular_values(m)))
    if kind == "spectral":
        s = singular_values(m)
        return float(s[0]) if s.size else 0.0
    raise ValueError(f"unknown matrix norm {kind!r}; expected one of {MATRIX_NORMS}")


def rank_truncate(m, r: int) -> tuple[np.ndarray, float]:
    """Best rank-``r`` approximation (SVD truncation) and the Frobenius norm of
    the discarded tail, ``sqrt(sum of squared discarded singular values)``."""
    m = as_matrix(m)
    max_rank = min(m.shape)
    if not 0 <= r <= max_rank:
        raise ValueError(f"rank {r} out of range [0, {max_rank}]")
    if r == max_rank:
        return m, 0.0
    res = svd(m)
    s = res.singular_values
    tail = float(np.sqrt(np.sum(s[r:] ** 2)))
    truncated = (res.left_vectors[:, :r] * s[:r]) @ res.right_vectors[:, :r].T
    return truncated, tail


def project_l2_ball(u, center, radius: float) -> np.ndarray:
    """Euclidean projection of ``u`` onto the closed l2 ball."""
    u = as_vector(u, "point")
    center = as_vector(center, "center")
    if u.shape != center.shape:
        raise ValueError(f"dimension mismatch: point {u.shape} vs center {center.shape}")
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    d = u - center
    nd = np.linalg.norm(d)
    if nd <= radius:
        return u.copy()
    return center + d * (radius / nd)


def project_linf_ball(u, center, radius: float) -> np.ndarray:
    """Euclidean projection of ``u`` onto the closed l-infinity ball
    (componentwise clamp)."""
    u = as_vector(u, "point")
    center = as_vector(center, "center")
    if u.shape != center.shape:
        raise ValueError(f"dimension mismatch: point {u.shape} vs center {center.shape}")
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    return center + np.clip(u - center, -radius, radius)


def pseudo_inverse(m) -> np.ndarray:
    return np.linalg.pinv(as_matrix(m))
