"""Dense symmetric linear algebra used throughout the toolkit.

Eigenvalues and square roots go through LAPACK's symmetric solvers
(tridiagonalization plus implicit-shift iteration), which are deterministic
for fixed input bits.  Complex resolvent work uses native complex arithmetic.

The Stieltjes transform convention is fixed once here and used everywhere:

    s(z) = integral dF(lam) / (lam - z) = p^{-1} tr (A - z I)^{-1},

so Im s(z) > 0 whenever Im z > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDenominator,
    DimensionMismatch,
    InvalidInput,
    InvalidParameter,
    NotPSD,
)

__all__ = [
    "SymMatrix",
    "UpperHalfPoint",
    "require_upper_half",
    "sym_eigenvalues",
    "principal_sqrt",
    "spectral_norm",
    "resolvent_stieltjes",
    "smw_rank1_trace_delta",
    "smw_rankq_trace",
]

# Eigenvalues of a nominally PSD matrix inside [-PSD_CLIP_REL * norm, 0) are
# treated as roundoff and clipped to zero; anything more negative is an error.
PSD_CLIP_REL = 1e-10

# Guard for the rank-1 update denominator.  For PSD C and Im z > 0 the
# denominator has strictly positive imaginary part whenever w != 0, so this
# is defensive only.
DENOM_GUARD = 1e-14


class SymMatrix:
    """Exactly symmetric real matrix; symmetry is enforced at construction."""

    __slots__ = ("a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise InvalidInput("matrix entries must be finite")
        if not np.array_equal(a, a.T):
            raise InvalidInput("matrix is not exactly symmetric")
        a.setflags(write=False)
        self.a = a

    @classmethod
    def symmetrized(cls, raw) -> "SymMatrix":
        """Build from arbitrary square input via (A + A^T)/2 (exact in IEEE)."""
        raw = np.asarray(raw, dtype=float)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise InvalidInput(f"expected a square matrix, got shape {raw.shape}")
        return cls((raw + raw.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.a.astype(dtype)
        return self.a

    def __repr__(self) -> str:
        return f"SymMatrix(dim={self.dim})"


@dataclass(frozen=True)
class UpperHalfPoint:
    """Point z = re + i*im with im > 0."""

    re: float
    im: float

    def __post_init__(self):
        if not (np.isfinite(self.re) and np.isfinite(self.im)):
            raise InvalidParameter("z must be finite")
        if self.im <= 0.0:
            raise InvalidParameter(f"Im(z) must be positive, got {self.im}")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)


def require_upper_half(z) -> complex:
    """Normalize z (UpperHalfPoint or complex) to a complex with Im > 0."""
    if isinstance(z, UpperHalfPoint):
        return z.z
    zc = complex(z)
    if not (np.isfinite(zc.real) and np.isfinite(zc.imag)):
        raise InvalidParameter("z must be finite")
    if zc.imag <= 0.0:
        raise InvalidParameter(f"Im(z) must be positive, got {zc.imag}")
    return zc


def _sym_array(s) -> np.ndarray:
    if isinstance(s, SymMatrix):
        return s.a
    a = np.asarray(s, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InvalidInput("matrix entries must be finite")
    if not np.array_equal(a, a.T):
        raise InvalidInput("matrix is not exactly symmetric")
    return a


def sym_eigenvalues(s) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending."""
    return np.linalg.eigvalsh(_sym_array(s))


def principal_sqrt(s) -> SymMatrix:
    """Principal (PSD) square root of a PSD symmetric matrix.

    Exactly diagonal inputs take a direct elementwise path, which keeps
    diagonal covariance models exact.  Eigenvalues within roundoff below
    zero (see PSD_CLIP_REL) are clipped; genuinely negative ones raise.
    """
    a = _sym_array(s)
    d = np.diagonal(a)
    if np.count_nonzero(a) == np.count_nonzero(d):
        tol = PSD_CLIP_REL * np.max(np.abs(d))
        if d.min() < -tol:
            raise NotPSD(f"diagonal entry {d.min()} below -{tol}")
        return SymMatrix(np.diag(np.sqrt(np.clip(d, 0.0, None))))
    vals, vecs = np.linalg.eigh(a)
    tol = PSD_CLIP_REL * max(abs(vals[0]), abs(vals[-1]))
    if vals[0] < -tol:
        raise NotPSD(f"eigenvalue {vals[0]} below -{tol}")
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return SymMatrix((root + root.T) / 2.0)


def spectral_norm(a) -> float:
    """Largest singular value; Euclidean length for vectors."""
    arr = np.asarray(a.a if isinstance(a, SymMatrix) else a)
    if arr.ndim == 1:
        return float(np.linalg.norm(arr))
    if arr.ndim != 2:
        raise InvalidInput(f"expected a vector or matrix, got ndim={arr.ndim}")
    if arr.size == 0:
        return 0.0
    return float(np.linalg.norm(arr, 2))


def resolvent_stieltjes(eigs, z) -> complex:
    """Stieltjes transform of the ESD with the given eigenvalues.

    Equals p^{-1} tr (A - z I)^{-1} when eigs are the eigenvalues of A.
    """
    zc = require_upper_half(z)
    lam = np.asarray(eigs, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise InvalidInput("eigs must be a nonempty 1-d array")
    if not np.isfinite(lam).all():
        raise InvalidInput("eigs must be finite")
    return complex(np.mean(1.0 / (lam - zc)))


def _resolvent_solve(c: np.ndarray, zc: complex, b: np.ndarray) -> np.ndarray:
    return np.linalg.solve(c - zc * np.eye(c.shape[0]), b.astype(complex))


def smw_rank1_trace_delta(c, w, z) -> complex:
    """tr(C + ww^T - zI)^{-1} - tr(C - zI)^{-1} via the rank-1 update.

    Returns -w^T (C-zI)^{-2} w / (1 + w^T (C-zI)^{-1} w) without forming
    the updated matrix.
    """
    a = _sym_array(c)
    zc = require_upper_half(z)
    wv = np.asarray(w, dtype=float)
    if wv.ndim != 1 or wv.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"w has shape {wv.shape}, C is {a.shape}")
    if not wv.any():
        return 0.0 + 0.0j
    x = _resolvent_solve(a, zc, wv)
    s1 = complex(wv @ x)
    x2 = _resolvent_solve(a, zc, x)
    s2 = complex(wv @ x2)
    denom = 1.0 + s1
    if abs(denom) < DENOM_GUARD:
        raise DegenerateDenominator(f"|1 + w^T(C-zI)^{{-1}}w| = {abs(denom)}")
    return -s2 / denom


def smw_rankq_trace(c, u, z) -> complex:
    """tr(C + UU^T - zI)^{-1} computed through the rank-q update identity.

    Uses tr(C-zI)^{-1} - tr(U^T(C-zI)^{-2}U (I_q + U^T(C-zI)^{-1}U)^{-1});
    the base trace comes from the eigenvalues of C alone, so the updated
    matrix is never factored.
    """
    a = _sym_array(c)
    zc = require_upper_half(z)
    um = np.asarray(u, dtype=float)
    if um.ndim == 1:
        um = um[:, None]
    if um.ndim != 2 or um.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"U has shape {um.shape}, C is {a.shape}")
    q = um.shape[1]
    if q > a.shape[0]:
        raise DimensionMismatch(f"rank {q} exceeds dimension {a.shape[0]}")
    base = complex(np.sum(1.0 / (np.linalg.eigvalsh(a) - zc)))
    if not um.any():
        return base
    x1 = _resolvent_solve(a, zc, um)
    m1 = um.T @ x1
    x2 = _resolvent_solve(a, zc, x1)
    m2 = um.T @ x2
    denom = np.eye(q) + m1
    if abs(np.linalg.det(denom)) < DENOM_GUARD:
        raise DegenerateDenominator("I_q + U^T(C-zI)^{-1}U is numerically singular")
    # tr(M2 (I+M1)^{-1}) = tr((I+M1)^{-1} M2) by cyclicity.
    return base - complex(np.trace(np.linalg.solve(denom, m2)))
