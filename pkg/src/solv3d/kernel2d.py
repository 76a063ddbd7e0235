"""Exact 2x2 linear algebra used everywhere else in the package.

Vectors are numpy arrays of shape (2,), matrices of shape (2, 2).  The
structure matrix of the group law comes in three families (shear, diagonal,
rotation-plus-scaling); all closed forms below are exact for matrices that
commute with one of those families, with a scaling-and-squaring series as
the generic fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "JORDAN",
    "DIAGONAL",
    "SPIRAL",
    "ThetaFamily",
    "vec2",
    "mat2",
    "check_finite",
    "theta_matrix",
    "expm",
    "expm_series",
    "lambda_op",
    "rot90",
    "ROT90",
]

JORDAN = "jordan"
DIAGONAL = "diagonal"
SPIRAL = "spiral"

# counter-clockwise rotation by pi/2
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def check_finite(a, name: str = "value") -> np.ndarray:
    """Return ``a`` as a float array, rejecting NaN and infinities."""
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite entries, got {arr!r}")
    return arr


def vec2(x: float, y: float) -> np.ndarray:
    return check_finite([x, y], "vector")


def mat2(a: float, b: float, c: float, d: float) -> np.ndarray:
    """Row-major 2x2 matrix [[a, b], [c, d]]."""
    return check_finite([[a, b], [c, d]], "matrix")


@dataclass(frozen=True)
class ThetaFamily:
    """Structure matrix family defining the group law.

    ``jordan`` is the unipotent shear [[1,1],[0,1]] and carries no
    parameter; ``diagonal`` is diag(1, gamma) with |gamma| <= 1; ``spiral``
    is gamma*I + R for any real gamma.
    """

    tag: str
    gamma: float | None = None

    def __post_init__(self):
        if self.tag not in (JORDAN, DIAGONAL, SPIRAL):
            raise ValueError(f"unknown family tag {self.tag!r}")
        if self.tag == JORDAN:
            if self.gamma is not None:
                raise ValueError("jordan family carries no parameter")
        else:
            if self.gamma is None:
                raise ValueError(f"{self.tag} family requires gamma")
            check_finite(self.gamma, "gamma")
            if self.tag == DIAGONAL and abs(self.gamma) > 1:
                raise ValueError(f"diagonal family requires |gamma| <= 1, got {self.gamma}")

    @classmethod
    def jordan(cls) -> "ThetaFamily":
        return cls(JORDAN)

    @classmethod
    def diagonal(cls, gamma: float) -> "ThetaFamily":
        return cls(DIAGONAL, float(gamma))

    @classmethod
    def spiral(cls, gamma: float) -> "ThetaFamily":
        return cls(SPIRAL, float(gamma))

    def matrix(self) -> np.ndarray:
        return theta_matrix(self)


def theta_matrix(family: ThetaFamily) -> np.ndarray:
    """The structure matrix of the family."""
    if family.tag == JORDAN:
        return mat2(1.0, 1.0, 0.0, 1.0)
    if family.tag == DIAGONAL:
        return mat2(1.0, 0.0, 0.0, family.gamma)
    return mat2(family.gamma, -1.0, 1.0, family.gamma)


def rot90(v: np.ndarray) -> np.ndarray:
    """Counter-clockwise rotation by pi/2: (x, y) -> (-y, x)."""
    v = np.asarray(v, dtype=float)
    return np.array([-v[1], v[0]])


# -- matrix exponential ------------------------------------------------------


def _is_diagonal(B: np.ndarray) -> bool:
    return B[0, 1] == 0.0 and B[1, 0] == 0.0


def _is_shear(B: np.ndarray) -> bool:
    # scaled identity plus strictly (upper or lower) triangular nilpotent
    return B[0, 0] == B[1, 1] and (B[0, 1] == 0.0 or B[1, 0] == 0.0)


def _is_spiral_like(B: np.ndarray) -> bool:
    # g*I + b*R
    return B[0, 0] == B[1, 1] and B[0, 1] == -B[1, 0]


def expm(B: np.ndarray, t: float) -> np.ndarray:
    """e^{tB} by exact closed forms where the structure allows it.

    Closed forms cover diagonal matrices, scaled-identity-plus-nilpotent
    (both triangles) and g*I + b*R; everything else goes through a
    scaling-and-squaring series.
    """
    B = np.asarray(B, dtype=float)
    if _is_diagonal(B):
        return np.diag([np.exp(t * B[0, 0]), np.exp(t * B[1, 1])])
    if _is_shear(B):
        N = B - B[0, 0] * np.eye(2)
        return np.exp(t * B[0, 0]) * (np.eye(2) + t * N)
    if _is_spiral_like(B):
        g, b = B[0, 0], B[1, 0]
        return np.exp(g * t) * (np.cos(b * t) * np.eye(2) + np.sin(b * t) * ROT90)
    return expm_series(t * B)


def expm_series(M: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring Taylor series for e^M (generic fallback)."""
    M = np.asarray(M, dtype=float)
    norm = np.max(np.abs(M))
    n = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    S = M / (2**n)
    out = np.eye(2)
    term = np.eye(2)
    for k in range(1, 21):
        term = term @ S / k
        out = out + term
    for _ in range(n):
        out = out @ out
    return out


# -- the Lambda operator -----------------------------------------------------


def _phi1_singular(B: np.ndarray, t: float) -> np.ndarray:
    """int_0^t e^{sB} ds for det B = 0, via Cayley-Hamilton (B^2 = tr(B) B)."""
    m = B[0, 0] + B[1, 1]
    if m == 0.0:
        c = 0.5 * t * t
    else:
        c = (np.expm1(t * m) - t * m) / (m * m)
    return t * np.eye(2) + c * B


def lambda_op(B: np.ndarray, t: float, v: np.ndarray) -> np.ndarray:
    """The integral operator int_0^t e^{sB} v ds.

    Invertible B uses (e^{tB} - I) B^{-1} v; singular B uses the exact
    Cayley-Hamilton reduction of the power series.  The split is decided by
    an exact determinant test backed by a relative tolerance for inputs that
    are singular only up to rounding.
    """
    B = np.asarray(B, dtype=float)
    v = np.asarray(v, dtype=float)
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    scale = max(1.0, float(np.max(np.abs(B))) ** 2)
    if abs(det) <= 1e-12 * scale:
        return _phi1_singular(B, t) @ v
    return (expm(B, t) - np.eye(2)) @ np.linalg.solve(B, v)
