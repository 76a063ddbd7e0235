"""The planar control-affine system v' = (A - u*theta) v + u*eta.

This is the system induced on the plane quotient of the group by the drift
singularity subgroup, with the control range already rescaled by the input
rate alpha.  ``det A != 0`` and ``[A, theta] = 0`` are required, which makes
all the constant-control matrices A(u) commute with each other and keeps
every solution in closed form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .kernel2d import ROT90, ThetaFamily, check_finite, expm, lambda_op

__all__ = [
    "ControlRange",
    "PlanarSpec",
    "OmegaHat",
    "PiecewiseControl",
    "Trajectory",
    "PlanarVerdict",
    "a_of_u",
    "equilibrium",
    "equilibrium_derivative",
    "omega_hat",
    "planar_solution",
    "concat_solution",
    "openness_certificate",
    "exceptional_control",
    "classify_planar",
]

# equilibria are ill-conditioned this close to a root of det A(u)
ROOT_BAND = 1e-8


@dataclass(frozen=True)
class ControlRange:
    """Admissible control interval [u_min, u_max] with 0 in its interior."""

    u_min: float
    u_max: float

    def __post_init__(self):
        check_finite([self.u_min, self.u_max], "control range")
        if not self.u_min < 0.0 < self.u_max:
            raise ValueError(
                f"control range must satisfy u_min < 0 < u_max, got [{self.u_min}, {self.u_max}]"
            )

    def contains(self, u: float) -> bool:
        return self.u_min <= u <= self.u_max

    def scaled(self, alpha: float) -> "ControlRange":
        a, b = sorted((alpha * self.u_min, alpha * self.u_max))
        return ControlRange(a, b)


@dataclass(frozen=True)
class PiecewiseControl:
    """A finite schedule of (duration, control value) pieces."""

    durations: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        d = check_finite(self.durations, "durations").reshape(-1)
        u = check_finite(self.values, "values").reshape(-1)
        if d.shape != u.shape:
            raise ValueError("durations and values must have equal length")
        if np.any(d <= 0.0):
            raise ValueError("durations must be positive")
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "values", u)

    @classmethod
    def from_pairs(cls, pairs) -> "PiecewiseControl":
        pairs = list(pairs)
        if not pairs:
            return cls.empty()
        d, u = zip(*pairs)
        return cls(np.array(d, dtype=float), np.array(u, dtype=float))

    @classmethod
    def empty(cls) -> "PiecewiseControl":
        return cls(np.zeros(0), np.zeros(0))

    def __len__(self) -> int:
        return len(self.durations)

    @property
    def total_time(self) -> float:
        return float(np.sum(self.durations))

    def pairs(self):
        return list(zip(self.durations.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution curve: times and row-per-sample states."""

    times: np.ndarray
    states: np.ndarray
    switch_times: np.ndarray
    control: PiecewiseControl

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0.0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class PlanarSpec:
    """Data of the planar system: drift matrix, structure family, input."""

    A: np.ndarray
    theta: ThetaFamily
    eta: np.ndarray
    omega: "ControlRange"

    def __post_init__(self):
        A = check_finite(self.A, "A").reshape(2, 2)
        eta = check_finite(self.eta, "eta").reshape(2)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "eta", eta)
        th = self.theta.matrix()
        comm = A @ th - th @ A
        scale = max(1.0, float(np.max(np.abs(A))) * float(np.max(np.abs(th))))
        if np.max(np.abs(comm)) > 1e-12 * scale:
            raise ValueError("A must commute with the structure matrix")
        if abs(np.linalg.det(A)) <= 1e-10 * max(1.0, float(np.max(np.abs(A))) ** 2):
            raise ValueError("planar system requires det A != 0")

    @property
    def theta_matrix(self) -> np.ndarray:
        return self.theta.matrix()


@dataclass(frozen=True)
class OmegaHat:
    """Control range minus the roots of u -> det(A - u*theta)."""

    intervals: tuple[tuple[float, float], ...]
    roots: tuple[float, ...]
    component_of_zero: tuple[float, float]

    def contains(self, u: float) -> bool:
        return any(a < u < b for a, b in self.intervals)


class PlanarVerdict(enum.Enum):
    OPEN = "Open"
    CLOSED = "Closed"
    WHOLE_PLANE = "WholePlane"


class DetSignError(ValueError):
    """The trace-sign classification needs det A(u) > 0 on the interval."""

    def __init__(self, u: float, det: float):
        self.u = u
        self.det = det
        super().__init__(f"det A(u) = {det:g} <= 0 at u = {u:g}")


def a_of_u(spec: PlanarSpec, u: float) -> np.ndarray:
    return spec.A - u * spec.theta_matrix


def _det_a_of_u_coeffs(spec: PlanarSpec) -> tuple[float, float, float]:
    """Coefficients (c2, c1, c0) of det(A - u*theta) as a polynomial in u."""
    A, th = spec.A, spec.theta_matrix
    c0 = float(np.linalg.det(A))
    c2 = float(np.linalg.det(th))
    # mixed term: tr(adj(A) theta)
    adjA = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]])
    c1 = -float(np.trace(adjA @ th))
    return c2, c1, c0


def det_a_of_u(spec: PlanarSpec, u: float) -> float:
    c2, c1, c0 = _det_a_of_u_coeffs(spec)
    return c2 * u * u + c1 * u + c0


def equilibrium(spec: PlanarSpec, u: float) -> np.ndarray:
    """The rest point v(u) = -u * A(u)^{-1} eta of the constant-control field."""
    Au = a_of_u(spec, u)
    det = np.linalg.det(Au)
    if abs(det) <= ROOT_BAND:
        raise ValueError(f"A(u) is singular at u = {u:g} (det = {det:g})")
    return -u * np.linalg.solve(Au, spec.eta)


def equilibrium_derivative(spec: PlanarSpec, u: float) -> np.ndarray:
    """v'(u) = -A(u)^{-1} (eta - theta v(u)); nonzero whenever eta != 0."""
    Au = a_of_u(spec, u)
    det = np.linalg.det(Au)
    if abs(det) <= ROOT_BAND:
        raise ValueError(f"A(u) is singular at u = {u:g} (det = {det:g})")
    vu = equilibrium(spec, u)
    return -np.linalg.solve(Au, spec.eta - spec.theta_matrix @ vu)


def omega_hat(spec: PlanarSpec) -> OmegaHat:
    """Open subintervals of the control range where det A(u) != 0.

    Roots of the determinant quadratic are found in closed form and removed
    together with a guard band of width ROOT_BAND on each side.
    """
    lo, hi = spec.omega.u_min, spec.omega.u_max
    c2, c1, c0 = _det_a_of_u_coeffs(spec)
    roots: list[float] = []
    if c2 != 0.0:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc == 0.0:
            roots = [-c1 / (2.0 * c2)]
        elif disc > 0.0:
            q = -(c1 + np.sign(c1 or 1.0) * np.sqrt(disc)) / 2.0
            roots = sorted({q / c2, c0 / q} if q != 0.0 else {0.0, -c1 / c2})
    elif c1 != 0.0:
        roots = [-c0 / c1]
    roots_in = [r for r in roots if lo < r < hi]
    cuts = [lo] + sorted(roots_in) + [hi]
    intervals = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        aa = a + (ROOT_BAND if a in roots_in else 0.0)
        bb = b - (ROOT_BAND if b in roots_in else 0.0)
        if aa < bb:
            intervals.append((aa, bb))
    i0 = next((iv for iv in intervals if iv[0] < 0.0 < iv[1]), None)
    if i0 is None:
        raise ValueError("0 is not in the admissible control range")
    return OmegaHat(tuple(intervals), tuple(roots_in), i0)


def planar_solution(spec: PlanarSpec, s: float, v0: np.ndarray, u: float) -> np.ndarray:
    """Exact constant-control solution at time s from v0.

    Uses e^{sA(u)}(v0 - v(u)) + v(u) away from determinant roots and
    variation of constants through the Lambda operator at them.
    """
    v0 = np.asarray(v0, dtype=float)
    Au = a_of_u(spec, u)
    det = np.linalg.det(Au)
    if abs(det) > ROOT_BAND:
        vu = -u * np.linalg.solve(Au, spec.eta)
        return expm(Au, s) @ (v0 - vu) + vu
    return expm(Au, s) @ v0 + expm(Au, s) @ lambda_op(-Au, s, u * spec.eta)


def concat_solution(
    spec: PlanarSpec, v0: np.ndarray, ctrl: PiecewiseControl
) -> tuple[np.ndarray, np.ndarray]:
    """Final state of a piecewise-constant run, plus its accumulated linear part.

    The linear part is e^{sum_i s_i A(u_i)}; the affine identity
    final = linear_part @ v0 + concat_solution(0) holds exactly.
    """
    v = np.asarray(v0, dtype=float)
    M = np.eye(2)
    for s, u in ctrl.pairs():
        v = planar_solution(spec, s, v, u)
        M = expm(a_of_u(spec, u), s) @ M
    return v, M


def openness_certificate(spec: PlanarSpec, u: float, s: float) -> tuple[float, bool]:
    """Surjectivity certificate det(I - e^{sA(u)}) <e^{sA(u)} v'(u), R v'(u)>.

    A nonzero value witnesses that the two-parameter endpoint map around the
    equilibrium v(u) is a submersion, i.e. that the orbits through v(u) are
    open.
    """
    Au = a_of_u(spec, u)
    if abs(np.linalg.det(Au)) <= ROOT_BAND:
        raise ValueError(f"A(u) is singular at u = {u:g}")
    E = expm(Au, s)
    vp = equilibrium_derivative(spec, u)
    value = float(np.linalg.det(np.eye(2) - E) * ((E @ vp) @ (ROT90 @ vp)))
    return value, value != 0.0


def exceptional_control(spec: PlanarSpec) -> float | None:
    """The at-most-one control u0 where the openness certificate degenerates.

    Solves <A(u0) eta, R eta> = 0, i.e. u0 = <A eta, R eta> / <theta eta, R eta>.
    Returns None when the root exists but falls outside the admissible range,
    or when the linear equation has no root at all.
    """
    eta = spec.eta
    Reta = ROT90 @ eta
    num = float((spec.A @ eta) @ Reta)
    den = float((spec.theta_matrix @ eta) @ Reta)
    if den == 0.0:
        if num == 0.0:
            raise ValueError(
                "eta is a common eigenvector of A and theta; the rank condition fails"
            )
        return None
    u0 = num / den
    return u0 if omega_hat(spec).contains(u0) else None


def classify_planar(
    spec: PlanarSpec, interval: tuple[float, float] | None = None
) -> tuple[PlanarVerdict, dict]:
    """Topological verdict for the control set over an admissible interval.

    The verdict follows the sign pattern of the linear function
    tr A(u) = tr A - u tr theta on the interval: positive means open,
    negative means closed, a zero inside means the control set is the whole
    plane.  Requires det A(u) > 0 on the interval and raises DetSignError
    with the failing u otherwise.
    """
    if interval is None:
        interval = omega_hat(spec).component_of_zero
    lo, hi = interval
    c2, c1, c0 = _det_a_of_u_coeffs(spec)

    # minimum of the det quadratic over [lo, hi], evaluated exactly
    candidates = [lo, hi]
    if c2 > 0.0:
        vertex = -c1 / (2.0 * c2)
        if lo < vertex < hi:
            candidates.append(vertex)
    elif c2 < 0.0:
        pass  # concave: minimum at an endpoint
    for u in candidates:
        det = c2 * u * u + c1 * u + c0
        if det <= 0.0:
            raise DetSignError(float(u), float(det))

    tr_a = float(np.trace(spec.A))
    tr_th = float(np.trace(spec.theta_matrix))
    tr_lo = tr_a - lo * tr_th
    tr_hi = tr_a - hi * tr_th
    cert = {
        "interval": (float(lo), float(hi)),
        "trace_at_endpoints": (tr_lo, tr_hi),
        "interior_trace_zero": None,
    }
    tol = 1e-12 * max(1.0, abs(tr_a) + abs(tr_th))
    if abs(tr_th) > 0.0:
        u_zero = tr_a / tr_th
        if lo - tol <= u_zero <= hi + tol:
            cert["interior_trace_zero"] = float(u_zero)
            return PlanarVerdict.WHOLE_PLANE, cert
    else:
        if abs(tr_a) <= tol:
            cert["interior_trace_zero"] = float(lo)
            return PlanarVerdict.WHOLE_PLANE, cert
    if tr_lo > 0.0 and tr_hi > 0.0:
        return PlanarVerdict.OPEN, cert
    return PlanarVerdict.CLOSED, cert
