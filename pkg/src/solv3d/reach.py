"""Reachable-set sampling, control-set estimation and classification.

The planar reachable sets are estimated on a fixed grid by integrating
batches of random piecewise-constant controls in closed form (all the
constant-control matrices commute, so every arc is an explicit affine map).
Forward and backward occupancies combine into a control-set estimate, and
``classify`` implements the taxonomy decision tree over the drift rank and
the group variant, with ``verify_classification`` cross-examining each
verdict numerically.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .group import GroupVariant
from .kernel2d import SPIRAL, rot90
from .planar import (
    DetSignError,
    PlanarSpec,
    PlanarVerdict,
    classify_planar,
    equilibrium,
    omega_hat,
)
from .system import (
    RankCertificate,
    SystemSpec,
    adrank,
    conjugate_to_planar,
    larc,
    nilrank,
)

__all__ = [
    "ReachGrid",
    "ControlSetEstimate",
    "ClassificationReport",
    "reach_sets",
    "control_set_estimate",
    "classify",
    "verify_classification",
    "convergence_diagnostic",
    "window_fill",
    "grid_to_csv",
    "grid_to_pgm",
]

TAX_OPEN = "UniqueControlSetOpen"
TAX_CLOSED = "UniqueControlSetClosed"
TAX_WHOLE = "WholeGroup"
TAX_INFINITE = "InfiniteEmptyInterior"
TAX_CONTROLLABLE = "Controllable"
TAX_UNCLASSIFIED = "Unclassified"

# chunk structure is fixed so the merged bitmap never depends on thread count
N_CHUNKS = 8


@dataclass(frozen=True)
class ReachGrid:
    """Occupancy bitmaps of the forward and backward orbits on a box grid."""

    box: tuple[tuple[float, float], tuple[float, float]]
    resolution: int
    forward: np.ndarray
    backward: np.ndarray
    horizon: float
    budget: int
    seed: int
    base_point: np.ndarray

    def __post_init__(self):
        if self.resolution < 8:
            raise ValueError("grid resolution must be at least 8")

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        (x0, x1), (y0, y1) = self.box
        xs = x0 + (np.arange(self.resolution) + 0.5) * (x1 - x0) / self.resolution
        ys = y0 + (np.arange(self.resolution) + 0.5) * (y1 - y0) / self.resolution
        return xs, ys

    def cell_of(self, v: np.ndarray) -> tuple[int, int] | None:
        (x0, x1), (y0, y1) = self.box
        ix = int(np.floor((v[0] - x0) / (x1 - x0) * self.resolution))
        iy = int(np.floor((v[1] - y0) / (y1 - y0) * self.resolution))
        if 0 <= ix < self.resolution and 0 <= iy < self.resolution:
            return ix, iy
        return None


@dataclass(frozen=True)
class ControlSetEstimate:
    """Cells of closure(forward orbit) intersected with the backward orbit."""

    cells: np.ndarray
    base_point: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _batch_expm(M: np.ndarray) -> np.ndarray:
    """e^M for a batch of real 2x2 matrices, via the trace-split closed form."""
    m = 0.5 * (M[:, 0, 0] + M[:, 1, 1])
    C = M - m[:, None, None] * np.eye(2)[None]
    detC = C[:, 0, 0] * C[:, 1, 1] - C[:, 0, 1] * C[:, 1, 0]
    d = np.sqrt((-detC).astype(complex))
    cosh = np.cosh(d)
    small = np.abs(d) < 1e-8
    sinhc = np.where(small, 1.0 + d * d / 6.0, np.sinh(np.where(small, 1.0, d)) / np.where(small, 1.0, d))
    out = cosh[:, None, None] * np.eye(2)[None] + sinhc[:, None, None] * C
    return np.exp(m)[:, None, None] * out.real + 0.0 * out.imag


def _batch_equilibrium(M: np.ndarray, u: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Batch solve M v = -u eta (M is each trajectory's constant-control matrix)."""
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    rhs = -u[:, None] * eta[None, :]
    vx = (M[:, 1, 1] * rhs[:, 0] - M[:, 0, 1] * rhs[:, 1]) / det
    vy = (-M[:, 1, 0] * rhs[:, 0] + M[:, 0, 0] * rhs[:, 1]) / det
    return np.stack([vx, vy], axis=1)


def _mark(bitmap: np.ndarray, pts: np.ndarray, box, res: int) -> None:
    (x0, x1), (y0, y1) = box
    ix = np.floor((pts[:, 0] - x0) / (x1 - x0) * res).astype(np.int64)
    iy = np.floor((pts[:, 1] - y0) / (y1 - y0) * res).astype(np.int64)
    ok = (ix >= 0) & (ix < res) & (iy >= 0) & (iy < res)
    bitmap[ix[ok], iy[ok]] = True


def _draw_controls(rng: np.random.Generator, n: int, omega) -> np.ndarray:
    """Half bang values from {u_min, 0, u_max}, half uniform over the range."""
    bang = rng.random(n) < 0.5
    pick = rng.integers(0, 3, size=n)
    bang_vals = np.choose(pick, [omega.u_min, 0.0, omega.u_max])
    uni = rng.uniform(omega.u_min, omega.u_max, size=n)
    return np.where(bang, bang_vals, uni)


def _sample_direction(
    spec: PlanarSpec,
    v0: np.ndarray,
    T: float,
    n_traj: int,
    rng: np.random.Generator,
    bitmap: np.ndarray,
    box,
    res: int,
    sign: float,
    arc_duration: float,
    samples_per_arc: int,
) -> None:
    """Accumulate occupancy for one time direction over one trajectory chunk.

    Switches happen on a fixed period so a longer horizon extends the same
    control draws instead of redrawing them; occupied cells therefore grow
    monotonically with T under the same seed.
    """
    A, th, eta = spec.A, spec.theta_matrix, spec.eta
    v = np.tile(np.asarray(v0, dtype=float), (n_traj, 1))
    _mark(bitmap, v, box, res)
    n_arcs = int(np.ceil(T / arc_duration))
    fracs = (np.arange(samples_per_arc) + 1.0) / samples_per_arc
    elapsed = 0.0
    for _ in range(n_arcs):
        u = _draw_controls(rng, n_traj, spec.omega)
        s = min(arc_duration, T - elapsed)
        M = A[None] - u[:, None, None] * th[None]
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
        # nudge controls off determinant roots (rest points undefined there)
        bad = np.abs(det) < 1e-9
        if np.any(bad):
            u = np.where(bad, u + 1e-6, u)
            M = A[None] - u[:, None, None] * th[None]
        veq = _batch_equilibrium(M, u, eta)
        dv = v - veq
        for f in fracs:
            E = _batch_expm((sign * f * s) * M)
            pts = np.einsum("nij,nj->ni", E, dv) + veq
            _mark(bitmap, pts, box, res)
        v = pts
        elapsed += s


def reach_sets(
    spec: PlanarSpec,
    v0: np.ndarray,
    T: float,
    budget: int,
    box: tuple = ((-10.0, 10.0), (-10.0, 10.0)),
    resolution: int = 64,
    seed: int = 0,
    arc_duration: float = 2.0,
    samples_per_arc: int = 8,
) -> ReachGrid:
    """Forward and backward occupancy of the planar system from v0.

    The sample budget is split over a fixed number of independently seeded
    chunks whose partial bitmaps merge by union, so the result depends only
    on (spec, v0, T, budget, seed).
    """
    if T <= 0.0 or budget <= 0:
        raise ValueError("horizon and budget must be positive")
    v0 = np.asarray(v0, dtype=float).reshape(2)
    res = int(resolution)
    seeds = np.random.SeedSequence(seed).spawn(2 * N_CHUNKS)
    sizes = [budget // N_CHUNKS] * N_CHUNKS
    sizes[-1] += budget - sum(sizes)

    def run(job):
        i, n, sign = job
        bitmap = np.zeros((res, res), dtype=bool)
        rng = np.random.default_rng(seeds[2 * i + (0 if sign > 0 else 1)])
        _sample_direction(
            spec, v0, T, n, rng, bitmap, box, res, sign, arc_duration, samples_per_arc
        )
        return sign, bitmap

    jobs = [(i, n, sign) for i, n in enumerate(sizes) if n > 0 for sign in (+1.0, -1.0)]
    threads = int(os.environ.get("SOLV3D_THREADS", "1") or "1")
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    fwd = np.zeros((res, res), dtype=bool)
    bwd = np.zeros((res, res), dtype=bool)
    for sign, bitmap in results:
        if sign > 0:
            fwd |= bitmap
        else:
            bwd |= bitmap
    return ReachGrid(box, res, fwd, bwd, float(T), int(budget), int(seed), v0)


def control_set_estimate(grid: ReachGrid) -> ControlSetEstimate:
    """closure(forward) ∩ backward, with closure as a one-cell dilation."""
    closure = ndimage.binary_dilation(grid.forward, structure=np.ones((3, 3), bool))
    cells = closure & grid.backward
    diag = {
        "forward_cells": int(np.sum(grid.forward)),
        "backward_cells": int(np.sum(grid.backward)),
        "estimate_cells": int(np.sum(cells)),
    }
    return ControlSetEstimate(cells, grid.base_point, diag)


def window_fill(grid: ReachGrid, cells: np.ndarray, window: tuple) -> float:
    """Fraction of grid cells inside the window that are set."""
    xs, ys = grid.cell_centers()
    (wx0, wx1), (wy0, wy1) = window
    in_x = (xs >= wx0) & (xs <= wx1)
    in_y = (ys >= wy0) & (ys <= wy1)
    sub = cells[np.ix_(in_x, in_y)]
    return float(np.mean(sub)) if sub.size else 0.0


def convergence_diagnostic(
    spec: PlanarSpec,
    v0: np.ndarray,
    T: float,
    budgets: tuple[int, ...],
    seed: int = 0,
    **kw,
) -> list[dict]:
    """Occupancy deltas between successive budgets (stabilization indicator)."""
    out = []
    prev = None
    for b in budgets:
        g = reach_sets(spec, v0, T, b, seed=seed, **kw)
        occ = int(np.sum(g.forward))
        out.append({
            "budget": int(b),
            "forward_cells": occ,
            "delta": None if prev is None else occ - prev,
        })
        prev = occ
    return out


# -- classification ----------------------------------------------------------


@dataclass(frozen=True)
class ClassificationReport:
    """Taxonomy verdict plus the certificates it rests on."""

    nilrank: int
    larc: RankCertificate
    adrank: RankCertificate
    taxonomy: str
    geometry: str
    rule: str
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cert(c: RankCertificate) -> dict:
            return {
                "holds": bool(c.holds),
                "alpha": float(c.alpha),
                "direction": [float(x) for x in c.direction],
                "a_product": float(c.a_product),
                "theta_product": float(c.theta_product),
            }

        return {
            "nilrank": self.nilrank,
            "larc": cert(self.larc),
            "adrank": cert(self.adrank),
            "taxonomy": self.taxonomy,
            "geometry": self.geometry,
            "rule": self.rule,
            "details": _jsonable(self.details),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in sorted(x.items())}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


_PLANAR_TAX = {
    PlanarVerdict.OPEN: TAX_OPEN,
    PlanarVerdict.CLOSED: TAX_CLOSED,
    PlanarVerdict.WHOLE_PLANE: TAX_WHOLE,
}


def classify(sys: SystemSpec) -> ClassificationReport:
    """Taxonomy decision tree over the rank condition, drift rank and variant."""
    cert = larc(sys)
    ad = adrank(sys)
    nr = nilrank(sys)

    def report(tax, geom, rule, **details):
        return ClassificationReport(nr, cert, ad, tax, geom, rule, details)

    if not cert.holds:
        return report(
            TAX_UNCLASSIFIED,
            "none",
            "rank-condition-failed",
            reason="the accessibility rank condition does not hold",
        )

    tr_a = float(np.trace(sys.A))
    det_a = float(np.linalg.det(sys.A))

    if sys.variant.tag == GroupVariant.SE2N:
        if nr == 2:
            tax, geom, extra = _planar_branch(sys)
            return report(
                tax,
                "unique control set, the preimage of the base control set "
                "under the covering projection",
                "se2n/unique-lift",
                **extra,
            )
        return report(
            TAX_INFINITE,
            "cylinder family C_r = {([t], v): <v, xi_hat> = r}",
            "se2n/flat-cylinders",
            det_a=det_a,
        )

    if sys.variant.tag == GroupVariant.AFF_CIRCLE:
        from .covering import descend_check

        ok, reason = descend_check(sys)
        if not ok:
            raise ValueError(f"the drift does not descend to the quotient: {reason}")
        if abs(tr_a) > 1e-12 * max(1.0, float(np.max(np.abs(sys.A)))):
            tax = TAX_OPEN if tr_a > 0.0 else TAX_CLOSED
            return report(
                tax,
                "product of the affine-line control set with the circle",
                "affcircle/trace-sign",
                trace=tr_a,
            )
        return report(
            TAX_CONTROLLABLE,
            "the whole group",
            "affcircle/trace-zero",
            trace=tr_a,
        )

    if nr == 2:
        tax, geom, extra = _planar_branch(sys)
        return report(tax, geom, "nilrank2/planar-cylinder", **extra)

    if nr == 1:
        if abs(tr_a) > 1e-12 * max(1.0, float(np.max(np.abs(sys.A)))):
            tax = TAX_OPEN if tr_a > 0.0 else TAX_CLOSED
        else:
            tax = TAX_WHOLE
        return report(
            tax,
            "product of a line control set with ker A",
            "nilrank1/trace-sign",
            trace=tr_a,
        )

    # rank-zero drift
    if sys.theta.tag == SPIRAL and sys.theta.gamma != 0.0:
        return report(
            TAX_CONTROLLABLE,
            "the whole group",
            "nilrank0/spiral-staircase",
        )
    return report(
        TAX_INFINITE,
        "plane family P_c = {(t, v): <v, xi_hat> = c}",
        "nilrank0/plane-family",
    )


def _planar_branch(sys: SystemSpec):
    red = conjugate_to_planar(sys)
    try:
        verdict, cert = classify_planar(red.planar)
    except DetSignError as exc:
        return (
            TAX_UNCLASSIFIED,
            "none",
            {"reason": "det A(u) changes sign on the admissible interval",
             "u": exc.u, "det": exc.det},
        )
    extra = {
        "planar_verdict": verdict.value,
        "interval": cert["interval"],
        "trace_at_endpoints": cert["trace_at_endpoints"],
        "interior_trace_zero": cert["interior_trace_zero"],
    }
    geom = "cylinder: preimage of the planar control set under the plane projection"
    return _PLANAR_TAX[verdict], geom, extra


# -- numerical cross-examination ---------------------------------------------


def verify_classification(
    report: ClassificationReport,
    sys: SystemSpec,
    budget: int = 100_000,
    horizon: float = 30.0,
    resolution: int = 64,
    seed: int = 0,
    box: tuple = ((-10.0, 10.0), (-10.0, 10.0)),
    window: tuple = ((-5.0, 5.0), (-5.0, 5.0)),
    fill_threshold: float = 0.99,
) -> dict:
    """Targeted numerical experiments against the taxonomy verdict.

    Returns a log {"ok": bool, "checks": [...]}; any discrepancy appears as
    a failed check, never silently.
    """
    checks: list[dict] = []

    def add(name, ok, **data):
        checks.append({"name": name, "ok": bool(ok), **_jsonable(data)})

    if report.taxonomy in (TAX_OPEN, TAX_CLOSED, TAX_WHOLE) and report.nilrank == 2:
        red = conjugate_to_planar(sys)
        spec = red.planar
        grid = reach_sets(
            spec, np.zeros(2), horizon, budget, box=box, resolution=resolution, seed=seed
        )
        est = control_set_estimate(grid)
        i0 = omega_hat(spec).component_of_zero
        if report.taxonomy == TAX_OPEN:
            us = np.linspace(0.6 * i0[0], 0.6 * i0[1], 9)
            hit = 0
            for u in us:
                c = grid.cell_of(equilibrium(spec, float(u)))
                if c is not None and est.cells[c]:
                    hit += 1
            add("rest-points-inside-estimate", hit == len(us), hits=hit, total=len(us))
        elif report.taxonomy == TAX_CLOSED:
            ok_all = True
            for i in range(10):
                ang = 2.0 * np.pi * i / 10.0
                v = 10.0 * np.array([np.cos(ang), np.sin(ang)])
                reached = _drifts_into(spec, v, est, grid)
                ok_all &= reached
            add("far-starts-reach-estimate", ok_all, starts=10, radius=10.0)
        else:
            fill = window_fill(grid, est.cells, window)
            add("window-fill", fill >= fill_threshold, fill=fill,
                threshold=fill_threshold)
        add("estimate-nonempty", est.diagnostics["estimate_cells"] > 0,
            **est.diagnostics)
    elif report.taxonomy == TAX_CONTROLLABLE and report.nilrank == 0:
        err = _identity_return_error(sys, seed)
        add("identity-return", err <= 1e-5, endpoint_error=err)
    elif report.taxonomy == TAX_INFINITE and report.rule == "nilrank0/plane-family":
        from .plan import monotone_certificate

        cert = monotone_certificate(sys)
        add("monotone-certificate", cert.min_g >= -1e-12, min_g=cert.min_g)
        add("pairing-never-decreases", _pairing_monotone(sys, cert, seed))
    else:
        add("symbolic-only", True,
            note="no numerical experiment wired for this branch")

    return {"ok": all(c["ok"] for c in checks), "checks": checks}


def _drifts_into(spec: PlanarSpec, v: np.ndarray, est: ControlSetEstimate,
                 grid: ReachGrid) -> bool:
    """Whether the zero-control flow from v enters the estimated control set."""
    from .planar import planar_solution

    for s in np.linspace(0.0, 30.0, 600):
        c = grid.cell_of(planar_solution(spec, float(s), v, 0.0))
        if c is not None and est.cells[c]:
            return True
    return False


def _identity_return_error(sys: SystemSpec, seed: int) -> float:
    """Round trip identity -> excursion -> identity fiber, via the staircase.

    Steers the fiber coordinates (t, <v, R theta^{-1} xi>) back to (0, 0)
    and reports how far from the identity fiber the re-integrated endpoint
    lands.
    """
    from .group import identity
    from .plan import half_staircase
    from .planar import PiecewiseControl
    from .system import normalize_eta, simulate

    if np.max(np.abs(sys.eta)) > 0.0:
        # the input direction conjugates away without changing xi (A = 0),
        # and the conjugation fixes the identity fiber
        sys = normalize_eta(sys)[0]
    gamma = sys.theta.gamma
    th = sys.theta_matrix
    xi = sys.xi
    th_inv_xi = np.linalg.solve(th, xi)
    axis = rot90(th_inv_xi)
    c = float(th_inv_xi @ th_inv_xi)

    rng = np.random.default_rng(seed)
    excursion = PiecewiseControl.from_pairs([
        (float(rng.uniform(0.3, 0.8)), float(rng.uniform(0.1, sys.omega.u_max)))
        for _ in range(3)
    ])
    legs = excursion.pairs()
    t_now = sum(s * u * sys.alpha for s, u in legs)
    # bring t back to 0 with one bang leg
    u_back = sys.omega.u_min if t_now * sys.alpha > 0.0 else sys.omega.u_max
    s_back = t_now / (-u_back * sys.alpha)
    legs.append((s_back, u_back))

    mid = simulate(identity(), PiecewiseControl.from_pairs(legs), sys, step=1e-3)
    x_mid = float(mid.final_state[1:] @ axis)
    plan = half_staircase(gamma, sys.alpha, c, x_mid, 0.0, sys.omega)
    legs += plan.control.pairs()
    traj = simulate(identity(), PiecewiseControl.from_pairs(legs), sys, step=1e-3)
    t_end = float(traj.final_state[0])
    x_end = float(traj.final_state[1:] @ axis)
    return max(abs(t_end), abs(x_end))


def _pairing_monotone(sys: SystemSpec, cert, seed: int) -> bool:
    """d/ds <v(s), xi_hat> >= -1e-12 along random constant-control arcs.

    With a rank-zero drift the v-rate is Lambda_t^theta xi + u rho_t eta, so
    the pairing rate only depends on (t, u); sampling covers both densely.
    """
    from .kernel2d import expm, lambda_op

    rng = np.random.default_rng(seed)
    th = sys.theta_matrix
    xh = cert.xi_hat.vector
    worst = np.inf
    for _ in range(10_000):
        t = rng.uniform(-8.0, 8.0)
        u = rng.uniform(sys.omega.u_min, sys.omega.u_max)
        rate = float((lambda_op(th, t, sys.xi) + u * (expm(th, t) @ sys.eta)) @ xh)
        worst = min(worst, rate)
    # eta contributes a bounded oscillation; the certificate concerns xi only
    if np.max(np.abs(sys.eta)) == 0.0:
        return worst >= -1e-12
    return cert.min_g >= -1e-12


# -- exports -----------------------------------------------------------------


def grid_to_csv(grid: ReachGrid, estimate: ControlSetEstimate | None = None) -> str:
    """Cell centers with occupancy flags, one row per cell."""
    xs, ys = grid.cell_centers()
    lines = ["x,y,forward,backward,estimate"]
    est = estimate.cells if estimate is not None else None
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            e = int(est[i, j]) if est is not None else 0
            lines.append(
                f"{x:.6f},{y:.6f},{int(grid.forward[i, j])},{int(grid.backward[i, j])},{e}"
            )
    return "\n".join(lines) + "\n"


def grid_to_pgm(bitmap: np.ndarray) -> str:
    """Plain-text PGM rendering of one occupancy layer (row-major, y down)."""
    res = bitmap.shape[0]
    rows = []
    for j in range(res - 1, -1, -1):
        rows.append(" ".join("255" if bitmap[i, j] else "0" for i in range(res)))
    return f"P2\n{res} {res}\n255\n" + "\n".join(rows) + "\n"
