"""Punctured-ball domains, boundary conditions and the singular benchmark field.

The domain family is a ball of radius R around the origin with J spherical
holes removed.  All boundary checks here are sampled evidence, not proofs:
the underlying conditions are strict inequalities on a continuum, so reports
carry the worst observed margin and the sample counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm as gauss
from scipy.stats import qmc

from .errors import NotOnBoundaryError, WeakConditionError
from .system import DelaySystem, finite_difference_jacobians

GEOM_RTOL = 1e-9
#: strict inequalities need a quantified buffer relative to the field scale
MARGIN_RTOL = 1e-6


@dataclass(frozen=True)
class PuncturedBall:
    """B_R(0) minus J disjoint open balls strictly inside it."""

    dim: int
    radius: float
    centers: np.ndarray
    hole_radii: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, self.dim)
        radii = np.atleast_1d(np.asarray(self.hole_radii, dtype=float))
        if radii.shape[0] != centers.shape[0]:
            raise ValueError("one radius per hole center is required")
        if self.radius <= 0 or np.any(radii <= 0):
            raise ValueError("radii must be positive")
        for j, (c, r) in enumerate(zip(centers, radii)):
            if np.linalg.norm(c) + r >= self.radius:
                raise ValueError(f"hole {j} is not strictly inside the outer ball")
            for i in range(j):
                if np.linalg.norm(c - centers[i]) <= r + radii[i]:
                    raise ValueError(f"holes {i} and {j} are not disjoint")
        centers.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "hole_radii", radii)

    @classmethod
    def ball(cls, dim, radius):
        return cls(dim, radius, np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def with_holes(cls, dim, radius, centers, hole_radius):
        centers = np.asarray(centers, dtype=float).reshape(-1, dim)
        radii = np.full(centers.shape[0], float(hole_radius))
        return cls(dim, radius, centers, radii)

    @property
    def hole_count(self):
        return self.centers.shape[0]

    @property
    def diameter(self):
        return 2.0 * self.radius

    def euler_characteristic(self):
        """1 - J (-1)^N: ball minus J balls, parity-aware.

        For even N this is the familiar 1 - J; either parity gives the same
        multiplicity bound for the benchmark family since |(-/+)J| + 1 = J + 1.
        """
        return 1 - self.hole_count * (-1) ** self.dim

    # -- membership -----------------------------------------------------------

    def classify(self, x):
        """One of 'interior', 'exterior', 'outer-boundary', ('hole-boundary', j)."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return "exterior", None
        tol = GEOM_RTOL * self.radius
        r = np.linalg.norm(x)
        if r > self.radius + tol:
            return "exterior", None
        if abs(r - self.radius) <= tol:
            return "outer-boundary", None
        for j in range(self.hole_count):
            d = np.linalg.norm(x - self.centers[j])
            if abs(d - self.hole_radii[j]) <= tol:
                return "hole-boundary", j
            if d < self.hole_radii[j]:
                return "exterior", None
        return "interior", None

    def contains(self, x, closed=True):
        kind, _ = self.classify(x)
        if kind == "interior":
            return True
        return closed and kind in ("outer-boundary", "hole-boundary")

    def contains_all(self, points, closed=True):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tol = GEOM_RTOL * self.radius
        slack = tol if closed else -tol
        r = np.linalg.norm(points, axis=1)
        ok = r <= self.radius + slack
        for j in range(self.hole_count):
            d = np.linalg.norm(points - self.centers[j], axis=1)
            ok &= d >= self.hole_radii[j] - slack
        return bool(np.all(ok))

    def pole_violation(self, points):
        """Index of the first point within half a hole radius of a center.

        The benchmark field is singular at the hole centers; orbits that come
        this deep inside a hole have left the set where g is usable.
        """
        if self.hole_count == 0:
            return None
        points = np.atleast_2d(np.asarray(points, dtype=float))
        for j in range(self.hole_count):
            d = np.linalg.norm(points - self.centers[j], axis=1)
            bad = np.nonzero(d < 0.5 * self.hole_radii[j])[0]
            if bad.size:
                return int(bad[0])
        return None

    def normal(self, x):
        """Outward unit normal of the domain at a boundary point.

        On a hole boundary the domain lies outside the hole, so its outward
        normal points into the hole, toward the center.
        """
        x = np.asarray(x, dtype=float)
        kind, j = self.classify(x)
        if kind == "outer-boundary":
            return x / np.linalg.norm(x)
        if kind == "hole-boundary":
            v = self.centers[j] - x
            return v / np.linalg.norm(v)
        raise NotOnBoundaryError(f"point classified as {kind}")

    def distance_to_boundary(self, x):
        x = np.asarray(x, dtype=float)
        d = self.radius - np.linalg.norm(x)
        for j in range(self.hole_count):
            d = min(d, np.linalg.norm(x - self.centers[j]) - self.hole_radii[j])
        return float(d)

    # -- deterministic sampling -----------------------------------------------

    def boundary_points(self, count=2048):
        """Deterministic samples of every boundary component, with normals.

        Uses uniform angles (N=2), a Fibonacci sphere (N=3) or normalized
        low-discrepancy points (other N) on each sphere.
        """
        pieces = [(self._sphere(count) * self.radius, None)]
        for j in range(self.hole_count):
            pts = self.centers[j] + self._sphere(count) * self.hole_radii[j]
            pieces.append((pts, j))
        points, normals = [], []
        for pts, j in pieces:
            for x in pts:
                if j is None:
                    nv = x / np.linalg.norm(x)
                else:
                    v = self.centers[j] - x
                    nv = v / np.linalg.norm(v)
                points.append(x)
                normals.append(nv)
        return np.asarray(points), np.asarray(normals)

    def _sphere(self, count):
        n = self.dim
        if n == 1:
            return np.array([[1.0], [-1.0]])
        if n == 2:
            ang = 2.0 * np.pi * np.arange(count) / count
            return np.stack([np.cos(ang), np.sin(ang)], axis=1)
        if n == 3:
            i = np.arange(count) + 0.5
            phi = np.arccos(1.0 - 2.0 * i / count)
            theta = np.pi * (1.0 + np.sqrt(5.0)) * i
            return np.stack(
                [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)],
                axis=1,
            )
        raw = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
        z = gauss.ppf(np.clip(raw, 1e-12, 1.0 - 1e-12))
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    def interior_points(self, count, clearance=0.0):
        """Low-discrepancy points of the closed domain, clipped near holes."""
        sampler = qmc.Halton(d=self.dim, scramble=False)
        out = []
        while len(out) < count:
            block = sampler.random(4 * count)
            pts = (2.0 * block - 1.0) * self.radius
            r = np.linalg.norm(pts, axis=1)
            keep = r <= self.radius
            for j in range(self.hole_count):
                d = np.linalg.norm(pts - self.centers[j], axis=1)
                keep &= d >= self.hole_radii[j] + clearance
            out.extend(pts[keep])
        return np.asarray(out[:count])


@dataclass(frozen=True)
class InwardReport:
    """Sampled evidence for the inward-pointing boundary conditions."""

    weak_margin: float
    weak_pass: bool
    weak_worst_point: np.ndarray
    delay_margin: Optional[float]
    delay_pass: Optional[bool]
    pair_distance: float
    field_sup: float
    tolerance: float
    boundary_samples: int
    pair_samples: int

    def as_dict(self):
        return {
            "weak_margin": self.weak_margin,
            "weak_pass": self.weak_pass,
            "weak_worst_point": list(map(float, self.weak_worst_point)),
            "delay_margin": self.delay_margin,
            "delay_pass": self.delay_pass,
            "pair_distance": self.pair_distance,
            "field_sup": self.field_sup,
            "tolerance": self.tolerance,
            "boundary_samples": self.boundary_samples,
            "pair_samples": self.pair_samples,
            "note": "sampled evidence, not a proof",
        }


def sup_norm_estimate(sys, dom, samples=8192):
    """Sampled sup of |g| over the closed domain squared, plus 10% margin.

    Pairs (x, y) come from one low-discrepancy sequence on the product space,
    clipped away from the holes, plus boundary-rim pairs where the benchmark
    field peaks.  Prefix sampling makes the estimate monotone in the sample
    count, so doubling the budget can only refine it upward.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    n = dom.dim
    sampler = qmc.Halton(d=2 * n, scramble=False)
    tol = GEOM_RTOL * dom.radius
    sup = 0.0
    kept = 0
    while kept < samples:
        block = (2.0 * sampler.random(4 * samples) - 1.0) * dom.radius
        xs, ys = block[:, :n], block[:, n:]
        keep = np.ones(len(block), dtype=bool)
        for pts in (xs, ys):
            keep &= np.linalg.norm(pts, axis=1) <= dom.radius
            for j in range(dom.hole_count):
                d = np.linalg.norm(pts - dom.centers[j], axis=1)
                keep &= d >= dom.hole_radii[j] + tol
        xs, ys = xs[keep], ys[keep]
        if len(xs):
            take = min(len(xs), samples - kept)
            vals = sys.field_values(xs[:take], ys[:take])
            sup = max(sup, float(np.max(np.abs(vals))))
            kept += take
    count = max(64, samples // 4)
    bpts, _ = dom.boundary_points(count)
    ipts = dom.interior_points(len(bpts), clearance=tol)
    sup = max(sup, float(np.max(np.abs(sys.field_values(bpts, ipts)))))
    sup = max(sup, float(np.max(np.abs(sys.field_values(ipts, bpts)))))
    return 1.1 * sup


def verify_inward(sys, dom, boundary_samples=2048, pair_samples=2048, field_sup=None):
    """Check both inward-pointing conditions on sampled boundary data.

    The weak condition tests <g(x,x), normal(x)> on the boundary alone; the
    delay condition tests <g(x,y), normal(x)> over pairs with |y - x| bounded
    by tau * sup|g|, the reach of the delayed argument along an orbit.  The
    worst (most positive) inner product is reported for each; passing means
    it stays below -tolerance.
    """
    if field_sup is None:
        field_sup = sup_norm_estimate(sys, dom, max(512, pair_samples))
    tol = MARGIN_RTOL * max(field_sup, 1e-30)

    points, normals = dom.boundary_points(boundary_samples)
    weak_vals = np.einsum("ij,ij->i", sys.field_values(points, points), normals)
    worst = int(np.argmax(weak_vals))
    weak_margin = float(weak_vals[worst])
    weak_pass = weak_margin < -tol

    reach = sys.tau * field_sup
    delay_margin = _delay_margin(sys, dom, points, normals, reach, pair_samples)
    delay_pass = delay_margin < -tol

    return InwardReport(
        weak_margin=weak_margin,
        weak_pass=weak_pass,
        weak_worst_point=points[worst],
        delay_margin=delay_margin,
        delay_pass=delay_pass,
        pair_distance=float(reach),
        field_sup=float(field_sup),
        tolerance=float(tol),
        boundary_samples=len(points),
        pair_samples=pair_samples,
    )


def _delay_margin(sys, dom, points, normals, reach, pair_samples):
    """Worst inner product over boundary pairs within the given reach."""
    if reach <= 0:
        # zero reach degenerates to the weak condition
        vals = np.einsum("ij,ij->i", sys.field_values(points, points), normals)
        return float(np.max(vals))
    per_point = max(1, pair_samples // len(points) + 1)
    raw = qmc.Halton(d=dom.dim + 1, scramble=False).random(len(points) * per_point)
    dirs = gauss.ppf(np.clip(raw[:, : dom.dim], 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    degenerate = norms[:, 0] < 1e-12
    dirs[degenerate] = 0.0
    dirs[degenerate, 0] = 1.0
    norms[degenerate] = 1.0
    dirs /= norms
    radii = reach * raw[:, dom.dim] ** (1.0 / dom.dim)

    x = np.repeat(points, per_point, axis=0)
    nv = np.repeat(normals, per_point, axis=0)
    y = x + dirs * radii[:, None]
    # clip to the closed domain: include x itself so the set is never empty
    keep = np.array([dom.contains(yi) for yi in y])
    y[~keep] = x[~keep]
    vals = np.einsum("ij,ij->i", sys.field_values(x, y), nv)
    return float(np.max(vals))


def delay_budget(sys, dom, resolution=0.02, boundary_samples=512, pairs_per_point=8):
    """Largest delay for which the sampled delay condition still holds.

    Bisects the largest pair distance eps for which <g(x,y), normal(x)> stays
    negative over all sampled pairs with |y - x| < eps, then divides by the
    field sup.  Requires the weak condition; fails with WeakConditionError
    otherwise.  ``resolution`` is the relative bisection tolerance.
    """
    field_sup = sup_norm_estimate(sys, dom)
    tol = MARGIN_RTOL * max(field_sup, 1e-30)
    points, normals = dom.boundary_points(boundary_samples)
    weak_vals = np.einsum("ij,ij->i", sys.field_values(points, points), normals)
    if float(np.max(weak_vals)) >= -tol:
        raise WeakConditionError("weak inward condition fails; no delay budget exists")

    def holds(eps):
        margin = _delay_margin(sys, dom, points, normals, eps,
                               boundary_samples * pairs_per_point)
        return margin < -tol

    hi = dom.diameter
    if holds(hi):
        return hi / field_sup
    lo = 0.0
    while (hi - lo) > resolution * dom.diameter:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo / field_sup


@dataclass(frozen=True)
class SingularFieldParams:
    """Parameters of the built-in field with inverse-power singularities.

    g(x, y) = -damping * x + |y|^2 * sum_j weights[j] (z_j - centers[j]) /
    |z_j - centers[j]|**exponents[j], where z_j is x for the first
    ``undelayed_terms`` terms and y for the rest.
    """

    damping: float
    weights: tuple
    exponents: tuple
    centers: np.ndarray
    undelayed_terms: int = 0

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "exponents", tuple(float(a) for a in self.exponents))
        J = centers.shape[0]
        if J == 0:
            raise ValueError("at least one singular term is required")
        if not (0 <= self.undelayed_terms <= J):
            raise ValueError("undelayed term count must lie in [0, J]")
        if len(self.weights) != J or len(self.exponents) != J:
            raise ValueError("weights and exponents must match the center count")
        if self.damping <= 0 or any(w <= 0 for w in self.weights):
            raise ValueError("damping and weights must be positive")
        if any(a <= 2 for a in self.exponents):
            raise ValueError("exponents must exceed 2")
        if np.any(np.linalg.norm(centers, axis=1) == 0):
            raise ValueError("centers must be nonzero")
        for j in range(J):
            for i in range(j):
                if np.allclose(centers[i], centers[j]):
                    raise ValueError("centers must be pairwise distinct")

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def term_count(self):
        return self.centers.shape[0]

    def field(self):
        """The vectorized right-hand side g(x, y) on stacked (..., N) inputs."""
        damping = self.damping
        centers = self.centers
        weights = self.weights
        exponents = self.exponents
        j0 = self.undelayed_terms

        def g(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            ysq = np.sum(y * y, axis=-1, keepdims=True)
            total = np.zeros(np.broadcast_shapes(x.shape, y.shape))
            for j in range(centers.shape[0]):
                z = (x if j < j0 else y) - centers[j]
                r = np.linalg.norm(z, axis=-1, keepdims=True)
                total = total + weights[j] * z / r ** exponents[j]
            return -damping * x + ysq * total

        return g


def singular_example_system(params, dom, tau, period, forcing=None):
    """Assemble the benchmark delay system on its punctured-ball domain.

    Validates that the domain holes sit at the field's singular centers, that
    the origin is an exact equilibrium, and that finite differences confirm
    the analytic Jacobians (-damping * I, 0) there.
    """
    if dom.hole_count != params.term_count or not np.allclose(dom.centers, params.centers):
        raise ValueError("domain holes must be centered at the singular centers")
    g = params.field()
    origin = np.zeros(params.dim)
    if np.max(np.abs(g(origin, origin))) != 0.0:
        raise ValueError("origin is not an exact equilibrium of the field")
    jx, jy = finite_difference_jacobians(g, origin)
    A = -params.damping * np.eye(params.dim)
    if np.max(np.abs(jx - A)) > 1e-6 or np.max(np.abs(jy)) > 1e-6:
        raise ValueError("finite-difference Jacobians disagree with the analytic ones")

    def jacobians(x, y):
        return _singular_jacobians(params, x, y)

    return DelaySystem(
        dim=params.dim,
        rhs=g,
        tau=tau,
        period=period,
        equilibrium=origin,
        forcing=forcing,
        jac_state=A,
        jac_delayed=np.zeros((params.dim, params.dim)),
        rhs_jacobians=jacobians,
        domain=dom,
        vectorized=True,
    )


def _singular_jacobians(params, x, y):
    """Pointwise Jacobians (D_x g, D_y g) of the benchmark field."""
    n = params.dim
    eye = np.eye(n)
    jx = -params.damping * eye.copy()
    jy = np.zeros((n, n))
    ysq = float(np.dot(y, y))
    total = np.zeros(n)
    for j in range(params.term_count):
        z = (x if j < params.undelayed_terms else y) - params.centers[j]
        r = float(np.linalg.norm(z))
        a = params.exponents[j]
        w = params.weights[j]
        term_jac = w * (eye / r**a - a * np.outer(z, z) / r ** (a + 2))
        term_val = w * z / r**a
        total += term_val
        if j < params.undelayed_terms:
            jx += ysq * term_jac
        else:
            jy += ysq * term_jac
    jy += 2.0 * np.outer(total, y)
    return jx, jy
