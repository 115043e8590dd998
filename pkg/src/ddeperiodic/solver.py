"""Spectral fixed-point solver for forced delay systems.

A T-periodic solution of u' = g(u(t), u(t-tau)) + p(t) is a coefficient-space
zero of F(u) = u - K u - phat, where K composes the nonlinear substitution
with one antiderivative and a mean correction, and phat is the matching
transform of the forcing.  The solver runs damped Newton on truncated Fourier
coefficients from many deterministic starts, deduplicates the converged
orbits, and audits the Jacobian signs against the degree identities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .errors import (
    DomainEscapeError,
    NoConvergenceError,
    SingularJacobianError,
    SingularMatrixError,
)
from .linear_analysis import multiplicity_bound, nonresonance_certificate
from .trigpoly import TrigPoly, collocation_size, project

MAX_ITER = 50
TOL_STEP = 1e-10
COND_LIMIT = 1e14
BACKTRACK_LIMIT = 12
#: duplicate threshold relative to the domain diameter
DUP_RTOL = 1e-4


def nemitskii(sys, u, degree):
    """Degree-``degree`` projection of t -> g(u(t), u(t - tau)).

    Evaluates u and its exact delay shift on an oversampled collocation grid,
    applies g pointwise and projects back; exact whenever g(u, u_tau) happens
    to be a trigonometric polynomial of degree <= ``degree``.
    """
    m = collocation_size(degree)
    t = u.grid(m)
    x = u.evaluate(t)
    y = u.delay(sys.tau).evaluate(t)
    vals = sys.field_values(x, y, t=t)
    return project(vals, u.period, degree)


def fixed_point_map(sys, u, degree):
    """Apply the integral fixed-point operator K to u.

    K u = mean(u) - t * mean(Nu) + I(Nu)(t) - mean(I(Nu)); the explicit drift
    of the antiderivative cancels the t * mean(Nu) term exactly, so the result
    is again a trigonometric polynomial.
    """
    nu = nemitskii(sys, u, degree)
    integral = nu.integral()
    drift_gap = np.max(np.abs(integral.drift - nu.mean))
    if drift_gap > 1e-10 * (1.0 + np.max(np.abs(nu.mean))):
        raise AssertionError(f"drift cancellation violated by {drift_gap:.3e}")
    rows = np.array(integral.poly.with_degree(degree).coeffs)
    rows[0] = u.mean + rows[0] - integral.mean_over_period()
    return TrigPoly(u.period, rows)


def forcing_transform(sys, degree):
    """The transform phat = I(p) - mean(I(p)) - t * mean(p) of the forcing.

    With the drift cancelled this is the periodic part of the antiderivative
    recentered by -T/2 * mean(p).  Its sup norm is bounded by a multiple of
    the forcing's sup norm.
    """
    p = sys.forcing_poly(degree)
    integral = p.integral()
    rows = np.array(integral.poly.with_degree(degree).coeffs)
    rows[0] = rows[0] - integral.mean_over_period()
    return TrigPoly(p.period, rows)


def coefficient_residual(sys, u, degree):
    """F(u) = u - K u - phat at the given truncation degree."""
    return u.with_degree(degree) - fixed_point_map(sys, u, degree) - forcing_transform(sys, degree)


def time_domain_defect(sys, u, refinement=4):
    """Max-norm of u' - g(u, u_tau) - p on a grid finer than collocation."""
    m = refinement * collocation_size(u.degree)
    t = u.grid(m)
    lhs = u.derivative().evaluate(t)
    rhs = sys.field_values(u.evaluate(t), u.delay(sys.tau).evaluate(t), t=t)
    rhs = rhs + sys.forcing_values(t)
    return float(np.max(np.abs(lhs - rhs)))


def residual(sys, u, degree=None):
    """Both residual measures: the coefficient-space F(u) and the time defect."""
    if degree is None:
        degree = u.degree
    return coefficient_residual(sys, u, degree), time_domain_defect(sys, u)


def truncation_tail_estimate(sys, u, extra=4):
    """Sup norm of the substitution harmonics dropped by the truncation."""
    wide = nemitskii(sys, u.with_degree(u.degree + extra), u.degree + extra)
    dropped = wide - wide.with_degree(u.degree).with_degree(u.degree + extra)
    tail = dropped.sup_norm()
    if sys.forcing is not None and not isinstance(sys.forcing, TrigPoly):
        m = 4 * collocation_size(u.degree)
        t = u.grid(m)
        tail += float(np.max(np.abs(sys.forcing_values(t) - sys.forcing_poly(u.degree).evaluate(t))))
    return tail


def residual_tolerance(sys, u=None):
    """Residual acceptance threshold, scaled by the field magnitude."""
    sup = sys.rhs_sup
    if sup is None:
        sup = 0.0
        if u is not None:
            m = collocation_size(u.degree)
            t = u.grid(m)
            vals = sys.field_values(u.evaluate(t), u.delay(sys.tau).evaluate(t), t=t)
            sup = float(np.max(np.abs(vals)))
    return 1e-8 * (1.0 + sup)


# -- coefficient-vector plumbing ----------------------------------------------


def _to_vector(u):
    return u.coeffs.ravel()


def _from_vector(vec, period, dim, degree):
    return TrigPoly(period, vec.reshape(2 * degree + 1, dim))


def _fd_jacobian(fun, vec, f0):
    n = vec.shape[0]
    h = 1e-6 * (1.0 + float(np.max(np.abs(vec))))
    jac = np.empty((n, n))
    for j in range(n):
        probe = np.array(vec)
        probe[j] += h
        jac[:, j] = (fun(probe) - f0) / h
    return jac


def _analytic_jacobian(sys, u, degree):
    """Exact Jacobian of F using the pointwise Jacobians of g.

    The directional derivative of the substitution along a basis polynomial v
    is D_x g * v(t) + D_y g * v(t - tau) on the grid; pushing each basis
    direction through the linearised operator reproduces one column.
    """
    m = collocation_size(degree)
    t = u.grid(m)
    x = u.evaluate(t)
    y = u.delay(sys.tau).evaluate(t)
    jxs = np.empty((m, sys.dim, sys.dim))
    jys = np.empty((m, sys.dim, sys.dim))
    for i in range(m):
        jxs[i], jys[i] = sys.rhs_jacobians(x[i], y[i])

    n_coeff = (2 * degree + 1) * sys.dim
    jac = np.empty((n_coeff, n_coeff))
    for col in range(n_coeff):
        vec = np.zeros(n_coeff)
        vec[col] = 1.0
        v = _from_vector(vec, u.period, sys.dim, degree)
        vx = v.evaluate(t)
        vy = v.delay(sys.tau).evaluate(t)
        dvals = np.einsum("mij,mj->mi", jxs, vx) + np.einsum("mij,mj->mi", jys, vy)
        dnu = project(dvals, u.period, degree)
        integral = dnu.integral()
        rows = np.array(integral.poly.with_degree(degree).coeffs)
        rows[0] = v.mean + rows[0] - integral.mean_over_period()
        jac[:, col] = vec - TrigPoly(u.period, rows).coeffs.ravel()
    return jac


@dataclass
class SolutionRecord:
    """A converged periodic orbit with its certification data."""

    u: TrigPoly
    residual_inf: float
    coeff_residual: float
    local_sign: int
    iterations: int
    near_equilibrium: bool = False
    floquet: Optional[tuple] = None
    poincare_gap: Optional[float] = None

    def distance_from(self, point, samples=256):
        gap = self.u.values_on_grid(samples) - np.asarray(point)
        return float(np.max(np.abs(gap)))

    def as_dict(self):
        return {
            "degree": self.u.degree,
            "residual_inf": self.residual_inf,
            "coeff_residual": self.coeff_residual,
            "local_sign": self.local_sign,
            "iterations": self.iterations,
            "near_equilibrium": self.near_equilibrium,
            "poincare_gap": self.poincare_gap,
            "mean": list(map(float, self.u.mean)),
            "sup_norm": self.u.sup_norm(),
        }


@dataclass
class SolutionSet:
    """Deduplicated periodic solutions with the expected-count context."""

    records: list
    expected_count: Optional[int]
    euler_char: Optional[int]
    duplicate_threshold: float

    @property
    def index_sum(self):
        return sum(r.local_sign for r in self.records)

    def __len__(self):
        return len(self.records)

    def as_dict(self):
        return {
            "count": len(self.records),
            "expected_count": self.expected_count,
            "euler_char": self.euler_char,
            "index_sum": self.index_sum,
            "duplicate_threshold": self.duplicate_threshold,
            "records": [r.as_dict() for r in self.records],
        }


def newton_solve(sys, start, degree, *, max_iter=MAX_ITER, tol_step=TOL_STEP,
                 tol_res=None, use_analytic=None):
    """Damped Newton on the Fourier coefficients of F(u) = u - K u - phat.

    Backtracks by halving (at most 12 times) until the residual decreases;
    converges when the undamped update norm drops below ``tol_step`` and the
    time-domain defect is below ``tol_res``.  Records the sign of the Jacobian
    determinant at the solution, the local contribution to the total degree.
    """
    start = start.with_degree(degree)
    if start.dim != sys.dim or abs(start.period - sys.period) > 1e-12 * sys.period:
        raise ValueError("start must match the system dimension and period")
    if use_analytic is None:
        use_analytic = sys.rhs_jacobians is not None
    phat = forcing_transform(sys, degree)

    def fun(vec):
        u = _from_vector(vec, sys.period, sys.dim, degree)
        return _to_vector(u - fixed_point_map(sys, u, degree) - phat)

    vec = _to_vector(start)
    fval = fun(vec)
    fnorm = float(np.linalg.norm(fval))
    jac = None
    for iteration in range(1, max_iter + 1):
        u_cur = _from_vector(vec, sys.period, sys.dim, degree)
        jac = (_analytic_jacobian(sys, u_cur, degree) if use_analytic
               else _fd_jacobian(fun, vec, fval))
        if np.linalg.cond(jac) > COND_LIMIT:
            raise SingularJacobianError(
                f"Jacobian condition exceeds {COND_LIMIT:g} at iteration {iteration}"
            )
        step = np.linalg.solve(jac, -fval)
        converged = float(np.linalg.norm(step)) < tol_step
        if not converged:
            scale = 1.0
            for _ in range(BACKTRACK_LIMIT + 1):
                try:
                    trial = vec + scale * step
                    ftrial = fun(trial)
                    fnorm_trial = float(np.linalg.norm(ftrial))
                except DomainEscapeError:
                    fnorm_trial = np.inf
                if fnorm_trial < fnorm:
                    break
                scale *= 0.5
            else:
                raise NoConvergenceError("backtracking stalled without residual decrease")
            vec, fval, fnorm = trial, ftrial, fnorm_trial

        if converged:
            u = _from_vector(vec, sys.period, sys.dim, degree)
            defect = time_domain_defect(sys, u)
            limit = tol_res if tol_res is not None else residual_tolerance(sys, u)
            if defect > limit:
                raise NoConvergenceError(
                    f"stationary point has defect {defect:.3e} above tolerance {limit:.3e}"
                )
            sign = 1 if np.linalg.det(jac) > 0 else -1
            return SolutionRecord(
                u=u,
                residual_inf=defect,
                coeff_residual=fnorm,
                local_sign=sign,
                iterations=iteration,
            )
    raise NoConvergenceError(f"no convergence within {max_iter} iterations")


def _halton_starts(dom, budget):
    """Constant-function starts on a low-discrepancy grid over the domain.

    Points outside the domain or within half a hole radius of a hole are
    rejected, so every start is a safely evaluable constant state.
    """
    sampler = qmc.Halton(d=dom.dim, scramble=False)
    accepted = []
    attempts = 0
    while len(accepted) < budget and attempts < 200 * budget:
        block = sampler.random(max(budget, 16))
        attempts += len(block)
        pts = (2.0 * block - 1.0) * dom.radius
        for x in pts:
            if len(accepted) >= budget:
                break
            if np.linalg.norm(x) > dom.radius:
                continue
            near_hole = any(
                np.linalg.norm(x - dom.centers[j]) < 1.5 * dom.hole_radii[j]
                for j in range(dom.hole_count)
            )
            if not near_hole:
                accepted.append(x)
    return accepted


def _orbit_inside(dom, u, samples=None):
    if samples is None:
        samples = 4 * collocation_size(u.degree)
    return dom.contains_all(u.values_on_grid(samples))


def near_equilibrium_radius(dom, equilibrium, user_value=None):
    """Radius of the ball around the equilibrium owned by its local index."""
    rho = dom.distance_to_boundary(equilibrium)
    if user_value is not None:
        rho = min(rho, float(user_value))
    return rho / 4.0


def multi_start_solve(sys, dom, degree, budget, *, seed=0, threads=1,
                      perturbations=2, rho=None, tol_res=None):
    """Hunt for all periodic solutions inside the domain.

    Starts Newton from the equilibrium, from a deterministic low-discrepancy
    grid of constant states over the domain, and from random trigonometric
    perturbations of every orbit already found.  Orbits leaving the closed
    domain are discarded; the survivors are deduplicated by max-norm distance
    and ordered by distance from the equilibrium, so the result does not
    depend on completion order.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    period, dim = sys.period, sys.dim

    starts = [TrigPoly.constant(period, sys.equilibrium)]
    starts += [TrigPoly.constant(period, x) for x in _halton_starts(dom, budget)]

    def attempt(start):
        try:
            return newton_solve(sys, start, degree, tol_res=tol_res)
        except (NoConvergenceError, SingularJacobianError, DomainEscapeError):
            return None

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(attempt, starts))
    else:
        results = [attempt(s) for s in starts]
    found = [r for r in results if r is not None and _orbit_inside(dom, r.u)]
    found = _dedup(found, sys, dom)

    for base in list(found):
        for _ in range(perturbations):
            amp = 0.05 * (1.0 + base.distance_from(sys.equilibrium))
            noise = rng.standard_normal((2 * degree + 1, dim)) * amp / (2 * degree + 1)
            start = TrigPoly(period, base.u.coeffs + noise)
            rec = attempt(start)
            if rec is not None and _orbit_inside(dom, rec.u):
                found = _dedup(found + [rec], sys, dom)

    radius = rho if rho is not None else near_equilibrium_radius(dom, sys.equilibrium)
    for rec in found:
        rec.near_equilibrium = rec.distance_from(sys.equilibrium) <= radius

    chi = dom.euler_characteristic()
    try:
        expected = multiplicity_bound(chi, sys.jac_state + sys.jac_delayed)
    except SingularMatrixError:
        expected = None
    cert = nonresonance_certificate(sys.linear_pair(), euler_char=chi)
    if not cert.nonresonant:
        expected = None

    return SolutionSet(
        records=found,
        expected_count=expected,
        euler_char=chi,
        duplicate_threshold=DUP_RTOL * dom.diameter,
    )


def _dedup(records, sys, dom):
    """Sort deterministically, then drop near-duplicates (keep best residual)."""
    threshold = DUP_RTOL * dom.diameter
    ordered = sorted(
        records,
        key=lambda r: (r.distance_from(sys.equilibrium), tuple(r.u.coeffs.ravel())),
    )
    kept = []
    for rec in ordered:
        dup = None
        for other in kept:
            if rec.u.max_coeff_distance(other.u) < threshold or _orbit_distance(rec.u, other.u) < threshold:
                dup = other
                break
        if dup is None:
            kept.append(rec)
        elif rec.residual_inf < dup.residual_inf:
            kept[kept.index(dup)] = rec
    return kept


def _orbit_distance(u, v, samples=256):
    return float(np.max(np.abs(u.values_on_grid(samples) - v.values_on_grid(samples))))


@dataclass(frozen=True)
class AuditReport:
    """Comparison of summed local signs against the total-degree identity."""

    index_sum: int
    expected_sum: int
    sum_matches: bool
    equilibrium_sign: Optional[int]
    equilibrium_expected: Optional[int]
    equilibrium_matches: Optional[bool]
    solutions_missed: bool
    message: str

    def as_dict(self):
        return {
            "index_sum": self.index_sum,
            "expected_sum": self.expected_sum,
            "sum_matches": self.sum_matches,
            "equilibrium_sign": self.equilibrium_sign,
            "equilibrium_expected": self.equilibrium_expected,
            "equilibrium_matches": self.equilibrium_matches,
            "solutions_missed": self.solutions_missed,
            "message": self.message,
        }


def degree_audit(solset, dim, euler_char, det_sign):
    """Check the found solutions against the two degree identities.

    The sum of local signs must equal (-1)^N chi when every zero was found;
    the solution nearest the equilibrium must carry the sign of det(A + B).
    A mismatch in the sum is reported as solutions likely missed rather than
    as a solver failure, since the identity only binds complete counts.
    """
    expected = (-1) ** dim * int(euler_char)
    index_sum = solset.index_sum
    sum_matches = index_sum == expected

    eq_sign = None
    eq_matches = None
    near = [r for r in solset.records if r.near_equilibrium]
    if near:
        eq_sign = near[0].local_sign
        if det_sign is not None:
            eq_matches = eq_sign == det_sign

    if not solset.records and expected != 0:
        message = "no solutions found but the total degree is nonzero"
    elif sum_matches:
        message = "index sum matches the total degree"
    else:
        message = "index sum differs from the total degree: solutions likely missed"
    return AuditReport(
        index_sum=index_sum,
        expected_sum=expected,
        sum_matches=sum_matches,
        equilibrium_sign=eq_sign,
        equilibrium_expected=det_sign,
        equilibrium_matches=eq_matches,
        solutions_missed=not sum_matches,
        message=message,
    )
