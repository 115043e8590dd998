"""Problem instances: right-hand side, delay, period, forcing, equilibrium."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, TYPE_CHECKING

import numpy as np

from .errors import DomainEscapeError
from .trigpoly import TrigPoly, project

if TYPE_CHECKING:  # pragma: no cover
    from .geometry import PuncturedBall

#: acceptable equilibrium residual |g(e, e)|
EQUILIBRIUM_TOL = 1e-8
#: acceptable forcing aperiodicity |p(t+T) - p(t)| at sampled t
PERIODICITY_TOL = 1e-10


def finite_difference_jacobians(g, point, step=1e-6):
    """Central-difference Jacobians (D_x g, D_y g) at (point, point)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    n = point.shape[0]
    jx = np.empty((n, n))
    jy = np.empty((n, n))
    for j in range(n):
        dv = np.zeros(n)
        dv[j] = step
        jx[:, j] = (np.asarray(g(point + dv, point)) - np.asarray(g(point - dv, point))) / (2 * step)
        jy[:, j] = (np.asarray(g(point, point + dv)) - np.asarray(g(point, point - dv))) / (2 * step)
    return jx, jy


@dataclass
class DelaySystem:
    """A forced delay system u'(t) = g(u(t), u(t - tau)) + p(t).

    ``rhs`` evaluates g; with ``vectorized`` set it must accept stacked
    (..., N) inputs.  ``forcing`` is either a TrigPoly (exact transforms) or a
    T-periodic callable.  ``jac_state``/``jac_delayed`` hold the Jacobians of
    g at the equilibrium; optional pointwise Jacobian callables enable the
    analytic Newton path.  ``domain`` (when attached) supplies the pole guard
    used while evaluating g along candidate orbits.
    """

    dim: int
    rhs: Callable
    tau: float
    period: float
    equilibrium: np.ndarray
    forcing: object = None
    jac_state: Optional[np.ndarray] = None
    jac_delayed: Optional[np.ndarray] = None
    rhs_jacobians: Optional[Callable] = None
    domain: Optional["PuncturedBall"] = None
    vectorized: bool = False
    rhs_sup: Optional[float] = None

    def __post_init__(self):
        self.equilibrium = np.atleast_1d(np.asarray(self.equilibrium, dtype=float))
        if self.equilibrium.shape != (self.dim,):
            raise ValueError("equilibrium must be a length-N vector")
        if self.tau < 0 or self.period <= 0:
            raise ValueError("need tau >= 0 and period > 0")
        res = np.max(np.abs(np.asarray(self.rhs(self.equilibrium, self.equilibrium))))
        if res > EQUILIBRIUM_TOL:
            raise ValueError(f"|g(e,e)| = {res:.3e} exceeds the equilibrium tolerance")
        if self.jac_state is None or self.jac_delayed is None:
            jx, jy = finite_difference_jacobians(self.rhs, self.equilibrium)
            if self.jac_state is None:
                self.jac_state = jx
            if self.jac_delayed is None:
                self.jac_delayed = jy
        self.jac_state = np.atleast_2d(np.asarray(self.jac_state, dtype=float))
        self.jac_delayed = np.atleast_2d(np.asarray(self.jac_delayed, dtype=float))
        self._check_forcing()

    def _check_forcing(self):
        if self.forcing is None or isinstance(self.forcing, TrigPoly):
            return
        probes = np.linspace(0.0, self.period, 7, endpoint=False)
        for t in probes:
            gap = np.max(np.abs(np.asarray(self.forcing(t + self.period)) - np.asarray(self.forcing(t))))
            if gap > PERIODICITY_TOL:
                raise ValueError(f"forcing is not T-periodic (gap {gap:.3e} at t={t:g})")

    # -- evaluation helpers ---------------------------------------------------

    def forcing_values(self, t):
        """Forcing sampled at times t, shape (len(t), N); zero when absent."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.forcing is None:
            return np.zeros((t.shape[0], self.dim))
        if isinstance(self.forcing, TrigPoly):
            return self.forcing.evaluate(t)
        return np.array([np.atleast_1d(np.asarray(self.forcing(ti), dtype=float)) for ti in t])

    def forcing_poly(self, degree):
        """Forcing as a degree-``degree`` TrigPoly (projecting callables)."""
        if self.forcing is None:
            return TrigPoly.zero(self.period, self.dim, degree)
        if isinstance(self.forcing, TrigPoly):
            return self.forcing.with_degree(degree)
        m = 4 * degree + 4
        t = np.arange(m) * (self.period / m)
        return project(self.forcing_values(t), self.period, degree)

    def field_values(self, x, y, t=None):
        """Evaluate g on stacked points, guarding against domain escape.

        ``x`` and ``y`` have shape (m, N).  Raises DomainEscapeError when a
        point violates the attached domain's pole guard or g returns a
        non-finite value; ``t`` (when given) labels the offending node.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self.domain is not None:
            for pts in (x, y):
                bad = self.domain.pole_violation(pts)
                if bad is not None:
                    t_bad = None if t is None else float(np.atleast_1d(t)[bad])
                    raise DomainEscapeError(
                        "evaluation point too close to a field singularity",
                        t=t_bad, point=pts[bad],
                    )
        with np.errstate(all="ignore"):
            if self.vectorized:
                vals = np.asarray(self.rhs(x, y), dtype=float)
            else:
                vals = np.array([np.atleast_1d(np.asarray(self.rhs(xi, yi), dtype=float))
                                 for xi, yi in zip(x, y)])
        if not np.all(np.isfinite(vals)):
            bad = int(np.argwhere(~np.isfinite(vals))[0][0])
            t_bad = None if t is None else float(np.atleast_1d(t)[bad])
            raise DomainEscapeError("field evaluated to a non-finite value", t=t_bad, point=x[bad])
        return vals

    def field_at(self, x, y):
        """Pointwise g(x, y) with the same guards as field_values."""
        return self.field_values(x[None, :], y[None, :])[0]

    def linear_pair(self):
        from .linear_analysis import LinearPair

        return LinearPair(self.jac_state, self.jac_delayed, self.tau, self.period)


def linear_system(A, B, tau, period, forcing=None, domain=None):
    """Convenience builder for g(x, y) = A x + B y."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = A.shape[0]

    def rhs(x, y):
        return x @ A.T + y @ B.T

    def jacobians(x, y):
        return A, B

    return DelaySystem(
        dim=n,
        rhs=rhs,
        tau=tau,
        period=period,
        equilibrium=np.zeros(n),
        forcing=forcing,
        jac_state=A,
        jac_delayed=B,
        rhs_jacobians=jacobians,
        domain=domain,
        vectorized=True,
    )
