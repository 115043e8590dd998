"""Method-of-steps integration, Poincare maps and Floquet analysis.

Integration uses a classical 4th-order one-step scheme with fixed dt = tau/m,
so delayed reads either hit stored knots or fall inside already-computed
steps where cubic Hermite dense output (from stored derivatives) keeps the
interpolation at the order of the scheme.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    BlowUpError,
    ResonantLinearisationError,
    SingularMatrixError,
    StepMisfitError,
)

#: multiplier classification tolerance; monodromy discretization error
#: dominates machine precision at the default node counts
FLOQUET_TOL = 1e-6
#: compact-operator discretization produces rank artifacts near zero
SPURIOUS_MODULUS = 1e-10
DEFAULT_NODES = 128
DEFAULT_BOUND = 1e8


@dataclass(frozen=True)
class HistorySegment:
    """State history on [-tau, 0] sampled at m+1 equispaced nodes."""

    tau: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if not np.all(np.isfinite(values)):
            raise ValueError("history values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.tau == 0 and values.shape[0] != 1:
            raise ValueError("zero delay takes a single-node history")

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def segments(self):
        return self.values.shape[0] - 1

    @property
    def nodes(self):
        if self.tau == 0:
            return np.zeros(1)
        return np.linspace(-self.tau, 0.0, self.values.shape[0])

    @property
    def terminal(self):
        return self.values[-1]

    @classmethod
    def from_function(cls, fn, tau, nodes):
        if tau == 0:
            return cls(0.0, np.atleast_1d(np.asarray(fn(0.0), dtype=float))[None, :])
        ts = np.linspace(-tau, 0.0, nodes + 1)
        return cls(tau, np.array([np.atleast_1d(np.asarray(fn(t), dtype=float)) for t in ts]))

    @classmethod
    def constant(cls, value, tau, nodes):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        count = 1 if tau == 0 else nodes + 1
        return cls(tau, np.tile(value, (count, 1)))

    def gap(self, other):
        return float(np.max(np.abs(self.values - other.values)))


def _lagrange_weights(offsets, s):
    """Barycentric-free Lagrange weights at s for the given node offsets."""
    w = np.ones(len(offsets))
    for i, oi in enumerate(offsets):
        for j, oj in enumerate(offsets):
            if i != j:
                w[i] *= (s - oj) / (oi - oj)
    return w


def _history_lookup(segment, t):
    """Interpolate the initial history at t in [-tau, 0].

    Uses up to four neighbouring nodes (local cubic Lagrange), which keeps
    the interpolation error at the order of the integrator.
    """
    values = segment.values
    m = values.shape[0] - 1
    if m == 0:
        return values[0]
    h = segment.tau / m
    pos = (t + segment.tau) / h
    width = min(4, m + 1)
    start = int(np.clip(np.floor(pos) - (width // 2 - 1), 0, m + 1 - width))
    offsets = np.arange(start, start + width, dtype=float)
    w = _lagrange_weights(offsets, pos)
    return w @ values[start : start + width]


def _hermite(theta, h, y0, y1, d0, d1):
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2 * t3 - 3 * t2 + 1) * y0
        + (t3 - 2 * t2 + theta) * h * d0
        + (-2 * t3 + 3 * t2) * y1
        + (t3 - t2) * h * d1
    )


class Trajectory:
    """Dense output of one integration: knots, values and derivatives."""

    def __init__(self, times, values, derivs, history):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.derivs = np.asarray(derivs, dtype=float)
        self.history = history

    @property
    def dim(self):
        return self.values.shape[1]

    def sample(self, t):
        """Evaluate the dense trajectory at scalar t (history for t < 0)."""
        if t < self.times[0]:
            return _history_lookup(self.history, t)
        if t >= self.times[-1]:
            return self.values[-1]
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        h = self.times[i + 1] - self.times[i]
        theta = (t - self.times[i]) / h
        return _hermite(theta, h, self.values[i], self.values[i + 1],
                        self.derivs[i], self.derivs[i + 1])

    def segment_at(self, end_time, tau, nodes):
        """History segment of the trajectory on [end_time - tau, end_time]."""
        if tau == 0:
            return HistorySegment(0.0, self.sample(end_time)[None, :])
        ts = np.linspace(end_time - tau, end_time, nodes + 1)
        return HistorySegment(tau, np.array([self.sample(t) for t in ts]))


def _check_step(tau, dt):
    if dt <= 0:
        raise StepMisfitError("dt must be positive")
    if tau > 0:
        ratio = tau / dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise StepMisfitError(f"dt = {dt:g} does not divide tau = {tau:g}")


def integrate(sys, phi, t_end, dt, bound=DEFAULT_BOUND):
    """Integrate the delay system from history phi up to t_end.

    ``dt`` must divide the delay so delayed reads land on stored structure.
    Raises BlowUpError when the state magnitude exceeds ``bound`` (relevant
    near the singular benchmark's poles).
    """
    _check_step(sys.tau, dt)
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    tau = sys.tau

    n_full = int(np.floor(t_end / dt + 1e-12))
    times = [i * dt for i in range(n_full + 1)]
    if times[-1] < t_end - 1e-12 * max(1.0, t_end):
        times.append(t_end)
    times = np.asarray(times)
    n_knots = len(times)

    values = np.empty((n_knots, sys.dim))
    derivs = np.empty((n_knots, sys.dim))
    values[0] = phi.terminal

    def delayed(t, upto):
        """u(t - tau) read from history or from completed steps."""
        s = t - tau
        if s <= 0.0:
            return _history_lookup(phi, max(s, -tau))
        i = int(np.searchsorted(times[: upto + 1], s, side="right") - 1)
        i = min(i, upto - 1)
        h = times[i + 1] - times[i]
        theta = (s - times[i]) / h
        if theta >= 1.0 - 1e-12:
            return values[i + 1]
        return _hermite(theta, h, values[i], values[i + 1], derivs[i], derivs[i + 1])

    def rhs(t, x, upto):
        y = x if tau == 0 else delayed(t, upto)
        f = sys.field_at(x, y)
        if sys.forcing is not None:
            f = f + sys.forcing_values(t)[0]
        return f

    derivs[0] = rhs(0.0, values[0], 0)
    for i in range(n_knots - 1):
        h = times[i + 1] - times[i]
        t0, x0 = times[i], values[i]
        k1 = derivs[i]
        k2 = rhs(t0 + 0.5 * h, x0 + 0.5 * h * k1, i)
        k3 = rhs(t0 + 0.5 * h, x0 + 0.5 * h * k2, i)
        k4 = rhs(t0 + h, x0 + h * k3, i)
        values[i + 1] = x0 + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.max(np.abs(values[i + 1])) > bound:
            raise BlowUpError(f"state exceeded bound {bound:g} at t = {times[i + 1]:g}")
        derivs[i + 1] = rhs(times[i + 1], values[i + 1], i + 1)
    return Trajectory(times, values, derivs, phi)


def poincare_map(sys, phi, dt=None, bound=DEFAULT_BOUND):
    """Advance a history segment by one period.

    Fixed points are exactly the T-periodic solutions.  Requires tau <= T so
    the image segment lies inside the integrated window.
    """
    if sys.tau > sys.period:
        raise ValueError("the Poincare map requires tau <= period")
    if dt is None:
        dt = sys.tau / max(1, phi.segments) if sys.tau > 0 else sys.period / 512
    traj = integrate(sys, phi, sys.period, dt, bound=bound)
    return traj.segment_at(sys.period, sys.tau, phi.segments)


def poincare_gap(sys, u, nodes=1, dt=None):
    """Residual of a candidate orbit under the one-period map.

    Restricts u to a history segment (its values on [T - tau, T] equal those
    on [-tau, 0] by periodicity), advances it one period with the integrator
    and returns the max-norm gap.  This is the independent time-domain check
    of a spectrally computed solution.
    """
    tau = sys.tau
    if tau == 0:
        phi = HistorySegment(0.0, u.evaluate(0.0)[None, :])
    else:
        ts = np.linspace(-tau, 0.0, nodes + 1)
        phi = HistorySegment(tau, u.evaluate(ts))
    image = poincare_map(sys, phi, dt=dt)
    return image.gap(phi)


# -- linear machinery ---------------------------------------------------------


def _linear_batch_integrate(A, B, tau, t_end, dt, phi_values):
    """RK4 with dense output for u' = A u + B u(t - tau), batched over columns.

    ``phi_values`` has shape (m+1, N, cols); all columns advance on the same
    grid, so delayed reads vectorize.
    """
    n_full = int(np.floor(t_end / dt + 1e-12))
    times = [i * dt for i in range(n_full + 1)]
    if times[-1] < t_end - 1e-12 * max(1.0, t_end):
        times.append(t_end)
    times = np.asarray(times)
    n_knots = len(times)
    m = phi_values.shape[0] - 1

    values = np.empty((n_knots,) + phi_values.shape[1:])
    derivs = np.empty_like(values)
    values[0] = phi_values[-1]

    def history(t):
        if m == 0:
            return phi_values[0]
        h = tau / m
        pos = (t + tau) / h
        width = min(4, m + 1)
        start = int(np.clip(np.floor(pos) - (width // 2 - 1), 0, m + 1 - width))
        w = _lagrange_weights(np.arange(start, start + width, dtype=float), pos)
        return np.tensordot(w, phi_values[start : start + width], axes=(0, 0))

    def delayed(t, upto):
        s = t - tau
        if s <= 0.0:
            return history(max(s, -tau))
        i = min(int(np.searchsorted(times[: upto + 1], s, side="right") - 1), upto - 1)
        h = times[i + 1] - times[i]
        theta = (s - times[i]) / h
        if theta >= 1.0 - 1e-12:
            return values[i + 1]
        return _hermite(theta, h, values[i], values[i + 1], derivs[i], derivs[i + 1])

    def rhs(t, x, upto):
        y = x if tau == 0 else delayed(t, upto)
        return np.tensordot(A, x, axes=(1, 0)) + np.tensordot(B, y, axes=(1, 0))

    derivs[0] = rhs(0.0, values[0], 0)
    for i in range(n_knots - 1):
        h = times[i + 1] - times[i]
        t0, x0 = times[i], values[i]
        k1 = derivs[i]
        k2 = rhs(t0 + 0.5 * h, x0 + 0.5 * h * k1, i)
        k3 = rhs(t0 + 0.5 * h, x0 + 0.5 * h * k2, i)
        k4 = rhs(t0 + h, x0 + h * k3, i)
        values[i + 1] = x0 + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        derivs[i + 1] = rhs(times[i + 1], values[i + 1], i + 1)

    def sample(t):
        if t >= times[-1]:
            return values[-1]
        i = int(np.searchsorted(times, t, side="right") - 1)
        h = times[i + 1] - times[i]
        theta = (t - times[i]) / h
        return _hermite(theta, h, values[i], values[i + 1], derivs[i], derivs[i + 1])

    return sample


def monodromy(lp, nodes=DEFAULT_NODES):
    """Discretized one-period map of the linearised system on history space.

    Columns are the Poincare images of the unit history basis vectors; the
    nonzero eigenvalues approximate Floquet multipliers and converge as the
    node count grows.  With zero delay this degenerates to the N x N time-T
    map of u' = (A + B) u.
    """
    if lp.tau > lp.period:
        raise ValueError("monodromy requires tau <= period")
    n = lp.dim
    if lp.tau == 0:
        phi = np.eye(n)[None, :, :]
        sample = _linear_batch_integrate(lp.A, lp.B, 0.0, lp.period,
                                         lp.period / 512, phi)
        return sample(lp.period)

    m = nodes
    cols = n * (m + 1)
    phi = np.zeros((m + 1, n, cols))
    for j in range(m + 1):
        for i in range(n):
            phi[j, i, j * n + i] = 1.0
    dt = lp.tau / m
    sample = _linear_batch_integrate(lp.A, lp.B, lp.tau, lp.period, dt, phi)
    ts = np.linspace(lp.period - lp.tau, lp.period, m + 1)
    out = np.empty((cols, cols))
    for j, t in enumerate(ts):
        out[j * n : (j + 1) * n] = sample(t)
    return out


@dataclass(frozen=True)
class FloquetReport:
    """Multipliers of the linearised one-period map and the resulting index."""

    multipliers: tuple
    alpha: int
    index: int
    stable_hint: bool
    nodes: int

    def as_dict(self):
        return {
            "multipliers": [[float(z.real), float(z.imag)] for z in self.multipliers],
            "alpha": self.alpha,
            "index": self.index,
            "stable_hint": self.stable_hint,
            "nodes": self.nodes,
        }


def floquet_report(lp, nodes=DEFAULT_NODES, keep=None):
    """Multiplier spectrum, unstable count alpha and the index (-1)^alpha.

    Raises ResonantLinearisationError when some multiplier sits within the
    classification tolerance of 1 (the resonant case the certificates
    exclude).  Near-zero eigenvalues are discretization artifacts of the
    compact map and are discarded.
    """
    eigs = np.linalg.eigvals(monodromy(lp, nodes))
    eigs = eigs[np.abs(eigs) > SPURIOUS_MODULUS]
    order = np.argsort(-np.abs(eigs))
    eigs = eigs[order]
    if keep is not None:
        eigs = eigs[:keep]
    if eigs.size and np.min(np.abs(eigs - 1.0)) <= FLOQUET_TOL:
        raise ResonantLinearisationError("a Floquet multiplier lies at 1")
    real = np.abs(eigs.imag) <= FLOQUET_TOL * np.maximum(1.0, np.abs(eigs))
    alpha = int(np.sum(real & (eigs.real > 1.0 + FLOQUET_TOL)))
    stable = bool(np.all(np.abs(eigs) < 1.0 - FLOQUET_TOL)) if eigs.size else True
    return FloquetReport(
        multipliers=tuple(eigs),
        alpha=alpha,
        index=(-1) ** alpha,
        stable_hint=stable,
        nodes=nodes,
    )


def ode_poincare_degree(m, period):
    """Sign of det(I - e^{TM}) checked against the closed form (-1)^N sgn det M.

    Valid when 1 is not a Floquet multiplier of u' = M u; raises
    ResonantLinearisationError when det(I - e^{TM}) is numerically zero.
    Returns (sign, consistent).
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    n = m.shape[0]
    gap = np.eye(n) - expm(period * m)
    # a multiplier at 1 makes the gap singular; detect it against the gap's
    # own scale with an absolute floor for the gap == rounding-noise case
    svals = np.linalg.svd(gap, compute_uv=False)
    if svals[-1] <= 1e-13 * max(svals[0], 1.0):
        raise ResonantLinearisationError("det(I - e^{TM}) is numerically zero")
    sign_det, _ = np.linalg.slogdet(gap)
    det_m = float(np.linalg.det(m))
    if det_m == 0.0:
        raise SingularMatrixError("sgn det(M) undefined")
    sign = int(sign_det)
    expected = (-1) ** n * (1 if det_m > 0 else -1)
    return sign, sign == expected


def positive_characteristic_root(A, B, tau, rtol=1e-12):
    """Positive real characteristic root found via the sign of h(0).

    h(lambda) = det(lambda I - A - B e^{-lambda tau}) tends to +infinity, so
    h(0) < 0 forces a positive real root, located here by bisection.  Returns
    None when h(0) >= 0 (the one-sided check is then inconclusive).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = A.shape[0]

    def h(lam):
        return float(np.linalg.det(lam * np.eye(n) - A - B * np.exp(-lam * tau)))

    if h(0.0) >= 0.0:
        return None
    hi = np.linalg.norm(A, 2) + np.linalg.norm(B, 2) + 1.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EquicontinuityReport:
    """Observed Lipschitz modulus of the one-period map versus its bound."""

    modulus: float
    bound: float
    passed: bool
    field_const: float
    lipschitz: float

    def as_dict(self):
        return {
            "modulus": self.modulus,
            "bound": self.bound,
            "passed": self.passed,
            "field_const": self.field_const,
            "lipschitz": self.lipschitz,
        }


def equicontinuity_check(sys, phis, radius, dt=None):
    """Empirical check that the one-period map is uniformly Lipschitz.

    Verifies |P phi(t2) - P phi(t1)| <= (C + L R)(t2 - t1) on the sampled
    histories, with C the field magnitude at the origin (plus forcing) and L
    an estimated local Lipschitz constant on the R-ball.  Diagnostic only.
    """
    origin = np.zeros(sys.dim)
    const = float(np.max(np.abs(sys.field_at(origin, origin))))
    if sys.forcing is not None:
        t = np.linspace(0.0, sys.period, 64, endpoint=False)
        const += float(np.max(np.abs(sys.forcing_values(t))))

    rng = np.random.default_rng(7)
    lipschitz = 0.0
    for _ in range(256):
        x1, y1, x2, y2 = (radius * rng.uniform(-1, 1, (4, sys.dim)))
        gap = max(float(np.max(np.abs(x1 - x2))), float(np.max(np.abs(y1 - y2))))
        if gap < 1e-12:
            continue
        diff = float(np.max(np.abs(sys.field_at(x1, y1) - sys.field_at(x2, y2))))
        lipschitz = max(lipschitz, diff / gap)

    bound = const + lipschitz * radius
    modulus = 0.0
    for phi in phis:
        if dt is None:
            step = sys.tau / max(1, phi.segments) if sys.tau > 0 else sys.period / 512
        else:
            step = dt
        traj = integrate(sys, phi, sys.period, step)
        if float(np.max(np.abs(traj.values))) > radius:
            raise ValueError("a sampled trajectory leaves the radius bound")
        image = traj.segment_at(sys.period, sys.tau, phi.segments)
        if image.segments:
            h = image.tau / image.segments
            jumps = np.max(np.abs(np.diff(image.values, axis=0)), axis=1) / h
            modulus = max(modulus, float(np.max(jumps)))
    passed = modulus <= 1.05 * bound + 1e-9
    return EquicontinuityReport(
        modulus=modulus, bound=bound, passed=passed,
        field_const=const, lipschitz=lipschitz,
    )


def write_trajectory_csv(path, traj):
    """CSV export: header t,u1,...,uN, one row per knot, 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t"] + [f"u{i + 1}" for i in range(traj.dim)])
        for t, row in zip(traj.times, traj.values):
            writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])


def orbit_trajectory(sys, u, samples=512):
    """Dense trajectory of a spectral orbit over one period, for export."""
    ts = np.linspace(0.0, sys.period, samples + 1)
    vals = u.evaluate(ts)
    derivs = u.derivative().evaluate(ts)
    phi = HistorySegment(0.0, vals[0][None, :]) if sys.tau == 0 else HistorySegment(
        sys.tau, u.evaluate(np.linspace(-sys.tau, 0.0, max(2, samples // 8)))
    )
    return Trajectory(ts, vals, derivs, phi)
