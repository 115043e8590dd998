"""Vector-valued trigonometric polynomials with exact calculus.

A polynomial of degree K on period T represents

    u(t) = a_0 + sum_{k=1..K} cos(2 pi k t / T) a_k + sin(2 pi k t / T) b_k

with coefficient vectors in R^N.  Coefficients are stored interleaved per
harmonic, rows [a_0, a_1, b_1, a_2, b_2, ...], so that the (a_k, b_k) pair of
one harmonic is contiguous.  All operations return new objects; coefficient
arrays are frozen, so values are safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarseError


def harmonic_frequency(k, period):
    """Angular frequency 2*pi*k/T of the k-th harmonic."""
    if period <= 0:
        raise ValueError("period must be positive")
    return 2.0 * np.pi * k / period


class TrigPoly:
    __slots__ = ("period", "coeffs")

    def __init__(self, period, coeffs):
        coeffs = np.array(coeffs, dtype=float, copy=True)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.ndim != 2 or coeffs.shape[0] % 2 != 1:
            raise ValueError("coefficients must form a (2K+1, N) array")
        if period <= 0:
            raise ValueError("period must be positive")
        coeffs.setflags(write=False)
        self.period = float(period)
        self.coeffs = coeffs

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, period, dim, degree=0):
        return cls(period, np.zeros((2 * degree + 1, dim)))

    @classmethod
    def constant(cls, period, value):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(period, value[None, :])

    @classmethod
    def from_harmonics(cls, period, a0, cos_coeffs=(), sin_coeffs=()):
        """Build from the constant term and per-harmonic cosine/sine vectors."""
        a0 = np.atleast_1d(np.asarray(a0, dtype=float))
        cos_coeffs = [np.atleast_1d(np.asarray(c, dtype=float)) for c in cos_coeffs]
        sin_coeffs = [np.atleast_1d(np.asarray(s, dtype=float)) for s in sin_coeffs]
        degree = max(len(cos_coeffs), len(sin_coeffs))
        rows = np.zeros((2 * degree + 1, a0.shape[0]))
        rows[0] = a0
        for k, c in enumerate(cos_coeffs, start=1):
            rows[2 * k - 1] = c
        for k, s in enumerate(sin_coeffs, start=1):
            rows[2 * k] = s
        return cls(period, rows)

    # -- basic structure ------------------------------------------------------

    @property
    def dim(self):
        return self.coeffs.shape[1]

    @property
    def degree(self):
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def a0(self):
        return self.coeffs[0]

    @property
    def mean(self):
        """Average over one period; equals the constant coefficient."""
        return self.coeffs[0]

    @property
    def cos_coeffs(self):
        return self.coeffs[1::2]

    @property
    def sin_coeffs(self):
        return self.coeffs[2::2]

    def frequencies(self):
        return harmonic_frequency(np.arange(1, self.degree + 1), self.period)

    def with_degree(self, degree):
        """Copy truncated or zero-padded to the requested degree."""
        rows = np.zeros((2 * degree + 1, self.dim))
        keep = min(degree, self.degree)
        rows[: 2 * keep + 1] = self.coeffs[: 2 * keep + 1]
        return TrigPoly(self.period, rows)

    # -- arithmetic -----------------------------------------------------------

    def _align(self, other):
        if not isinstance(other, TrigPoly):
            raise TypeError("expected a TrigPoly")
        if other.dim != self.dim or abs(other.period - self.period) > 1e-12 * self.period:
            raise ValueError("operands must share dimension and period")
        degree = max(self.degree, other.degree)
        return self.with_degree(degree), other.with_degree(degree)

    def __add__(self, other):
        a, b = self._align(other)
        return TrigPoly(self.period, a.coeffs + b.coeffs)

    def __sub__(self, other):
        a, b = self._align(other)
        return TrigPoly(self.period, a.coeffs - b.coeffs)

    def __mul__(self, scalar):
        return TrigPoly(self.period, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return TrigPoly(self.period, -self.coeffs)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, t):
        """Value at time t (scalar -> (N,), array (M,) -> (M, N))."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.broadcast_to(self.a0, (tt.shape[0], self.dim)).copy()
        if self.degree:
            ang = np.outer(tt, self.frequencies())
            out += np.cos(ang) @ self.cos_coeffs + np.sin(ang) @ self.sin_coeffs
        return out[0] if scalar else out

    __call__ = evaluate

    def grid(self, m):
        """Equispaced collocation nodes t_j = j T / m, j = 0..m-1."""
        return np.arange(m) * (self.period / m)

    def values_on_grid(self, m):
        return self.evaluate(self.grid(m))

    def sup_norm(self, samples=None):
        """Max-norm over one period, sampled on an oversampled grid."""
        if samples is None:
            samples = max(64, 8 * self.degree + 8)
        return float(np.max(np.abs(self.values_on_grid(samples)))) if samples else 0.0

    # -- calculus -------------------------------------------------------------

    def delay(self, tau):
        """Exact time shift: result(t) = self(t - tau).

        Uses the rotation cos(w(t-tau)) = cos(wt)cos(wtau) + sin(wt)sin(wtau),
        so the new pair is (cos(wtau) a - sin(wtau) b, sin(wtau) a + cos(wtau) b).
        """
        rows = np.array(self.coeffs)
        if self.degree:
            ang = self.frequencies() * float(tau)
            c, s = np.cos(ang)[:, None], np.sin(ang)[:, None]
            a, b = self.cos_coeffs, self.sin_coeffs
            rows[1::2] = c * a - s * b
            rows[2::2] = s * a + c * b
        return TrigPoly(self.period, rows)

    def derivative(self):
        rows = np.zeros_like(self.coeffs)
        if self.degree:
            w = self.frequencies()[:, None]
            rows[1::2] = w * self.sin_coeffs
            rows[2::2] = -w * self.cos_coeffs
        return TrigPoly(self.period, rows)

    def integral(self):
        """Antiderivative vanishing at t=0, as a DriftPoly.

        The mean of self becomes the drift slope; it is kept out of the trig
        coefficients because downstream operators must cancel it exactly.
        """
        rows = np.zeros_like(self.coeffs)
        if self.degree:
            w = self.frequencies()[:, None]
            rows[1::2] = -self.sin_coeffs / w
            rows[2::2] = self.cos_coeffs / w
            rows[0] = np.sum(self.sin_coeffs / w, axis=0)
        return DriftPoly(np.array(self.a0), TrigPoly(self.period, rows))

    # -- comparisons ----------------------------------------------------------

    def max_coeff_distance(self, other):
        a, b = self._align(other)
        return float(np.max(np.abs(a.coeffs - b.coeffs)))

    def __repr__(self):
        return f"TrigPoly(period={self.period:g}, degree={self.degree}, dim={self.dim})"


@dataclass(frozen=True)
class DriftPoly:
    """A trigonometric polynomial plus an explicit linear-in-t drift term."""

    drift: np.ndarray
    poly: TrigPoly

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        base = self.poly.evaluate(t)
        if t.ndim == 0:
            return base + self.drift * float(t)
        return base + np.outer(t, self.drift)

    __call__ = evaluate

    @property
    def period(self):
        return self.poly.period

    def mean_over_period(self):
        """Average of drift*t + poly(t) over [0, T]."""
        return self.drift * (self.period / 2.0) + self.poly.a0


def antiderivative_and_mean(u):
    """Antiderivative of u (with explicit drift) and the mean of u."""
    return u.integral(), np.array(u.mean)


def project(samples, period, degree):
    """Discrete Fourier projection of equispaced samples onto degree K.

    ``samples`` holds values at t_j = j T / m, j = 0..m-1, one row per node.
    Exact for trigonometric polynomials of degree <= K once m > 2K; the grid
    must satisfy m >= 2K + 2.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    m = samples.shape[0]
    if m < 2 * degree + 2:
        raise GridTooCoarseError(
            f"{m} samples cannot resolve degree {degree}; need m >= {2 * degree + 2}"
        )
    spectrum = np.fft.rfft(samples, axis=0)
    rows = np.zeros((2 * degree + 1, samples.shape[1]))
    rows[0] = spectrum[0].real / m
    if degree:
        rows[1::2] = 2.0 * spectrum[1 : degree + 1].real / m
        rows[2::2] = -2.0 * spectrum[1 : degree + 1].imag / m
    return TrigPoly(period, rows)


def collocation_size(degree):
    """Default oversampled grid size; leaves headroom for quadratic terms."""
    return 4 * degree + 4
