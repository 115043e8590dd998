"""Resonance analysis of the linearised delay system u' = A u(t) + B u(t-tau).

The system has a nontrivial T-periodic solution exactly when one of the
harmonic block determinants h_k vanishes, where the blocks couple the cosine
and sine coefficients of harmonic k.  Everything here is finite: harmonics
beyond a computable scan limit are provably nonresonant, so certificates
enumerate k = 0..k0 only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SingularMatrixError
from .trigpoly import harmonic_frequency

#: relative determinant tolerance; determinants scale like norms**(2N), so the
#: comparison is always made against (1 + |A| + |B| + lambda_k)**(2N).
DET_RTOL = 1e-9


def spectral_norm(m):
    return float(np.linalg.norm(m, 2))


@dataclass(frozen=True)
class LinearPair:
    """Jacobian pair (A, B) at an equilibrium, with delay and target period."""

    A: np.ndarray
    B: np.ndarray
    tau: float
    period: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise ValueError("A and B must be square matrices of equal size")
        if self.tau < 0 or self.period <= 0:
            raise ValueError("need tau >= 0 and period > 0")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def dim(self):
        return self.A.shape[0]

    def norm_scale(self):
        return spectral_norm(self.A), spectral_norm(self.B)


@dataclass(frozen=True)
class BlockPair:
    """Harmonic-k coefficient blocks of the linearised system.

    ``in_phase`` is A + cos(w tau) B, ``quadrature`` is w I + sin(w tau) B
    with w the harmonic frequency.  ``determinant`` is the determinant of the
    2N x 2N matrix [[in_phase, -quadrature], [quadrature, in_phase]] whose
    kernel holds the (a_k, b_k) pairs of periodic solutions.  For k >= 1,
    ``residual_block`` maps (a_k, b_k) to the coefficients of u - K u under
    the fixed-point operator; it is singular exactly when the determinant is.
    """

    k: int
    in_phase: np.ndarray
    quadrature: np.ndarray
    determinant: float
    residual_block: Optional[np.ndarray]

    def kernel_matrix(self):
        X, Y = self.in_phase, self.quadrature
        return np.block([[X, -Y], [Y, X]])


def block_pair(lp, k):
    """Assemble the harmonic-k blocks for a linear pair."""
    w = harmonic_frequency(k, lp.period)
    ang = w * lp.tau
    X = lp.A + np.cos(ang) * lp.B
    Y = w * np.eye(lp.dim) + np.sin(ang) * lp.B
    det = float(np.linalg.det(np.block([[X, -Y], [Y, X]])))
    residual = None
    if k >= 1:
        residual = np.block([[Y, X], [-X, Y]]) / w
    return BlockPair(k=k, in_phase=X, quadrature=Y, determinant=det, residual_block=residual)


def mean_block(lp):
    """Constant-coefficient block (T/2)(A + B) of the fixed-point residual."""
    return (lp.period / 2.0) * (lp.A + lp.B)


def truncation_limit(lp):
    """Smallest k0 with lambda_{k0+1} > |A| + 2|B|.

    Beyond k0 the quadrature block dominates (sigma_min >= lambda_k - |B| >
    |in_phase|), which forces both Schur factors of the harmonic block to be
    nonsingular, so scanning k = 0..k0 is exhaustive.
    """
    na, nb = lp.norm_scale()
    return int(np.floor((na + 2.0 * nb) * lp.period / (2.0 * np.pi)))


def _det_scale(lp, k):
    na, nb = lp.norm_scale()
    w = harmonic_frequency(k, lp.period)
    return (1.0 + na + nb + w) ** (2 * lp.dim)


def normalized_margin(lp, k, determinant=None):
    """|h_k| divided by its natural determinant scale, comparable across k."""
    if determinant is None:
        determinant = block_pair(lp, k).determinant
    return abs(determinant) / _det_scale(lp, k)


@dataclass(frozen=True)
class Certificate:
    """Outcome of the finite resonance scan plus the multiplicity bound."""

    nonresonant: bool
    failing_k: Optional[int]
    scan_limit: int
    determinants: tuple
    margins: tuple
    det_sign: Optional[int]
    euler_char: Optional[int]
    multiplicity: Optional[int]
    tau: float = 0.0
    period: float = 0.0
    dim: int = 0

    def as_dict(self):
        return {
            "nonresonant": self.nonresonant,
            "failing_k": self.failing_k,
            "scan_limit": self.scan_limit,
            "determinants": list(self.determinants),
            "margins": list(self.margins),
            "det_sign": self.det_sign,
            "euler_char": self.euler_char,
            "multiplicity": self.multiplicity,
            "tau": self.tau,
            "period": self.period,
            "dim": self.dim,
        }


def nonresonance_certificate(lp, euler_char=None):
    """Scan h_k for k = 0..k0 and classify the period as (non)resonant.

    Near-zero determinants are classified resonant: the certificate is only
    claimed under strict nonresonance, so borderline cases fail conservatively.
    The multiplicity bound is emitted only when the scan passes, the matrix
    A + B has a well-defined determinant sign, and an Euler characteristic is
    supplied.
    """
    k0 = truncation_limit(lp)
    dets, margins = [], []
    failing = None
    for k in range(k0 + 1):
        det = block_pair(lp, k).determinant
        margin = normalized_margin(lp, k, det)
        dets.append(det)
        margins.append(margin)
        if failing is None and margin <= DET_RTOL:
            failing = k

    det_sum = float(np.linalg.det(lp.A + lp.B))
    na, nb = lp.norm_scale()
    sum_scale = (1.0 + na + nb) ** lp.dim
    det_sign = None
    if abs(det_sum) > DET_RTOL * sum_scale:
        det_sign = 1 if det_sum > 0 else -1

    nonresonant = failing is None
    multiplicity = None
    if nonresonant and det_sign is not None and euler_char is not None:
        multiplicity = _multiplicity(euler_char, lp.dim, det_sign)

    return Certificate(
        nonresonant=nonresonant,
        failing_k=failing,
        scan_limit=k0,
        determinants=tuple(dets),
        margins=tuple(margins),
        det_sign=det_sign,
        euler_char=euler_char,
        multiplicity=multiplicity,
        tau=lp.tau,
        period=lp.period,
        dim=lp.dim,
    )


def _multiplicity(euler_char, dim, det_sign):
    return abs(int(euler_char) - (-1) ** dim * det_sign) + 1


def multiplicity_bound(euler_char, m):
    """Generic lower bound |chi - (-1)^N sgn det(M)| + 1 on the solution count."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    n = m.shape[0]
    det = float(np.linalg.det(m))
    scale = (1.0 + spectral_norm(m)) ** n
    if abs(det) <= DET_RTOL * scale:
        raise SingularMatrixError("determinant sign undefined for a singular matrix")
    return _multiplicity(euler_char, n, 1 if det > 0 else -1)


def resonance_scan(A, B, tau, period_range, steps):
    """Sample the resonance margin min_k |h_k| (normalized) over periods.

    Returns an array of shape (steps, 2) with columns (T, margin).  Zeros of
    the margin locate the countable set of resonant periods.
    """
    lo, hi = period_range
    if not (0 < lo <= hi) or steps < 2:
        raise ValueError("need a positive period range and steps >= 2")
    periods = np.linspace(lo, hi, steps)
    out = np.empty((steps, 2))
    for i, T in enumerate(periods):
        lp = LinearPair(A, B, tau, T)
        margins = [normalized_margin(lp, k) for k in range(truncation_limit(lp) + 1)]
        out[i] = (T, min(margins))
    return out


def small_delay_test(m, period):
    """Check that no eigenvalue of M sits at +-i lambda_k for any harmonic.

    Passing means 1 is not a Floquet multiplier of u' = M u, which makes the
    linearised delay system nonresonant for every small enough delay.  Only
    harmonics with lambda_k <= |M| + 1 can match an eigenvalue, so the check
    is finite.  Returns (passed, offending_k).
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    norm = spectral_norm(m)
    eigs = np.linalg.eigvals(m)
    kmax = int(np.ceil((norm + 1.0) * period / (2.0 * np.pi)))
    tol = DET_RTOL * (1.0 + norm)
    for k in range(kmax + 1):
        target = 1j * harmonic_frequency(k, period)
        if np.min(np.abs(eigs - target)) <= tol or np.min(np.abs(eigs + target)) <= tol:
            return False, k
    return True, None
