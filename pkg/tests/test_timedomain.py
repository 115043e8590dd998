"""Method-of-steps integrator, Poincare maps, monodromy and Floquet data."""

import numpy as np
import pytest

from ddeperiodic import (
    BlowUpError,
    DelaySystem,
    HistorySegment,
    LinearPair,
    ResonantLinearisationError,
    StepMisfitError,
    TrigPoly,
    equicontinuity_check,
    floquet_report,
    integrate,
    linear_system,
    monodromy,
    newton_solve,
    ode_poincare_degree,
    poincare_gap,
    poincare_map,
    positive_characteristic_root,
    small_delay_test,
    write_trajectory_csv,
)
from ddeperiodic.timedomain import orbit_trajectory

TWO_PI = 2.0 * np.pi


def test_integrate_constant_field_stays_constant():
    sys = DelaySystem(dim=2, rhs=lambda x, y: np.zeros_like(x), tau=0.5,
                      period=4.0, equilibrium=np.zeros(2), vectorized=True)
    phi = HistorySegment.constant([1.5, -0.5], 0.5, 8)
    traj = integrate(sys, phi, 3.0, 0.5 / 8)
    assert np.max(np.abs(traj.values - [1.5, -0.5])) < 1e-14


def test_integrate_exponential_decay():
    sys = linear_system([[-1.0]], [[0.0]], 0.5, 10.0)
    phi = HistorySegment.constant([1.0], 0.5, 500)
    traj = integrate(sys, phi, 1.0, 1e-3)
    assert abs(traj.values[-1][0] - np.exp(-1.0)) < 1e-8


def test_integrate_delayed_cosine():
    m = 128
    sys = linear_system([[0.0]], [[-1.0]], np.pi / 2, TWO_PI)
    phi = HistorySegment.from_function(lambda t: [np.cos(t)], np.pi / 2, m)
    traj = integrate(sys, phi, TWO_PI, (np.pi / 2) / m)
    assert abs(traj.values[-1][0] - 1.0) < 1e-6
    # dense output stays on the cosine as well
    for t in (1.0, 2.5, 4.0):
        assert abs(traj.sample(t)[0] - np.cos(t)) < 1e-6


def test_integrate_rejects_misfit_step():
    sys = linear_system([[-1.0]], [[0.5]], 0.3, 2.0)
    phi = HistorySegment.constant([1.0], 0.3, 4)
    with pytest.raises(StepMisfitError):
        integrate(sys, phi, 1.0, 0.07)


def test_integrate_detects_blow_up():
    sys = DelaySystem(dim=1, rhs=lambda x, y: x * x, tau=0.25, period=2.0,
                      equilibrium=np.zeros(1), vectorized=True)
    phi = HistorySegment.constant([2.0], 0.25, 8)
    with pytest.raises(BlowUpError):
        integrate(sys, phi, 1.0, 0.25 / 8, bound=1e6)


def test_integrator_is_fourth_order():
    tau, t_end = 2.0, 2.0
    sys = linear_system([[-1.0]], [[0.0]], tau, 10.0)
    errs = []
    for denom in (32, 64, 128):
        phi = HistorySegment.constant([1.0], tau, denom)
        traj = integrate(sys, phi, t_end, tau / denom)
        errs.append(abs(traj.values[-1][0] - np.exp(-t_end)))
    for coarse, fine in zip(errs, errs[1:]):
        assert 12.8 <= coarse / fine <= 19.2


def test_poincare_fixes_equilibrium():
    sys = linear_system([[-1.0]], [[0.2]], 0.5, 2.0)
    image = poincare_map(sys, HistorySegment.constant([0.0], 0.5, 8))
    assert np.max(np.abs(image.values)) == 0.0


def test_poincare_of_exponential_decay():
    sys = linear_system([[-1.0]], [[0.0]], 0.5, 1.0)
    image = poincare_map(sys, HistorySegment.constant([1.0], 0.5, 64))
    expected = np.exp(-(1.0 + image.nodes))
    assert np.max(np.abs(image.values[:, 0] - expected)) < 1e-10


def test_poincare_requires_delay_below_period():
    sys = linear_system([[-1.0]], [[0.0]], 3.0, 2.0)
    with pytest.raises(ValueError):
        poincare_map(sys, HistorySegment.constant([1.0], 3.0, 8))
    # plain integration still permits tau > t_end
    traj = integrate(sys, HistorySegment.constant([1.0], 3.0, 8), 1.0, 3.0 / 8)
    assert np.isfinite(traj.values).all()


def test_poincare_agrees_with_spectral_solution():
    # delayed, forced, nonresonant: solve spectrally, then check the orbit is
    # a fixed point of the independently integrated one-period map
    forcing = TrigPoly.from_harmonics(TWO_PI, [0.0], cos_coeffs=[[1.0]])
    sys = linear_system([[0.0]], [[-1.0]], 0.5, TWO_PI, forcing=forcing)
    rec = newton_solve(sys, TrigPoly.zero(TWO_PI, 1, 0), 8)
    # independent oracle for the first harmonic: solve the 2x2 block system
    from ddeperiodic import block_pair

    bp = block_pair(sys.linear_pair(), 1)
    rhs = np.array([0.0, 1.0])  # coefficients of the transformed forcing sin t
    ab = np.linalg.solve(bp.residual_block, rhs)
    assert abs(rec.u.cos_coeffs[0, 0] - ab[0]) < 1e-10
    assert abs(rec.u.sin_coeffs[0, 0] - ab[1]) < 1e-10
    assert poincare_gap(sys, rec.u, nodes=64) < 1e-4


def test_monodromy_without_delay_term_matches_matrix_exponential():
    lp = LinearPair([[-0.3]], [[0.0]], 0.7, 2.0)
    eigs = np.linalg.eigvals(monodromy(lp, 32))
    top = eigs[np.argmax(np.abs(eigs))]
    assert abs(top - np.exp(-0.6)) < 1e-8
    # remaining spectrum consists of spurious modes near zero
    rest = np.sort(np.abs(eigs))[:-1]
    assert np.max(rest) < 1e-2


def test_monodromy_resonant_pair_has_double_unit_multiplier():
    lp = LinearPair([[0.0]], [[-1.0]], np.pi / 2, TWO_PI)
    eigs = np.linalg.eigvals(monodromy(lp, 64))
    close = eigs[np.abs(eigs - 1.0) < 1e-4]
    assert len(close) == 2


def test_monodromy_degenerate_system_is_shift_to_constant():
    lp = LinearPair([[0.0]], [[0.0]], 1.0, 3.0)
    eigs = np.sort(np.abs(np.linalg.eigvals(monodromy(lp, 16))))[::-1]
    assert abs(eigs[0] - 1.0) < 1e-12
    assert eigs[1] < 1e-12


def test_monodromy_converges_in_node_count():
    lp = LinearPair([[-0.5]], [[-0.6]], 1.0, TWO_PI)
    for m in (16, 32):
        a = np.linalg.eigvals(monodromy(lp, m))
        b = np.linalg.eigvals(monodromy(lp, 2 * m))
        a = np.sort_complex(a[np.abs(a) > 1e-6])
        b = np.sort_complex(b[np.abs(b) > 1e-6])
        take = min(len(a), len(b))
        assert np.max(np.abs(a[-take:] - b[-take:])) < 1e-3


def test_floquet_report_examples():
    stable = floquet_report(LinearPair([[-1.0]], [[0.0]], 0.0, TWO_PI))
    assert stable.alpha == 0 and stable.index == 1 and stable.stable_hint
    assert abs(stable.multipliers[0] - np.exp(-TWO_PI)) < 1e-10

    unstable = floquet_report(LinearPair([[1.0]], [[0.0]], 0.0, TWO_PI))
    assert unstable.alpha == 1 and unstable.index == -1 and not unstable.stable_hint

    double = floquet_report(LinearPair(-np.eye(2), np.zeros((2, 2)), 0.0, TWO_PI))
    assert double.alpha == 0 and double.index == 1 and double.stable_hint
    assert np.allclose([abs(z) for z in double.multipliers], np.exp(-TWO_PI), atol=1e-9)


def test_floquet_report_rejects_resonance():
    lp = LinearPair([[0.0]], [[-1.0]], np.pi / 2, TWO_PI)
    with pytest.raises(ResonantLinearisationError):
        floquet_report(lp, 64)


def test_ode_degree_examples():
    sign, consistent = ode_poincare_degree([[-1.0]], 5.0)
    assert sign == 1 and consistent
    sign, consistent = ode_poincare_degree(np.diag([1.0, -1.0]), 1.0)
    assert sign == -1 and consistent


def test_ode_degree_random_draws():
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 25:
        n = int(rng.integers(1, 5))
        m = rng.uniform(-2, 2, (n, n))
        T = float(rng.uniform(0.5, 4))
        if not small_delay_test(m, T)[0]:
            continue
        _, consistent = ode_poincare_degree(m, T)
        assert consistent
        checked += 1


def test_unit_multiplier_criterion_via_matrix_exponential():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(ResonantLinearisationError):
        ode_poincare_degree(rot, TWO_PI)


def test_positive_characteristic_root():
    root = positive_characteristic_root(np.diag([-1.0, 1.0]), np.zeros((2, 2)), 0.01)
    assert root == pytest.approx(1.0, abs=1e-9)
    assert positive_characteristic_root(-np.eye(2), np.zeros((2, 2)), 0.1) is None


def test_multiplier_extension_property():
    # the top-multiplier eigenfunction extends with u(t + T) = sigma u(t)
    lp = LinearPair([[0.2]], [[0.1]], 0.5, 2.0)
    eigs, vecs = np.linalg.eig(monodromy(lp, 48))
    i = int(np.argmax(np.where(np.abs(eigs.imag) < 1e-8, eigs.real, -np.inf)))
    sigma = float(eigs[i].real)
    v = vecs[:, i].real
    v = v / np.max(np.abs(v))
    sys = linear_system([[0.2]], [[0.1]], 0.5, 2.0)
    traj = integrate(sys, HistorySegment(0.5, v.reshape(-1, 1)), 4.0, 0.5 / 48)
    ts = np.linspace(0.0, 2.0, 41)
    u_t = np.array([traj.sample(t)[0] for t in ts])
    u_shift = np.array([traj.sample(t + 2.0)[0] for t in ts])
    assert np.max(np.abs(u_shift - sigma * u_t)) <= 1e-3 * np.max(np.abs(u_t))


def test_equicontinuity_of_period_map():
    zero = DelaySystem(dim=1, rhs=lambda x, y: np.zeros_like(x), tau=0.5,
                       period=2.0, equilibrium=np.zeros(1), vectorized=True)
    phis = [HistorySegment.constant([c], 0.5, 16) for c in (-0.5, 0.0, 0.8)]
    rep = equicontinuity_check(zero, phis, 1.0)
    assert rep.modulus == 0.0 and rep.passed

    decay = linear_system([[-1.0]], [[0.0]], 0.5, 2.0)
    rep = equicontinuity_check(decay, phis, 1.0)
    assert rep.passed
    assert rep.modulus <= 1.05 * (0.0 + 1.0 * 1.0) + 1e-9


def test_trajectory_csv_round_trip(tmp_path):
    sys = linear_system([[-1.0]], [[0.0]], 0.0, TWO_PI)
    u = TrigPoly.from_harmonics(TWO_PI, [0.25], cos_coeffs=[[0.5, ]])
    path = tmp_path / "orbit.csv"
    write_trajectory_csv(path, orbit_trajectory(sys, u, samples=32))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,u1"
    assert len(lines) == 34
    t, val = map(float, lines[1].split(","))
    assert t == 0.0 and val == pytest.approx(0.75, abs=1e-15)
    # full double precision survives the round trip
    reread = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.max(np.abs(reread[:, 1] - u.evaluate(reread[:, 0])[:, 0])) < 1e-15
