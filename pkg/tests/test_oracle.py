import numpy as np
import pytest

from qdiffusion.channel import coherent_output
from qdiffusion.errors import NotDecayed, StepTooLarge, TruncationLoss
from qdiffusion.fock import (
    DensityMatrix,
    StateSpec,
    density_from_vector,
    state_metrics,
    state_vector,
    trace_distance,
)
from qdiffusion.oracle import (
    ComplexGrid,
    integrate_master_equation,
    lindblad_rhs,
    quadrature_2d,
)
from qdiffusion.special import gaussian_moment_integral


def test_rhs_vacuum_by_hand():
    # -kappa (a'a rho - a' rho a - a rho a' + rho a a') at rho = |0><0| is
    # -(|0><0| - |1><1|): only a' rho a and rho a a' survive
    rho = density_from_vector(state_vector(StateSpec.number(0), 3))
    rhs = lindblad_rhs(rho, 1.0).entries
    expected = np.zeros((3, 3), complex)
    expected[0, 0] = -1.0
    expected[1, 1] = 1.0
    np.testing.assert_allclose(rhs, expected, atol=1e-15)


def test_rhs_maximally_mixed_is_stationary():
    dim = 10
    rho = DensityMatrix(np.eye(dim, dtype=complex) / dim)
    rhs = lindblad_rhs(rho, 1.3).entries
    assert np.max(np.abs(rhs)) < 1e-15


def test_rhs_zero_kappa_and_trace():
    rho = density_from_vector(state_vector(StateSpec.coherent(0.8), 24))
    assert np.max(np.abs(lindblad_rhs(rho, 0.0).entries)) == 0.0
    rhs = lindblad_rhs(rho, 1.0).entries
    # the truncated generator is exactly traceless (cyclic cancellation),
    # so the interior trace equals minus the last diagonal entry
    assert abs(np.trace(rhs)) < 1e-14
    interior = np.trace(rhs[:-1, :-1])
    assert abs(interior + rhs[-1, -1]) < 1e-14


def test_integrate_zero_time_and_guards():
    rho0 = density_from_vector(state_vector(StateSpec.coherent(1.0), 16))
    out = integrate_master_equation(rho0, 1.0, 0.0, 0.01)
    np.testing.assert_array_equal(out.entries, rho0.entries)
    with pytest.raises(StepTooLarge):
        integrate_master_equation(rho0, 5.0, 0.5, 0.005)
    with pytest.raises(ValueError):
        integrate_master_equation(rho0, 1.0, 0.001, 0.01)  # dt > t_final
    with pytest.raises(ValueError):
        integrate_master_equation(rho0, -1.0, 0.5, 0.005)


def test_integrate_vacuum_heating():
    rho0 = density_from_vector(state_vector(StateSpec.number(0), 48))
    out = integrate_master_equation(rho0, 1.0, 0.5, 0.005)
    m = state_metrics(out)
    assert abs(m.mean_photon - 0.5) < 1e-6
    assert abs(m.trace - 1.0) < 1e-8


def test_integrate_matches_closed_form():
    dim = 48
    rho0 = density_from_vector(state_vector(StateSpec.coherent(1.0), dim))
    out = integrate_master_equation(rho0, 1.0, 0.5, 0.002)
    assert trace_distance(out, coherent_output(1.0, 0.5, dim)) < 1e-6


def test_integrate_truncation_loss():
    rho0 = density_from_vector(state_vector(StateSpec.coherent(2.0), 12))
    with pytest.raises(TruncationLoss):
        integrate_master_equation(rho0, 1.0, 1.0, 0.005)


def test_rk4_fourth_order_scaling():
    dim = 32
    rho0 = density_from_vector(state_vector(StateSpec.coherent(1.0), dim))
    ref = coherent_output(1.0, 0.25, dim)
    errs = [
        trace_distance(integrate_master_equation(rho0, 1.0, 0.25, dt), ref)
        for dt in (4e-3, 2e-3, 1e-3)
    ]
    for coarse, fine in zip(errs, errs[1:]):
        ratio = coarse / fine
        assert 8.0 < ratio < 32.0  # dt^4 scaling within a factor 2 of 16


def test_rk4_step_halving_estimate():
    dim = 32
    rho0 = density_from_vector(state_vector(StateSpec.coherent(1.0), dim))
    a = integrate_master_equation(rho0, 1.0, 0.25, 4e-3)
    b = integrate_master_equation(rho0, 1.0, 0.25, 2e-3)
    assert trace_distance(a, b) < 1e-7


def test_trace_conserved_over_unit_time():
    dim = 48
    rho0 = density_from_vector(state_vector(StateSpec.coherent(1.0), dim))
    for tau in (0.25, 0.5, 1.0):
        out = integrate_master_equation(rho0, 1.0, tau, 0.005)
        assert abs(state_metrics(out).trace - 1.0) < 1e-8


def test_quadrature_gaussian():
    res = quadrature_2d(lambda b: np.exp(-np.abs(b) ** 2), ComplexGrid(6.0, 64))
    assert abs(res.value - 1.0) < 1e-10
    assert res.refinement_estimate < 1e-8


def test_quadrature_trace_integrand():
    # the diagonal coherent expectation of the evolved coherent state
    # integrates to the unit trace
    z, tau = 1.0, 0.5
    def f(b):
        return np.exp(-np.abs(b - z) ** 2 / (tau + 1)) / (tau + 1)
    res = quadrature_2d(f, ComplexGrid(8.0, 64))
    assert abs(res.value - 1.0) < 1e-8


def test_quadrature_matches_moment_formula():
    res = quadrature_2d(
        lambda b: b * np.conj(b) * np.exp(-2 * np.abs(b) ** 2), ComplexGrid(6.0, 64)
    )
    closed = gaussian_moment_integral(1, 1, -2.0, 0.0, 0.0)
    assert closed == pytest.approx(0.25, abs=1e-14)
    assert abs(res.value - closed) < 1e-10


def test_quadrature_not_decayed():
    with pytest.raises(NotDecayed):
        quadrature_2d(lambda b: np.exp(-np.abs(b) ** 2), ComplexGrid(2.0, 32))


def test_quadrature_midpoint_rule():
    res = quadrature_2d(
        lambda b: np.exp(-np.abs(b) ** 2),
        ComplexGrid(6.0, 64, rule="midpoint"),
        estimate_refinement=False,
    )
    assert abs(res.value - 1.0) < 1e-10
    assert res.refinement_estimate is None


def test_grid_validation():
    with pytest.raises(ValueError):
        ComplexGrid(-1.0, 32)
    with pytest.raises(ValueError):
        ComplexGrid(5.0, 1)
    with pytest.raises(ValueError):
        ComplexGrid(5.0, 32, rule="simpson")
    g = ComplexGrid(5.0, 32)
    nodes, weights = g.nodes_weights()
    assert nodes.size == 32 * 32 and weights.size == 32 * 32
    assert abs(weights.sum() - 100.0) < 1e-9  # integrates 1 over the square
