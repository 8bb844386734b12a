"""Resource preparation, Bell machinery, teleportation, closed-form oracles."""
import math
from dataclasses import replace

import numpy as np
import pytest

from hybridtel import (
    CvQubit,
    ResourceSpec,
    analytic_fidelity,
    analytic_output,
    beam_splitter,
    bell_click_probability,
    bell_state,
    cat_state,
    coherent_state,
    condition_on,
    cv_qubit_state,
    expectation,
    fidelity,
    fit_cat_amplitude,
    ideal_output_state,
    ideal_resource,
    number_state,
    partial_trace,
    phase_shift,
    physical_resource,
    quadrature_op,
    rate_ratio_condition,
    teleport,
    tensor,
    vacuum_state,
)
from hybridtel.optics import symmetric_splitter
from hybridtel.protocol import (
    bell_click,
    bell_click_probability_approx,
    path_rate_ratio,
    solve_mix_ratio,
)

PHYSICAL_SPEC = ResourceSpec(kind="physical", zeta=0.18, two_mode_lambda=0.1,
                             tap_reflectivity=0.05, spcm1_eta=0.1,
                             mix_ratio=0.3268808012561797, dim_c=15, dim_d=4,
                             dim_ancilla=4)


def _local_click_probability(kind, alpha, eta, nmax=80):
    """Independent oracle: photon statistics of the post-splitter cat state."""
    x = 2 * alpha ** 2
    if kind.startswith("psi"):
        return 0.0
    if kind == "phi-":
        z = math.sinh(x)
        terms = range(1, nmax, 2)
    else:
        z = math.cosh(x)
        terms = range(2, nmax, 2)
    return sum((1 - (1 - eta) ** n) * x ** n / math.factorial(n) / z for n in terms)


class TestCvQubit:
    def test_norm_invariant(self):
        q = CvQubit.normalized(0.7, 0.3 - 0.2j, 0.42)
        assert q.norm_squared() == pytest.approx(1.0, abs=1e-10)
        state = cv_qubit_state(q, 15)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)


class TestIdealResource:
    def test_projections_yield_cats(self):
        resource = ideal_resource(0.42, (15, 2))
        on_one, _ = condition_on(resource, "D", number_state(1, 2), discard=True)
        on_zero, _ = condition_on(resource, "D", number_state(0, 2), discard=True)
        assert fidelity(on_one, cat_state(0.42, "+", 15)) >= 1 - 1e-9
        assert fidelity(on_zero, cat_state(0.42, "-", 15)) >= 1 - 1e-9

    def test_superposition_projections_yield_coherent(self):
        from hybridtel.fock import FockState

        resource = ideal_resource(0.42, (15, 2))
        for sign, amp in ((1.0, 0.42), (-1.0, -0.42)):
            proj = FockState((2,), np.array([1.0, sign]) / math.sqrt(2), ("D",))
            post, _ = condition_on(resource, "D", proj, discard=True)
            assert fidelity(post, coherent_state(amp, 15)) >= 1 - 1e-9

    def test_quadrature_correlation(self):
        resource = ideal_resource(0.42, (15, 2))
        xc = quadrature_op(15).matrix
        xd = quadrature_op(2).matrix
        for delta in np.linspace(0, 2 * math.pi, 9):
            shifted = phase_shift(resource, "C", delta)
            val = expectation(shifted, {"C": xc, "D": xd}).real
            assert abs(val - 0.42 * math.cos(delta)) < 1e-8

    def test_two_angle_correlation_closed_form(self):
        # with both modes shifted, the cross term is damped by the
        # coherent-state overlap e^{-2 a^2}
        alpha = 0.42
        resource = ideal_resource(alpha, (15, 2))
        xc = quadrature_op(15).matrix
        xd = quadrature_op(2).matrix
        damp = math.exp(-2 * alpha ** 2)
        for tc, td in ((0.7, 0.3), (1.2, 2.0), (0.4, -0.9)):
            shifted = phase_shift(phase_shift(resource, "C", tc), "D", td)
            val = expectation(shifted, {"C": xc, "D": xd}).real
            expected = alpha * (math.cos(tc) * math.cos(td)
                                + damp * math.sin(tc) * math.sin(td))
            assert val == pytest.approx(expected, abs=1e-10)


class TestPhysicalResource:
    def test_pair_crystal_off(self):
        from hybridtel import photon_subtract, squeezed_vacuum

        spec = replace(PHYSICAL_SPEC, two_mode_lambda=0.0)
        rho, prob = physical_resource(spec)
        subtracted, _ = photon_subtract(squeezed_vacuum(0.18, 15, label="C"), "C")
        target = tensor([subtracted, vacuum_state(4, label="D")])
        # the tap can also steal both photons of a pair, heralding without
        # subtracting; that even-sector contamination carries weight
        # R/(1-R) of the click events
        contamination = spec.tap_reflectivity / (1 - spec.tap_reflectivity)
        assert fidelity(target, rho) >= 1 - 1.2 * contamination
        d_marginal = partial_trace(rho, ["D"])
        assert fidelity(vacuum_state(4, label="D"), d_marginal) >= 1 - 1e-9

    def test_squeezer_off(self):
        spec = replace(PHYSICAL_SPEC, zeta=0.0)
        rho, prob = physical_resource(spec)
        target = tensor([vacuum_state(15, label="C"), number_state(1, 4, label="D")])
        assert fidelity(target, rho) >= 1 - 3 * spec.two_mode_lambda ** 2

    def test_conditional_cat_amplitudes(self):
        rho, _ = physical_resource(PHYSICAL_SPEC)
        on_one, _ = condition_on(rho, "D", number_state(1, 4), discard=True)
        on_zero, _ = condition_on(rho, "D", number_state(0, 4), discard=True)
        a_plus = fit_cat_amplitude(on_one, "+")
        a_minus = fit_cat_amplitude(on_zero, "-")
        assert a_minus / a_plus == pytest.approx(math.sqrt(3), rel=0.03)

    def test_fidelity_to_ideal_frozen(self):
        rho, prob = physical_resource(PHYSICAL_SPEC)
        ideal = ideal_resource(math.sqrt(0.18), (15, 4))
        # frozen regression constant computed at the tuned mix ratio
        assert fidelity(ideal, rho) == pytest.approx(0.9526247349724, abs=1e-6)
        assert prob == pytest.approx(4.400242920925e-4, rel=1e-6)

    def test_mix_ratio_solver(self):
        m = solve_mix_ratio(PHYSICAL_SPEC, 1.0 / 3.0)
        assert m == pytest.approx(PHYSICAL_SPEC.mix_ratio, abs=2e-6)
        assert path_rate_ratio(replace(PHYSICAL_SPEC, mix_ratio=m)) == pytest.approx(
            1.0 / 3.0, abs=1e-4)


class TestRateRatio:
    def test_experimental_amplitudes(self):
        assert rate_ratio_condition(0.42, 0.67) == pytest.approx(1 / 3, abs=0.02)

    def test_limits(self):
        assert rate_ratio_condition(50.0, 50.0) == pytest.approx(1.0, abs=1e-10)
        assert rate_ratio_condition(0.42, 1e-8) == pytest.approx(0.0, abs=1e-10)


class TestBellStates:
    def test_orthonormality(self):
        plus = bell_state("phi+", 0.42)
        minus = bell_state("phi-", 0.42)
        assert abs(plus.overlap(minus)) < 1e-12
        assert plus.norm() == pytest.approx(1.0, abs=1e-12)

    def test_cat_basis_form(self):
        alpha = 0.42
        minus = bell_state("phi-", alpha)
        cp = cat_state(alpha, "+", 15, label="x")
        cm = cat_state(alpha, "-", 15, label="x")
        amps = (np.kron(cm.amplitudes, cp.amplitudes)
                + np.kron(cp.amplitudes, cm.amplitudes)) / math.sqrt(2)
        from hybridtel.fock import FockState

        target = FockState((15, 15), amps, ("A", "C")).normalized()
        assert fidelity(minus, target) >= 1 - 1e-10

    @pytest.mark.parametrize("alpha", [0.2, 0.42, 0.67])
    @pytest.mark.parametrize("kind", ["phi+", "phi-", "psi+", "psi-"])
    def test_splitter_maps_to_product_form(self, kind, alpha):
        state = bell_state(kind, alpha, (15, 15))
        out = beam_splitter(state, symmetric_splitter(("A", "C")))
        beta = math.sqrt(2) * alpha
        parity = "+" if kind.endswith("+") else "-"
        if kind.startswith("phi"):
            target = tensor([cat_state(beta, parity, 15, label="A", tail_tol=None),
                             vacuum_state(15, label="C")])
        else:
            target = tensor([vacuum_state(15, label="A"),
                             cat_state(beta, parity, 15, label="C", tail_tol=None)])
        assert fidelity(out, target) >= 1 - 1e-5


class TestBellClickProbability:
    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.42, 0.5, 0.67])
    def test_matches_independent_oracle(self, alpha):
        for kind in ("phi+", "phi-"):
            numeric = bell_click_probability(kind, alpha, 0.1)
            oracle = _local_click_probability(kind, alpha, 0.1)
            assert numeric == pytest.approx(oracle, rel=1e-9)

    @pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3, 0.42, 0.5])
    def test_small_amplitude_expansion(self, alpha):
        eta = 0.1
        exact_p = bell_click_probability("phi+", alpha, eta)
        exact_m = bell_click_probability("phi-", alpha, eta)
        approx_p = bell_click_probability_approx("phi+", alpha, eta)
        approx_m = bell_click_probability_approx("phi-", alpha, eta)
        # the even-sector expansion drops an O(eta) factor (eta/2) on top of
        # the O(alpha^8) truncation; the odd sector is first order in eta
        assert abs(exact_p - approx_p) / approx_p < eta / 2 + 2 * alpha ** 4
        assert abs(exact_m - approx_m) / approx_m < 2 * alpha ** 4

    @pytest.mark.parametrize("alpha", [0.2, 0.42, 0.67])
    def test_odd_parity_states_never_click(self, alpha):
        assert bell_click_probability("psi+", alpha, 0.1) < 1e-12
        assert bell_click_probability("psi-", alpha, 0.1) < 1e-12

    def test_mixed_amplitude_ratio(self):
        ratio = (bell_click_probability("phi-", 0.67, 0.1)
                 / bell_click_probability("phi+", 0.42, 0.1))
        assert ratio == pytest.approx(10.7, rel=0.05)

    def test_phi_plus_example_value(self):
        # 4 eta alpha^4 at alpha = 0.42, eta = 0.1
        val = bell_click_probability("phi+", 0.42, 0.1)
        assert val == pytest.approx(0.012447, abs=2e-3)


class TestTeleport:
    def test_ideal_projection_gives_pure_target(self):
        resource = ideal_resource(0.42, (15, 2))
        for phi in (0.0, 0.9, math.pi / 2, 4.0):
            src = coherent_state(0.42 * np.exp(1j * phi), 15, label="A")
            rho, prob = teleport(src, resource, projection="ideal",
                                 theta_c=0.3, theta_d=0.7)
            target = ideal_output_state(phi, 2, theta_c=0.3, theta_d=0.7)
            assert fidelity(target, rho) >= 1 - 1e-10
            assert abs(rho.matrix[0, 0].real - 0.5) < 1e-10
            assert abs(rho.matrix[1, 1].real - 0.5) < 1e-10

    def test_cat_inputs_map_to_fock_outputs(self):
        alpha = 0.42
        resource = ideal_resource(alpha, (15, 2))
        rho, _ = teleport(cat_state(alpha, "+", 15, label="A"), resource,
                          projection="ideal")
        assert fidelity(number_state(0, 2), rho) >= 1 - 1e-10
        rho, _ = teleport(cat_state(alpha, "-", 15, label="A"), resource,
                          projection="ideal")
        assert fidelity(number_state(1, 2), rho) >= 1 - 1e-10

    def test_cv_qubit_coefficients_transferred(self):
        alpha = 0.42
        resource = ideal_resource(alpha, (15, 2))
        q = CvQubit.normalized(0.8, 0.1 + 0.4j, alpha)
        rho, _ = teleport(cv_qubit_state(q, 15), resource, projection="ideal")
        amps = np.array([q.x + q.y, q.x - q.y]) / math.sqrt(2)
        from hybridtel.fock import FockState

        target = FockState((2,), amps, ("D",)).normalized()
        assert fidelity(target, rho) >= 1 - 1e-10

    @pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3])
    def test_click_route_matches_second_order_matrix(self, alpha):
        resource = ideal_resource(alpha, (15, 2))
        for phi, tc, td in ((0.0, 0.0, 0.0), (math.pi / 2, 0.2, 0.5),
                            (2.1, 1.0, 0.0), (4.4, 0.0, 1.3)):
            src = coherent_state(alpha * np.exp(1j * phi), 15, label="A")
            rho, _ = teleport(src, resource, eta=0.05, projection="click",
                              theta_c=tc, theta_d=td)
            ana = analytic_output(phi, alpha, tc, td)
            assert np.max(np.abs(rho.matrix[:2, :2] - ana.matrix)) < alpha ** 3

    @pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3])
    def test_click_route_fidelity_matches_closed_form(self, alpha):
        resource = ideal_resource(alpha, (15, 2))
        for phi in np.linspace(0, 2 * math.pi, 7):
            src = coherent_state(alpha * np.exp(1j * phi), 15, label="A")
            rho, _ = teleport(src, resource, eta=0.05, projection="click")
            target = ideal_output_state(phi, 2)
            assert abs(fidelity(target, rho) - analytic_fidelity(phi, alpha)) < alpha ** 3

    def test_click_route_diagonals(self):
        # finite click efficiency skews the diagonals at first order:
        # |rho_nn - 1/2| ~ eta alpha^2 e^{-2 alpha^2} sin^2(phi - theta_c)/4
        alpha, eta = 0.42, 0.1
        resource = ideal_resource(alpha, (15, 2))
        src = coherent_state(alpha * np.exp(1j * math.pi / 2), 15, label="A")
        rho, _ = teleport(src, resource, eta=eta, projection="click")
        bound = 0.5 * eta * alpha ** 2 * math.exp(-2 * alpha ** 2)
        assert abs(rho.matrix[0, 0].real - 0.5) < bound
        assert abs(rho.matrix[1, 1].real - 0.5) < bound

    def test_success_probability_of_bell_prepared_input(self):
        alpha, eta = 0.42, 0.1
        joint = tensor([bell_state("phi-", alpha, (15, 15)),
                        vacuum_state(2, label="D")])
        _, prob = bell_click(joint, "A", "C", eta)
        assert prob == pytest.approx(bell_click_probability("phi-", alpha, eta),
                                     abs=1e-10)

    def test_physical_resource_input(self):
        rho_cd, _ = physical_resource(PHYSICAL_SPEC)
        src = coherent_state(math.sqrt(0.18), 15, label="A")
        rho, prob = teleport(src, rho_cd, eta=0.1, projection="click")
        target = ideal_output_state(0.0, 4)
        assert fidelity(target, rho) > 0.9
        assert 0 < prob < 1


class TestAnalyticForms:
    def test_pure_limit(self):
        rho = analytic_output(0.0, 0.0)
        expected = 0.5 * np.array([[1, 1], [1, 1]])
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    def test_offdiagonal_magnitude_example(self):
        rho = analytic_output(math.pi / 2, 0.42)
        assert abs(rho.matrix[0, 1]) == pytest.approx((1 - 2 * 0.42 ** 2) / 2, abs=1e-12)
        assert abs(rho.matrix[0, 1]) == pytest.approx(0.324, abs=5e-4)

    def test_structural_properties(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            phi, tc, td = rng.uniform(0, 2 * math.pi, 3)
            alpha = rng.uniform(0.05, 1 / math.sqrt(2))
            rho = analytic_output(phi, alpha, tc, td)
            assert rho.hermiticity_defect() < 1e-12
            assert rho.trace() == pytest.approx(1.0, abs=1e-12)
            assert rho.min_eigenvalue() >= -1e-12

    def test_phase_map(self):
        phi, alpha, tc, td = 1.3, 0.3, 0.4, 0.9
        rho = analytic_output(phi, alpha, tc, td)
        expected = -(phi + td - tc) + np.angle(
            1 + alpha ** 2 * (np.exp(2j * (phi - tc)) - 1))
        assert np.angle(rho.matrix[0, 1]) == pytest.approx(
            (expected + math.pi) % (2 * math.pi) - math.pi, abs=1e-12)

    def test_fidelity_extremes(self):
        assert analytic_fidelity(0.7, 0.42, 0.7) == pytest.approx(1.0, abs=1e-12)
        for alpha in (0.2, 0.42, 0.67):
            lo = analytic_fidelity(math.pi / 2, alpha, 0.0)
            assert lo == pytest.approx(1 - alpha ** 2, abs=1e-12)
            assert analytic_fidelity(-math.pi / 2, alpha, 0.0) == pytest.approx(
                lo, abs=1e-12)

    def test_fidelity_example_value(self):
        assert analytic_fidelity(math.pi / 2, 0.42) == pytest.approx(0.8236, abs=1e-4)

    def test_fidelity_consistent_with_output_matrix(self):
        for phi, alpha, tc in ((0.3, 0.2, 0.0), (2.0, 0.42, 0.6)):
            rho = analytic_output(phi, alpha, tc, 0.0)
            target = ideal_output_state(phi, 2, theta_c=tc)
            assert fidelity(target, rho) == pytest.approx(
                analytic_fidelity(phi, alpha, tc), abs=1e-12)
