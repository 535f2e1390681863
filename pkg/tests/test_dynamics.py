import warnings

import numpy as np
import pytest

from weakmeter.dynamics import (
    CouplingSpec,
    build_hamiltonian,
    disembodied_measurement,
    evolve_dyson2,
    evolve_exact,
    fit_effective_weak_value,
    parallel_arm_readout,
    post_select_meter,
)
from weakmeter.errors import AnnihilationError, IllConditionedFitError
from weakmeter.hilbert import Ket, SpaceSignature, extend, inner, tensor
from weakmeter.meter import make_meter, moments
from weakmeter.optics import METER, named_state
from weakmeter.weakvalue import observable, weak_value

METER64 = make_meter(64, 4.0)
METER32 = make_meter(32, 4.0)


def run_and_fit(spec, pre, post, meter):
    joint = evolve_exact(spec, pre, meter)
    final = post_select_meter(joint, post)
    return fit_effective_weak_value(final, meter, spec.fit_coupling)


class TestCouplingSpec:
    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            CouplingSpec(variant="bogus")

    def test_negative_coupling(self):
        with pytest.raises(ValueError):
            CouplingSpec(variant="noiseless_kick", g=-1.0)

    def test_kick_time_range(self):
        with pytest.raises(ValueError):
            CouplingSpec(variant="spin_orbit", t=1.0, kick_time=2.0)

    def test_kick_defaults_to_end_of_window(self):
        spec = CouplingSpec(variant="spin_orbit", t=3.0)
        assert spec.resolved_kick_time == 3.0

    def test_regime_flag(self):
        # g/g' << t << sqrt(g)/g' with factor-10 margins
        ok = CouplingSpec(variant="spin_orbit", g=1e-4, gprime=1e-2, t=0.1)
        assert ok.in_regime
        hot = CouplingSpec(variant="spin_orbit", g=1e-3, gprime=1e-3, t=100.0)
        assert not hot.in_regime

    def test_measure_arm_only_for_parallel(self):
        with pytest.raises(ValueError):
            CouplingSpec(variant="spin_orbit", measure_arm="L")


class TestBuildHamiltonian:
    def test_noiseless_kick_structure(self):
        pre = named_state("noisy_in")
        sig = pre.signature.concat(SpaceSignature(((METER, 5),)))
        kick, static = build_hamiltonian(CouplingSpec(variant="noiseless_kick", g=0.2), sig)
        q = np.arange(-2, 3)
        expected = 0.2 * np.kron(extend(observable("sigma_z"), pre.signature).matrix,
                                 np.diag(q))
        np.testing.assert_allclose(kick.matrix, expected, atol=1e-14)
        assert not np.any(static.matrix)

    def test_spin_orbit_static_part(self):
        pre = named_state("noisy_in")
        sig = pre.signature.concat(SpaceSignature(((METER, 5),)))
        _, static = build_hamiltonian(
            CouplingSpec(variant="spin_orbit", gprime=0.3), sig)
        expected = 0.3 * np.kron(observable("Lx_sigma_x").matrix, np.eye(5))
        np.testing.assert_allclose(static.matrix, expected, atol=1e-14)

    def test_arm_resolved_kick_structure(self):
        pre = named_state("disembody_in", theta=0.5)
        sig = pre.signature.concat(SpaceSignature(((METER, 5),)))
        kick, static = build_hamiltonian(
            CouplingSpec(variant="measure_sigma_zR_noisy", g=1.0), sig)
        q = np.diag(np.arange(-2.0, 3.0))
        expected = (np.kron(extend(observable("sigma_z_R"), pre.signature).matrix, q)
                    + np.kron(extend(observable("sigma_z_L"), pre.signature).matrix,
                              np.eye(5)))
        np.testing.assert_allclose(kick.matrix, expected, atol=1e-14)
        assert not np.any(static.matrix)

    def test_three_body_is_pure_kick(self):
        pre = named_state("noisy_in")
        sig = pre.signature.concat(SpaceSignature(((METER, 5),)))
        kick, static = build_hamiltonian(CouplingSpec(variant="three_body", g=1.0), sig)
        assert not np.any(static.matrix)
        q = np.diag(np.arange(-2.0, 3.0))
        expected = np.kron(
            extend(observable("sigma_z"), pre.signature).matrix
            - observable("Lx_sigma_x").matrix, q)
        np.testing.assert_allclose(kick.matrix, expected, atol=1e-14)


class TestEvolveExact:
    def test_uncoupled_evolution_is_identity(self):
        pre = named_state("noisy_in")
        spec = CouplingSpec(variant="spin_orbit", g=0.0, gprime=0.0, t=1.0)
        joint = evolve_exact(spec, pre, METER32)
        expected = tensor(pre, METER32.ket(METER))
        np.testing.assert_allclose(joint.amplitudes, expected.amplitudes, atol=1e-14)

    def test_norm_conserved(self):
        pre = named_state("disembody_in", theta=0.8)
        spec = CouplingSpec(variant="measure_sigma_zR_noisy", g=0.05)
        joint = evolve_exact(spec, pre, METER32)
        assert joint.norm() == pytest.approx(1.0, abs=1e-12)

    def test_kick_time_irrelevant_without_static_part(self):
        pre = named_state("cheshire_in")
        results = []
        for kt in (0.0, 0.5, 1.0):
            spec = CouplingSpec(variant="measure_sigma_zR", g=1e-2, t=1.0, kick_time=kt)
            results.append(evolve_exact(spec, pre, METER32).amplitudes)
        np.testing.assert_allclose(results[0], results[1], atol=1e-12)
        np.testing.assert_allclose(results[0], results[2], atol=1e-12)

    def test_pointer_shift_matches_weak_value(self):
        pre = named_state("amp_in", theta=2 * np.pi / 3)
        post = named_state("amp_f")
        g = 1e-3
        spec = CouplingSpec(variant="measure_sigma_zR", g=g)
        joint = evolve_exact(spec, pre, METER64)
        final = post_select_meter(joint, post)
        mean_p, _ = moments(final.amplitudes, "p")
        a_w = weak_value(pre, post, observable("sigma_z_R")).value
        assert mean_p / g == pytest.approx(a_w.real, rel=1e-3)

    def test_review_states_meter_expansion(self):
        # post-selected meter is (1 + i g q) * reference to O(g^2)
        pre = named_state("cheshire_in")
        post = named_state("cheshire_f")
        g = 1e-3
        spec = CouplingSpec(variant="measure_sigma_zR", g=g)
        joint = evolve_exact(spec, pre, make_meter(16, 2.0))
        final = post_select_meter(joint, post)
        ref = make_meter(16, 2.0)
        ovl = inner(post, pre)
        ratio = final.amplitudes / (ovl * ref.amplitudes)
        expected = 1 + 1j * g * ref.q
        assert np.max(np.abs(ratio - expected)) < 1e-5

    def test_kick_sign_switch_conjugates_shift(self):
        pre = named_state("cheshire_in")
        post = named_state("cheshire_f")
        fits = []
        for sign in (1, -1):
            spec = CouplingSpec(variant="measure_sigma_zR", g=1e-3, kick_sign=sign)
            fits.append(run_and_fit(spec, pre, post, METER64).value)
        assert fits[1] == pytest.approx(-fits[0], abs=1e-8)

    def test_matches_dense_matrix_exponentials(self):
        # the meter-blockwise exponentials against brute-force dense expm
        import scipy.linalg

        rng = np.random.default_rng(31)
        meter = make_meter(6, 1.2)
        template = named_state("disembody_in", theta=0.9)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        pre = Ket(template.signature, amps / np.linalg.norm(amps))
        spec = CouplingSpec(variant="parallel_1", g=0.3, gprime=0.2, t=1.5,
                            kick_time=0.4, measure_arm="R")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            got = evolve_exact(spec, pre, meter)

        joint = tensor(pre, meter.ket(METER))
        kick, static = build_hamiltonian(spec, joint.signature)
        u = (scipy.linalg.expm(-1j * static.matrix * (spec.t - 0.4))
             @ scipy.linalg.expm(1j * kick.matrix)
             @ scipy.linalg.expm(-1j * static.matrix * 0.4))
        np.testing.assert_allclose(got.amplitudes, u @ joint.amplitudes, atol=1e-12)


class TestDyson2:
    def test_noise_free_truncation_is_linear_kick(self):
        pre = named_state("noisy_in")
        g = 0.01
        spec = CouplingSpec(variant="spin_orbit", g=g, gprime=0.0, t=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            got = evolve_dyson2(spec, pre, METER32)
        joint = tensor(pre, METER32.ket(METER))
        kick, _ = build_hamiltonian(spec, joint.signature)
        expected = joint.amplitudes + 1j * (kick.matrix @ joint.amplitudes)
        np.testing.assert_allclose(got.amplitudes, expected, atol=1e-14)

    def test_norm_deviation_is_second_order(self):
        pre = named_state("noisy_in")
        devs = []
        for scale in (1.0, 0.5):
            spec = CouplingSpec(variant="spin_orbit", g=1e-2 * scale,
                                gprime=0.05 * scale, t=1.0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out = evolve_dyson2(spec, pre, METER32)
            devs.append(abs(out.norm() - 1.0))
        assert devs[0] > 0
        assert devs[0] / devs[1] == pytest.approx(4.0, rel=0.2)

    def test_difference_from_exact_is_third_order(self):
        rng = np.random.default_rng(4)
        template = named_state("noisy_in")
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        pre = Ket(template.signature, amps / np.linalg.norm(amps))
        scales = [1.0, 0.5, 0.25, 0.125]
        errs = []
        for s in scales:
            spec = CouplingSpec(variant="spin_orbit", g=1e-4 * s, gprime=0.2 * s, t=1.0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                diff = (evolve_exact(spec, pre, METER32).amplitudes
                        - evolve_dyson2(spec, pre, METER32).amplitudes)
            errs.append(np.linalg.norm(diff))
        slope = np.polyfit(np.log(scales), np.log(errs), 1)[0]
        assert 2.5 <= slope <= 3.5

    def test_out_of_regime_warns(self):
        pre = named_state("noisy_in")
        spec = CouplingSpec(variant="spin_orbit", g=1e-3, gprime=1e-3, t=100.0)
        with pytest.warns(UserWarning, match="regime"):
            evolve_dyson2(spec, pre, METER32)


class TestPostSelectMeter:
    def test_annihilation_error_on_orthogonal(self):
        sig = named_state("cheshire_in").signature
        pre = Ket(sig, [1, 0, 0, 0])
        post = Ket(sig, [0, 1, 0, 0])
        joint = tensor(pre, METER32.ket(METER))
        with pytest.raises(AnnihilationError):
            post_select_meter(joint, post)

    def test_success_probability(self):
        pre = named_state("cheshire_in")
        post = named_state("cheshire_f")
        spec = CouplingSpec(variant="measure_sigma_zR", g=1e-3)
        joint = evolve_exact(spec, pre, METER64)
        final = post_select_meter(joint, post)
        # |<post|pre>|^2 = 1/4 up to O(g)
        assert final.norm() ** 2 == pytest.approx(0.25, abs=1e-2)


class TestFit:
    def test_identical_states_fit_to_zero(self):
        fit = fit_effective_weak_value(METER64.ket(METER), METER64, 1e-3)
        assert abs(fit.value) < 1e-12
        assert abs(fit.offset) < 1e-12
        assert fit.residual < 1e-12

    def test_synthetic_round_trip(self):
        a = 1.0 + 0.5j
        g = 1e-3
        final = np.exp(1j * g * METER64.q * a) * METER64.amplitudes
        fit = fit_effective_weak_value(final, METER64, g)
        assert fit.value == pytest.approx(a, abs=1e-10)

    def test_offset_recovers_prefactor(self):
        a, offset = 0.3 - 0.2j, -0.7 + 0.1j
        g = 1e-3
        final = np.exp(offset) * np.exp(1j * g * METER64.q * a) * METER64.amplitudes
        fit = fit_effective_weak_value(final, METER64, g)
        assert fit.offset == pytest.approx(offset, abs=1e-10)

    def test_ill_conditioned_rejected(self):
        lump = make_meter(1, 0.05)  # all weight on the central point
        final = np.array(lump.amplitudes)
        with pytest.raises(IllConditionedFitError):
            fit_effective_weak_value(final, lump, 1e-3)

    def test_positive_coupling_required(self):
        with pytest.raises(ValueError):
            fit_effective_weak_value(METER64.amplitudes, METER64, 0.0)

    def test_zero_crossings_excluded_from_support(self):
        # an exact zero in the post-selected meter must be skipped, not fed
        # into log(0)
        a = 0.4 + 0.1j
        g = 0.05
        final = np.array(np.exp(1j * g * METER64.q * a) * METER64.amplitudes)
        final[64 + 3] = 0.0
        fit = fit_effective_weak_value(final, METER64, g)
        assert np.isfinite(fit.value.real) and np.isfinite(fit.value.imag)
        assert fit.value == pytest.approx(a, abs=1e-6)


class TestNoisyScenarioFits:
    def test_spin_orbit_fit_with_noise_before_kick(self):
        # preparation is an eigenstate of the noise operator, so noise acting
        # before the kick contributes only a phase: the fit lands on the
        # noiseless i*tan(alpha) rather than the first-order formula
        alpha, gpt = np.pi / 4, 0.1
        pre = named_state("noisy_in")
        post = named_state("noisy_f", alpha=alpha)
        spec = CouplingSpec(variant="spin_orbit", g=1e-3, gprime=gpt, t=1.0)
        fit = run_and_fit(spec, pre, post, METER64)
        assert fit.value == pytest.approx(1j * np.tan(alpha), abs=1e-4)
        # the non-shifting prefactor carries the noise phase: log<f|in> - i g't
        expected_offset = np.log(np.cos(alpha) / np.sqrt(2)) - 1j * gpt
        assert fit.offset == pytest.approx(expected_offset, abs=1e-4)

    def test_spin_orbit_fit_with_kick_before_noise(self):
        # kick first: the noise then rotates the kicked state, and the fitted
        # response picks up the connected cross term -2 g't tan(alpha)
        alpha, gpt = np.pi / 4, 0.1
        pre = named_state("noisy_in")
        post = named_state("noisy_f", alpha=alpha)
        spec = CouplingSpec(variant="spin_orbit", g=1e-3, gprime=gpt, t=1.0,
                            kick_time=0.0)
        fit = run_and_fit(spec, pre, post, METER64)
        expected = 1j * np.tan(alpha) * np.exp(2j * gpt)
        assert fit.value == pytest.approx(expected, rel=1e-3)

    def test_effective_observable_consistency_inside_regime(self):
        # within the measurement-time window the fit and the first-order
        # formula weak value agree to better than 5 percent
        alpha = np.pi / 4
        g, gprime, t = 1e-4, 1e-2, 0.1
        spec = CouplingSpec(variant="spin_orbit", g=g, gprime=gprime, t=t)
        assert spec.in_regime
        pre = named_state("noisy_in")
        post = named_state("noisy_f", alpha=alpha)
        fit = run_and_fit(spec, pre, post, METER64)
        formula = weak_value(
            pre, post, observable("effective_spin_orbit", gprime_t=gprime * t)).value
        assert abs(fit.value - formula) / abs(formula) < 0.05

    def test_three_body_fit_sides_with_direct_ratio(self):
        alpha = np.pi / 4
        pre = named_state("noisy_in")
        post = named_state("noisy_f", alpha=alpha)
        spec = CouplingSpec(variant="three_body", g=1e-3)
        fit = run_and_fit(spec, pre, post, METER64)
        direct = 1j * np.tan(alpha) - 1.0
        quoted = 1.0 + 1j * np.tan(alpha)
        assert abs(fit.value - direct) / abs(direct) < 0.05
        assert abs(fit.value - quoted) / abs(quoted) > 0.5

    def test_doublet_and_triplet_orbital_models_agree(self):
        # L_x preserves the doublet, so the two embeddings give identical fits
        alpha, gpt = np.pi / 6, 0.08
        fits = []
        for dim in (2, 3):
            pre = named_state("noisy_in", orbital_dim=dim)
            post = named_state("noisy_f", alpha=alpha, orbital_dim=dim)
            spec = CouplingSpec(variant="spin_orbit", g=1e-3, gprime=gpt, t=1.0)
            fits.append(run_and_fit(spec, pre, post, METER32).value)
        assert fits[0] == pytest.approx(fits[1], abs=1e-10)


class TestDisembodiedMeasurement:
    def test_signal_fit_balanced(self):
        _, fit = disembodied_measurement(np.pi / 2, np.pi / 4, "sigma_zR",
                                         g=1e-3, meter=METER64)
        assert abs(fit.value - 1.0) < 0.01

    def test_noise_fit_left_arm(self):
        _, fit = disembodied_measurement(np.pi / 2, np.pi / 4, "LxSx_L",
                                         gprime=1e-3, t=1.0, meter=METER64)
        assert abs(fit.value - 1.0) < 0.01

    def test_amplified_point(self):
        _, fit = disembodied_measurement(2 * np.pi / 3, np.pi / 3, "sigma_zR",
                                         g=1e-3, meter=METER64)
        assert abs(fit.value - 3.0) / 3.0 < 0.02

    def test_right_arm_noise_is_silent(self):
        _, fit = disembodied_measurement(np.pi / 2, np.pi / 4, "LxSx_R",
                                         gprime=1e-3, t=1.0, meter=METER64)
        assert abs(fit.value) < 1e-3

    def test_readout_success_probability(self):
        readout, _ = disembodied_measurement(np.pi / 2, np.pi / 4, "sigma_zR",
                                             g=1e-3, meter=METER64)
        want = (np.cos(np.pi / 4) * np.cos(np.pi / 4) / np.sqrt(2)) ** 2
        assert readout.success_probability == pytest.approx(want, rel=1e-2)


class TestParallelNoise:
    @pytest.mark.parametrize("variant", ["parallel_1", "parallel_2"])
    def test_both_arms_respond_above_threshold(self, variant):
        for theta, alpha in [(0.25, 0.25), (0.7, 0.7), (1.15, 1.15)]:
            for arm in ("L", "R"):
                fit = parallel_arm_readout(variant, theta, alpha, arm,
                                           g=1e-3, gprime=1e-3, t=100.0, meter=METER32)
                assert abs(fit.value) > 1e-3

    def test_left_arm_reading_scales_with_noise(self):
        # the left-arm response exists only through the noise cross term
        fits = []
        for gpt in (0.05, 0.1):
            fit = parallel_arm_readout("parallel_1", 0.7, 0.7, "L",
                                       g=1e-3, gprime=gpt / 100.0, t=100.0,
                                       meter=METER32)
            fits.append(abs(fit.value))
        assert fits[1] / fits[0] == pytest.approx(2.0, rel=0.05)

    def test_linear_arrangement_fit_shows_noise_term(self):
        # no-arm variant: fit = (sigma_z)_w - i g't [(sigma_z N)_w - (sigma_z)_w (N)_w]
        alpha, gpt = np.pi / 4, 0.1
        pre = named_state("noisy_in", orbital_dim=3)
        post = named_state("noisy_f", alpha=alpha, orbital_dim=3)
        spec = CouplingSpec(variant="parallel_1", g=1e-3, gprime=gpt, t=1.0)
        fit = run_and_fit(spec, pre, post, METER32)
        sz = weak_value(pre, post, extend(observable("sigma_z"), pre.signature)).value
        sz_n = weak_value(pre, post, extend(observable("L_x", orbital_dim=3),
                                            pre.signature)).value
        n = weak_value(pre, post, extend(observable("Lx_sigma_z", orbital_dim=3),
                                         pre.signature)).value
        predicted = sz - 1j * gpt * (sz_n - sz * n)
        assert fit.value == pytest.approx(predicted, rel=0.05)
        assert abs(fit.value - sz) > 0.5 * gpt  # the noise term is visible
