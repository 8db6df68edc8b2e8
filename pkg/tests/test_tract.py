"""Pole-zero filter layer: synthesis, closed-form fit, resonance mapping."""

import numpy as np
import pytest

import oracles
from glotfit import (ArmaxModel, InvalidParams, NyquistViolation, OrderTooLarge,
                     ResonanceSet, SingularNormalEquations, UnstableFilterWarning,
                     Waveform, arma_filter, fit_armax, resonance_to_model,
                     resonances, syllable_spec)
from glotfit.tract import poles_zeros

FS = 16000.0


def random_model(rng, p, q, fs=FS):
    """Stable random ARMAX model with exact orders p and q.

    Conjugate-pair angles are jittered inside disjoint slots so roots
    stay separated and the polynomial coefficients stay well scaled.
    """
    def poly_from_roots(n, rmax):
        n_pairs = n // 2
        roots = []
        if n_pairs:
            edges = np.linspace(0.15, np.pi - 0.15, n_pairs + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                r = rng.uniform(0.4, rmax)
                th = rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))
                roots += [r * np.exp(1j * th), r * np.exp(-1j * th)]
        if n % 2:
            roots.append(rng.uniform(-0.8, 0.8))
        return np.real(np.poly(roots))

    a = poly_from_roots(p, 0.92)
    b = rng.uniform(0.5, 2.0) * poly_from_roots(q, 0.9)
    return ArmaxModel(a=a, b=b, fs_hz=fs)


def noise_drive(model, n, seed):
    rng = np.random.default_rng(seed)
    u = Waveform(rng.standard_normal(n), model.fs_hz)
    return u, arma_filter(u, model)


class TestArmaFilter:
    def test_matches_sample_loop(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            p, q = rng.integers(1, 15), rng.integers(0, 9)
            m = random_model(rng, p, q)
            u, s = noise_drive(m, 400, 2)
            ref = oracles.filter_loop(m.a[1:], m.b, u.samples)
            np.testing.assert_allclose(s.samples, ref, rtol=0, atol=1e-10)

    def test_matches_partial_fraction_impulse_response(self):
        # distinct poles via distinct resonance frequencies
        res = ResonanceSet(formants=((500.0, 80.0), (1500.0, 120.0),
                                     (3100.0, 200.0)))
        m = resonance_to_model(res, FS)
        imp = np.zeros(300)
        imp[0] = 1.0
        out = arma_filter(Waveform(imp, FS), m)
        ref = oracles.filter_partial_fractions(m.a[1:], m.b, 300)
        np.testing.assert_allclose(out.samples, ref, rtol=0, atol=1e-9)

    def test_state_carries_across_chunks(self):
        rng = np.random.default_rng(3)
        m = random_model(rng, 6, 4)
        u, s = noise_drive(m, 500, 4)
        first, state = arma_filter(Waveform(u.samples[:200], FS), m,
                                   return_state=True)
        second = arma_filter(Waveform(u.samples[200:], FS), m,
                             initial_state=state)
        stitched = np.concatenate([first.samples, second.samples])
        np.testing.assert_allclose(stitched, s.samples, rtol=0, atol=1e-12)

    def test_unstable_pole_warns(self):
        m = ArmaxModel(a=np.array([1.0, -1.2]), b=np.array([1.0]), fs_hz=FS)
        with pytest.warns(UnstableFilterWarning):
            arma_filter(Waveform(np.ones(16), FS), m)

    def test_stability_check_can_be_skipped(self):
        import warnings
        m = ArmaxModel(a=np.array([1.0, -1.2]), b=np.array([1.0]), fs_hz=FS)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            arma_filter(Waveform(np.ones(16), FS), m, check_stability=False)

    def test_rate_mismatch_rejected(self):
        m = random_model(np.random.default_rng(5), 2, 1)
        with pytest.raises(InvalidParams, match="rate"):
            arma_filter(Waveform(np.ones(16), 8000.0), m)


class TestFitArmax:
    def test_exact_recovery_random_models(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            p = int(rng.integers(1, 15))
            q = int(rng.integers(0, 9))
            m = random_model(rng, p, q)
            u, s = noise_drive(m, 600, int(rng.integers(0, 1 << 31)))
            fit, diag = fit_armax(s, u, p, q)
            np.testing.assert_allclose(fit.a, m.a, rtol=0, atol=1e-8)
            np.testing.assert_allclose(fit.b, m.b, rtol=0, atol=1e-8)
            assert diag.residual_power < 1e-14
            assert not diag.rank_deficient

    def test_recovered_resonances_match(self):
        res = ResonanceSet(formants=((700.0, 90.0), (1200.0, 110.0),
                                     (2600.0, 170.0)),
                           antiformants=((1600.0, 70.0),))
        m = resonance_to_model(res, FS, gain=1.4)
        u, s = noise_drive(m, 800, 11)
        fit, _ = fit_armax(s, u, m.p, m.q)
        got = resonances(fit)
        for (f1, b1), (f2, b2) in zip(got.formants, res.formants):
            assert abs(f1 - f2) / f2 < 1e-6
            assert abs(b1 - b2) / b2 < 1e-6
        for (f1, b1), (f2, b2) in zip(got.antiformants, res.antiformants):
            assert abs(f1 - f2) / f2 < 1e-6

    def test_excitation_gain_moves_to_b(self):
        rng = np.random.default_rng(12)
        m = random_model(rng, 6, 3)
        u, s = noise_drive(m, 500, 13)
        fit1, _ = fit_armax(s, u, 6, 3)
        fit2, _ = fit_armax(s, Waveform(4.0 * u.samples, FS), 6, 3)
        np.testing.assert_allclose(fit2.b, fit1.b / 4.0, rtol=1e-8)
        np.testing.assert_allclose(fit2.a, fit1.a, rtol=0, atol=1e-10)

    def test_residual_shrinks_with_ar_order(self):
        # fixed q keeps the row count constant, so column spaces nest
        rng = np.random.default_rng(14)
        m = random_model(rng, 8, 8)
        u, s = noise_drive(m, 500, 15)
        noisy = Waveform(s.samples + 0.01 * rng.standard_normal(s.samples.size), FS)
        powers = [fit_armax(noisy, u, p, 8)[1].residual_power for p in (2, 4, 8)]
        assert powers[0] >= powers[1] >= powers[2]

    def test_inflated_orders_keep_true_resonances(self):
        res = ResonanceSet(formants=((600.0, 80.0), (1800.0, 150.0)))
        m = resonance_to_model(res, FS, gain=2.0)
        u, s = noise_drive(m, 700, 16)
        fit, diag = fit_armax(s, u, 10, 6)
        assert diag.residual_power < 1e-12
        got = resonances(fit)
        freqs = [f for f, _ in got.formants]
        for f_true, _ in res.formants:
            assert min(abs(f - f_true) for f in freqs) / f_true < 1e-5

    def test_zero_excitation_rejected(self):
        s = Waveform(np.random.default_rng(17).standard_normal(200), FS)
        with pytest.raises(SingularNormalEquations, match="zero"):
            fit_armax(s, Waveform(np.zeros(200), FS), 4, 2)

    def test_constant_excitation_rejected(self):
        rng = np.random.default_rng(18)
        m = random_model(rng, 4, 2)
        u = Waveform(np.ones(300), FS)
        s = arma_filter(u, m)
        with pytest.raises(SingularNormalEquations):
            fit_armax(s, u, 4, 2)

    def test_window_too_short_for_orders(self):
        s = Waveform(np.ones(20), FS)
        with pytest.raises(OrderTooLarge):
            fit_armax(s, s, 14, 8)

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidParams, match="length"):
            fit_armax(Waveform(np.ones(100), FS), Waveform(np.ones(99), FS), 2, 1)

    def test_interior_window_fits_exactly(self):
        # rows with delay context before the cut are dropped, so a slice
        # from mid-signal must still recover the filter
        rng = np.random.default_rng(19)
        m = random_model(rng, 6, 4)
        u, s = noise_drive(m, 900, 20)
        sl = slice(300, 700)
        fit, _ = fit_armax(Waveform(s.samples[sl], FS),
                           Waveform(u.samples[sl], FS), 6, 4)
        np.testing.assert_allclose(fit.a, m.a, rtol=0, atol=1e-8)
        np.testing.assert_allclose(fit.b, m.b, rtol=0, atol=1e-8)


class TestResonanceMapping:
    def test_table_round_trip(self):
        for name in ("a", "m", "nasal_eps"):
            spec = syllable_spec(name)
            m = resonance_to_model(spec.resonances, FS)
            got = resonances(m)
            for (f1, b1), (f2, b2) in zip(got.formants, spec.resonances.formants):
                assert abs(f1 - f2) <= 1e-9 * f2
                assert abs(b1 - b2) <= 1e-9 * b2
            for (f1, b1), (f2, b2) in zip(got.antiformants,
                                          spec.resonances.antiformants):
                assert abs(f1 - f2) <= 1e-9 * f2
                assert abs(b1 - b2) <= 1e-9 * b2

    def test_gain_scales_numerator_only(self):
        res = ResonanceSet(formants=((500.0, 80.0),), antiformants=((900.0, 60.0),))
        base = resonance_to_model(res, FS, gain=1.0)
        scaled = resonance_to_model(res, FS, gain=3.0)
        np.testing.assert_allclose(scaled.b, 3.0 * base.b, rtol=1e-15)
        np.testing.assert_array_equal(scaled.a, base.a)

    def test_nyquist_rejected(self):
        res = ResonanceSet(formants=((8000.0, 100.0),))
        with pytest.raises(NyquistViolation):
            resonance_to_model(res, FS)

    def test_real_poles_carry_no_resonance(self):
        m = ArmaxModel(a=np.array([1.0, -0.5]), b=np.array([1.0]), fs_hz=FS)
        assert resonances(m).formants == ()

    def test_common_factor_cancels(self):
        res = ResonanceSet(formants=((700.0, 90.0), (2600.0, 170.0)))
        m = resonance_to_model(res, FS)
        extra = resonance_to_model(
            ResonanceSet(formants=((1500.0, 200.0),)), FS).a
        inflated = ArmaxModel(a=np.convolve(m.a, extra),
                              b=np.convolve(m.b, extra), fs_hz=FS)
        got = resonances(inflated)
        assert len(got.formants) == len(res.formants)
        for (f1, _), (f2, _) in zip(got.formants, res.formants):
            assert abs(f1 - f2) / f2 < 1e-9

    def test_trailing_dust_is_trimmed(self):
        m = ArmaxModel(a=np.array([1.0, -0.9, 0.0, 1e-15]),
                       b=np.array([1.0]), fs_hz=FS)
        poles, _ = poles_zeros(m)
        assert poles.size == 1


class TestValidation:
    def test_resonance_set_ordering(self):
        with pytest.raises(InvalidParams, match="ascending"):
            ResonanceSet(formants=((900.0, 80.0), (500.0, 80.0)))

    def test_resonance_set_positive_freqs(self):
        with pytest.raises(InvalidParams, match="positive"):
            ResonanceSet(formants=((0.0, 80.0),))

    def test_model_requires_monic_a(self):
        with pytest.raises(InvalidParams, match="a\\[0\\]"):
            ArmaxModel(a=np.array([2.0, 1.0]), b=np.array([1.0]), fs_hz=FS)

    def test_model_rejects_empty_b(self):
        with pytest.raises(InvalidParams):
            ArmaxModel(a=np.array([1.0]), b=np.array([]), fs_hz=FS)

    def test_model_rejects_bad_rate(self):
        with pytest.raises(InvalidParams, match="fs_hz"):
            ArmaxModel(a=np.array([1.0]), b=np.array([1.0]), fs_hz=0.0)

    def test_fit_rejects_bad_orders(self):
        s = Waveform(np.ones(100), FS)
        with pytest.raises(InvalidParams):
            fit_armax(s, s, 0, 2)
