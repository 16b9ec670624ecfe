import math

import numpy as np
import pytest

from echotag.array import Direction, build_irregular_geometry, unit_propagation_vector
from echotag.beamform import beamform
from echotag.simulate import (
    MultiChannelRecording,
    Reflector,
    Scene,
    constellation_layout,
    plane_wave_recording,
    reflector_direction,
    reflector_frequency_response,
    reflector_position,
    reflector_radii,
    scene_from_dict,
    scene_to_dict,
    synthesize_scene,
)
from echotag.waveform import Signal, WaveformSpec, fm_sweep, matched_filter

GEOM = build_irregular_geometry(seed=7, n_mics=32, aperture=0.08)
WF = WaveformSpec()
C_SOUND = 343.0


def single_reflector_scene(radius=0.02, rng=1.2, gamma=0.0, snr=None, offset=(0.0, 0.0)):
    return Scene((Reflector(0, radius, 0.66, offset),), rng, gamma, 0, snr)


class TestLayouts:
    def test_square(self):
        off = constellation_layout(0, spacing=0.12)
        expected = {(-0.06, -0.06), (-0.06, 0.06), (0.06, -0.06), (0.06, 0.06)}
        assert {tuple(np.round(o, 9)) for o in off} == expected

    @pytest.mark.parametrize("cid", range(5))
    def test_four_distinct_offsets(self, cid):
        off = constellation_layout(cid)
        assert off.shape == (4, 2)
        assert len({tuple(o) for o in off}) == 4

    def test_line_collinear(self):
        off = constellation_layout(4)
        assert np.allclose(off[:, 1], off[0, 1])

    def test_id_out_of_range(self):
        with pytest.raises(ValueError):
            constellation_layout(5)


class TestReflectorDirection:
    def test_boresight(self):
        scene = single_reflector_scene()
        d = reflector_direction(scene, 0)
        assert d.azimuth == 0.0 and d.elevation == 0.0

    def test_mirrored_offsets_negate_azimuth(self):
        left = Scene((Reflector(0, 0.02, 0.66, (-0.05, 0.0)),), 1.0, 0.0, 0, None)
        right = Scene((Reflector(0, 0.02, 0.66, (0.05, 0.0)),), 1.0, 0.0, 0, None)
        dl = reflector_direction(left, 0)
        dr = reflector_direction(right, 0)
        assert abs(dl.azimuth + dr.azimuth) < 1e-12
        assert dl.elevation == dr.elevation == 0.0

    def test_matches_atan2_oracle(self):
        # independent coordinate computation: rotate the plate frame by hand
        h, v, rng, gamma = 0.04, -0.03, 1.7, math.radians(25)
        scene = Scene((Reflector(0, 0.02, 0.66, (h, v)),), rng, gamma, 0, None)
        p = np.array([rng - h * math.sin(gamma), h * math.cos(gamma), v])
        d = reflector_direction(scene, 0)
        assert abs(d.azimuth - math.atan2(p[1], p[0])) < 1e-12
        assert abs(d.elevation - math.atan2(p[2], math.hypot(p[0], p[1]))) < 1e-12
        assert np.allclose(reflector_position(scene, 0), p)


class TestFrequencyResponse:
    def test_beta_zero_flat(self):
        freqs = np.linspace(25e3, 80e3, 512)
        H = reflector_frequency_response(Reflector(0, 0.02), 0.0, freqs, beta=0.0)
        assert np.allclose(np.abs(H), np.abs(H[0]))

    def test_notch_positions_and_spacing(self):
        r = Reflector(0, 0.02, 0.66)
        tau = r.cavity_delay_factor / C_SOUND
        freqs = np.linspace(20e3, 90e3, 40001)
        mag = np.abs(reflector_frequency_response(r, 0.0, freqs))
        # locate minima on the grid (independent of the closed-form notch rule)
        interior = (mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])
        notch_freqs = freqs[1:-1][interior]
        ks = np.round(notch_freqs * tau - 0.5)
        assert np.allclose(notch_freqs * tau, ks + 0.5, atol=2e-3)
        assert np.allclose(np.diff(notch_freqs), 1.0 / tau, rtol=1e-3)

    def test_radius_halves_notch_spacing(self):
        freqs = np.linspace(20e3, 90e3, 40001)

        def spacing(radius):
            mag = np.abs(reflector_frequency_response(Reflector(0, radius), 0.0, freqs))
            interior = (mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])
            return np.diff(freqs[1:-1][interior]).mean()

        assert abs(spacing(0.015) / spacing(0.030) - 2.0) < 1e-3

    def test_aspect_attenuation_clamped(self):
        freqs = np.array([50e3])
        on_axis = reflector_frequency_response(Reflector(0, 0.02), 0.0, freqs)
        grazing = reflector_frequency_response(Reflector(0, 0.02), math.pi / 2, freqs)
        assert abs(np.abs(grazing[0]) / np.abs(on_axis[0]) - 0.1) < 1e-12


class TestSynthesizeScene:
    def test_zero_reflectors_pure_noise_power(self):
        scene = Scene((), 1.0, 0.0, 0, noise_snr_db=20.0)
        rec = synthesize_scene(scene, GEOM, WF, seed=42)
        assert abs(np.mean(rec.channels**2) / 10 ** (-2.0) - 1.0) < 0.05

    def test_single_reflector_arrival_sample(self):
        for rng_m in (0.7, 1.2, 2.4):
            scene = single_reflector_scene(rng=rng_m)
            rec = synthesize_scene(scene, GEOM, WF, seed=1)
            out = matched_filter(beamform(rec, GEOM, Direction(0.0, 0.0)), fm_sweep(WF))
            expected = round(2 * rng_m / C_SOUND * WF.sample_rate)
            assert abs(int(np.argmax(out.samples)) - expected) <= 1

    def test_determinism(self):
        scene = single_reflector_scene(snr=15.0)
        a = synthesize_scene(scene, GEOM, WF, seed=9)
        b = synthesize_scene(scene, GEOM, WF, seed=9)
        assert np.array_equal(a.channels, b.channels)

    def test_superposition_noiseless(self):
        r1 = Reflector(0, 0.02, 0.66, (0.0, 0.0))
        r2 = Reflector(1, 0.03, 0.66, (0.06, 0.0))
        both = synthesize_scene(Scene((r1, r2), 1.2, 0.0, 0, None), GEOM, WF, 1).channels
        a = synthesize_scene(Scene((r1,), 1.2, 0.0, 0, None), GEOM, WF, 1).channels
        b = synthesize_scene(Scene((r2,), 1.2, 0.0, 0, None), GEOM, WF, 1).channels
        assert np.abs(both - (a + b)).max() <= 1e-9 * np.abs(both).max()

    def test_energy_scales_as_inverse_fourth_power(self):
        e = {}
        for rng_m in (1.0, 2.0):
            rec = synthesize_scene(single_reflector_scene(rng=rng_m), GEOM, WF, 1)
            e[rng_m] = np.sum(rec.channels**2)
        assert abs(e[1.0] / e[2.0] / 16.0 - 1.0) < 0.01

    def test_farther_reflector_arrives_strictly_later(self):
        arrivals = []
        for rng_m in (0.8, 1.1, 1.6, 2.2):
            rec = synthesize_scene(single_reflector_scene(rng=rng_m), GEOM, WF, 1)
            out = matched_filter(beamform(rec, GEOM, Direction(0.0, 0.0)), fm_sweep(WF))
            arrivals.append(int(np.argmax(out.samples)))
        assert all(a < b for a, b in zip(arrivals, arrivals[1:]))

    def test_arrival_beyond_window_errors(self):
        scene = single_reflector_scene(rng=3.0)
        with pytest.raises(ValueError, match="increase window"):
            synthesize_scene(scene, GEOM, WF, 1, window=0.012)

    def test_plane_propagation_mode(self):
        rec = synthesize_scene(single_reflector_scene(), GEOM, WF, 1, propagation="plane")
        assert rec.channels.shape == (32, 9000)
        with pytest.raises(ValueError, match="propagation"):
            synthesize_scene(single_reflector_scene(), GEOM, WF, 1, propagation="spherical")


class TestPlaneWaveRecording:
    def test_phases_match_steering_vector(self):
        # the synthesized inter-channel phase must equal the array manifold
        from echotag.array import steering_vector

        rng = np.random.default_rng(0)
        sig = Signal(
            np.fft.irfft(
                np.where(
                    (np.fft.rfftfreq(2048, 1 / WF.sample_rate) > 30e3)
                    & (np.fft.rfftfreq(2048, 1 / WF.sample_rate) < 70e3),
                    np.fft.rfft(rng.standard_normal(2048)),
                    0.0,
                ),
                2048,
            ),
            WF.sample_rate,
        )
        d = Direction(0.3, -0.1)
        rec = plane_wave_recording(GEOM, d, sig)
        n = rec.channels.shape[1]
        X = np.fft.rfft(rec.channels, axis=1)
        freqs = np.fft.rfftfreq(n, 1 / WF.sample_rate)
        k = int(np.argmin(np.abs(freqs - 50e3)))
        sv = steering_vector(GEOM, d, freqs[k])
        ratio = X[:, k] / X[0, k]
        assert np.allclose(ratio, sv / sv[0], atol=1e-6)


class TestSceneSerialization:
    def test_roundtrip(self):
        scene = Scene(
            (Reflector(2, 0.015, 0.66, (0.01, -0.02)), Reflector(5, 0.03, 0.5, (0.0, 0.0))),
            1.8,
            math.radians(-30),
            3,
            12.5,
        )
        assert scene_from_dict(scene_to_dict(scene)) == scene

    def test_validation(self):
        with pytest.raises(ValueError, match="center_range"):
            Scene((), 5.0, 0.0, 0, None)
        with pytest.raises(ValueError, match="orientation"):
            Scene((), 1.0, 2.0, 0, None)
        with pytest.raises(ValueError, match="radius"):
            Reflector(0, -0.01)
        with pytest.raises(ValueError, match="cut_factor"):
            Reflector(0, 0.02, 1.5)

    def test_radius_table(self):
        radii = reflector_radii(7, 0.010, 0.040)
        assert radii.shape == (7,)
        assert abs(radii[0] - 0.010) < 1e-12 and abs(radii[-1] - 0.040) < 1e-12
        ratios = radii[1:] / radii[:-1]
        assert np.allclose(ratios, ratios[0])  # log-spaced
