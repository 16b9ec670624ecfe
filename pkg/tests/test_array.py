import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import echotag.array as arr
from echotag.array import (
    ArrayGeometry,
    Direction,
    build_irregular_geometry,
    load_geometry,
    save_geometry,
    steering_vector,
    unit_propagation_vector,
)

directions = st.builds(
    Direction,
    azimuth=st.floats(-math.pi, math.pi),
    elevation=st.floats(-math.pi / 2, math.pi / 2),
)


class TestDirection:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            Direction(4.0, 0.0)
        with pytest.raises(ValueError):
            Direction(0.0, 2.0)
        with pytest.raises(ValueError):
            Direction(math.nan, 0.0)


class TestGeometry:
    def test_default_build(self):
        geom = build_irregular_geometry(seed=7, n_mics=32, aperture=0.08)
        assert geom.n_mics == 32
        assert geom.mic_positions.shape == (32, 3)
        # disc of diameter `aperture` in the x = 0 plane, emitter at origin
        assert np.allclose(geom.mic_positions[:, 0], 0.0)
        assert np.all(np.linalg.norm(geom.mic_positions[:, 1:], axis=1) <= 0.04 + 1e-12)
        assert np.allclose(geom.emitter_position, 0.0)
        assert geom.aperture > 0

    def test_seed_determinism(self):
        a = build_irregular_geometry(seed=7)
        b = build_irregular_geometry(seed=7)
        assert np.array_equal(a.mic_positions, b.mic_positions)
        c = build_irregular_geometry(seed=8)
        assert not np.array_equal(a.mic_positions, c.mic_positions)

    def test_two_mic_spacing_bound(self):
        geom = build_irregular_geometry(seed=7, n_mics=2, aperture=0.08)
        d = np.linalg.norm(geom.mic_positions[0] - geom.mic_positions[1])
        assert d >= 0.01

    def test_min_spacing_honored(self):
        geom = build_irregular_geometry(seed=3, n_mics=32, aperture=0.08)
        from scipy.spatial.distance import pdist

        assert pdist(geom.mic_positions).min() >= 0.08 / (4 * math.sqrt(32))

    def test_rejection_failure_message(self, monkeypatch):
        monkeypatch.setattr(arr, "_REJECTION_ATTEMPTS", 3)
        with pytest.raises(ValueError, match="cannot satisfy spacing"):
            build_irregular_geometry(seed=0, n_mics=32, aperture=0.08)

    def test_invariants(self):
        with pytest.raises(ValueError, match="at least 2"):
            ArrayGeometry(np.zeros((1, 3)), np.zeros(3))
        with pytest.raises(ValueError, match="coincident"):
            ArrayGeometry(np.zeros((2, 3)), np.zeros(3))
        with pytest.raises(ValueError, match="finite"):
            ArrayGeometry(np.array([[0.0, 0, 0], [np.inf, 0, 0]]), np.zeros(3))
        with pytest.raises(ValueError):
            build_irregular_geometry(seed=0, n_mics=1)
        with pytest.raises(ValueError):
            build_irregular_geometry(seed=0, aperture=-1.0)


class TestPropagationVector:
    def test_boresight(self):
        u = unit_propagation_vector(Direction(0.0, 0.0))
        assert np.allclose(u, [1.0, 0.0, 0.0])

    def test_orthogonal_at_90deg(self):
        u = unit_propagation_vector(Direction(math.pi / 2, 0.0))
        assert abs(u @ np.array([1.0, 0.0, 0.0])) < 1e-12
        assert abs(np.linalg.norm(u) - 1.0) < 1e-12

    @given(directions)
    @settings(max_examples=50, deadline=None)
    def test_unit_norm(self, d):
        assert abs(np.linalg.norm(unit_propagation_vector(d)) - 1.0) < 1e-12


class TestSteeringVector:
    def test_broadside_all_ones_for_planar_array(self):
        geom = build_irregular_geometry(seed=7)  # mics in the x = 0 plane
        sv = steering_vector(geom, Direction(0.0, 0.0), 50e3)
        assert np.array_equal(sv, np.ones(32, dtype=complex))

    def test_broadside_normal_to_z_plane(self):
        # mics in z = 0; the normal direction is elevation pi/2
        pos = np.array([[0.0, 0, 0], [0.01, 0, 0], [0, 0.02, 0], [0.013, 0.01, 0]])
        geom = ArrayGeometry(pos, np.zeros(3))
        sv = steering_vector(geom, Direction(0.0, math.pi / 2), 60e3)
        assert np.allclose(sv, 1.0)

    def test_two_mic_phase_difference(self):
        # mics at x=0 and x=d, wave from +x: the far mic leads by d/c,
        # so the phase difference is 2 pi f d / c (hand-computed delay)
        d, f, c = 0.01, 40e3, 343.0
        geom = ArrayGeometry(np.array([[0.0, 0, 0], [d, 0, 0]]), np.zeros(3))
        sv = steering_vector(geom, Direction(0.0, 0.0), f, c)
        expected = 2 * math.pi * f * d / c
        assert abs(sv[1] / sv[0] - np.exp(1j * expected)) < 1e-12

    @given(directions, st.floats(1e3, 200e3))
    @settings(max_examples=50, deadline=None)
    def test_unit_modulus(self, d, freq):
        geom = build_irregular_geometry(seed=7, n_mics=8)
        sv = steering_vector(geom, d, freq)
        assert np.max(np.abs(np.abs(sv) - 1.0)) < 1e-12

    def test_conjugate_symmetry_in_frequency(self):
        geom = build_irregular_geometry(seed=7, n_mics=8)
        d = Direction(0.4, -0.2)
        assert np.allclose(steering_vector(geom, d, -50e3), np.conj(steering_vector(geom, d, 50e3)))

    def test_doubled_frequency_halved_delays(self):
        geom = build_irregular_geometry(seed=7, n_mics=8)
        half = ArrayGeometry(geom.mic_positions * 0.5, geom.emitter_position)
        d = Direction(0.7, 0.1)
        assert np.allclose(steering_vector(half, d, 100e3), steering_vector(geom, d, 50e3))


class TestGeometryFile:
    def test_roundtrip(self, tmp_path):
        geom = build_irregular_geometry(seed=11, n_mics=5)
        path = tmp_path / "array.txt"
        save_geometry(geom, path)
        loaded = load_geometry(path)
        assert np.array_equal(loaded.mic_positions, geom.mic_positions)
        assert np.array_equal(loaded.emitter_position, geom.emitter_position)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0.0 0.0 0.0\n0.01 0.0 0.0\n")
        with pytest.raises(ValueError, match="emitter"):
            load_geometry(path)

    def test_bad_token_reports_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# emitter 0 0 0\n0.0 0.0 0.0\n0.01 oops 0.0\n")
        with pytest.raises(ValueError, match=":3"):
            load_geometry(path)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# emitter 0 0 0\n0.0 0.0\n")
        with pytest.raises(ValueError, match="expected 3 coordinates"):
            load_geometry(path)
