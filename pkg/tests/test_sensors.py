"""Depth-scan and altimeter tests: noiseless scans must equal raycast
results exactly; noise and dropout are seeded and statistically sane."""

import math

import numpy as np
import pytest

from tunnelblimp.sensors import altimeter, depth_scan
from tunnelblimp.vehicle import BlimpState
from tunnelblimp.world import build_straight


def centered_state(yaw=0.0):
    return BlimpState(position=(30.0, 0.0, 0.6), yaw=yaw)


class TestDepthScan:
    def test_angles_are_inclusive_linspace(self):
        m = build_straight(3.3, 60)
        scan = depth_scan(m, centered_state(), fov=math.pi / 2, n_rays=64)
        assert scan.angles[0] == pytest.approx(-math.pi / 4)
        assert scan.angles[-1] == pytest.approx(math.pi / 4)
        diffs = np.diff(scan.angles)
        assert np.allclose(diffs, diffs[0])
        assert len(scan.angles) == 64 == len(scan.ranges)

    def test_symmetric_scan_centered(self):
        m = build_straight(3.3, 120)
        scan = depth_scan(m, centered_state(), fov=math.pi, n_rays=65, max_range=8.0)
        r = scan.ranges
        for i in range(len(r)):
            a, b = r[i], r[len(r) - 1 - i]
            if np.isnan(a):
                assert np.isnan(b)
            else:
                assert a == pytest.approx(b, abs=1e-9)

    def test_side_beam_hits_half_width(self):
        m = build_straight(3.3, 60)
        scan = depth_scan(m, centered_state(), fov=math.pi, n_rays=65, max_range=8.0)
        i = int(np.argmin(np.abs(scan.angles - math.pi / 2)))
        assert scan.ranges[i] == pytest.approx(1.65, abs=1e-9)

    def test_noiseless_equals_raycast(self):
        m = build_straight(3.3, 60)
        st = BlimpState(position=(20.0, 0.4, 0.6), yaw=0.3)
        scan = depth_scan(m, st, fov=math.pi / 2, n_rays=33, max_range=8.0)
        for ang, r in zip(scan.angles, scan.ranges):
            want = m.raycast(st.xy, st.yaw + ang, 8.0)
            if want is None:
                assert np.isnan(r)
            else:
                assert r == pytest.approx(want, abs=1e-12)

    def test_outside_tunnel_faults_all_nan(self):
        m = build_straight(3.3, 60)
        st = BlimpState(position=(30.0, 9.0, 0.6), yaw=0.0)
        scan = depth_scan(m, st)
        assert np.isnan(scan.ranges).all()

    def test_seeded_noise_is_reproducible(self):
        m = build_straight(3.3, 60)
        a = depth_scan(m, centered_state(), noise_sigma=0.02, rng=42)
        b = depth_scan(m, centered_state(), noise_sigma=0.02, rng=42)
        np.testing.assert_array_equal(a.ranges, b.ranges)

    def test_noise_keeps_invariants(self):
        m = build_straight(3.3, 60)
        scan = depth_scan(m, centered_state(), fov=math.pi, n_rays=181,
                          max_range=8.0, noise_sigma=0.05, rng=1)
        finite = scan.ranges[~np.isnan(scan.ranges)]
        assert (finite > 0).all()
        assert (finite <= 8.0).all()

    def test_parameter_validation(self):
        m = build_straight()
        with pytest.raises(ValueError):
            depth_scan(m, centered_state(), n_rays=4)
        with pytest.raises(ValueError):
            depth_scan(m, centered_state(), fov=4.0)


class TestAltimeter:
    def test_exact_at_setpoint_height(self):
        st = BlimpState(position=(5.0, 0.0, 0.6), yaw=0.0)
        r = altimeter(st)
        assert r.valid and r.altitude == pytest.approx(0.6)

    def test_full_dropout(self):
        st = centered_state()
        r = altimeter(st, dropout_prob=1.0, rng=0)
        assert not r.valid

    def test_noise_std_in_band(self):
        st = centered_state()
        rng = np.random.default_rng(123)
        vals = np.array([altimeter(st, noise_sigma=0.01, rng=rng).altitude
                         for _ in range(10_000)])
        assert 0.008 <= vals.std() <= 0.012

    def test_never_negative_when_valid(self):
        st = BlimpState(position=(5.0, 0.0, 0.005), yaw=0.0)
        rng = np.random.default_rng(5)
        for _ in range(200):
            r = altimeter(st, noise_sigma=0.05, rng=rng)
            if r.valid:
                assert r.altitude >= 0.0
