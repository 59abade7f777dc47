import math

import numpy as np
import pytest

from carebot.lipm.footsteps import body_pose_of_step
from carebot.lipm.types import Foot, GaitConfig, StepTiming
from carebot.locomanip import (
    GraspConfig,
    HandAdmittance,
    InfeasibleSegmentError,
    ManipForceProfile,
    MotionKind,
    PhaseForceTable,
    TrapezoidalProfile,
    TsdState,
    Waypoint,
    apply_pose_correction,
    build_force_profile,
    generate_footsteps_from_tsd,
    manip_force_feedforward,
    plan_tsd_path,
)
from carebot.locomanip.coupling import DEFAULT_ROBOT_OFFSET, GraspMarginError
from carebot.locomanip.path import lateral_accel_of_point
from carebot.spatial import PlanarPose


def straight_route(d=1.0, duration=5.0):
    return [
        Waypoint(PlanarPose(0, 0, 0), 0.0, MotionKind.STRAIGHT),
        Waypoint(PlanarPose(d, 0, 0), duration, MotionKind.STRAIGHT),
    ]


class TestTrapezoid:
    def test_classic_trapezoid_times(self):
        prof = TrapezoidalProfile.from_limits(1.0, 0.25, 0.25)
        assert prof.t_accel == pytest.approx(1.0)
        assert prof.t_cruise == pytest.approx(3.0)
        assert prof.duration == pytest.approx(5.0)

    def test_triangular_degenerate(self):
        prof = TrapezoidalProfile.from_limits(0.1, 0.25, 0.25)
        assert prof.t_cruise == pytest.approx(0.0)
        assert prof.cruise_speed == pytest.approx(math.sqrt(0.1 * 0.25))

    def test_velocity_and_accel_bounded(self):
        prof = TrapezoidalProfile.from_limits(2.0, 0.25, 0.25)
        ts = np.linspace(-0.1, prof.duration + 0.1, 500)
        samples = np.array([prof.sample(t) for t in ts])
        assert np.abs(samples[:, 1]).max() <= 0.25 + 1e-9
        assert np.abs(samples[:, 2]).max() <= 0.25 + 1e-9
        assert samples[-1, 0] == pytest.approx(2.0)

    def test_duration_fit_stretches_cruise(self):
        prof = TrapezoidalProfile.for_duration(1.0, 8.0, 0.25, 0.25)
        assert prof.duration == pytest.approx(8.0)
        assert prof.cruise_speed < 0.25

    def test_too_short_duration_rejected(self):
        with pytest.raises(ValueError):
            TrapezoidalProfile.for_duration(1.0, 2.0, 0.25, 0.25)


class TestPlanPath:
    def test_single_straight_duration(self):
        traj = plan_tsd_path(straight_route(), dt=0.01)
        assert traj.duration == pytest.approx(5.0)
        end = traj.pose_at(5.0)
        assert end.x == pytest.approx(1.0, abs=1e-6)
        # velocity profile respects the limits (finite-difference check)
        dt = 0.01
        xs = np.array([traj.pose_at(t).x for t in np.arange(0, 5.0, dt)])
        v = np.diff(xs) / dt
        a = np.diff(v) / dt
        assert np.abs(v).max() <= 0.25 + 1e-6
        assert np.abs(a).max() <= 0.25 + 1e-3

    def test_zero_length_route(self):
        traj = plan_tsd_path([], dt=0.01)
        assert traj.duration == 0.0
        assert len(traj.times) == 0

    def test_turn_in_place_keeps_center_fixed(self):
        route = [
            Waypoint(PlanarPose(1, 2, 0), 0.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(1, 2, math.pi / 2), 9.0, MotionKind.TURN),
        ]
        traj = plan_tsd_path(route, dt=0.01, rotation_center=(0.1, 0.0), w_max=0.2)
        centers = traj.poses[:, :2]
        assert np.abs(centers - np.array([1.0, 2.0])).max() < 1e-9
        # while the body origin orbits the steering point
        body0 = traj.body_pose_at(0.0)
        body1 = traj.body_pose_at(traj.duration)
        assert body0.distance_to(body1) > 0.05

    def test_lateral_straight_rejected_with_index(self):
        route = [
            Waypoint(PlanarPose(0, 0, 0), 0.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(0.5, 0.5, 0), 5.0, MotionKind.STRAIGHT),
        ]
        with pytest.raises(InfeasibleSegmentError) as exc:
            plan_tsd_path(route, dt=0.01)
        assert exc.value.index == 0

    def test_waypoints_hit_at_transit_times(self):
        route = [
            Waypoint(PlanarPose(0, 0, 0), 0.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(1.0, 0, 0), 6.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(1.0, 0, math.pi / 2), 16.0, MotionKind.TURN),
            Waypoint(PlanarPose(1.0, 0.8, math.pi / 2), 22.0, MotionKind.STRAIGHT),
        ]
        traj = plan_tsd_path(route, dt=0.005)
        for wp in route:
            pose = traj.pose_at(wp.transit_time)
            assert pose.distance_to(wp.pose) < 1e-3
            assert abs(pose.yaw - wp.pose.yaw) < 1e-3

    def test_comfort_lateral_accel_when_loaded(self):
        # CoM at the rotation center: lateral acceleration stays tiny during turns
        route = [
            Waypoint(PlanarPose(0, 0, 0), 0.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(1.0, 0, 0), 6.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(1.0, 0, math.pi / 2), 16.0, MotionKind.TURN),
        ]
        traj = plan_tsd_path(route, dt=0.005)
        lat = lateral_accel_of_point(traj, (0.0, 0.0), dt=0.05)
        ts = np.arange(traj.times[0], traj.times[-1] - 0.05, 0.05)[1:-1]
        # exclude start/stop transients of each segment
        interior = ((ts > 1.5) & (ts < 4.5)) | ((ts > 8.0) & (ts < 14.0))
        assert np.abs(lat[interior[:len(lat)]]).max() < 0.05


class TestFootstepsFromTsd:
    gait = GaitConfig(timing=StepTiming(0.8, 0.2))

    def test_stationary_tsd_steps_in_place(self):
        route = [
            Waypoint(PlanarPose(0, 0, 0), 0.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(0, 0, 0), 4.0, MotionKind.STRAIGHT),
        ]
        traj = plan_tsd_path(route, dt=0.01)
        plan = generate_footsteps_from_tsd(traj, GraspConfig.default(),
                                           DEFAULT_ROBOT_OFFSET, self.gait)
        bodies = [body_pose_of_step(s, self.gait.stance_width) for s in plan.steps]
        for b in bodies:
            assert b.distance_to(bodies[0]) < 1e-9

    def test_straight_motion_stride_matches_cart(self):
        route = straight_route(d=1.0, duration=11.0)  # cruise 0.1 m/s
        traj = plan_tsd_path(route, dt=0.01)
        plan = generate_footsteps_from_tsd(traj, GraspConfig.default(),
                                           DEFAULT_ROBOT_OFFSET, self.gait)
        mid = [s for s in plan.steps if 4.0 < s.touchdown_time < 8.0]
        same_foot = [s for s in mid if s.foot is mid[0].foot]
        assert len(same_foot) >= 2
        stride = same_foot[1].pose.x - same_foot[0].pose.x
        assert stride == pytest.approx(0.1 * 2 * self.gait.timing.period, abs=0.02)

    def test_turn_trajectory_step_yaws_sum(self):
        route = [
            Waypoint(PlanarPose(0, 0, 0), 0.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(0, 0, math.pi / 2), 12.0, MotionKind.TURN),
        ]
        traj = plan_tsd_path(route, dt=0.01)
        plan = generate_footsteps_from_tsd(traj, GraspConfig.default(),
                                           DEFAULT_ROBOT_OFFSET, self.gait)
        yaw_total = plan.steps[-1].pose.yaw - plan.steps[0].pose.yaw
        assert yaw_total == pytest.approx(math.pi / 2, abs=self.gait.yaw_limit)

    def test_short_trajectory_rejected(self):
        traj = plan_tsd_path(straight_route(0.05, 1.0), dt=0.01)
        with pytest.raises(ValueError):
            generate_footsteps_from_tsd(traj, GraspConfig.default(),
                                        DEFAULT_ROBOT_OFFSET, self.gait)

    def test_margin_violation_reports_time(self):
        # an offset far behind the rail puts the hands out of reach
        far = PlanarPose(-1.6, 0.0, 0.0)
        traj = plan_tsd_path(straight_route(1.0, 11.0), dt=0.01)
        with pytest.raises(GraspMarginError) as exc:
            generate_footsteps_from_tsd(traj, GraspConfig.default(), far, self.gait)
        assert exc.value.time >= 0.0

    def test_margin_positive_along_nominal_plan(self):
        from carebot.locomanip.arm import PlanarArm
        traj = plan_tsd_path(straight_route(1.0, 11.0), dt=0.01)
        grasp = GraspConfig.default()
        arms = (PlanarArm("left"), PlanarArm("right"))
        plan = generate_footsteps_from_tsd(traj, grasp, DEFAULT_ROBOT_OFFSET, self.gait, arms)
        targets = grasp.planar_targets()
        for s in plan.steps:
            body = body_pose_of_step(s, self.gait.stance_width)
            t = min(max(s.touchdown_time, 0.0), traj.duration)
            tsd_body = traj.body_pose_at(t)
            for arm in arms:
                hand = tsd_body.transform_point(targets[arm.side])
                assert arm.margin(body, hand, tsd_body.yaw) >= grasp.joint_margin


class TestForceFeedforward:
    def test_zero_force_zero_shift(self):
        prof = ManipForceProfile(np.array([0.0, 1.0]), np.zeros((2, 3)))
        np.testing.assert_allclose(manip_force_feedforward(prof, 0.5, 54.0, 0.8), [0, 0])

    def test_static_moment_balance_arithmetic(self):
        prof = ManipForceProfile(np.array([0.0, 10.0]),
                                 np.array([[20.0, 0, 0], [20.0, 0, 0]]))
        shift = manip_force_feedforward(prof, 5.0, 54.0, 0.8)
        assert shift[0] == pytest.approx(-0.0302, abs=2e-4)  # backward of nominal

    def test_outside_interval_zero(self):
        prof = ManipForceProfile(np.array([1.0, 2.0]), np.array([[20.0, 0, 0]] * 2))
        np.testing.assert_allclose(manip_force_feedforward(prof, 5.0, 54.0, 0.8), [0, 0])

    def test_loaded_turn_uses_loaded_entry(self):
        route = [
            Waypoint(PlanarPose(0, 0, 0), 0.0, MotionKind.STRAIGHT),
            Waypoint(PlanarPose(0, 0, math.pi / 2), 12.0, MotionKind.TURN),
        ]
        traj = plan_tsd_path(route, dt=0.01)
        table = PhaseForceTable()
        loaded = build_force_profile(traj, table, loaded=True)
        unloaded = build_force_profile(traj, table, loaded=False)
        mid = 6.0
        assert abs(loaded.sample(mid)[1]) == pytest.approx(table.turn(True))
        assert abs(unloaded.sample(mid)[1]) == pytest.approx(table.turn(False))

    def test_profile_zero_outside_maneuver(self):
        traj = plan_tsd_path(straight_route(1.0, 6.0), dt=0.01)
        prof = build_force_profile(traj, PhaseForceTable(), loaded=False)
        np.testing.assert_allclose(prof.sample(100.0), [0, 0, 0])


class TestHandAdmittance:
    def test_fixed_point_at_balance(self):
        adm = HandAdmittance(gain=2e-4)
        out1 = adm.update([5.0, 0.0], [5.0, 0.0], 0.005)
        np.testing.assert_allclose(out1, [0, 0], atol=1e-15)

    def test_linear_rate(self):
        adm = HandAdmittance(gain=2e-4)
        out = adm.update([5.0, 0.0], [0.0, 0.0], 1.0)
        assert out[0] == pytest.approx(1e-3)

    def test_slip_risk_after_sustained_saturation(self):
        adm = HandAdmittance(gain=1.0, clamp=0.01, slip_after=1.0)
        for _ in range(150):  # saturates immediately; 0.75 s < slip_after
            adm.update([100.0, 0.0], [0.0, 0.0], 0.005)
        assert not adm.slip_risk
        for _ in range(80):  # 1.15 s saturated in total
            adm.update([100.0, 0.0], [0.0, 0.0], 0.005)
        assert adm.slip_risk


class TestPoseCorrection:
    route = (
        Waypoint(PlanarPose(1.0, 0.0, 0.0), 5.0, MotionKind.STRAIGHT),
        Waypoint(PlanarPose(1.0, 0.0, 1.0), 10.0, MotionKind.TURN),
    )

    def test_no_error_no_change(self):
        robot = PlanarPose(0, 0, 0)
        bed_nom = PlanarPose(2.0, 0.5, 0.2)
        bed_in_robot = bed_nom  # robot at origin sees the bed exactly at nominal
        res = apply_pose_correction(bed_in_robot, 0.0, True, robot, bed_nom,
                                    list(self.route), now=0.1)
        assert res.applied
        for a, b in zip(res.waypoints, self.route):
            assert a.pose.distance_to(b.pose) < 1e-12

    def test_translation_shifts_waypoints(self):
        robot = PlanarPose(0, 0, 0)
        bed_nom = PlanarPose(2.0, 0.0, 0.0)
        bed_meas = PlanarPose(2.05, 0.0, 0.0)  # observed 5 cm further
        res = apply_pose_correction(bed_meas, 0.0, True, robot, bed_nom,
                                    list(self.route), now=0.1)
        for a, b in zip(res.waypoints, self.route):
            assert a.pose.x - b.pose.x == pytest.approx(0.05)
            assert a.pose.y == pytest.approx(b.pose.y)

    def test_yaw_rotates_about_bed(self):
        robot = PlanarPose(0, 0, 0)
        bed_nom = PlanarPose(2.0, 0.0, 0.0)
        yaw = math.radians(5.0)
        bed_meas = PlanarPose(2.0, 0.0, yaw)
        res = apply_pose_correction(bed_meas, 0.0, True, robot, bed_nom,
                                    list(self.route), now=0.1)
        # headings rotate by 5 degrees; positions rotate about the bed
        for a, b in zip(res.waypoints, self.route):
            assert a.pose.yaw - b.pose.yaw == pytest.approx(yaw)
        expected = bed_meas.compose(bed_nom.inverse()).compose(self.route[0].pose)
        assert res.waypoints[0].pose.distance_to(expected) < 1e-12

    def test_stale_track_skipped(self):
        res = apply_pose_correction(PlanarPose(2, 0, 0), 0.0, True, PlanarPose(),
                                    PlanarPose(2, 0, 0), list(self.route), now=1.0)
        assert not res.applied and "stale" in res.reason
        assert res.waypoints == self.route

    def test_unconverged_track_skipped(self):
        res = apply_pose_correction(PlanarPose(2, 0, 0), 0.0, False, PlanarPose(),
                                    PlanarPose(2, 0, 0), list(self.route), now=0.1)
        assert not res.applied

    def test_idempotent_with_adopted_estimate(self):
        robot = PlanarPose(0.3, -0.2, 0.1)
        bed_nom = PlanarPose(2.0, 0.4, 0.0)
        bed_in_robot = PlanarPose(1.8, 0.5, -0.05)
        first = apply_pose_correction(bed_in_robot, 0.0, True, robot, bed_nom,
                                      list(self.route), now=0.1)
        second = apply_pose_correction(bed_in_robot, 0.0, True, robot, first.bed_estimate,
                                       list(first.waypoints), now=0.1)
        for a, b in zip(second.waypoints, first.waypoints):
            assert a.pose.distance_to(b.pose) < 1e-12
            assert abs(a.pose.yaw - b.pose.yaw) < 1e-12


class TestTsdState:
    def test_load_mass_range(self):
        with pytest.raises(ValueError):
            TsdState(PlanarPose(), load_mass=120.0)

    def test_loaded_requires_mass(self):
        with pytest.raises(ValueError):
            TsdState(PlanarPose(), loaded=True, load_mass=0.0)
