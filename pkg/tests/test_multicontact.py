"""Multi-contact equilibrium, planning, and stabilization tests.

The equilibrium oracle here is deliberately independent: it re-derives the
generator matrix from the stance description with its own code and decides
feasibility by nonnegative least squares (active-set) instead of the LP.
"""

import math

import numpy as np
import pytest

from carebot.geometry import rectangle
from carebot.multicontact import (
    ContactMode,
    ContactSpec,
    ContactSequence,
    PlanarModel,
    Stance,
    StabilizerGains,
    TransitionError,
    bilateral_to_unilateral,
    centroidal_preview,
    check_dynamic_feasibility,
    check_static_equilibrium,
    climb_sequence,
    com_x_interval,
    plan_transition,
    stabilize_wrench,
)
from carebot.multicontact.ladder import _flat, rail_grasp
from carebot.spatial import Pose3


def oracle_feasible(stance: Stance, com_xy, mass: float, g: float = 9.81,
                    tol: float = 1e-6) -> bool:
    """Brute-force check: distance from the required wrench to the generator
    cone via bounded least squares (BVLS), assembled independently.

    The residual is recomputed explicitly; scipy's nnls is avoided because
    its reported residual can be wrong on these systems.
    """
    from scipy.optimize import lsq_linear

    cols = []
    for c in stance.unilateral_expansion():
        R = c.surface_pose.matrix[:3, :3]
        for vx, vy in c.polygon:
            v = c.surface_pose.transform_point(np.array([vx, vy, 0.0]))
            for sx in (1.0, -1.0):
                for sy in (1.0, -1.0):
                    d = R @ np.array([sx * c.mu, sy * c.mu, 1.0])
                    cols.append(np.concatenate([d, np.cross(v, d)]))
    A = np.array(cols).T
    w = mass * g
    b = np.array([0.0, 0.0, w, com_xy[1] * w, -com_xy[0] * w, 0.0])
    res = lsq_linear(A / w, b / w, bounds=(0, np.inf), method="bvls", tol=1e-12)
    resid = float(np.linalg.norm(A / w @ res.x - b / w))
    return resid < tol


def random_stance(rng) -> Stance:
    contacts = []
    n_feet = rng.integers(1, 3)
    for i in range(n_feet):
        yaw = rng.uniform(-math.pi, math.pi)
        pose = Pose3.from_axis_angle((0, 0, 1), yaw,
                                     (rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3),
                                      rng.choice([0.0, 0.25])),
                                     "world", f"cf{i}")
        contacts.append(ContactSpec(f"foot_{i}", pose,
                                    rectangle(0, 0, 0.2, 0.1), rng.uniform(0.3, 1.0)))
    if rng.random() < 0.5:
        pose = Pose3(translation=(rng.uniform(-0.5, 0.5), rng.uniform(-0.4, 0.4),
                                  rng.uniform(0.7, 1.1)),
                     parent_frame="world", child_frame="ch")
        contacts.append(ContactSpec("hand", pose, rectangle(0, 0, 0.1, 0.08),
                                    rng.uniform(0.5, 1.0), ContactMode.BILATERAL))
    return Stance(tuple(contacts))


class TestBilateral:
    def test_pair_construction(self):
        push, pull = bilateral_to_unilateral(rail_grasp())
        assert np.dot(push.normal_world, pull.normal_world) == pytest.approx(-1.0)
        assert push.mu == pull.mu
        assert len(push.polygon) == len(pull.polygon)

    def test_already_unilateral_rejected(self):
        foot = _flat("foot", 0, 0, 0)
        with pytest.raises(ValueError):
            bilateral_to_unilateral(foot)

    def test_pair_admits_net_pull(self):
        # hanging point mass below a rail: only a pulling contact balances it
        rail = rail_grasp(x=0.0, z=1.0)
        stance = Stance((rail,))
        res = check_static_equilibrium(stance, (0.0, 0.0), 10.0)
        assert res.feasible
        total = res.net_wrench()
        assert total[2] == pytest.approx(10.0 * 9.81, rel=1e-6)

    def test_pull_matches_direct_bilateral_oracle(self):
        # feasibility via the pair equals feasibility with a free-sign normal
        # force (small-instance linear-program equivalence)
        from scipy.optimize import linprog

        rail = rail_grasp(x=0.4, z=0.9)
        foot = _flat("foot", 0.0, 0.0, 0.0)
        stance = Stance((foot, rail))
        for cx in np.linspace(-0.4, 0.6, 11):
            ours = check_static_equilibrium(stance, (cx, 0.0), 54.0).feasible
            # direct bilateral formulation: pyramid cone around +/- normal
            cols = []
            for c in (foot,):
                R = c.surface_pose.matrix[:3, :3]
                for vx, vy in c.polygon:
                    v = c.surface_pose.transform_point(np.array([vx, vy, 0.0]))
                    for sx in (1, -1):
                        for sy in (1, -1):
                            d = R @ np.array([sx * c.mu, sy * c.mu, 1.0])
                            cols.append(np.concatenate([d, np.cross(v, d)]))
            R = rail.surface_pose.matrix[:3, :3]
            for vx, vy in rail.polygon:
                v = rail.surface_pose.transform_point(np.array([vx, vy, 0.0]))
                for nz in (1.0, -1.0):  # free-sign normal: push or pull
                    for sx in (1, -1):
                        for sy in (1, -1):
                            d = R @ np.array([sx * rail.mu, sy * rail.mu, nz])
                            cols.append(np.concatenate([d, np.cross(v, d)]))
            A = np.array(cols).T
            w = 54.0 * 9.81
            b = np.array([0, 0, w, 0.0, -cx * w, 0.0])
            # grasp strength caps the push side and the pull side separately
            n_rail = 8 * len(rail.polygon)
            push_row = np.zeros(A.shape[1])
            pull_row = np.zeros(A.shape[1])
            rail_cols = np.arange(A.shape[1] - n_rail, A.shape[1])
            pulls = (rail_cols - (A.shape[1] - n_rail)) % 8 >= 4
            push_row[rail_cols[~pulls]] = 1.0
            pull_row[rail_cols[pulls]] = 1.0
            ref = linprog(np.zeros(A.shape[1]), A_eq=A / w, b_eq=b / w,
                          A_ub=np.vstack([push_row, pull_row]),
                          b_ub=[rail.max_normal_force] * 2,
                          bounds=(0, None), method="highs").success
            assert ours == ref, f"mismatch at cx={cx}"


class TestEquilibrium:
    def test_single_foot_com_above(self):
        st = Stance((_flat("foot", 0, 0, 0),))
        assert check_static_equilibrium(st, (0.0, 0.0), 54.0).feasible

    def test_single_foot_com_far_outside(self):
        st = Stance((_flat("foot", 0, 0, 0),))
        assert not check_static_equilibrium(st, (1.0, 0.0), 54.0).feasible

    def test_witness_balances_gravity(self):
        st = Stance((_flat("foot_left", 0, 0.1, 0), _flat("foot_right", 0, -0.1, 0)))
        res = check_static_equilibrium(st, (0.02, 0.0), 54.0)
        assert res.feasible
        net = res.net_wrench()
        np.testing.assert_allclose(net[:3], [0, 0, 54.0 * 9.81], atol=1e-5)

    def test_rail_expands_interval_and_matches_grid_oracle(self):
        foot = _flat("foot", 0, 0, 0)
        st_foot = Stance((foot,))
        st_rail = Stance((foot, rail_grasp(x=0.5, z=0.9)))
        ix_foot = com_x_interval(st_foot, 54.0)
        ix_rail = com_x_interval(st_rail, 54.0)
        assert ix_rail[0] < ix_foot[0] - 0.05
        assert ix_rail[1] > ix_foot[1] + 0.05
        # removing the rail reproduces the analytic foot polygon bounds
        assert ix_foot[0] == pytest.approx(-0.10, abs=1e-3)
        assert ix_foot[1] == pytest.approx(0.10, abs=1e-3)
        # grid brute force agrees along the x axis
        for cx in np.linspace(-0.3, 0.3, 13):
            assert oracle_feasible(st_foot, (cx, 0.0), 54.0) == \
                (ix_foot[0] - 1e-9 <= cx <= ix_foot[1] + 1e-9)

    def test_randomized_verdicts_match_oracle(self):
        rng = np.random.default_rng(0)
        n_checked = 0
        for _ in range(120):
            stance = random_stance(rng)
            com = (rng.uniform(-0.6, 0.6), rng.uniform(-0.5, 0.5))
            ours = check_static_equilibrium(stance, com, 54.0).feasible
            ref = oracle_feasible(stance, com, 54.0)
            assert ours == ref
            n_checked += 1
        assert n_checked == 120

    def test_bilateral_never_shrinks_region(self):
        rng = np.random.default_rng(1)
        grid = [(x, y) for x in np.linspace(-0.5, 0.5, 9)
                for y in np.linspace(-0.4, 0.4, 7)]
        for _ in range(10):
            stance = random_stance(rng)
            rail = ContactSpec("extra_hand",
                               Pose3(translation=(rng.uniform(-0.4, 0.4),
                                                  rng.uniform(-0.3, 0.3),
                                                  rng.uniform(0.8, 1.0)),
                                     parent_frame="world", child_frame="xtra"),
                               rectangle(0, 0, 0.1, 0.08), 0.8, ContactMode.BILATERAL)
            bigger = Stance(stance.contacts + (rail,))
            for com in grid:
                base = check_static_equilibrium(stance, com, 54.0).feasible
                if base:
                    assert check_static_equilibrium(bigger, com, 54.0).feasible


class TestPlanner:
    model = PlanarModel()

    def test_same_stance_single_frame(self):
        st = Stance((_flat("foot_left", 0, 0.08, 0), _flat("foot_right", 0, -0.08, 0)))
        plan = plan_transition(st, st, self.model)
        assert len(plan.frames) == 1

    def test_two_limb_change_rejected(self):
        a = Stance((_flat("foot_left", 0, 0.08, 0), _flat("foot_right", 0, -0.08, 0)))
        b = Stance((_flat("foot_left", 0.3, 0.08, 0.25), _flat("foot_right", 0.3, -0.08, 0.25)))
        with pytest.raises(ValueError):
            plan_transition(a, b, self.model)

    def test_hand_lift_keeps_equilibrium(self):
        feet = (_flat("foot_left", 0, 0.08, 0), _flat("foot_right", 0, -0.08, 0))
        with_hand = Stance(feet + (rail_grasp(),))
        without = Stance(feet)
        plan = plan_transition(with_hand, without, self.model)
        for f in plan.frames:
            assert f.feasible

    def test_step_up_com_outside_foot_polygon_needs_rail(self):
        seq = climb_sequence()
        # right foot on step1 only, left swinging to step2, rail grasped
        from_stance, to_stance = seq.stances[3], seq.stances[4]
        plan = plan_transition(from_stance, to_stance, self.model)
        swing = [f for f in plan.frames if len(f.active_limbs) == 2]
        assert swing, "no swing-phase frames"
        shared = Stance(tuple(c for c in from_stance.contacts
                              if c.limb in swing[0].active_limbs))
        no_rail = Stance(tuple(c for c in shared.contacts if c.limb != "hand"))
        com = swing[len(swing) // 2].com
        # the single support foot is laterally offset: without the rail the
        # planner's CoM line has no equilibrium at all, with it the full
        # swing phase balances
        assert check_static_equilibrium(shared, (com[0], 0.0), self.model.mass).feasible
        assert not check_static_equilibrium(no_rail, (com[0], 0.0),
                                            self.model.mass).feasible
        assert com_x_interval(no_rail, self.model.mass) is None
        # sagittal expansion: a centred foot plus the rail reaches CoM points
        # far outside the foot polygon, toward and away from the ladder
        foot = _flat("foot", 0.3, 0.0, 0.25)
        ix_foot = com_x_interval(Stance((foot,)), self.model.mass)
        ix_rail = com_x_interval(Stance((foot, rail_grasp())), self.model.mass)
        assert ix_rail[0] < ix_foot[0] - 0.05
        assert ix_rail[1] > ix_foot[1] + 0.05
        outside = ix_foot[0] - 0.05
        assert check_static_equilibrium(Stance((foot, rail_grasp())),
                                        (outside, 0.0), self.model.mass).feasible
        assert not check_static_equilibrium(Stance((foot,)),
                                            (outside, 0.0), self.model.mass).feasible

    def test_full_climb_and_descent_plan(self):
        seq = climb_sequence()
        for a, b in zip(seq.stances, seq.stances[1:]):
            plan = plan_transition(a, b, self.model)
            assert len(plan.frames) == 50
            for f in plan.frames:
                assert f.feasible
        for a, b in zip(seq.reversed().stances, seq.reversed().stances[1:]):
            plan_transition(a, b, self.model)

    def test_one_limb_rule_enforced_on_sequences(self):
        feet_a = (_flat("foot_left", 0, 0.08, 0), _flat("foot_right", 0, -0.08, 0))
        feet_b = (_flat("foot_left", 0.3, 0.08, 0.25), _flat("foot_right", 0.3, -0.08, 0.25))
        with pytest.raises(ValueError):
            ContactSequence((Stance(feet_a), Stance(feet_b)))


class TestCentroidalPreview:
    def test_constant_reference_constant_output(self):
        st = Stance((_flat("foot_left", 0, 0.08, 0), _flat("foot_right", 0, -0.08, 0)))
        ref = np.tile([0.0, 0.78], (100, 1))
        smooth, warnings = centroidal_preview(ref, [st] * 100, 54.0)
        assert np.abs(smooth - ref).max() < 1e-9
        assert warnings == []

    def test_golden_climb_tracks_within_two_cm(self):
        seq = climb_sequence()
        model = PlanarModel()
        frames = []
        stances = []
        for a, b in zip(seq.stances, seq.stances[1:]):
            plan = plan_transition(a, b, model)
            for f in plan.frames:
                frames.append(f.com)
                if set(f.active_limbs) == a.limbs():
                    stances.append(a)
                elif set(f.active_limbs) == b.limbs():
                    stances.append(b)
                else:
                    stances.append(Stance(tuple(c for c in a.contacts
                                                if c.limb in f.active_limbs)))
        ref = np.array(frames)
        smooth, warnings = centroidal_preview(ref, stances, model.mass)
        assert np.abs(smooth - ref).max() < 0.02
        assert warnings == []

    def test_double_differentiated_balance_within_5N(self):
        seq = climb_sequence()
        model = PlanarModel()
        plan = plan_transition(seq.stances[1], seq.stances[2], model)
        ref = plan.com_path()
        stances = [seq.stances[1]] * len(ref)
        smooth, _ = centroidal_preview(ref, stances, model.mass, check=False)
        dt = 0.04
        acc = (smooth[2:] - 2 * smooth[1:-1] + smooth[:-2]) / dt ** 2
        for t in range(1, len(smooth) - 1, 5):
            com3 = np.array([smooth[t, 0], 0.0, smooth[t, 1]])
            acc3 = np.array([acc[t - 1, 0], 0.0, acc[t - 1, 1]])
            assert check_dynamic_feasibility(stances[t], com3, acc3, model.mass,
                                             force_tol=5.0)


class TestStabilizeWrench:
    feet = Stance((_flat("foot_left", 0, 0.1, 0), _flat("foot_right", 0, -0.1, 0)))
    gains = StabilizerGains()

    def test_zero_error_zero_modification(self):
        mod = stabilize_wrench([0.0, 0.78], [0, 0], [0.0, 0.78], [0, 0],
                               self.feet, self.gains)
        for f in mod.per_limb.values():
            assert np.linalg.norm(f) < 1e-6
        assert not mod.saturated

    def test_symmetric_vertical_split(self):
        # demand 50 N of extra lift: symmetric feet take 25 N each
        err = 50.0 / self.gains.kp
        mod = stabilize_wrench([0.0, 0.78 + err], [0, 0], [0.0, 0.78], [0, 0],
                               self.feet, self.gains)
        fl = mod.per_limb["foot_left"]
        fr = mod.per_limb["foot_right"]
        assert fl[2] == pytest.approx(25.0, rel=0.05)
        assert fr[2] == pytest.approx(25.0, rel=0.05)

    def test_pull_demand_allocated_to_rail_pull_member(self):
        stance = Stance((_flat("foot", 0.0, 0.0, 0.0), rail_grasp(x=0.4, z=0.9)))
        # demand a strong downward force at the CoM: feet cannot pull, the
        # rail's downward member must take it
        err = -120.0 / self.gains.kp
        mod = stabilize_wrench([0.0, 0.78 + err], [0, 0], [0.0, 0.78], [0, 0],
                               stance, self.gains, mass=54.0)
        assert mod.per_limb["hand"][2] < -10.0
        assert not mod.saturated

    def test_infeasible_demand_flagged(self):
        # a large horizontal demand exceeds what friction can transmit while
        # the vertical equality pins the normal forces
        err = 2000.0 / self.gains.kp
        mod = stabilize_wrench([err, 0.78], [0, 0], [0.0, 0.78], [0, 0],
                               self.feet, self.gains)
        assert mod.saturated
