"""Scenario configs and the deterministic scenario runner.

A scenario is one YAML file: world fixtures, robot/gait/grasp parameters,
bed-relative routes, and a flat statechart of scripted states (guards plus
entry actions). The runner wires the simulator, the walking controllers,
the perception loop, and the teleop session together on one fixed-order
tick schedule, so a (seed, scenario, command log) triple reproduces
byte-identical logs.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..controllers import (
    AutonomousController,
    ManeuverState,
    SharedState,
    TeleopController,
    TrackSnapshot,
)
from ..lipm import LipmParams, WalkingEngine
from ..lipm.types import GaitConfig, StepTiming
from ..locomanip import (
    GraspConfig,
    HandAdmittance,
    MotionKind,
    PhaseForceTable,
    Waypoint,
    apply_pose_correction,
    build_force_profile,
    plan_tsd_path,
)
from ..locomanip.path import validate_route
from ..logs import LogSet
from ..modes import ModeManager, State, Statechart, SwitchRequest, Transition
from ..perception import IcpParams, TrackedPose, bed_mesh, track
from ..perception.icp import robot_relative_pose
from ..spatial import PlanarPose, Pose3, Twist, wrap_angle
from ..teleop.protocol import ModeSwitch, decode_command
from ..teleop.session import SessionState
from .cart import CartModel
from .sim import GraspCoupling, PatientLocation, RobotCommands, SimWorld, WorldConfig
from ..perception import CameraModel


class ScenarioError(ValueError):
    pass


def _pose(entry, degrees: bool = True) -> PlanarPose:
    x, y, yaw = entry
    return PlanarPose(float(x), float(y), math.radians(float(yaw)) if degrees else float(yaw))


@dataclass
class RouteLeg:
    """Bed-relative leg: positions to drive through plus a final heading."""

    name: str
    points: list              # [(x, y, drive)], bed frame
    final_yaw: float          # bed frame, rad
    loaded: bool = False


@dataclass
class ScenarioStateDef:
    name: str
    mode: str                  # maneuver | stand | teleop | done
    route: Optional[str] = None
    actions: list = field(default_factory=list)
    done_when: dict = field(default_factory=dict)
    next: Optional[str] = None
    timeout: float = 90.0
    tracking: bool = False


@dataclass
class ScenarioConfig:
    name: str
    world: WorldConfig
    gait: GaitConfig
    grasp_hands: GraspConfig
    forces: PhaseForceTable
    feedforward: bool
    bed_nominal: PlanarPose
    routes: dict
    states: list
    initial_state: str
    dock_target: PlanarPose    # world frame
    tsd_speeds: dict
    operator_scripts: dict
    teleop: dict
    timeout: float
    k_dcm: float
    raw: dict


def load_scenario(path) -> ScenarioConfig:
    raw = yaml.safe_load(Path(path).read_text())
    return parse_scenario(raw)


def parse_scenario(raw: dict) -> ScenarioConfig:
    try:
        w = raw["world"]
        lipm = LipmParams(
            z_c=float(raw["robot"].get("z_c", 0.8)),
            dt_ctrl=float(raw["robot"].get("dt_ctrl", 0.005)),
            preview_horizon=float(raw["robot"].get("preview_horizon", 1.6)),
        )
        cam_cfg = w.get("camera", {})
        camera = CameraModel(
            width=int(cam_cfg.get("width", 512)),
            height=int(cam_cfg.get("height", 512)),
            fov=math.radians(float(cam_cfg.get("fov_deg", 120.0))),
            depth_min=float(cam_cfg.get("depth_min", 0.25)),
            depth_max=float(cam_cfg.get("depth_max", 5.0)),
        )
        tsd = w.get("tsd", {})
        world = WorldConfig(
            dt=float(w.get("dt", 0.005)),
            camera_period=float(w.get("camera_period", 0.25)),
            bed_actual=_pose(w["bed_actual"]),
            wheelchair=_pose(w["wheelchair"]),
            breaker=_pose(w.get("breaker", [3.5, -2.0, 180.0])),
            tsd_start=_pose(tsd.get("start", [0.55, 0.0, 0.0])),
            robot_start=_pose(w.get("robot_start", [0.0, 0.0, 0.0])),
            cart=CartModel(
                tare_mass=float(tsd.get("tare_mass", 30.0)),
                caster_mu=float(tsd.get("caster_mu", 0.02)),
                rotation_resistance=float(tsd.get("rotation_resistance", 6.0)),
            ),
            grasp=GraspCoupling(**{k: float(v) for k, v in raw.get("grasp", {}).items()}),
            patient_mass=float(w.get("patient_mass", 60.0)),
            robot_mass=float(raw["robot"].get("mass", 54.0)),
            lipm=lipm,
            camera=camera,
            head_height=float(w.get("head", {}).get("height", 1.35)),
            head_pitch=math.radians(float(w.get("head", {}).get("pitch_deg", 22.0))),
            max_depth_derate=float(cam_cfg.get("derate", 0.0)),
        )
        g = raw.get("gait", {})
        gait = GaitConfig(
            timing=StepTiming(float(g.get("single_support", 0.64)),
                              float(g.get("double_support", 0.16))),
            stance_width=float(g.get("stance_width", 0.19)),
            stride_limit=float(g.get("stride_limit", 0.4)),
            plan_steps=int(g.get("plan_steps", 6)),
        )
        f = raw.get("forces", {})
        forces = PhaseForceTable(
            start_force=tuple(f.get("start", (10.0, 30.0))),
            cruise_force=tuple(f.get("cruise", (6.0, 22.0))),
            turn_force=tuple(f.get("turn", (8.0, 20.0))),
            stop_force=tuple(f.get("stop", (-8.0, -26.0))),
        )
        routes = {}
        for name, spec in raw.get("routes", {}).items():
            pts = [(float(p[0]), float(p[1]), str(p[2]) if len(p) > 2 else "forward")
                   for p in spec["points"]]
            routes[name] = RouteLeg(name, pts, math.radians(float(spec["final_yaw"])),
                                    bool(spec.get("loaded", False)))
        states = []
        for s in raw["scenario"]["states"]:
            states.append(ScenarioStateDef(
                name=s["name"],
                mode=s.get("mode", "stand"),
                route=s.get("route"),
                actions=list(s.get("actions", [])),
                done_when=dict(s.get("done_when", {})),
                next=s.get("next"),
                timeout=float(s.get("timeout", 90.0)),
                tracking=bool(s.get("tracking", False)),
            ))
        dock_rel = _pose(raw["world"].get("dock_target", [0.0, 0.55, -90.0]))
        dock_target = _pose(w["wheelchair"]).compose(dock_rel)
        return ScenarioConfig(
            name=str(raw.get("name", "scenario")),
            world=world,
            gait=gait,
            grasp_hands=GraspConfig.default(),
            forces=forces,
            feedforward=bool(raw.get("feedforward", True)),
            bed_nominal=_pose(w["bed_nominal"]),
            routes=routes,
            states=states,
            initial_state=raw["scenario"].get("initial", states[0].name),
            dock_target=dock_target,
            tsd_speeds=dict(raw.get("tsd_params", {})),
            operator_scripts={k: list(v) for k, v in raw.get("operator_scripts", {}).items()},
            teleop=dict(raw.get("teleop", {})),
            timeout=float(raw.get("timeout", 180.0)),
            k_dcm=float(raw["robot"].get("k_dcm", 3.0)),
            raw=raw,
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario config missing field: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"scenario config invalid: {exc}") from exc


def _segment_time(dist: float, v_max: float, a_max: float, slack: float) -> float:
    """Transit allotment: trapezoid minimum time with slack, never rushed."""
    d = abs(dist)
    if d < v_max * v_max / a_max:
        t_min = 2.0 * math.sqrt(d / a_max)  # triangular profile
    else:
        t_min = d / v_max + v_max / a_max
    return t_min * slack + 0.1


def build_leg_waypoints(start: PlanarPose, leg: RouteLeg, bed: PlanarPose,
                        v_max: float, w_max: float, slack: float = 1.3,
                        a_max: float = 0.25, alpha_max: float = 0.25) -> list:
    """Alternating turn/straight waypoints from the current steer pose
    through bed-relative points, timed from the speed limits."""
    wps = [Waypoint(start, 0.0, MotionKind.STRAIGHT)]
    t = 0.0
    cur = start
    for (bx, by, drive) in leg.points:
        target = bed.transform_point((bx, by))
        dx, dy = target[0] - cur.x, target[1] - cur.y
        dist = math.hypot(dx, dy)
        if dist < 1e-6:
            continue
        heading = math.atan2(dy, dx)
        if drive == "backward":
            heading = wrap_angle(heading + math.pi)
        dyaw = wrap_angle(heading - cur.yaw)
        if abs(dyaw) > 1e-3:
            t += _segment_time(dyaw, w_max, alpha_max, slack)
            cur = PlanarPose(cur.x, cur.y, heading)
            wps.append(Waypoint(cur, t, MotionKind.TURN))
        else:
            # nearly aligned: drive along the current heading and project the
            # target onto it (sub-mm lateral residue would fail validation)
            along = math.cos(cur.yaw) * dx + math.sin(cur.yaw) * dy
            target = (cur.x + math.cos(cur.yaw) * along,
                      cur.y + math.sin(cur.yaw) * along)
            dist = abs(along)
        t += _segment_time(dist, v_max, a_max, slack)
        cur = PlanarPose(float(target[0]), float(target[1]), cur.yaw)
        wps.append(Waypoint(cur, t, MotionKind.STRAIGHT))
    final_yaw = wrap_angle(bed.yaw + leg.final_yaw)
    dyaw = wrap_angle(final_yaw - cur.yaw)
    if abs(dyaw) > 1e-3:
        t += _segment_time(dyaw, w_max, alpha_max, slack)
        cur = PlanarPose(cur.x, cur.y, final_yaw)
        wps.append(Waypoint(cur, t, MotionKind.TURN))
    return wps


def validate_scenario(cfg: ScenarioConfig) -> list:
    """Full cross-reference validation without running."""
    issues = []
    names = {s.name for s in cfg.states}
    if cfg.initial_state not in names:
        issues.append(f"initial state {cfg.initial_state!r} not defined")
    for s in cfg.states:
        if s.next is not None and s.next not in names:
            issues.append(f"state {s.name!r} continues to unknown state {s.next!r}")
        if s.mode == "maneuver" and (s.route is None or s.route not in cfg.routes):
            issues.append(f"state {s.name!r} references unknown route {s.route!r}")
        for action in s.actions:
            if action.get("do") not in _ACTIONS:
                issues.append(f"state {s.name!r}: unknown action {action.get('do')!r}")
    # reachability via the statechart machinery
    try:
        _build_statechart(cfg, context=None, dry=True)
    except Exception as exc:
        issues.append(f"statechart: {exc}")
    # routes must produce valid alternating waypoint lists
    speeds = cfg.tsd_speeds
    v_max = float(speeds.get("v_max", 0.25))
    w_max = float(speeds.get("w_max", 0.25))
    for name, leg in cfg.routes.items():
        wps = build_leg_waypoints(cfg.world.tsd_start, leg, cfg.bed_nominal, v_max, w_max)
        for issue in validate_route(wps):
            issues.append(f"route {name!r}: {issue}")
    return issues


# -- scenario actions ---------------------------------------------------------

def _act_lift_patient(ctx, action):
    ctx.world.lift_patient()
    ctx.shared.log_event("scenario", "patient lifted onto the cart")


def _act_lower_patient(ctx, action):
    ctx.world.lower_patient()
    ctx.shared.log_event("scenario", "patient lowered to the wheelchair")


def _act_grasp(ctx, action):
    ctx.shared.grasping = True
    ctx.shared.log_event("scenario", "hands constrained to the device")


def _act_release(ctx, action):
    ctx.shared.grasping = False
    ctx.shared.maneuver = None
    ctx.shared.log_event("scenario", "hands released")


def _act_request_mode(ctx, action):
    ctx.manager.request_switch(SwitchRequest(action["target"], "scenario", ctx.shared.now))


def _act_correct_route(ctx, action):
    """Perception-aided position adjustment at a designated point."""
    snap = ctx.shared.track
    if snap is None:
        ctx.shared.log_event("correction", "skipped: no track available")
        return
    robot_world = ctx.shared.engine.body_pose_at(ctx.shared.now)
    result = apply_pose_correction(
        snap.bed_in_robot, snap.timestamp, snap.converged, robot_world,
        ctx.bed_estimate, [], now=ctx.shared.now)
    if not result.applied:
        ctx.shared.log_event("correction", f"skipped: {result.reason}")
        return
    ctx.bed_estimate = result.bed_estimate
    dist, dyaw = result.magnitude
    ctx.shared.log_event("correction",
                         f"applied: shift {dist:.3f} m, yaw {math.degrees(dyaw):.2f} deg")


def _act_operator_script(ctx, action):
    name = action["name"]
    script = ctx.cfg.operator_scripts.get(name, [])
    base = ctx.shared.now
    for entry in script:
        if "event" in entry:
            payload = {"event": str(entry["event"])}
        else:
            payload = dict(entry["cmd"])
        ctx.pending_operator.append((base + float(entry["at"]), payload))
    ctx.pending_operator.sort(key=lambda e: e[0])


_ACTIONS = {
    "lift_patient": _act_lift_patient,
    "lower_patient": _act_lower_patient,
    "grasp_tsd": _act_grasp,
    "release_tsd": _act_release,
    "request_mode": _act_request_mode,
    "correct_route": _act_correct_route,
    "operator_script": _act_operator_script,
}


def _guard_for(sdef: ScenarioStateDef, ctx):
    kind = sdef.done_when.get("kind", "time_in_state")

    def maneuver_done(_):
        man = ctx.shared.maneuver
        if man is None:
            return True
        settled = abs(ctx.world.state.tsd.velocity.vx) < 0.01 \
            and abs(ctx.world.state.tsd.velocity.wz) < 0.01
        return man.done(ctx.shared.now) and settled

    def time_in_state(_):
        return ctx.chart.time_in_state(ctx.shared.now) >= float(sdef.done_when.get("t", 1.0))

    def operator_event(_):
        return sdef.done_when.get("name") in ctx.operator_events

    guards = {"maneuver_done": maneuver_done, "time_in_state": time_in_state,
              "operator_event": operator_event}
    if kind not in guards:
        raise ScenarioError(f"state {sdef.name!r}: unknown guard {kind!r}")
    return guards[kind]


def _build_statechart(cfg: ScenarioConfig, context, dry: bool = False) -> Statechart:
    states = []
    for sdef in cfg.states:
        transitions = []
        if sdef.next is not None:
            guard = (lambda _ctx: False) if dry else _guard_for(sdef, context)
            transitions.append(Transition(sdef.next, guard))
        on_enter = None
        if not dry:
            def on_enter(ctx, _sdef=sdef):
                context.enter_state(_sdef)
        states.append(State(sdef.name, transitions, on_enter=on_enter))
    return Statechart(states, cfg.initial_state)


@dataclass
class ScenarioReport:
    name: str
    completed: bool
    failure: Optional[str]
    phase_times: dict
    dock_error_m: float
    dock_error_deg: float
    dcm_err_peak_loaded: float
    track_frames: int
    track_converged_fraction: float
    switch_latencies: list
    wall_time: float
    checksums: dict
    seed: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "completed": self.completed,
            "failure": self.failure,
            "phase_times": self.phase_times,
            "dock_error_m": round(self.dock_error_m, 6),
            "dock_error_deg": round(self.dock_error_deg, 4),
            "dcm_err_peak_loaded": round(self.dcm_err_peak_loaded, 6),
            "track_frames": self.track_frames,
            "track_converged_fraction": round(self.track_converged_fraction, 4),
            "switch_latencies": [round(v, 4) for v in self.switch_latencies],
            "checksums": self.checksums,
            "seed": self.seed,
        }


class _RunContext:
    def __init__(self, cfg: ScenarioConfig, world: SimWorld, shared: SharedState,
                 manager: ModeManager, autonomous: AutonomousController):
        self.cfg = cfg
        self.world = world
        self.shared = shared
        self.manager = manager
        self.autonomous = autonomous
        self.bed_estimate = cfg.bed_nominal
        self.chart: Optional[Statechart] = None
        self.pending_operator: list = []
        self.operator_events: set = set()
        self.tracking_enabled = False
        self.phase_times: dict = {}
        self.failure: Optional[str] = None
        self.current_def: Optional[ScenarioStateDef] = None

    def enter_state(self, sdef: ScenarioStateDef) -> None:
        self.current_def = sdef
        self.phase_times.setdefault(sdef.name, self.shared.now)
        self.tracking_enabled = sdef.tracking
        self.shared.log_event("phase", sdef.name)
        if sdef.mode != "maneuver":
            self.shared.maneuver = None
        for action in sdef.actions:
            _ACTIONS[action["do"]](self, action)
        if sdef.mode == "maneuver":
            self._start_leg(self.cfg.routes[sdef.route])
        # stand states simply command zero twist: the engine steps in place,
        # which keeps the DCM loop seamless (no support-polygon jumps)

    def _start_leg(self, leg: RouteLeg) -> None:
        speeds = self.cfg.tsd_speeds
        v_max = float(speeds.get("v_max", 0.25))
        a_max = float(speeds.get("a_max", 0.25))
        w_max = float(speeds.get("w_max", 0.25))
        al_max = float(speeds.get("alpha_max", 0.25))
        start = self.world.state.tsd.pose
        wps = build_leg_waypoints(start, leg, self.bed_estimate, v_max, w_max)
        traj = plan_tsd_path(wps, dt=0.02, v_max=v_max, a_max=a_max,
                             w_max=w_max, alpha_max=al_max)
        profile = build_force_profile(traj, self.cfg.forces, leg.loaded)
        offset = PlanarPose(-self.cfg.world.grasp.hand_forward - 0.25, 0.0, 0.0)
        self.shared.maneuver = ManeuverState(traj, profile, self.shared.now, offset,
                                             leg.loaded)
        self.shared.log_event("leg", f"{leg.name}: {traj.duration:.1f} s")


def run_scenario(cfg: ScenarioConfig, seed: int = 0, out_dir=None,
                 realtime: bool = False, teleop_server=None) -> ScenarioReport:
    t_wall = _time.perf_counter()
    world = SimWorld(cfg.world, seed=seed)
    engine = WalkingEngine(cfg.world.lipm, gait=cfg.gait, k_dcm=cfg.k_dcm,
                           body0=cfg.world.robot_start)
    shared = SharedState(engine=engine, measured=world.state.lipm,
                         robot_mass=cfg.world.robot_mass,
                         feedforward_enabled=cfg.feedforward)
    manager = ModeManager(shared)
    autonomous = AutonomousController()
    teleop = TeleopController()
    manager.register_controller(autonomous)
    manager.register_controller(teleop)
    engine.zmp_shift_fn = lambda times: autonomous.zmp_shift(shared, times)

    ctx = _RunContext(cfg, world, shared, manager, autonomous)
    ctx.chart = _build_statechart(cfg, ctx)
    logs = LogSet(out_dir) if out_dir is not None else None

    mesh = bed_mesh()
    icp_params = IcpParams()
    bed_prior: Optional[TrackedPose] = None
    prior_cam_world: Optional[Pose3] = None
    camera_chain = world.camera_chain()
    cam_every = max(1, int(round(cfg.world.camera_period / cfg.world.dt)))

    dt = cfg.world.dt
    tick = 0
    dcm_peak_loaded = 0.0
    track_rows = 0
    track_converged = 0
    request_times: dict = {}
    latencies: list = []

    ctx.chart.reset(0.0, ctx)
    done = False
    while not done:
        now = world.state.time
        shared.now = now
        shared.measured = world.state.lipm

        # perception loop (every Nth tick, when the phase wants tracking)
        if ctx.tracking_enabled and tick % cam_every == 0:
            frame = world.synth_camera_frame()
            cam_world = world.head_camera_pose()
            if bed_prior is None:
                nominal_bed3 = ctx.bed_estimate.to_pose3("world", "bed")
                prior_pose = cam_world.inverse().compose(nominal_bed3)
            else:
                # chain the previous optimum through the known camera motion
                prior_pose = cam_world.inverse().compose(prior_cam_world)                     .compose(bed_prior.pose)
            prior = TrackedPose(prior_pose, now, 0.0, 1.0, True)
            result = track(frame, mesh, prior, icp_params)
            if result.converged:
                bed_prior = result
                prior_cam_world = cam_world
            elif bed_prior is not None:
                # hold the motion-compensated prior as the new belief anchor
                bed_prior = TrackedPose(prior_pose, now, bed_prior.residual,
                                        bed_prior.inlier_fraction, True)
                prior_cam_world = cam_world
            planar = robot_relative_pose(result, camera_chain)
            shared.track = TrackSnapshot(planar, now, result.converged)
            track_rows += 1
            track_converged += int(result.converged)
            if logs:
                logs.write("track.csv", [now, *result.pose.rotation,
                                         *result.pose.translation, result.residual,
                                         result.inlier_fraction, result.converged])

        # operator inputs: scripted first, then the live server
        while ctx.pending_operator and ctx.pending_operator[0][0] <= now:
            _, doc = ctx.pending_operator.pop(0)
            if "event" in doc:
                ctx.operator_events.add(doc["event"])
                shared.log_event("operator", f"event {doc['event']}")
                continue
            import json as _json
            cmd = decode_command(_json.dumps(doc).encode())
            _apply_operator(cmd, shared, manager, ctx, now, request_times)
        if teleop_server is not None:
            for cmd in teleop_server.drain_commands():
                _apply_operator(cmd, shared, manager, ctx, now, request_times)

        # scenario statechart
        fired = ctx.chart.step(ctx, now)
        if ctx.current_def is not None and ctx.current_def.mode == "done":
            done = True
        if ctx.current_def is not None and \
                ctx.chart.time_in_state(now) > ctx.current_def.timeout:
            ctx.failure = f"phase {ctx.chart.current!r} timed out"
            break
        if now > cfg.timeout:
            ctx.failure = "scenario timeout"
            break

        # control tick through the mode manager
        result = manager.tick(now)
        out = manager.active.last_output
        for rec in result.switches:
            if not rec.no_op:
                latencies.append(rec.executed_at - rec.request.timestamp)

        # hand admittance against the measured cart reaction
        hand_offset = np.zeros(2)
        desired = np.zeros(2)
        measured_applied = -world.measured_hand_wrench_body()
        if shared.grasping and shared.maneuver is not None:
            man = shared.maneuver
            wrench = man.profile.sample(man.elapsed(now)) if man.profile is not None else np.zeros(3)
            desired = wrench[:2]
            hand_offset = shared.hand_admittance.update(desired, measured_applied, dt)
        shared.desired_hand_force = desired
        shared.measured_hand_force = measured_applied

        dcm_err = float(np.linalg.norm(shared.measured.dcm - out.dcm_ref))
        if world.state.tsd.loaded:
            dcm_peak_loaded = max(dcm_peak_loaded, dcm_err)

        cmds = RobotCommands(
            zmp_cmd=out.zmp_cmd,
            body_pose=out.body_pose,
            body_vel=out.com_vel_cmd,
            grasping=shared.grasping,
            hand_offset=hand_offset,
        )
        state = world.step(cmds)

        if logs:
            logs.write("walking.csv", [
                now, *shared.measured.com, *shared.measured.com_vel, *out.zmp_cmd,
                *shared.measured.zmp, *shared.measured.dcm, dcm_err,
                "ds" if out.double_support else "ss", result.controller])
            logs.write("tsd.csv", [
                now, state.tsd.pose.x, state.tsd.pose.y, state.tsd.pose.yaw,
                state.tsd.velocity.vx, state.tsd.velocity.wz, *desired,
                *measured_applied, *engine_shift(autonomous, shared, now),
                state.tsd.loaded])
            logs.write("modes.csv", [now, result.controller, ctx.chart.current,
                                     *result.commanded, result.fault or ""])

        tick += 1
        if realtime:
            lag = world.state.time - (_time.perf_counter() - t_wall)
            if lag > 0:
                _time.sleep(min(lag, 0.05))

    # flush events and build the report
    completed = done and ctx.failure is None
    if logs:
        for (t_e, kind, detail) in shared.events:
            logs.write("events.csv", [t_e, kind, detail])
    checksums = logs.close() if logs else {}
    dock_err = world.state.tsd.pose.distance_to(cfg.dock_target)
    dock_yaw = math.degrees(world.state.tsd.pose.yaw_to(cfg.dock_target))
    report = ScenarioReport(
        name=cfg.name,
        completed=completed,
        failure=ctx.failure,
        phase_times={k: round(v, 3) for k, v in ctx.phase_times.items()},
        dock_error_m=dock_err,
        dock_error_deg=dock_yaw,
        dcm_err_peak_loaded=dcm_peak_loaded,
        track_frames=track_rows,
        track_converged_fraction=(track_converged / track_rows) if track_rows else 0.0,
        switch_latencies=latencies,
        wall_time=_time.perf_counter() - t_wall,
        checksums=checksums,
        seed=seed,
    )
    if out_dir is not None:
        report_path = Path(out_dir) / "report.yaml"
        payload = report.to_dict()
        payload["wall_time"] = round(report.wall_time, 2)
        report_path.write_text(yaml.safe_dump(payload, sort_keys=True))
    return report


def engine_shift(autonomous: AutonomousController, shared: SharedState, now: float):
    shift = autonomous.zmp_shift(shared, np.array([now]))
    return shift[0]


def _apply_operator(cmd, shared: SharedState, manager: ModeManager, ctx: _RunContext,
                    now: float, request_times: dict) -> None:
    if isinstance(cmd, ModeSwitch):
        manager.request_switch(SwitchRequest(cmd.target, "operator", now))
        return
    shared.session.apply(cmd, now)
