"""Deterministic desk-scale world: pendulum robot, spring-coupled cart,
static fixtures, and a synthetic fisheye depth camera.

All state advances in fixed-order pure float operations, so two runs with
identical inputs produce bitwise-identical logs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..lipm import LipmParams, LipmState, step_plant
from ..locomanip.types import TsdState
from ..perception import CameraModel, DepthImage, bed_mesh, box_mesh, render_depth
from ..perception.icp import forward_camera_chain
from ..perception.mesh import TriMesh
from ..spatial import PlanarPose, Pose3, Twist
from .cart import CartModel, cart_dynamics


class PatientLocation(enum.Enum):
    ON_BED = "on_bed"
    ON_TSD = "on_tsd"
    ON_WHEELCHAIR = "on_wheelchair"


@dataclass(frozen=True)
class GraspCoupling:
    """Spring-damper hand coupling between the robot body and the cart handle."""

    hand_forward: float = 0.55
    spring_k: float = 300.0
    spring_d: float = 150.0
    yaw_k: float = 80.0
    yaw_d: float = 25.0
    max_force: float = 60.0


@dataclass(frozen=True)
class WorldConfig:
    dt: float = 0.005
    camera_period: float = 0.25
    bed_actual: PlanarPose = field(default_factory=lambda: PlanarPose(2.6, 1.2, math.pi / 2))
    wheelchair: PlanarPose = field(default_factory=lambda: PlanarPose(1.0, -1.1, math.pi / 2))
    breaker: PlanarPose = field(default_factory=lambda: PlanarPose(3.5, -2.0, math.pi))
    tsd_start: PlanarPose = field(default_factory=lambda: PlanarPose(0.55, 0.0, 0.0))
    robot_start: PlanarPose = field(default_factory=lambda: PlanarPose(0.0, 0.0, 0.0))
    cart: CartModel = field(default_factory=CartModel)
    grasp: GraspCoupling = field(default_factory=GraspCoupling)
    patient_mass: float = 60.0
    robot_mass: float = 54.0
    lipm: LipmParams = field(default_factory=LipmParams)
    camera: CameraModel = field(default_factory=CameraModel)
    head_height: float = 1.35
    head_pitch: float = math.radians(22.0)
    handle_offset: np.ndarray = field(default_factory=lambda: np.array([-0.25, 0.0]))
    max_depth_derate: float = 0.0  # shortens the usable depth range (risk rehearsal)


@dataclass(frozen=True)
class WorldState:
    time: float
    lipm: LipmState
    body: PlanarPose
    tsd: TsdState
    patient: PatientLocation
    grasping: bool
    hand_force_world: np.ndarray    # applied on the cart (fx, fy), N
    hand_torque: float              # about the cart rotation center, N·m


@dataclass(frozen=True)
class RobotCommands:
    zmp_cmd: np.ndarray
    body_pose: PlanarPose           # commanded body reference (for the hands)
    body_vel: np.ndarray            # commanded CoM velocity (for damping)
    grasping: bool = False
    hand_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))


class SimWorld:
    def __init__(self, config: WorldConfig, seed: int = 0):
        self.config = config
        self.rng = np.random.default_rng(seed)
        start_com = config.robot_start.xy
        self.state = WorldState(
            time=0.0,
            lipm=LipmState.at_rest(start_com),
            body=config.robot_start,
            tsd=TsdState(config.tsd_start),
            patient=PatientLocation.ON_BED,
            grasping=False,
            hand_force_world=np.zeros(2),
            hand_torque=0.0,
        )
        self._static_mesh = self._build_static_mesh()
        self._patient_mesh = box_mesh((0.45, 0.35, 0.9), (0.0, 0.0, 0.45))
        self._camera_chain = forward_camera_chain(config.head_height, config.head_pitch)
        cam = config.camera
        if config.max_depth_derate > 0:
            cam = CameraModel(cam.width, cam.height, cam.fov, cam.depth_min,
                              cam.depth_max - config.max_depth_derate)
        self.camera = cam

    def _build_static_mesh(self) -> TriMesh:
        bed = _transform_mesh(bed_mesh(), self.config.bed_actual)
        chair = _transform_mesh(box_mesh((0.55, 0.55, 0.85), (0.0, 0.0, 0.425)),
                                self.config.wheelchair)
        breaker = _transform_mesh(box_mesh((0.4, 0.25, 0.6), (0.0, 0.0, 1.2)),
                                  self.config.breaker)
        return bed.merged(chair).merged(breaker)

    # -- patient handling (scenario actions) --------------------------------
    def lift_patient(self) -> None:
        if self.state.patient is not PatientLocation.ON_BED:
            raise RuntimeError(f"cannot lift: patient is {self.state.patient.value}")
        tsd = replace(self.state.tsd, loaded=True, load_mass=self.config.patient_mass)
        self.state = replace(self.state, patient=PatientLocation.ON_TSD, tsd=tsd)

    def lower_patient(self) -> None:
        if self.state.patient is not PatientLocation.ON_TSD:
            raise RuntimeError(f"cannot lower: patient is {self.state.patient.value}")
        tsd = replace(self.state.tsd, loaded=False, load_mass=0.0)
        self.state = replace(self.state, patient=PatientLocation.ON_WHEELCHAIR, tsd=tsd)

    # -- dynamics ------------------------------------------------------------
    def step(self, commands: RobotCommands) -> WorldState:
        cfg = self.config
        dt = cfg.dt
        s = self.state
        force_w = np.zeros(2)
        torque = 0.0
        tsd = s.tsd
        if commands.grasping:
            force_w, torque = self._hand_coupling(commands, tsd)
            tsd = cart_dynamics(tsd, cfg.cart, (force_w[0], force_w[1], torque), dt)
        # reaction decelerates the pendulum: equal and opposite to the push
        ext_accel = -force_w / cfg.robot_mass
        lipm = step_plant(s.lipm, commands.zmp_cmd, cfg.lipm, dt, ext_accel=ext_accel)
        body = PlanarPose(float(lipm.com[0]), float(lipm.com[1]), commands.body_pose.yaw)
        self.state = WorldState(
            time=s.time + dt,
            lipm=lipm,
            body=body,
            tsd=tsd,
            patient=s.patient,
            grasping=commands.grasping,
            hand_force_world=force_w,
            hand_torque=torque,
        )
        return self.state

    def _hand_coupling(self, commands: RobotCommands, tsd: TsdState) -> tuple[np.ndarray, float]:
        cfg = self.config.grasp
        body = commands.body_pose
        anchor_local = np.array([cfg.hand_forward, 0.0]) + commands.hand_offset
        anchor = body.transform_point(anchor_local)
        handle = tsd.pose.transform_point(self.config.handle_offset)
        heading = np.array([math.cos(tsd.pose.yaw), math.sin(tsd.pose.yaw)])
        handle_vel = heading * tsd.velocity.vx
        rel_vel = np.asarray(commands.body_vel, dtype=float) - handle_vel
        force = cfg.spring_k * (anchor - handle) + cfg.spring_d * rel_vel
        n = float(np.linalg.norm(force))
        if n > cfg.max_force:
            force = force * (cfg.max_force / n)
        yaw_err = _wrap(body.yaw - tsd.pose.yaw)
        torque = cfg.yaw_k * yaw_err - cfg.yaw_d * tsd.velocity.wz
        rc_world = tsd.pose.transform_point(tsd.rotation_center)
        lever = handle - rc_world
        torque += lever[0] * force[1] - lever[1] * force[0]
        return force, float(torque)

    # -- sensors --------------------------------------------------------------
    def head_camera_pose(self) -> Pose3:
        """world<-camera for the current body pose."""
        body3 = self.state.body.to_pose3("world", "robot")
        return body3.compose(self._camera_chain)

    def camera_chain(self) -> Pose3:
        return self._camera_chain

    def synth_camera_frame(self) -> DepthImage:
        """Fisheye depth render of the fixtures, with the patient occluder
        riding the cart whenever the patient is aboard."""
        mesh = self._static_mesh
        if self.state.patient is PatientLocation.ON_TSD:
            occluder_pose = PlanarPose(self.state.tsd.pose.x, self.state.tsd.pose.y,
                                       self.state.tsd.pose.yaw)
            mesh = mesh.merged(_transform_mesh(self._patient_mesh, occluder_pose))
        cam_world = self.head_camera_pose()
        pose = cam_world.inverse().compose(Pose3.identity("world"))
        return render_depth(mesh, pose, self.camera, timestamp=self.state.time)

    def measured_hand_wrench_body(self) -> np.ndarray:
        """Reaction force on the hands, expressed in the body frame."""
        f = -self.state.hand_force_world
        yaw = self.state.body.yaw
        c, s = math.cos(yaw), math.sin(yaw)
        return np.array([c * f[0] + s * f[1], -s * f[0] + c * f[1]])


def _transform_mesh(mesh: TriMesh, pose: PlanarPose) -> TriMesh:
    p3 = pose.to_pose3("world", "m")
    return TriMesh(p3.transform_point(mesh.vertices), mesh.triangles, mesh.normals)


def _wrap(a: float) -> float:
    while a > math.pi:
        a -= 2 * math.pi
    while a <= -math.pi:
        a += 2 * math.pi
    return a
