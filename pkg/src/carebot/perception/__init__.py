from .camera import CameraModel
from .mesh import TriMesh, bed_mesh, box_mesh, load_obj, save_obj
from .render import DepthImage, load_depth, render_depth, save_depth
from .cloud import PointCloud, unproject
from .icp import (
    IcpParams,
    TrackedPose,
    match_correspondences,
    robot_relative_pose,
    sample_mesh_points,
    solve_point_to_plane,
    track,
)

__all__ = [
    "CameraModel",
    "TriMesh",
    "bed_mesh",
    "box_mesh",
    "load_obj",
    "save_obj",
    "DepthImage",
    "load_depth",
    "render_depth",
    "save_depth",
    "PointCloud",
    "unproject",
    "IcpParams",
    "TrackedPose",
    "match_correspondences",
    "robot_relative_pose",
    "sample_mesh_points",
    "solve_point_to_plane",
    "track",
]
