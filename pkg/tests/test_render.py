import math

import numpy as np
import pytest

from carebot.perception import (
    CameraModel,
    DepthImage,
    bed_mesh,
    box_mesh,
    load_depth,
    load_obj,
    render_depth,
    save_depth,
    save_obj,
    unproject,
)
from carebot.perception.mesh import TriMesh
from carebot.spatial import Pose3


@pytest.fixture(scope="module")
def cam():
    return CameraModel(width=128, height=128)


def square_mesh(z: float, half: float = 0.5):
    """Two triangles spanning [-half, half]^2 at depth z, facing the camera."""
    v = np.array([[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]])
    t = np.array([[0, 2, 1], [0, 3, 2]])
    return TriMesh(v, t)


class TestRender:
    def test_mesh_behind_camera_all_invalid(self, cam):
        img = render_depth(square_mesh(-2.0), Pose3.identity("camera"), cam)
        assert img.valid_count() == 0

    def test_frontoparallel_square_reads_range(self, cam):
        img = render_depth(square_mesh(2.0), Pose3.identity("camera"), cam)
        c = img.depth[cam.height // 2, cam.width // 2]
        assert c == pytest.approx(2.0, abs=2e-3)
        # off-axis pixels read the range along the ray, longer than 2 m
        ys, xs = np.nonzero(img.valid_mask)
        assert img.depth[img.valid_mask].min() >= 2.0 - 1e-6

    def test_zbuffer_keeps_nearest(self, cam):
        near = square_mesh(2.0)
        far = square_mesh(3.0)
        img = render_depth(near.merged(far), Pose3.identity("camera"), cam)
        assert img.depth[cam.height // 2, cam.width // 2] == pytest.approx(2.0, abs=2e-3)
        assert img.depth[img.valid_mask].max() < 3.0 + 1e-5

    def test_depth_range_clipping(self):
        tight = CameraModel(width=64, height=64, depth_min=0.25, depth_max=1.5)
        img = render_depth(square_mesh(2.0), Pose3.identity("camera"), tight)
        assert img.valid_count() == 0

    def test_deterministic(self, cam):
        pose = Pose3.from_axis_angle((1, 0, 0), -0.4, (0.1, 0.6, 2.2), "camera", "obj")
        a = render_depth(bed_mesh(), pose, cam)
        b = render_depth(bed_mesh(), pose, cam)
        assert np.array_equal(a.depth, b.depth)


class TestUnproject:
    def test_frontoparallel_plane_normals(self, cam):
        img = render_depth(square_mesh(2.0), Pose3.identity("camera"), cam)
        cloud = unproject(img)
        n = cloud.dense_normals()
        assert len(n) > 50
        # normals face the camera: (0, 0, -1)
        dots = n @ np.array([0.0, 0.0, -1.0])
        assert np.degrees(np.arccos(np.clip(dots, -1, 1))).max() < 2.0

    def test_plane_points_on_plane(self, cam):
        img = render_depth(square_mesh(2.0), Pose3.identity("camera"), cam)
        cloud = unproject(img)
        pts = cloud.dense_points()
        assert np.abs(pts[:, 2] - 2.0).max() < 2e-3

    def test_empty_image_empty_cloud(self, cam):
        img = DepthImage(cam, np.zeros((cam.height, cam.width), np.float32))
        cloud = unproject(img)
        assert cloud.count == 0

    def test_count_equals_valid_minus_isolates(self, cam):
        pose = Pose3.from_axis_angle((1, 0, 0), -0.5, (0.0, 0.8, 2.0), "camera", "obj")
        img = render_depth(bed_mesh(), pose, cam)
        # inject an isolated pixel far from the bed (inside the fov circle)
        depth = img.depth.copy()
        assert not img.valid_mask[cam.height // 2, 3]
        depth[cam.height // 2, 3] = 1.0
        img2 = DepthImage(cam, depth)
        cloud = unproject(img2)
        assert cloud.point_valid[cam.height // 2, 3]
        assert not cloud.normal_valid[cam.height // 2, 3]
        assert cloud.count < img2.valid_count()


class TestFixtures:
    def test_obj_roundtrip(self, tmp_path):
        mesh = bed_mesh()
        path = tmp_path / "bed.obj"
        save_obj(mesh, path)
        back = load_obj(path)
        np.testing.assert_allclose(back.vertices, mesh.vertices, atol=1e-8)
        np.testing.assert_array_equal(back.triangles, mesh.triangles)

    def test_obj_rejects_quads(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ValueError):
            load_obj(path)

    def test_depth_file_roundtrip(self, tmp_path, cam):
        img = render_depth(square_mesh(2.0), Pose3.identity("camera"), cam)
        path = tmp_path / "frame.dpth"
        save_depth(img, path)
        back = load_depth(path)
        assert back.camera.width == cam.width
        assert back.camera.fov == pytest.approx(cam.fov, abs=1e-6)
        np.testing.assert_array_equal(back.depth, img.depth)

    def test_depth_file_truncation_detected(self, tmp_path, cam):
        img = render_depth(square_mesh(2.0), Pose3.identity("camera"), cam)
        path = tmp_path / "frame.dpth"
        save_depth(img, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(ValueError):
            load_depth(path)

    def test_bad_magic_detected(self, tmp_path):
        path = tmp_path / "junk.dpth"
        path.write_bytes(b"JUNK" + b"\x00" * 64)
        with pytest.raises(ValueError):
            load_depth(path)


class TestBedMesh:
    def test_unit_normals_one_per_face(self):
        mesh = bed_mesh()
        assert mesh.normals.shape == (mesh.n_faces, 3)
        np.testing.assert_allclose(np.linalg.norm(mesh.normals, axis=1), 1.0, atol=1e-9)

    def test_dimensions(self):
        mesh = bed_mesh(length=2.0, width=1.0)
        span = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
        assert span[0] == pytest.approx(2.1, abs=0.01)  # boards stick out
        assert span[1] == pytest.approx(1.0, abs=0.01)
        assert span[2] == pytest.approx(0.9, abs=0.01)

    def test_box_mesh_outward_normals(self):
        mesh = box_mesh((1.0, 1.0, 1.0))
        centers = mesh.vertices[mesh.triangles].mean(axis=1)
        out = np.einsum("ij,ij->i", mesh.normals, centers)
        assert np.all(out > 0)
