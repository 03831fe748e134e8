import logging
import math

import numpy as np

from spacetoken.geometry.models import (
    Camera,
    CameraRig,
    Coordinate3D,
    GeometryError,
    Intrinsics,
    RigidTransform,
)

LOGGER = logging.getLogger(__name__)

# Camera axes are x right, y down, z forward; this maps them onto the ego
# frame (x forward, y left, z up) for a camera looking straight ahead.
EGO_FROM_FORWARD_CAMERA = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


def yawed_camera(
    name: str, yaw: float, image_size: int, focal: float, mount: tuple[float, float, float]
) -> Camera:
    c, s = math.cos(yaw), math.sin(yaw)
    yaw_rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    rotation = yaw_rotation @ EGO_FROM_FORWARD_CAMERA
    return Camera(
        name=name,
        intrinsics=Intrinsics(fx=focal, fy=focal, cx=image_size / 2, cy=image_size / 2),
        ego_from_camera=RigidTransform(rotation=rotation.tolist(), translation=list(mount)),
        width=image_size,
        height=image_size,
    )


def default_rig(image_size: int = 64, mount_height: float = 1.6) -> CameraRig:
    """Front and rear cameras with a 90 degree field of view."""
    focal = image_size / 2
    mount = (0.0, 0.0, mount_height)
    return CameraRig(
        cameras=[
            yawed_camera("front", 0.0, image_size, focal, mount),
            yawed_camera("rear", math.pi, image_size, focal, mount),
        ]
    )


def backproject_array(uv: np.ndarray, depth: np.ndarray, camera: Camera) -> np.ndarray:
    """Vectorized back-projection of [N, 2] pixels at [N] z-depths to [N, 3] ego points."""
    depth = np.asarray(depth, dtype=np.float64)
    if np.any(depth <= 0):
        raise GeometryError("back-projection needs strictly positive depth")
    k = camera.intrinsics
    uv = np.asarray(uv, dtype=np.float64)
    points = np.stack(
        [(uv[:, 0] - k.cx) / k.fx * depth, (uv[:, 1] - k.cy) / k.fy * depth, depth], axis=-1
    )
    return camera.ego_from_camera.apply(points)


def backproject(u: float, v: float, d: float, camera_index: int, rig: CameraRig) -> Coordinate3D:
    if d <= 0:
        raise GeometryError(f"back-projection needs positive depth, got {d}")
    camera = rig.camera(camera_index)
    point = backproject_array(np.array([[u, v]]), np.array([d]), camera)[0]
    return Coordinate3D.from_array(point)


def project_array(points: np.ndarray, camera: Camera) -> np.ndarray:
    """[N, 3] ego points to [N, 3] (u, v, z-depth); depth may be non-positive behind the camera."""
    cam = camera.ego_from_camera.apply_inverse(np.asarray(points, dtype=np.float64))
    k = camera.intrinsics
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * cam[:, 0] / z + k.cx
        v = k.fy * cam[:, 1] / z + k.cy
    return np.stack([u, v, z], axis=-1)


def project(c: Coordinate3D, camera_index: int, rig: CameraRig) -> tuple[float, float, float]:
    camera = rig.camera(camera_index)
    u, v, d = project_array(c.as_array()[None], camera)[0]
    if d <= 0:
        raise GeometryError(f"{c} lies behind camera {camera.name!r}")
    return float(u), float(v), float(d)


def in_frustum(points: np.ndarray, camera: Camera) -> np.ndarray:
    uvd = project_array(points, camera)
    return (
        (uvd[:, 2] > 0)
        & (uvd[:, 0] >= 0)
        & (uvd[:, 0] < camera.width)
        & (uvd[:, 1] >= 0)
        & (uvd[:, 1] < camera.height)
    )
