"""
Semantic rasters and z-depth for every camera, by casting one ray per pixel
against the drivable ground and the agents' 3D boxes.
"""

import math

import numpy as np
import shapely

from spacetoken.geometry.models import Camera
from spacetoken.scene_synth.models import CHANNELS, FAR_PLANE_M, Agent, CameraView, Scene

DRIVABLE, AGENT, BACKGROUND = range(len(CHANNELS))


def pixel_rays(camera: Camera) -> tuple[np.ndarray, np.ndarray]:
    """
    Ray origin [3] and directions [H*W, 3] in the ego frame, row-major. Directions
    have unit camera-z component, so a ray parameter is the z-depth of its hit.
    """
    k = camera.intrinsics
    v, u = np.meshgrid(
        np.arange(camera.height) + 0.5, np.arange(camera.width) + 0.5, indexing="ij"
    )
    cam = np.stack(
        [(u.ravel() - k.cx) / k.fx, (v.ravel() - k.cy) / k.fy, np.ones(u.size)], axis=-1
    )
    transform = camera.ego_from_camera
    return transform.t(), cam @ transform.r().T


def ground_hits(
    origin: np.ndarray, directions: np.ndarray, region: shapely.Geometry
) -> np.ndarray:
    """Ray parameter of each drivable ground hit within the far plane, inf otherwise."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(directions[:, 2] < 0, -origin[2] / directions[:, 2], np.inf)
    t = np.where(t <= FAR_PLANE_M, t, np.inf)
    hit = np.isfinite(t)
    if region.is_empty or not hit.any():
        return np.full(len(directions), np.inf)
    points = origin[:2] + directions[hit, :2] * t[hit, None]
    drivable = np.zeros(len(directions), dtype=bool)
    drivable[hit] = shapely.contains_xy(region, points[:, 0], points[:, 1])
    return np.where(drivable, t, np.inf)


def box_hits(
    origin: np.ndarray, directions: np.ndarray, agent: Agent, frame: int
) -> np.ndarray:
    """Slab-method ray parameter of the nearest face of the agent's box, inf on a miss."""
    pose = agent.poses[frame]
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    # ego -> box frame
    to_local = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    center = np.array([pose.x, pose.y, agent.height / 2])
    o = to_local @ (origin - center)
    d = directions @ to_local.T
    d = np.where(np.abs(d) < 1e-12, 1e-12, d)
    half = np.array([agent.length, agent.width, agent.height]) / 2
    t1 = (-half - o) / d
    t2 = (half - o) / d
    near = np.minimum(t1, t2).max(axis=-1)
    far = np.maximum(t1, t2).min(axis=-1)
    hit = (near <= far) & (far > 0)
    t = np.where(near > 0, near, far)
    return np.where(hit & (t <= FAR_PLANE_M), t, np.inf)


def render_camera(scene: Scene, camera: Camera, region: shapely.Geometry) -> CameraView:
    origin, directions = pixel_rays(camera)
    depth = ground_hits(origin, directions, region)
    label = np.where(np.isfinite(depth), DRIVABLE, BACKGROUND)
    frame = scene.current_frame
    # painter's order: farthest agent first, nearer surfaces overwrite
    ordered = sorted(
        scene.agents,
        key=lambda a: -math.hypot(a.poses[frame].x - origin[0], a.poses[frame].y - origin[1]),
    )
    for agent in ordered:
        t = box_hits(origin, directions, agent, frame)
        closer = t < depth
        depth = np.where(closer, t, depth)
        label = np.where(closer, AGENT, label)
    depth = np.where(np.isfinite(depth), depth, FAR_PLANE_M)
    features = np.zeros((len(CHANNELS), camera.height * camera.width), dtype=np.float32)
    features[label, np.arange(label.size)] = 1.0
    return CameraView(
        features=features.reshape(len(CHANNELS), camera.height, camera.width),
        depth=depth.reshape(camera.height, camera.width).astype(np.float32),
    )


def render_views(scene: Scene) -> list[CameraView]:
    region = scene.drivable_region()
    shapely.prepare(region)
    return [render_camera(scene, camera, region) for camera in scene.rig.cameras]
