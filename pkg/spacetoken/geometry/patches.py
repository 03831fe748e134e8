import numpy as np

from spacetoken.geometry.camera import backproject_array
from spacetoken.geometry.models import (
    WORLD_XY_BOUND,
    WORLD_Z_BOUND,
    CameraRig,
    GeometryError,
    PatchGrid,
)


def _check_tiling(depth: np.ndarray, grid: PatchGrid):
    if depth.shape != (grid.height, grid.width):
        raise GeometryError(
            f"depth map {depth.shape} is not tiled by grid {grid.height}x{grid.width} "
            f"with {grid.patch_size}px patches"
        )


def patch_min_depth(depth: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """[rows, cols] minimum depth over each patch region (foreground wins)."""
    depth = np.asarray(depth)
    _check_tiling(depth, grid)
    p = grid.patch_size
    return depth.reshape(grid.rows, p, grid.cols, p).min(axis=(1, 3))


def patch_coordinates(
    depth: np.ndarray, grid: PatchGrid, camera_index: int, rig: CameraRig
) -> np.ndarray:
    """
    [rows*cols, 3] ego-frame coordinates of every patch, row-major.

    Each patch center is back-projected at the patch's minimum depth; results are
    clamped to the synthetic world bound so far-plane sky patches stay finite.
    """
    camera = rig.camera(camera_index)
    if (camera.height, camera.width) != (grid.height, grid.width):
        raise GeometryError(
            f"grid {grid.height}x{grid.width} does not match camera {camera.name!r} "
            f"{camera.height}x{camera.width}"
        )
    pooled = patch_min_depth(depth, grid)
    points = backproject_array(grid.centers(), pooled.reshape(-1), camera)
    bound = np.array([WORLD_XY_BOUND, WORLD_XY_BOUND, WORLD_Z_BOUND])
    return np.clip(points, -bound, bound)
