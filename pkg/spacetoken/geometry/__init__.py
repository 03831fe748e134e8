from spacetoken.geometry.camera import (
    backproject,
    backproject_array,
    default_rig,
    in_frustum,
    project,
    project_array,
)
from spacetoken.geometry.footprint import (
    EGO_LENGTH,
    EGO_WIDTH,
    box_corners,
    oriented_box,
    path_headings,
    union_region,
)
from spacetoken.geometry.models import (
    Camera,
    CameraRig,
    Coordinate3D,
    GeometryError,
    Intrinsics,
    PatchGrid,
    RigidTransform,
)
from spacetoken.geometry.patches import patch_coordinates, patch_min_depth

__all__ = [
    "EGO_LENGTH",
    "EGO_WIDTH",
    "Camera",
    "CameraRig",
    "Coordinate3D",
    "GeometryError",
    "Intrinsics",
    "PatchGrid",
    "RigidTransform",
    "backproject",
    "backproject_array",
    "box_corners",
    "default_rig",
    "in_frustum",
    "oriented_box",
    "patch_coordinates",
    "patch_min_depth",
    "path_headings",
    "project",
    "project_array",
    "union_region",
]
