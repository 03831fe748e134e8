import math

import numpy as np
import shapely
from shapely import affinity
from shapely.geometry import Polygon, box

EGO_LENGTH = 4.5
EGO_WIDTH = 2.0


def oriented_box(x: float, y: float, heading: float, length: float, width: float) -> Polygon:
    """Ground footprint of a box centered at (x, y) with its length along ``heading``."""
    footprint = box(-length / 2, -width / 2, length / 2, width / 2)
    footprint = affinity.rotate(footprint, heading, origin=(0.0, 0.0), use_radians=True)
    return affinity.translate(footprint, x, y)


def box_corners(x: float, y: float, heading: float, length: float, width: float) -> np.ndarray:
    """[4, 2] corners, counter-clockwise from the front-left."""
    c, s = math.cos(heading), math.sin(heading)
    local = np.array(
        [
            [length / 2, width / 2],
            [-length / 2, width / 2],
            [-length / 2, -width / 2],
            [length / 2, -width / 2],
        ]
    )
    return local @ np.array([[c, s], [-s, c]]) + np.array([x, y])


def path_headings(points: np.ndarray, initial: float = 0.0) -> np.ndarray:
    """
    Heading at each of [N, 2] points from the displacement out of the previous
    point, starting from the origin; stationary steps keep the previous heading.
    """
    headings = np.empty(len(points))
    previous = np.zeros(2)
    heading = initial
    for i, point in enumerate(points):
        delta = point - previous
        if np.hypot(*delta) > 1e-6:
            heading = math.atan2(delta[1], delta[0])
        headings[i] = heading
        previous = point
    return headings


def union_region(polygons: list[Polygon]) -> shapely.Geometry:
    return shapely.union_all(polygons) if polygons else Polygon()
