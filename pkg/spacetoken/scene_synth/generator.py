import logging
import math

import numpy as np
import shapely
from shapely.geometry import LineString, box

from spacetoken.geometry.camera import default_rig
from spacetoken.geometry.footprint import EGO_LENGTH, EGO_WIDTH, oriented_box
from spacetoken.scene_synth.models import (
    AGENT_DIMENSIONS,
    Agent,
    AgentPose,
    EgoPose,
    PolygonRecord,
    Scene,
    SceneConfig,
    SceneConfigError,
)
from spacetoken.scene_synth.render import render_views
from spacetoken.utils import rng_for

LOGGER = logging.getLogger(__name__)

AGENT_CLASS_WEIGHTS = {"car": 0.6, "truck": 0.2, "pedestrian": 0.2}
AGENT_EXTENT_X = (-40.0, 50.0)
AGENT_EXTENT_Y = (-30.0, 30.0)
ROAD_LENGTH = 120.0
MIN_TURN_CURVATURE = 0.03


def _choice(rng: np.random.Generator, weights: dict[str, float]) -> str:
    keys = sorted(weights)
    return keys[int(rng.choice(len(keys), p=[weights[k] for k in keys]))]


def _step(pose: EgoPose, curvature: float, accel: float, dt: float, max_speed: float) -> EgoPose:
    """Advance a constant-curvature, constant-acceleration unicycle by ``dt`` (negative: rewind)."""
    speed = float(np.clip(pose.speed + accel * dt, 0.0, max_speed))
    distance = 0.5 * (pose.speed + speed) * dt
    h = pose.heading
    if abs(curvature) < 1e-12:
        x = pose.x + distance * math.cos(h)
        y = pose.y + distance * math.sin(h)
        heading = h
    else:
        heading = h + curvature * distance
        x = pose.x + (math.sin(heading) - math.sin(h)) / curvature
        y = pose.y + (math.cos(h) - math.cos(heading)) / curvature
    return EgoPose(x=x, y=y, heading=heading, speed=speed)


def ego_history(rng: np.random.Generator, config: SceneConfig) -> list[EgoPose]:
    """T + 1 poses ending at the origin with heading 0."""
    current = EgoPose(x=0.0, y=0.0, heading=0.0, speed=float(rng.uniform(2.0, 15.0)))
    curvature = float(rng.uniform(-0.05, 0.05))
    accel = float(rng.uniform(-1.0, 1.0))
    poses = [current]
    for _ in range(config.history):
        poses.append(_step(poses[-1], curvature, accel, -config.dt, config.max_speed))
    return poses[::-1]


def ego_future(
    rng: np.random.Generator, config: SceneConfig, command: str, current: EgoPose
) -> list[EgoPose]:
    """H poses from two constant-turn-rate segments; a straight command never turns."""
    sign = {"straight": 0.0, "left": 1.0, "right": -1.0}[command]
    switch = int(rng.integers(0, config.horizon))
    low = min(MIN_TURN_CURVATURE, config.max_curvature)
    turn = sign * float(rng.uniform(low, config.max_curvature))
    accel = float(rng.uniform(-1.5, 1.5))
    poses = []
    pose = current
    for step in range(config.horizon):
        curvature = 0.0 if step < switch else turn
        pose = _step(pose, curvature, accel, config.dt, config.max_speed)
        poses.append(pose)
    return poses


def road_template(
    rng: np.random.Generator, template: str, half_width: float
) -> shapely.Geometry:
    if template == "straight":
        return box(-ROAD_LENGTH / 2, -half_width, ROAD_LENGTH / 2, half_width)
    if template == "curve":
        radius = float(rng.uniform(25.0, 80.0)) * (1 if rng.integers(2) else -1)
        angles = np.linspace(0.0, 1.2, 24)
        arc = [(radius * math.sin(a), radius * (1 - math.cos(a))) for a in angles]
        line = LineString([(-ROAD_LENGTH / 2, 0.0), *arc])
        return line.buffer(half_width)
    offset = float(rng.uniform(10.0, 30.0))
    return shapely.union(
        box(-ROAD_LENGTH / 2, -half_width, ROAD_LENGTH / 2, half_width),
        box(offset - half_width, -ROAD_LENGTH / 2, offset + half_width, ROAD_LENGTH / 2),
    )


def drivable_region(
    rng: np.random.Generator,
    template: str,
    history: list[EgoPose],
    future: list[EgoPose],
    half_width: float,
) -> shapely.Geometry:
    """The road template joined with a lane around the ground-truth ego path."""
    path = LineString([(p.x, p.y) for p in [*history, *future]])
    return shapely.union(road_template(rng, template, half_width), path.buffer(half_width))


def _agent_track(
    rng: np.random.Generator, cls: str, config: SceneConfig, region: shapely.Geometry
) -> Agent | None:
    """A constant-velocity track, or None when a vehicle lands off the road."""
    length, width, height = AGENT_DIMENSIONS[cls]
    x = float(rng.uniform(*AGENT_EXTENT_X))
    y = float(rng.uniform(*AGENT_EXTENT_Y))
    if cls != "pedestrian" and not shapely.contains_xy(region, x, y):
        return None
    if cls == "pedestrian":
        heading = float(rng.uniform(-math.pi, math.pi))
        speed = float(rng.uniform(0.0, 1.5))
    else:
        heading = float(rng.choice([0.0, math.pi])) + float(rng.normal(0.0, 0.1))
        speed = float(rng.uniform(0.0, 10.0))
    vx, vy = speed * math.cos(heading), speed * math.sin(heading)
    frames = range(-config.history, config.horizon + 1)
    poses = [
        AgentPose(x=x + vx * k * config.dt, y=y + vy * k * config.dt, heading=heading)
        for k in frames
    ]
    return Agent(category=cls, length=length, width=width, height=height, poses=poses)


def _conflicts(agent: Agent, placed: list[Agent], ego_boxes: list[shapely.Geometry]) -> bool:
    boxes = [oriented_box(p.x, p.y, p.heading, agent.length, agent.width) for p in agent.poses]
    if any(b.intersects(e) for b, e in zip(boxes, ego_boxes, strict=True)):
        return True
    for other in placed:
        for b, p in zip(boxes, other.poses, strict=True):
            if b.intersects(oriented_box(p.x, p.y, p.heading, other.length, other.width)):
                return True
    return False


def place_agents(
    rng: np.random.Generator,
    config: SceneConfig,
    region: shapely.Geometry,
    ego_poses: list[EgoPose],
) -> list[Agent]:
    """Agents never overlap each other or the ground-truth ego box at any frame."""
    ego_boxes = [oriented_box(p.x, p.y, p.heading, EGO_LENGTH, EGO_WIDTH) for p in ego_poses]
    count = int(rng.integers(config.min_agents, config.max_agents + 1))
    placed: list[Agent] = []
    for i in range(count):
        cls = _choice(rng, AGENT_CLASS_WEIGHTS)
        for _ in range(config.placement_attempts):
            agent = _agent_track(rng, cls, config, region)
            if agent is not None and not _conflicts(agent, placed, ego_boxes):
                placed.append(agent)
                break
        else:
            raise SceneConfigError(
                f"could not place agent {i + 1} of {count} in {config.placement_attempts} attempts"
            )
    return placed


def generate_scene(seed: int, config: SceneConfig | None = None, render: bool = True) -> Scene:
    config = config or SceneConfig()
    config.check_feasible()
    rng = rng_for(seed, 7)
    template = _choice(rng, config.templates)
    command = _choice(rng, config.command_mix)
    history = ego_history(rng, config)
    future = ego_future(rng, config, command, history[-1])
    region = drivable_region(rng, template, history, future, config.road_half_width)
    agents = place_agents(rng, config, region, [*history, *future])
    scene = Scene(
        seed=seed,
        template=template,
        command=command,
        dt=config.dt,
        history=history,
        future=future,
        agents=agents,
        drivable=PolygonRecord.from_geometry(region),
        rig=default_rig(config.image_size),
    )
    if render:
        scene = scene.model_copy(update={"views": render_views(scene)})
    return scene


def generate_scenes(seeds: range | list[int], config: SceneConfig | None = None) -> list[Scene]:
    scenes = []
    for i, seed in enumerate(seeds):
        scenes.append(generate_scene(seed, config))
        if (i + 1) % 100 == 0:
            LOGGER.info(f"Generated {i + 1} scenes")
    return scenes
