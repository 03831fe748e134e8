from spacetoken.scene_synth.dataset import load_dataset, read_dataset, write_dataset
from spacetoken.scene_synth.generator import generate_scene, generate_scenes
from spacetoken.scene_synth.models import (
    COMMANDS,
    DATA_VERSION,
    FAR_PLANE_M,
    Agent,
    AgentPose,
    CameraView,
    DatasetError,
    EgoPose,
    EgoStatusRecord,
    Scene,
    SceneConfig,
    SceneConfigError,
    ego_feature_width,
)
from spacetoken.scene_synth.render import render_views

__all__ = [
    "COMMANDS",
    "DATA_VERSION",
    "FAR_PLANE_M",
    "Agent",
    "AgentPose",
    "CameraView",
    "DatasetError",
    "EgoPose",
    "EgoStatusRecord",
    "Scene",
    "SceneConfig",
    "SceneConfigError",
    "ego_feature_width",
    "generate_scene",
    "generate_scenes",
    "load_dataset",
    "read_dataset",
    "render_views",
    "write_dataset",
]
