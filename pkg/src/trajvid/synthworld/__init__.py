from .scene import SceneSpec, ObjectSpec, make_scene, project, backproject, relative_depth
from .world import WorldState, RobotState, initial_state, step, evaluate_success
from .render import render
from .rollout import Episode, rollout_scripted
from .episodes import save_episode, load_episode, generate_dataset, load_manifest

__all__ = [
    "SceneSpec", "ObjectSpec", "make_scene", "project", "backproject", "relative_depth",
    "WorldState", "RobotState", "initial_state", "step", "evaluate_success",
    "render", "Episode", "rollout_scripted",
    "save_episode", "load_episode", "generate_dataset", "load_manifest",
]
