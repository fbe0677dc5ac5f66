"""Desk-scale environments with scripted option controllers.

All envs expose the same surface:
  obs_dim, goal_dim, action_dim, option_mode, max_episode_steps
  reset(rng) -> (obs, goal)
  step(action) -> (reward, duration, obs, terminal)

`action` is always a vector in [-1, 1]^action_dim; each env owns the affine
map into its native box. `reward` is the discounted within-option sum and
`duration` the number of primitive steps consumed (both trivial in primitive
mode). `last_trajectory` holds the primitive (x, y) path of the latest step,
for the trajectory dump / overlay figures.
"""

from .collect import CollectEnv
from .pointmass import PointMassEnv
from .reachgoal import ReachGoalEnv

ENVS = {
    "collect": CollectEnv,
    "pointmass": PointMassEnv,
    "reachgoal": ReachGoalEnv,
}


def make_env(name, **kwargs):
    if name not in ENVS:
        raise ValueError(f"unknown env {name!r}; choose from {sorted(ENVS)}")
    return ENVS[name](**kwargs)
