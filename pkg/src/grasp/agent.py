"""Agent bundle: environment wiring, model + affordance module, checkpoints."""

import numpy as np

from . import autodiff as ad
from .afford import AffordanceModule
from .autodiff import Tensor
from .envs import make_env
from .model import TargetModel, ValueEquivalentModel
from .nn import load_checkpoint, save_checkpoint
from .planner import plan, root_sample


def build_env(cfg):
    env_id = cfg["env.id"]
    if env_id == "collect":
        return make_env("collect", eps=cfg["env.eps"], gamma=cfg["train.gamma"])
    if env_id == "pointmass":
        return make_env("pointmass", gamma=cfg["train.gamma"])
    return make_env("reachgoal")


class Agent:
    def __init__(self, cfg, seed=0):
        self.cfg = cfg
        env = build_env(cfg)
        rng = np.random.default_rng([seed, 0xA11CE])
        self.model = ValueEquivalentModel(
            obs_dim=env.obs_dim, goal_dim=env.goal_dim, action_dim=env.action_dim,
            state_dim=cfg["model.state_dim"], hidden=cfg["model.hidden"],
            option_mode=env.option_mode,
            dur_scale=getattr(env, "duration_scale", 1.0), rng=rng)
        self.afford = AffordanceModule(
            cfg["afford.variant"], cfg["afford.K"],
            state_dim=cfg["model.state_dim"], goal_dim=env.goal_dim,
            action_dim=env.action_dim, hidden=cfg["afford.hidden"],
            rng=rng, frozen=cfg["afford.frozen"])
        self.target = TargetModel(self.model, self.afford)
        self.plan_cfg = cfg.planner_config()
        self.env_proto = env

    def named_params(self):
        out = {}
        for p in self.model.params() + self.afford.params():
            out[p.name] = p.data
        return out

    def save(self, path):
        save_checkpoint(path, self.named_params())

    def load(self, path):
        data = load_checkpoint(path)
        for p in self.model.params() + self.afford.params():
            if p.name not in data:
                raise ValueError(f"checkpoint missing parameter {p.name!r}")
            if p.data.shape != data[p.name].shape:
                raise ValueError(
                    f"checkpoint/config mismatch for {p.name!r}: "
                    f"{data[p.name].shape} vs {p.data.shape}")
            p.data = data[p.name].copy()
        self.target.sync(self.model, self.afford)

    def plan_obs(self, obs, goal, rng=None):
        """Plan from a raw observation without recording gradients."""
        with ad.no_grad():
            s0 = self.model.encode(Tensor(obs.reshape(1, -1)))
            return plan(s0, goal.reshape(1, -1), self.model, self.afford,
                        self.plan_cfg, rng=rng)

    def act(self, obs, goal, rng, greedy=False):
        result = self.plan_obs(obs, goal, rng=rng)
        idx, action = root_sample(result, rng, greedy=greedy)
        return idx, action, result

    def head_action(self, obs, goal, head):
        """The given affordance head's output at this observation (policy mode)."""
        with ad.no_grad():
            s0 = self.model.encode(Tensor(obs.reshape(1, -1)))
            acts = self.afford(s0, Tensor(goal.reshape(1, -1)))
        return acts.data[0, head].copy()
