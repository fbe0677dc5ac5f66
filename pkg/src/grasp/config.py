"""Flat dotted-key experiment configuration.

Files are `key = value` lines ('#' comments). Unknown keys are rejected.
Environment variables of the form GRASP_<KEY> (dots -> underscores,
uppercase) override file values, for batch sweeps.
"""

import os


class ConfigError(ValueError):
    pass


def _bool(s):
    s = str(s).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _seed_list(s):
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).split(",") if x.strip() != ""]


# key -> (default, parser)
SCHEMA = {
    "env.id": ("collect", str),
    "env.eps": (0.05, float),
    "afford.variant": ("GA", str),
    "afford.K": (4, int),
    "afford.lr": (1e-3, float),
    "afford.frozen": (False, _bool),
    "afford.hidden": (512, int),
    "afford.batch": (8, int),  # root states per affordance update
    "model.state_dim": (64, int),
    "model.hidden": (512, int),
    "model.lr": (1e-4, float),
    "model.unroll_len": (5, int),
    "model.reward_weight": (0.0, float),  # c in the 1 + c*|target| residual weight
    "target.sync_period": (1000, int),
    "plan.mode": ("complete", str),
    "plan.depth": (2, int),
    "plan.tau": (1.0, float),
    "plan.uct_trajectories": (50, int),
    "plan.c1": (1.25, float),
    "plan.c2": (19652.0, float),
    "plan.node_budget": (4096, int),
    "train.gamma": (0.99, float),
    "train.steps": (100000, int),
    "train.batch": (32, int),
    "train.positive_frac": (0.25, float),  # batch fraction drawn from reward-bearing segments
    "train.update_every": (2, int),
    "train.warmup": (1000, int),
    "train.buffer": (200000, int),
    "train.explore_eps": (0.1, float),
    "train.explore_anneal": (20000, int),  # steps to decay exploration from 1 to eps
    "train.eval_interval": (2000, int),
    "train.eval_episodes": (10, int),
    "train.log_interval": (500, int),
    "train.seeds": ([0, 1, 2, 3, 4], _seed_list),
    "train.success_stop": (-1.0, float),  # stop once eval return reaches this; <0 disables
    "run.out_dir": ("runs/out", str),
}


class Config:
    def __init__(self, values=None):
        self._values = {k: v for k, (v, _) in SCHEMA.items()}
        if values:
            for k, v in values.items():
                self.set(k, v)

    def set(self, key, value):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        parser = SCHEMA[key][1]
        try:
            self._values[key] = parser(value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {key}: {value!r} ({e})")

    def __getitem__(self, key):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def items(self):
        return self._values.items()

    def validate(self):
        if self["env.id"] not in ("collect", "pointmass", "reachgoal"):
            raise ConfigError(f"env.id: unknown environment {self['env.id']!r}")
        if self["afford.variant"] not in ("GA", "SA", "A"):
            raise ConfigError(f"afford.variant must be GA, SA or A")
        if self["afford.K"] < 1:
            raise ConfigError("afford.K must be >= 1")
        if not 0.0 < self["train.gamma"] <= 1.0:
            raise ConfigError("train.gamma must be in (0, 1]")
        pc = self.planner_config()
        try:
            pc.validate(self["afford.K"])
        except ValueError as e:
            raise ConfigError(str(e))
        return self

    def planner_config(self):
        from .planner import PlannerConfig

        return PlannerConfig(
            mode=self["plan.mode"],
            depth=self["plan.depth"],
            tau=self["plan.tau"],
            trajectories=self["plan.uct_trajectories"],
            c1=self["plan.c1"],
            c2=self["plan.c2"],
            gamma=self["train.gamma"],
            node_budget=self["plan.node_budget"],
        )

    def resolved_text(self):
        return "".join(f"{k} = {format_value(v)}\n" for k, v in sorted(self._values.items()))


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    return str(v)


def parse_file(path):
    cfg = Config()
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg.set(key, value)
    apply_env_overrides(cfg)
    return cfg


def apply_env_overrides(cfg, environ=None):
    environ = environ if environ is not None else os.environ
    for key in SCHEMA:
        env_key = "GRASP_" + key.upper().replace(".", "_")
        if env_key in environ:
            cfg.set(key, environ[env_key])
    return cfg
