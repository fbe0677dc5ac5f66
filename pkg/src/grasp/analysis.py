"""Post-hoc analyses: switch comparison, affordance rollouts, endpoint checks."""

from dataclasses import dataclass, field

import numpy as np

from .agent import build_env


def rollout(agent, env, obs, goal, head=None, rng=None, record=None):
    """Play one episode to termination.

    head=None uses the planning policy (greedy); head=k executes that
    affordance head's output at every decision point. If `record` is a list,
    per-primitive-step dump rows are appended to it.
    """
    total = 0.0
    terminal = False
    step = 0
    while not terminal:
        if head is None:
            idx, action, _ = agent.act(obs, goal, rng, greedy=True)
        else:
            idx, action = head, agent.head_action(obs, goal, head)
        reward, duration, obs, terminal = env.step(action)
        total += reward
        if record is not None:
            points = getattr(env, "last_trajectory", None)
            if not points:
                points = [obs[:2]]
            vel = obs[2:4] if env.obs_dim >= 4 and not hasattr(env, "objects") else None
            for j, p in enumerate(points):
                last = terminal and j == len(points) - 1
                record.append({
                    "step": step + j, "head_index": idx,
                    "x": p[0], "y": p[1],
                    "u": vel[0] if vel is not None else None,
                    "v": vel[1] if vel is not None else None,
                    "reward": reward if j == len(points) - 1 else 0.0,
                    "event": "terminal" if last else "",
                })
            step += len(points)
        else:
            step += 1
    return total


@dataclass
class SwitchReport:
    planner_returns: np.ndarray          # (n,)
    head_returns: np.ndarray             # (K, n)
    deltas: np.ndarray = field(init=False)  # planner - head, per config
    summary: list = field(init=False)

    def __post_init__(self):
        self.deltas = self.planner_returns[None, :] - self.head_returns
        n = self.planner_returns.shape[0]
        self.summary = []
        for k, d in enumerate(self.deltas):
            mean = float(np.mean(d))
            stderr = float(np.std(d, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            self.summary.append({"head": k, "mean_delta": mean,
                                 "stderr": stderr, "skew": _skew(d)})


def _skew(x):
    s = np.std(x)
    if s == 0.0:
        return 0.0
    return float(np.mean(((x - np.mean(x)) / s) ** 3))


def switch_analysis(agent, n_configs=1000, seed=0):
    """Paired planner-vs-single-head returns on shared start-goal configs."""
    K = agent.afford.K
    if K < 2:
        raise ValueError("switch analysis needs at least 2 affordance heads")
    env = build_env(agent.cfg)
    planner_returns = np.zeros(n_configs)
    head_returns = np.zeros((K, n_configs))
    for j in range(n_configs):
        for k in [None] + list(range(K)):
            rng = np.random.default_rng([seed, j])
            obs, goal = env.reset(rng)
            ret = rollout(agent, env, obs, goal, head=k, rng=rng)
            if k is None:
                planner_returns[j] = ret
            else:
                head_returns[k, j] = ret
    return SwitchReport(planner_returns, head_returns)


def default_grid(n=3, low=0.15, high=0.85):
    xs = np.linspace(low, high, n)
    return np.array([(x, y) for y in xs for x in xs])


def head_rollouts(agent, starts, layout_seed=0, goal_index=0):
    """One option per head from each start; -> (dump rows, trajectories, objects).

    For Collect the object layout is fixed across starts (seeded); for the
    point-mass envs starts are positions with zero initial velocity.
    """
    env = build_env(agent.cfg)
    rows, trajectories = [], []
    objects = None
    for ep, start in enumerate(np.atleast_2d(starts)):
        for k in range(agent.afford.K):
            rng = np.random.default_rng([layout_seed, 17])
            if hasattr(env, "objects") or agent.cfg["env.id"] == "collect":
                obs, goal = env.reset(rng, agent_pos=start, goal_index=goal_index)
                objects = env.objects.copy()
            elif agent.cfg["env.id"] == "pointmass":
                obs, goal = env.reset(rng, start=np.concatenate([start, [0.0, 0.0]]),
                                      goal_index=goal_index)
            else:
                obs, goal = env.reset(rng)
                env.pos = np.array(start, dtype=float)
                obs = env._obs()
            action = agent.head_action(obs, goal, k)
            reward, duration, _, terminal = env.step(action)
            points = [np.asarray(p) for p in env.last_trajectory] or [start]
            trajectories.append((k, np.array([p[:2] for p in points])))
            for j, p in enumerate(points):
                rows.append({
                    "episode": ep * agent.afford.K + k, "step": j, "head_index": k,
                    "x": p[0], "y": p[1], "u": None, "v": None,
                    "reward": reward if j == len(points) - 1 else 0.0,
                    "event": "terminal" if terminal and j == len(points) - 1 else "",
                })
    return rows, trajectories, objects


def endpoint_assignment(agent, grid_n=3, delta=0.1, layout_seed=0):
    """Fraction of grid starts where head endpoints map injectively to objects.

    Collect only. A start counts when every head's option endpoint lies within
    delta of some object and no two heads claim the same one.
    """
    starts = default_grid(grid_n)
    env = build_env(agent.cfg)
    hits = 0
    for start in starts:
        rng = np.random.default_rng([layout_seed, 17])
        obs, goal = env.reset(rng, agent_pos=start, goal_index=0)
        objects = env.objects.copy()
        claimed = set()
        ok = True
        for k in range(agent.afford.K):
            rng = np.random.default_rng([layout_seed, 17])
            obs, goal = env.reset(rng, agent_pos=start, goal_index=0)
            action = agent.head_action(obs, goal, k)
            env.step(action)
            endpoint = env.agent.copy()
            dists = np.linalg.norm(objects - endpoint, axis=1)
            nearest = int(np.argmin(dists))
            if dists[nearest] > delta or nearest in claimed:
                ok = False
                break
            claimed.add(nearest)
        hits += ok
    return hits / len(starts)


def write_trajectory_dump(path, rows, with_velocity):
    cols = ["episode", "step", "head_index", "x", "y"]
    if with_velocity:
        cols += ["u", "v"]
    cols += ["reward", "event"]
    with open(path, "w", newline="") as f:
        f.write(",".join(cols) + "\n")
        for r in rows:
            out = []
            for c in cols:
                v = r.get(c)
                if v is None:
                    out.append("")
                elif isinstance(v, str):
                    out.append(v)
                elif c in ("episode", "step", "head_index"):
                    out.append(str(int(v)))
                else:
                    out.append("%.10g" % v)
            f.write(",".join(out) + "\n")
