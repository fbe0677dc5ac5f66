"""Goal-reaching double integrator with primitive actions and shaped reward.

One step applies acceleration in [-1, 1]^2 for dt = 0.05; reward is minus the
distance to the per-episode goal position. Episodes run a fixed 200 steps.
"""

import numpy as np


class ReachGoalEnv:
    option_mode = False

    def __init__(self, dt=0.05, max_steps=200):
        self.dt = dt
        self.max_episode_steps = max_steps
        self.obs_dim = 4           # x, y, u, v
        self.goal_dim = 2          # goal position
        self.action_dim = 2
        self._done = True
        self.last_trajectory = []

    def reset(self, rng, start=None, goal=None):
        if start is not None:
            self.pos = np.array(start[:2], dtype=float)
            self.vel = np.array(start[2:], dtype=float)
        else:
            self.pos = rng.uniform(0.1, 0.9, size=2)
            self.vel = np.zeros(2)
        self.goal = (np.array(goal, dtype=float) if goal is not None
                     else rng.uniform(0.1, 0.9, size=2))
        self.steps = 0
        self._done = False
        self.last_trajectory = []
        return self._obs(), self.goal.copy()

    def _obs(self):
        return np.concatenate([self.pos, self.vel])

    def step(self, action):
        if self._done:
            raise RuntimeError("step on a finished episode; call reset first")
        a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        self.last_trajectory = [self.pos.copy()]
        self.vel = np.clip(self.vel + a * self.dt, -1.0, 1.0)
        self.pos = np.clip(self.pos + self.vel * self.dt, 0.0, 1.0)
        self.last_trajectory.append(self.pos.copy())
        self.steps += 1
        reward = -float(np.linalg.norm(self.pos - self.goal))
        terminal = self.steps >= self.max_episode_steps
        self._done = terminal
        return reward, 1, self._obs(), terminal
