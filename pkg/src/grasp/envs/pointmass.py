"""Hierarchical point-mass: cross three fixed waypoints in the goal order.

Double-integrator dynamics on the unit square; the 4-D option space targets
an (x, y, u, v) configuration reached by a scripted PD controller. Reward 1
arrives at termination iff the waypoints were crossed in the required order
(crossing a not-yet-required waypoint is simply ignored).
"""

import itertools

import numpy as np

PERMS = list(itertools.permutations((0, 1, 2)))

WAYPOINTS = np.array([[0.25, 0.25], [0.75, 0.25], [0.5, 0.75]])


class PointMassEnv:
    option_mode = True

    def __init__(self, gamma=0.99, dt=0.05, tolerance=0.1,
                 max_steps=500, option_steps=50, kp=10.0, kd=4.0):
        self.gamma = gamma
        self.dt = dt
        self.tolerance = tolerance
        self.max_primitive_steps = max_steps
        self.max_episode_steps = max_steps  # primitive-step cap, checked inside options
        self.option_steps = option_steps
        self.duration_scale = float(option_steps)
        self.kp = kp
        self.kd = kd
        self.obs_dim = 7           # x, y, u, v, crossed flags
        self.goal_dim = 6
        self.action_dim = 4
        self._done = True
        self.last_trajectory = []

    def reset(self, rng, start=None, goal_index=None):
        if start is not None:
            self.pos = np.array(start[:2], dtype=float)
            self.vel = np.array(start[2:], dtype=float)
        else:
            self.pos = rng.uniform(0.0, 1.0, size=2)
            self.vel = rng.uniform(-0.2, 0.2, size=2)
        self.goal_index = int(goal_index) if goal_index is not None else int(rng.integers(6))
        self.perm = PERMS[self.goal_index]
        self.crossed = np.zeros(3, dtype=bool)
        self.progress = 0
        self.steps = 0
        self._done = False
        self.last_trajectory = []
        return self._obs(), self._goal()

    def _obs(self):
        return np.concatenate([self.pos, self.vel, self.crossed.astype(float)])

    def _goal(self):
        g = np.zeros(6)
        g[self.goal_index] = 1.0
        return g

    def _primitive(self, accel):
        self.vel = np.clip(self.vel + np.clip(accel, -1.0, 1.0) * self.dt, -1.0, 1.0)
        self.pos = np.clip(self.pos + self.vel * self.dt, 0.0, 1.0)
        self.steps += 1
        done_wp = self.perm[self.progress]
        if np.linalg.norm(self.pos - WAYPOINTS[done_wp]) <= self.tolerance:
            self.crossed[done_wp] = True
            self.progress += 1
            if self.progress == 3:
                return 1.0, True
        if self.steps >= self.max_primitive_steps:
            return 0.0, True
        return 0.0, False

    def step(self, action):
        """Run one goto option toward (x, y, u, v); action in [-1, 1]^4."""
        if self._done:
            raise RuntimeError("step on a finished episode; call reset first")
        a = np.asarray(action, dtype=float)
        p_target = (a[:2] + 1.0) / 2.0
        v_target = a[2:]
        reward_sum = 0.0
        n = 0
        terminal = False
        self.last_trajectory = [self.pos.copy()]
        while n < self.option_steps:
            accel = self.kp * (p_target - self.pos) + self.kd * (v_target - self.vel)
            r, terminal = self._primitive(accel)
            self.last_trajectory.append(self.pos.copy())
            n += 1
            reward_sum += self.gamma ** (n - 1) * r
            if terminal:
                break
            if (np.linalg.norm(self.pos - p_target) < 0.05
                    and np.linalg.norm(self.vel - v_target) < 0.1):
                break
        self._done = terminal
        return reward_sum, n, self._obs(), terminal

    def oracle_option(self):
        target = WAYPOINTS[self.perm[self.progress]]
        a = np.zeros(4)
        a[:2] = target * 2.0 - 1.0
        return np.clip(a, -1.0, 1.0)
