"""Collect: pick up three objects in the goal-given order on the unit square.

Primitive actions are axis moves of size eps plus a collect action; the
option space is 2-D navigate-and-collect targets. Reward 1 arrives exactly
once, on completing the full permutation; collecting out of order terminates
the episode with reward 0.
"""

import itertools
import math

import numpy as np

PERMS = list(itertools.permutations((0, 1, 2)))


class CollectEnv:
    option_mode = True

    def __init__(self, eps=0.05, gamma=0.99, max_options=100):
        self.eps = eps
        self.gamma = gamma
        self.max_episode_steps = max_options
        self.obs_dim = 11          # agent xy, 3 object xy, 3 collected flags
        self.goal_dim = 6          # one-hot permutation
        self.action_dim = 2
        self.max_option_steps = math.ceil(2.0 / eps) + 1
        self.duration_scale = float(self.max_option_steps)
        self._done = True
        self.last_trajectory = []

    def reset(self, rng, agent_pos=None, object_pos=None, goal_index=None):
        self.agent = (np.array(agent_pos, dtype=float) if agent_pos is not None
                      else rng.uniform(0.05, 0.95, size=2))
        if object_pos is not None:
            self.objects = np.array(object_pos, dtype=float)
        else:
            # resample layouts with objects closer than 2*eps: a collect next
            # to two objects is ambiguous and would make the task unsolvable
            while True:
                self.objects = rng.uniform(0.05, 0.95, size=(3, 2))
                d01 = np.linalg.norm(self.objects[0] - self.objects[1])
                d02 = np.linalg.norm(self.objects[0] - self.objects[2])
                d12 = np.linalg.norm(self.objects[1] - self.objects[2])
                if min(d01, d02, d12) > 2.0 * self.eps:
                    break
        self.collected = np.zeros(3, dtype=bool)
        self.goal_index = int(goal_index) if goal_index is not None else int(rng.integers(6))
        self.perm = PERMS[self.goal_index]
        self.progress = 0
        self.options_used = 0
        self._done = False
        self.last_trajectory = []
        return self._obs(), self._goal()

    def _obs(self):
        return np.concatenate([self.agent, self.objects.ravel(),
                               self.collected.astype(float)])

    def _goal(self):
        g = np.zeros(6)
        g[self.goal_index] = 1.0
        return g

    def _move_toward(self, target):
        # one primitive move: step eps along the axis with the larger gap
        gap = target - self.agent
        axis = 0 if abs(gap[0]) >= abs(gap[1]) else 1
        self.agent[axis] += math.copysign(self.eps, gap[axis])
        self.agent = np.clip(self.agent, 0.0, 1.0)

    def step(self, action):
        """Run one navigate-and-collect option; action in [-1, 1]^2."""
        if self._done:
            raise RuntimeError("step on a finished episode; call reset first")
        target = (np.asarray(action, dtype=float) + 1.0) / 2.0
        steps = 0
        reward_sum = 0.0
        self.last_trajectory = [self.agent.copy()]
        # small slack so exact-arithmetic distances like 0.05 count as >= eps
        while (np.linalg.norm(self.agent - target) >= self.eps - 1e-9
               and steps < self.max_option_steps - 1):
            self._move_toward(target)
            self.last_trajectory.append(self.agent.copy())
            steps += 1
        # the collect action
        steps += 1
        terminal = False
        dists = np.linalg.norm(self.objects - self.agent, axis=1)
        dists[self.collected] = np.inf
        nearest = int(np.argmin(dists))
        if dists[nearest] <= self.eps:
            if nearest == self.perm[self.progress]:
                self.collected[nearest] = True
                self.progress += 1
                if self.progress == 3:
                    reward_sum += self.gamma ** (steps - 1) * 1.0
                    terminal = True
            else:
                terminal = True  # out of order: episode ends with no reward
        self.options_used += 1
        if self.options_used >= self.max_episode_steps:
            terminal = True
        self._done = terminal
        return reward_sum, steps, self._obs(), terminal

    def oracle_option(self):
        """Option vector pointing at the next required object (scripted solver)."""
        target = self.objects[self.perm[self.progress]]
        return np.clip(target * 2.0 - 1.0, -1.0, 1.0)
