"""Uniform ring-buffer replay over transitions, with segment sampling that
never straddles an episode boundary."""

import numpy as np

from .model import EpisodeSegment


class WarmupIncompleteError(RuntimeError):
    pass


class ReplayBuffer:
    def __init__(self, capacity, obs_dim, goal_dim, action_dim):
        self.capacity = capacity
        self.size = 0
        self.cursor = 0
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.goal = np.zeros((capacity, goal_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros(capacity)
        self.duration = np.ones(capacity)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.episode = np.full(capacity, -1, dtype=np.int64)

    def __len__(self):
        return self.size

    def append(self, obs, goal, action, reward, duration, next_obs, terminal, episode_id):
        i = self.cursor
        self.obs[i] = obs
        self.next_obs[i] = next_obs
        self.goal[i] = goal
        self.action[i] = action
        self.reward[i] = reward
        self.duration[i] = duration
        self.terminal[i] = terminal
        self.episode[i] = episode_id
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _physical(self, logical):
        # logical 0 = oldest stored transition
        head = (self.cursor - self.size) % self.capacity
        return (head + logical) % self.capacity

    def _segment_valid(self, start, n):
        a = self._physical(start)
        b = self._physical(start + n - 1)
        return self.episode[a] == self.episode[b]

    def sample_segment(self, n, rng):
        """One length-n segment, uniform over valid start indices."""
        return self.sample_batch(n, 1, rng)

    def _positive_starts(self, n):
        """Logical start indices of valid length-n segments that contain at
        least one nonzero-reward transition."""
        head = (self.cursor - self.size) % self.capacity
        phys = np.nonzero(self.reward)[0]
        logical = (phys - head) % self.capacity
        logical = logical[logical < self.size]
        starts = set()
        for l in logical:
            for j in range(n):
                s = int(l) - j
                if 0 <= s <= self.size - n and self._segment_valid(s, n):
                    starts.add(s)
        return sorted(starts)

    def sample_batch(self, n, batch, rng, positive_frac=0.0):
        """Sample `batch` length-n segments. When positive_frac > 0, that
        fraction of the batch (rounded) is drawn uniformly from segments
        containing a nonzero reward, when any exist; the rest is uniform.
        Rare-reward tasks starve the reward and value heads under purely
        uniform sampling, so this acts as a simple oversampling scheme."""
        if self.size < n:
            raise WarmupIncompleteError(
                f"buffer holds {self.size} transitions, need at least {n}")
        starts = []
        if positive_frac > 0.0:
            pos = self._positive_starts(n)
            if pos:
                n_pos = min(batch, int(round(positive_frac * batch)))
                picks = rng.integers(0, len(pos), size=n_pos)
                starts.extend(pos[int(i)] for i in picks)
        tries = 0
        limit = 1000 * batch
        while len(starts) < batch:
            s = int(rng.integers(0, self.size - n + 1))
            if self._segment_valid(s, n):
                starts.append(s)
            tries += 1
            if tries > limit:
                raise WarmupIncompleteError("no valid episode segment of requested length")
        idx = np.array([[self._physical(s + j) for j in range(n)] for s in starts])
        obs = np.concatenate(
            [self.obs[idx], self.next_obs[idx[:, -1:]]], axis=1)
        return EpisodeSegment(
            obs=obs,
            goal=self.goal[idx[:, 0]],
            actions=self.action[idx],
            rewards=self.reward[idx],
            durations=self.duration[idx],
            terminals=self.terminal[idx],
        )
