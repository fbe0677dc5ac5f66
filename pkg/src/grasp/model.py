"""Value-equivalent model: encoder, dynamics, reward(+duration) and value nets,
n-step value targets with a hard-synced target copy, and the model loss.

The goal vector, when the environment provides one, is carried alongside the
abstract state rather than mixed into the encoder input: dynamics, reward and
value all condition on (s, g). This keeps the planner goal-aware while letting
state-only affordance variants see a genuinely goal-free representation.
"""

import copy
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .nn import MLP, NumericsError


@dataclass
class EpisodeSegment:
    """Length-n slice of one episode, batched: leading axis is the batch."""

    obs: np.ndarray        # (B, n+1, obs_dim)
    goal: np.ndarray       # (B, goal_dim); zero-width when env has no goal
    actions: np.ndarray    # (B, n, action_dim)
    rewards: np.ndarray    # (B, n) discounted within-option sums
    durations: np.ndarray  # (B, n) primitive steps per transition (1 in primitive mode)
    terminals: np.ndarray  # (B, n) bool

    @property
    def batch(self):
        return self.obs.shape[0]

    @property
    def length(self):
        return self.actions.shape[1]


class ValueEquivalentModel:
    def __init__(self, obs_dim, goal_dim, action_dim, state_dim,
                 hidden=512, option_mode=False, dur_scale=1.0, rng=None):
        rng = rng or np.random.default_rng()
        # durations are predicted in units of dur_scale (typically the env's
        # option-step cap) so the duration loss term stays O(1) and does not
        # drown the reward/value gradients in the shared encoder
        self.dur_scale = float(dur_scale)
        self.obs_dim = obs_dim
        self.goal_dim = goal_dim
        self.action_dim = action_dim
        self.state_dim = state_dim
        self.option_mode = option_mode
        m, gd, da, H = state_dim, goal_dim, action_dim, hidden
        self.encoder = MLP([obs_dim, H, H, m], activation="elu",
                           out_activation="tanh", rng=rng, name="model.encoder")
        self.dyn_embed = MLP([m + gd + da, H, H], activation="elu",
                             out_activation="elu", rng=rng, name="model.dyn_embed")
        self.dyn_out = MLP([H, H, m], activation="elu",
                           out_activation="tanh", rng=rng, name="model.dyn_out")
        r_out = 2 if option_mode else 1
        self.reward_net = MLP([m + gd + da, H, r_out], activation="elu",
                              out_activation="none", rng=rng, name="model.reward")
        self.value_net = MLP([m + gd, H, 1], activation="elu",
                             out_activation="none", rng=rng, name="model.value")

    def params(self):
        out = []
        for net in (self.encoder, self.dyn_embed, self.dyn_out,
                    self.reward_net, self.value_net):
            out.extend(net.params())
        return out

    # all methods take/return 2-D tensors: (B, dim)

    def encode(self, x):
        return self.encoder(x)

    def _with_goal(self, s, g):
        return s if self.goal_dim == 0 else ad.concat([s, g], axis=-1)

    def dynamics(self, s, g, a):
        x = ad.concat([self._with_goal(s, g), a], axis=-1)
        return self.dyn_out(self.dyn_embed(x))

    def reward(self, s, g, a):
        """Predicted reward (B,), and predicted option duration (B,) or None."""
        x = ad.concat([self._with_goal(s, g), a], axis=-1)
        out = self.reward_net(x)
        r = ad.tslice(out, (slice(None), 0))
        if not self.option_mode:
            return r, None
        n = ad.scale(ad.softplus(ad.tslice(out, (slice(None), 1))), self.dur_scale)
        return r, n

    def value(self, s, g):
        return ad.tslice(self.value_net(self._with_goal(s, g)), (slice(None), 0))

    def unroll(self, s1, g, actions):
        """Chain dynamics over a (B, n, da) action block.

        Returns (states s_1..s_{n+1}, rewards r^_1..r^_n, values v^_1..v^_{n+1},
        durations n^_1..n^_n); all graph-attached.
        """
        B, n, da = actions.shape
        states = [s1]
        for i in range(n):
            a = Tensor(actions[:, i])
            states.append(self.dynamics(states[-1], g, a))
        if n > 0:
            # one batched reward/duration pass over all (s_i, a_i)
            s_block = ad.concat(states[:n], axis=0)
            g_block = Tensor(np.tile(g.data, (n, 1)))
            a_block = Tensor(actions.transpose(1, 0, 2).reshape(n * B, da))
            r_block, d_block = self.reward(s_block, g_block, a_block)
            rewards = [ad.tslice(r_block, (slice(i * B, (i + 1) * B),)) for i in range(n)]
            durations = [None] * n if d_block is None else \
                [ad.tslice(d_block, (slice(i * B, (i + 1) * B),)) for i in range(n)]
        else:
            rewards, durations = [], []
        sv_block = ad.concat(states, axis=0)
        gv_block = Tensor(np.tile(g.data, (n + 1, 1)))
        v_block = self.value(sv_block, gv_block)
        values = [ad.tslice(v_block, (slice(i * B, (i + 1) * B),)) for i in range(n + 1)]
        return states, rewards, values, durations


class TargetModel:
    """Frozen hard-synced copy of the model and the affordance module."""

    def __init__(self, model, afford):
        self.model = copy.deepcopy(model)
        self.afford = copy.deepcopy(afford)
        self.updates_since_sync = 0
        self.sync(model, afford)

    def sync(self, model, afford):
        for dst, src in zip(self.model.params(), model.params()):
            dst.data = src.data.copy()
            dst.requires_grad = False
        for dst, src in zip(self.afford.params(), afford.params()):
            dst.data = src.data.copy()
            dst.requires_grad = False
        self.updates_since_sync = 0


def value_targets(segment, target, gamma):
    """n-step value targets v^_1..v^_n, shape (B, n), plain numpy.

    v^_j = sum_k gamma^{Delta_k} r_k + gamma^{Delta_boot} max_b Q_target(s_end, b),
    where Delta accumulates observed durations and the bootstrap is dropped
    once a terminal flag is seen.
    """
    B, n = segment.rewards.shape
    model, afford = target.model, target.afford
    with ad.no_grad():
        g = Tensor(segment.goal)
        s_end = model.encode(Tensor(segment.obs[:, n]))
        acts = afford(s_end, g)  # (B, K, da)
        K = acts.data.shape[1]
        s_rep = Tensor(np.repeat(s_end.data, K, axis=0))
        g_rep = Tensor(np.repeat(segment.goal, K, axis=0))
        a_flat = Tensor(acts.data.reshape(B * K, -1))
        r, dur = model.reward(s_rep, g_rep, a_flat)
        s_next = model.dynamics(s_rep, g_rep, a_flat)
        v_next = model.value(s_next, g_rep)
        disc = gamma ** dur.data if dur is not None else gamma
        q = (r.data + disc * v_next.data).reshape(B, K)
        boot = q.max(axis=1)

    # Backward (Horner) recursion: v^_j = r_j + gamma^{Delta_j} v^_{j+1}, with
    # the tail zeroed at terminals. Every op is elementwise, so the result is
    # bit-identical to a per-element scalar evaluation.
    disc = gamma ** segment.durations.astype(float)
    targets = np.zeros((B, n))
    tail = boot
    for j in range(n - 1, -1, -1):
        tail = segment.rewards[:, j] + np.where(segment.terminals[:, j], 0.0,
                                                disc[:, j] * tail)
        targets[:, j] = tail
    return targets


def model_loss(segment, model, targets, reward_weight=0.0):
    """Squared-error model loss; gradients reach theta^M only.

    `reward_weight` c scales each residual by 1 + c*|target|. Sparse-reward
    tasks put almost all probability mass on zero targets, and an unweighted
    regression converges to the base rate long before it fits the rare
    positives; the weighting is gradient-equivalent to oversampling them
    while replay sampling stays uniform.

    Returns (total, reward_loss, value_loss, duration_loss) tensors.
    """
    B, n = segment.rewards.shape
    g = Tensor(segment.goal)
    s1 = model.encode(Tensor(segment.obs[:, 0]))
    _, rewards, values, durations = model.unroll(s1, g, segment.actions)
    r_block = ad.concat(rewards, axis=0)                        # (n*B,)
    v_block = ad.concat(values[:n], axis=0)
    r_flat = segment.rewards.T.reshape(n * B)
    t_flat = targets.T.reshape(n * B)
    r_obs = Tensor(r_flat)
    v_tgt = ad.stop_gradient(Tensor(t_flat))
    w_r = Tensor(1.0 + reward_weight * np.abs(r_flat))
    w_v = Tensor(1.0 + reward_weight * np.abs(t_flat))
    r_loss = ad.tsum(ad.mul(w_r, ad.square(r_block - r_obs)))
    v_loss = ad.tsum(ad.mul(w_v, ad.square(v_block - v_tgt)))
    if model.option_mode:
        d_block = ad.concat(durations, axis=0)
        d_obs = Tensor(segment.durations.T.reshape(n * B).astype(float))
        d_loss = ad.tsum(ad.square(ad.scale(d_block - d_obs, 1.0 / model.dur_scale)))
    else:
        d_loss = Tensor(0.0)
    total = ad.scale(r_loss + v_loss + d_loss, 1.0 / B)
    if not np.isfinite(total.data):
        raise NumericsError("non-finite model loss")
    return total, r_loss, v_loss, d_loss
