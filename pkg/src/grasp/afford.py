"""K-head affordance module with its three conditioning variants.

GA conditions on abstract state and goal, SA on abstract state alone, and A
on nothing (K learned free vectors). Every head output is tanh-bounded to
[-1, 1]^action_dim; environments own the affine map to their native box.
"""

import numpy as np

from . import autodiff as ad
from .nn import MLP
from .autodiff import Tensor

VARIANTS = ("GA", "SA", "A")


class AffordanceModule:
    def __init__(self, variant, K, state_dim, goal_dim, action_dim,
                 hidden=512, rng=None, frozen=False):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
        if K < 1:
            raise ValueError("affordance head count K must be >= 1")
        if variant == "GA" and goal_dim == 0:
            raise ValueError("GA variant requires a goal-conditioned environment")
        rng = rng or np.random.default_rng()
        self.variant = variant
        self.K = K
        self.state_dim = state_dim
        self.goal_dim = goal_dim
        self.action_dim = action_dim
        self.frozen = frozen
        if variant == "A":
            # K free action vectors, squashed by tanh at call time
            self.free = Tensor(rng.uniform(-0.5, 0.5, size=(K, action_dim)),
                               requires_grad=True, name="afford.free")
            self.trunk = None
            self.heads = []
        else:
            in_dim = state_dim + (goal_dim if variant == "GA" else 0)
            self.trunk = MLP([in_dim, hidden, hidden], activation="elu",
                             out_activation="elu", rng=rng, name="afford.trunk")
            # all K heads fused into one wide tanh layer; output reshaped to
            # (B, K, action_dim) at call time
            self.heads = MLP([hidden, K * action_dim], activation="none",
                             out_activation="tanh", rng=rng, name="afford.heads")
            # break the symmetry of the head layer: with zero biases and a
            # near-zero encoder output every head starts at tanh(0), the
            # centre of the action box. Random biases give each head a
            # distinct, spread-out default target, which matters for early
            # exploration when acting follows the planner.
            self.heads.weights[0].data *= 3.0
            self.heads.biases[0].data = rng.uniform(-1.0, 1.0, K * action_dim)
            self.free = None

    def params(self):
        if self.variant == "A":
            return [self.free]
        return self.trunk.params() + self.heads.params()

    def trainable_params(self):
        return [] if self.frozen else self.params()

    def __call__(self, s, g=None):
        """Map abstract states (B, m) [+ goals (B, gd)] to actions (B, K, action_dim)."""
        if self.variant == "A":
            return ad.tile_batch(ad.tanh(self.free), s.data.shape[0])
        if self.variant == "GA":
            x = ad.concat([s, g], axis=-1)
        else:
            x = s
        h = self.trunk(x)
        flat = self.heads(h)
        return ad.reshape(flat, (flat.data.shape[0], self.K, self.action_dim))


def make_variant(variant, K, state_dim, goal_dim, action_dim,
                 hidden=512, seed=0, frozen=False):
    rng = np.random.default_rng(seed)
    return AffordanceModule(variant, K, state_dim, goal_dim, action_dim,
                            hidden=hidden, rng=rng, frozen=frozen)
