"""Lookahead planning over affordance outputs.

Two expansion procedures build a tree of abstract states: a complete K-ary
tree to depth D (level-batched, so a whole minibatch of roots shares one set
of network applications per level) and UCT with H root-to-depth-D
trajectories. The backup keeps Q-values graph-attached, so differentiating
the root value w.r.t. the affordance parameters realizes both the pi-path and
the Q-path of the product rule automatically. Visit-count weights are plain
numbers and never carry gradient.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


@dataclass
class PlannerConfig:
    mode: str = "complete"        # complete | uct
    depth: int = 2
    tau: float = 1.0
    trajectories: int = 50        # H, UCT only
    c1: float = 1.25
    c2: float = 19652.0
    gamma: float = 0.99
    node_budget: int = 4096

    def validate(self, K):
        if self.mode not in ("complete", "uct"):
            raise ValueError(f"plan.mode must be complete or uct, got {self.mode!r}")
        if self.depth < 1:
            raise ValueError("plan.depth must be >= 1")
        if self.mode == "complete":
            nodes = sum(K ** d for d in range(self.depth + 1))
            if nodes > self.node_budget:
                raise ValueError(
                    f"complete tree K={K}, D={self.depth} needs {nodes} nodes "
                    f"> budget {self.node_budget}")


@dataclass
class PlanResult:
    pi: np.ndarray            # (B, K) root policy
    root_value: Tensor        # (B,) graph-attached
    root_q: np.ndarray        # (B, K)
    root_actions: np.ndarray  # (B, K, action_dim)
    node_count: int = 0
    expansions: int = 0


def root_sample(result, rng, greedy=False, row=0):
    """Sample (or argmax) an affordance index at the root; ties -> lowest index."""
    pi = result.pi[row]
    if greedy:
        idx = int(np.argmax(pi))
    else:
        p = pi / pi.sum()
        idx = int(rng.choice(len(p), p=p))
    return idx, result.root_actions[row, idx].copy()


def _repeat_rows(t, k):
    return ad.repeat_rows(t, k)


def _edge_discount(duration, gamma):
    """gamma^n as a tensor in option mode, else the scalar gamma."""
    if duration is None:
        return None
    return ad.texp(ad.scale(duration, math.log(gamma)))


class CompleteTree:
    """Level-batched complete K-ary tree for a batch of B roots.

    Level d holds the states of all B*K^d depth-d nodes; edge quantities at
    level d describe the edges entering those nodes.
    """

    def __init__(self, B, K, depth, goal):
        self.B = B
        self.K = K
        self.depth = depth
        self.goal = goal          # (B, gd) numpy
        self.states = []          # Tensor (B*K^d, m) per level
        self.rewards = [None]     # Tensor (B*K^d,) per level >= 1
        self.durations = [None]
        self.actions = [None]     # Tensor (B*K^d, da) per level >= 1

    @property
    def node_count(self):
        return self.B * sum(self.K ** d for d in range(self.depth + 1))


def expand_complete(s0, goal, model, afford, cfg):
    """Build the complete tree from a (B, m) batch of root states."""
    K = afford.K
    cfg.validate(K)
    B = s0.data.shape[0]
    tree = CompleteTree(B, K, cfg.depth, goal)
    tree.states.append(s0)
    g_level = goal
    for _ in range(cfg.depth):
        s = tree.states[-1]
        r_rows = s.data.shape[0]
        g_t = Tensor(g_level)
        acts = afford(s, g_t)                          # (R, K, da)
        a_flat = ad.reshape(acts, (r_rows * K, afford.action_dim))
        s_rep = _repeat_rows(s, K)
        g_next = np.repeat(g_level, K, axis=0)
        g_rep = Tensor(g_next)
        r, dur = model.reward(s_rep, g_rep, a_flat)
        s_child = model.dynamics(s_rep, g_rep, a_flat)
        tree.actions.append(a_flat)
        tree.rewards.append(r)
        tree.durations.append(dur)
        tree.states.append(s_child)
        g_level = g_next
    return tree


def backup_complete(tree, model, tau, gamma):
    """Softmax-weighted recursive backup; returns a PlanResult for the batch."""
    g_leaf = tree.goal
    for _ in range(tree.depth):
        g_leaf = np.repeat(g_leaf, tree.K, axis=0)
    v = model.value(tree.states[-1], Tensor(g_leaf))   # (B*K^D,)
    pi = q = None
    for d in range(tree.depth, 0, -1):
        disc = _edge_discount(tree.durations[d], gamma)
        if disc is None:
            q_flat = ad.add(tree.rewards[d], ad.scale(v, gamma))
        else:
            q_flat = ad.add(tree.rewards[d], ad.mul(disc, v))
        rows = q_flat.data.shape[0] // tree.K
        q = ad.reshape(q_flat, (rows, tree.K))
        pi = ad.softmax(q, tau=tau, axis=1)
        v = ad.tsum(ad.mul(pi, q), axis=1)
    root_actions = tree.actions[1].data.reshape(tree.B, tree.K, -1)
    return PlanResult(
        pi=pi.data.copy(),
        root_value=v,
        root_q=q.data.copy(),
        root_actions=root_actions,
        node_count=tree.node_count,
        expansions=tree.node_count - tree.B * tree.K ** tree.depth,
    )


# --------------------------------------------------------------------- UCT


class _MinMax:
    def __init__(self):
        self.lo = math.inf
        self.hi = -math.inf

    def update(self, x):
        self.lo = min(self.lo, x)
        self.hi = max(self.hi, x)

    def normalize(self, x):
        if self.hi > self.lo:
            return (x - self.lo) / (self.hi - self.lo)
        return x


@dataclass
class _Edge:
    n: int = 0
    w: float = 0.0
    reward: Tensor = None
    duration: Tensor = None
    child: object = None

    @property
    def q_mean(self):
        return self.w / self.n if self.n else 0.0


class UctNode:
    def __init__(self, state):
        self.state = state        # Tensor (1, m)
        self.actions = None       # Tensor (1, K, da) once expanded
        self.edges = []
        self.visits = 0
        self.leaf_value = None


class UctTree:
    def __init__(self, root, goal, K, depth):
        self.root = root
        self.goal = goal          # (1, gd) numpy
        self.K = K
        self.depth = depth
        self.node_count = 0
        self.expansions = 0


def _ensure_expanded(tree, node, afford):
    if node.actions is None:
        node.actions = afford(node.state, Tensor(tree.goal))
        node.edges = [_Edge() for _ in range(tree.K)]
        tree.expansions += 1


def _select_index(tree, node, is_root, rng, cfg, minmax):
    unvisited = [k for k, e in enumerate(node.edges) if e.n == 0]
    if is_root and unvisited:
        return int(rng.choice(unvisited))
    if node.visits == 0:
        return int(rng.integers(tree.K))
    prior = 1.0 / tree.K
    bonus_scale = (cfg.c1 + math.log((node.visits + cfg.c2 + 1.0) / cfg.c2)) \
        * math.sqrt(node.visits)
    scores = np.empty(tree.K)
    for k, e in enumerate(node.edges):
        qn = minmax.normalize(e.q_mean) if e.n else 0.0
        scores[k] = qn + prior * bonus_scale / (1.0 + e.n)
    return int(np.argmax(scores))


def expand_uct(s0, goal, model, afford, cfg, rng):
    """Roll out H trajectories from a single root (batch of 1)."""
    K = afford.K
    cfg.validate(K)
    tree = UctTree(UctNode(s0), goal, K, cfg.depth)
    tree.node_count = 1
    minmax = _MinMax()
    g_t = Tensor(goal)
    for _ in range(cfg.trajectories):
        node = tree.root
        path = []
        for depth in range(cfg.depth):
            _ensure_expanded(tree, node, afford)
            k = _select_index(tree, node, depth == 0, rng, cfg, minmax)
            edge = node.edges[k]
            if edge.child is None:
                a = ad.tslice(node.actions, (slice(None), k))
                r, dur = model.reward(node.state, g_t, a)
                edge.reward = r
                edge.duration = dur
                edge.child = UctNode(model.dynamics(node.state, g_t, a))
                tree.node_count += 1
            path.append((node, k))
            node = edge.child
        if node.leaf_value is None:
            node.leaf_value = model.value(node.state, g_t)
        ret = float(node.leaf_value.data[0])
        for parent, k in reversed(path):
            e = parent.edges[k]
            if e.duration is not None:
                ret = float(e.reward.data[0]) + cfg.gamma ** float(e.duration.data[0]) * ret
            else:
                ret = float(e.reward.data[0]) + cfg.gamma * ret
            e.n += 1
            e.w += ret
            parent.visits += 1
            minmax.update(e.q_mean)
    return tree


def backup_uct(tree, model, cfg, mode="visit-count"):
    """Recursive backup over the partial tree; visit-count or softmax weights."""
    if mode not in ("visit-count", "softmax"):
        raise ValueError(f"unknown backup mode {mode!r}")
    g_t = Tensor(tree.goal)

    def node_value(node):
        visited = [k for k, e in enumerate(node.edges) if e.n > 0]
        if not visited:
            if node.leaf_value is None:
                node.leaf_value = model.value(node.state, g_t)
            return node.leaf_value, None, None
        qs = []
        for k in visited:
            e = node.edges[k]
            child_v, _, _ = node_value(e.child)
            disc = _edge_discount(e.duration, cfg.gamma)
            if disc is None:
                qs.append(ad.add(e.reward, ad.scale(child_v, cfg.gamma)))
            else:
                qs.append(ad.add(e.reward, ad.mul(disc, child_v)))
        q_row = ad.concat(qs, axis=0)                  # (f,)
        if mode == "softmax":
            pi_row = ad.softmax(q_row, tau=cfg.tau, axis=0)
            v = ad.tsum(ad.mul(pi_row, q_row))
            weights = pi_row.data.copy()
        else:
            counts = np.array([node.edges[k].n for k in visited], dtype=float)
            weights = counts / counts.sum()
            v = ad.tsum(ad.mul(Tensor(weights), q_row))
        v = ad.reshape(v, (1,))
        pi_full = np.zeros(tree.K)
        q_full = np.zeros(tree.K)
        for i, k in enumerate(visited):
            pi_full[k] = weights[i]
            q_full[k] = q_row.data[i]
        return v, pi_full, q_full

    v, pi, q = node_value(tree.root)
    return PlanResult(
        pi=pi.reshape(1, -1),
        root_value=v,
        root_q=q.reshape(1, -1),
        root_actions=tree.root.actions.data.copy(),
        node_count=tree.node_count,
        expansions=tree.expansions,
    )


def plan(s0, goal, model, afford, cfg, rng=None):
    """Expand + backup in the configured mode. s0 is (B, m); UCT needs B == 1."""
    if cfg.mode == "complete":
        tree = expand_complete(s0, goal, model, afford, cfg)
        return backup_complete(tree, model, cfg.tau, cfg.gamma)
    if s0.data.shape[0] != 1:
        raise ValueError("uct planning takes one root at a time")
    tree = expand_uct(s0, goal, model, afford, cfg, rng)
    return backup_uct(tree, model, cfg, mode="visit-count")


def affordance_objective(obs, goal, model, afford, cfg, rng=None):
    """Sum of root values over a batch of observations, to be maximized in theta^A."""
    x = Tensor(obs)
    s0 = model.encode(x)
    if cfg.mode == "complete":
        tree = expand_complete(s0, goal, model, afford, cfg)
        result = backup_complete(tree, model, cfg.tau, cfg.gamma)
        return ad.tsum(result.root_value), result
    total = None
    result = None
    for b in range(obs.shape[0]):
        row = ad.tslice(s0, (slice(b, b + 1),))
        tree = expand_uct(row, goal[b:b + 1], model, afford, cfg, rng)
        result = backup_uct(tree, model, cfg, mode="visit-count")
        piece = ad.tsum(result.root_value)
        total = piece if total is None else ad.add(total, piece)
    return total, result
