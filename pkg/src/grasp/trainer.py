"""Training loop: act, store, model update, affordance update, target syncs.

One process owns everything; determinism comes from per-purpose rng streams
derived from the seed. Metrics land in a CSV with one row per log interval.
"""

import csv
import os

import numpy as np

from . import autodiff as ad
from .agent import Agent, build_env
from .autodiff import Graph, backward
from .model import model_loss, value_targets
from .nn import Adam, NumericsError
from .planner import affordance_objective
from .replay import ReplayBuffer

METRIC_FIELDS = ("step", "episode_return", "episode_len", "model_loss",
                 "value_loss", "reward_loss", "afford_objective", "root_value")


def _fmt(x):
    return "%.10g" % float(x)


class Trainer:
    def __init__(self, cfg, seed, out_dir):
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.agent = Agent(cfg, seed=seed)
        self.env = build_env(cfg)
        self.eval_env = build_env(cfg)
        self.rng_act = np.random.default_rng([seed, 1])
        self.rng_sample = np.random.default_rng([seed, 2])
        self.rng_eval = np.random.default_rng([seed, 3])
        self.buffer = ReplayBuffer(cfg["train.buffer"], self.env.obs_dim,
                                   self.env.goal_dim, self.env.action_dim)
        self.model_opt = Adam(self.agent.model.params(), lr=cfg["model.lr"])
        self.afford_params = self.agent.afford.trainable_params()
        self.afford_opt = Adam(self.afford_params, lr=cfg["afford.lr"])
        self.updates = 0
        self.K = cfg["afford.K"]

    # ------------------------------------------------------------- learning

    def _learn_step(self):
        cfg = self.cfg
        segment = self.buffer.sample_batch(
            cfg["model.unroll_len"], cfg["train.batch"], self.rng_sample,
            positive_frac=cfg["train.positive_frac"])
        targets = value_targets(segment, self.agent.target, cfg["train.gamma"])
        with Graph():
            total, r_loss, v_loss, _ = model_loss(
                segment, self.agent.model, targets,
                reward_weight=cfg["model.reward_weight"])
            self.model_opt.zero_grad()
            backward(total, params=self.model_opt.params)
            self.model_opt.step()
        # the affordance gradient averages over root states, so it tolerates a
        # smaller batch than the model regression; the planner tree (and its
        # backward pass) scale with root count, which dominates step time
        nb = min(cfg["afford.batch"], segment.batch)
        with Graph():
            obj, result = affordance_objective(
                segment.obs[:nb, 0], segment.goal[:nb], self.agent.model,
                self.agent.afford, self.agent.plan_cfg, rng=self.rng_sample)
            if self.afford_params:
                neg = ad.scale(obj, -1.0)
                self.afford_opt.zero_grad()
                backward(neg, params=self.afford_opt.params)
                self.afford_opt.step()
        self.updates += 1
        self.agent.target.updates_since_sync += 1
        if self.agent.target.updates_since_sync >= cfg["target.sync_period"]:
            self.agent.target.sync(self.agent.model, self.agent.afford)
        B = segment.batch
        return {
            "model_loss": total.item(),
            "value_loss": v_loss.item() / B,
            "reward_loss": r_loss.item() / B,
            "afford_objective": obj.item() / nb,
            "root_value": float(result.root_value.data.mean()),
        }

    # ----------------------------------------------------------- evaluation

    def evaluate(self, episodes=None):
        episodes = episodes or self.cfg["train.eval_episodes"]
        returns = []
        successes = []
        for _ in range(episodes):
            obs, goal = self.eval_env.reset(self.rng_eval)
            done = False
            total = 0.0
            while not done:
                _, action, _ = self.agent.act(obs, goal, self.rng_eval, greedy=True)
                r, _, obs, done = self.eval_env.step(action)
                total += r
            returns.append(total)
            successes.append(1.0 if total > 0 else 0.0)
        return float(np.mean(returns)), float(np.mean(successes))

    # ----------------------------------------------------------------- run

    def run(self):
        cfg = self.cfg
        path = os.path.join(self.out_dir, "metrics.csv")
        fields = list(METRIC_FIELDS) + [f"head{k}_frac" for k in range(self.K)] \
            + ["eval_return", "eval_success"]
        writer_file = open(path, "w", newline="")
        writer = csv.writer(writer_file)
        writer.writerow(fields)

        obs, goal = self.env.reset(self.rng_act)
        ep_return, ep_len = 0.0, 0
        finished_returns, finished_lens = [], []
        head_counts = np.zeros(self.K)
        head_total = 0
        learn_stats = {k: float("nan") for k in
                       ("model_loss", "value_loss", "reward_loss",
                        "afford_objective", "root_value")}
        eval_return, eval_success = float("nan"), float("nan")
        action_dim = self.env.action_dim
        episode_id = 0
        stop = cfg["train.success_stop"]

        try:
            for step in range(1, cfg["train.steps"] + 1):
                anneal = cfg["train.explore_anneal"]
                frac = 1.0 - step / anneal if anneal > 0 else 0.0
                eps = max(cfg["train.explore_eps"], frac)
                explore = (len(self.buffer) < cfg["train.warmup"]
                           or self.rng_act.random() < eps)
                if explore:
                    action = self.rng_act.uniform(-1.0, 1.0, size=action_dim)
                else:
                    idx, action, _ = self.agent.act(obs, goal, self.rng_act)
                    head_counts[idx] += 1
                    head_total += 1
                reward, duration, next_obs, terminal = self.env.step(action)
                self.buffer.append(obs, goal, action, reward, duration,
                                   next_obs, terminal, episode_id)
                ep_return += reward
                ep_len += 1
                if terminal:
                    finished_returns.append(ep_return)
                    finished_lens.append(ep_len)
                    ep_return, ep_len = 0.0, 0
                    episode_id += 1
                    obs, goal = self.env.reset(self.rng_act)
                else:
                    obs = next_obs

                if (len(self.buffer) >= cfg["train.warmup"]
                        and step % cfg["train.update_every"] == 0):
                    learn_stats = self._learn_step()

                if cfg["train.eval_interval"] > 0 and step % cfg["train.eval_interval"] == 0:
                    eval_return, eval_success = self.evaluate()

                if step % cfg["train.log_interval"] == 0:
                    fracs = (head_counts / head_total if head_total
                             else np.zeros(self.K))
                    row = [step,
                           _fmt(np.mean(finished_returns) if finished_returns else float("nan")),
                           _fmt(np.mean(finished_lens) if finished_lens else float("nan")),
                           _fmt(learn_stats["model_loss"]),
                           _fmt(learn_stats["value_loss"]),
                           _fmt(learn_stats["reward_loss"]),
                           _fmt(learn_stats["afford_objective"]),
                           _fmt(learn_stats["root_value"])]
                    row += [_fmt(f) for f in fracs]
                    row += [_fmt(eval_return), _fmt(eval_success)]
                    writer.writerow(row)
                    writer_file.flush()
                    finished_returns, finished_lens = [], []
                    head_counts[:] = 0
                    head_total = 0

                if stop >= 0 and eval_success >= stop and not np.isnan(eval_success):
                    break
        except NumericsError:
            self.agent.save(os.path.join(self.out_dir, "checkpoint_abort.grsp"))
            writer_file.close()
            raise
        writer_file.close()
        self.agent.save(os.path.join(self.out_dir, "checkpoint.grsp"))
        return path
