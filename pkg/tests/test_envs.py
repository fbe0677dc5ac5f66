import numpy as np
import pytest

from grasp.envs import ENVS, make_env
from grasp.envs.collect import PERMS, CollectEnv
from grasp.envs.pointmass import WAYPOINTS, PointMassEnv
from grasp.envs.reachgoal import ReachGoalEnv


class TestRegistry:
    def test_known_envs(self):
        assert set(ENVS) == {"collect", "pointmass", "reachgoal"}
        for name in ENVS:
            env = make_env(name)
            assert env.obs_dim > 0 and env.action_dim > 0

    def test_unknown_env(self):
        with pytest.raises(ValueError, match="unknown env"):
            make_env("atari")


class TestCollect:
    def test_controller_step_count_example(self):
        # agent at (0.5, 0.5), target (0.5, 0.6): two moves then collect
        env = CollectEnv(eps=0.05)
        env.reset(np.random.default_rng(0), agent_pos=(0.5, 0.5),
                  object_pos=[(0.9, 0.9), (0.9, 0.1), (0.1, 0.9)], goal_index=0)
        _, n, _, _ = env.step(np.array([0.5, 0.6]) * 2.0 - 1.0)
        assert n == 3

    def test_zero_distance_target_collects_immediately(self):
        env = CollectEnv(eps=0.05)
        env.reset(np.random.default_rng(0), agent_pos=(0.5, 0.5),
                  object_pos=[(0.52, 0.5), (0.9, 0.1), (0.1, 0.9)], goal_index=0)
        _, n, obs, _ = env.step(np.array([0.5, 0.5]) * 2.0 - 1.0)
        assert n == 1
        assert obs[8] == 1.0  # collected flag for object A

    def test_out_of_order_collect_terminates_without_reward(self):
        env = CollectEnv(eps=0.05)
        env.reset(np.random.default_rng(0), agent_pos=(0.5, 0.5),
                  object_pos=[(0.9, 0.9), (0.5, 0.5), (0.1, 0.9)], goal_index=0)
        r, _, _, terminal = env.step(np.array([0.5, 0.5]) * 2.0 - 1.0)
        assert terminal and r == 0.0

    def test_option_bounded_duration(self):
        env = CollectEnv(eps=0.05)
        rng = np.random.default_rng(1)
        env.reset(rng)
        for _ in range(30):
            _, n, _, terminal = env.step(rng.uniform(-1, 1, 2))
            assert n <= env.max_option_steps
            if terminal:
                env.reset(rng)

    def test_oracle_policy_always_succeeds(self):
        env = CollectEnv(eps=0.05)
        rng = np.random.default_rng(2)
        for _ in range(100):
            env.reset(rng)
            total = 0.0
            done = False
            while not done:
                r, _, _, done = env.step(env.oracle_option())
                total += r
            assert total > 0.0

    def test_total_reward_in_unit_set(self):
        # returns are either 0 or a single discounted collect reward in (0, 1]
        env = CollectEnv(eps=0.05)
        rng = np.random.default_rng(3)
        for _ in range(50):
            env.reset(rng)
            total, done = 0.0, False
            while not done:
                r, _, _, done = env.step(rng.uniform(-1, 1, 2))
                total += r
            assert total == 0.0 or 0.0 < total <= 1.0

    def test_reset_uniformity_chi2(self):
        # agent x,y over a 4x4 grid; chi-square against uniform
        env = CollectEnv()
        rng = np.random.default_rng(4)
        counts = np.zeros((4, 4))
        n = 10000
        for _ in range(n):
            obs, _ = env.reset(rng)
            i = min(int((obs[0] - 0.05) / 0.9 * 4), 3)
            j = min(int((obs[1] - 0.05) / 0.9 * 4), 3)
            counts[i, j] += 1
        expected = n / 16
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < 37.7  # chi2_{0.999, df=15}

    def test_same_rng_state_same_episode(self):
        env = CollectEnv()
        obs1, goal1 = env.reset(np.random.default_rng(7))
        obs2, goal2 = env.reset(np.random.default_rng(7))
        assert np.array_equal(obs1, obs2) and np.array_equal(goal1, goal2)

    def test_step_after_terminal_raises(self):
        env = CollectEnv()
        with pytest.raises(RuntimeError):
            env.step(np.zeros(2))

    def test_goal_onehot_covers_permutations(self):
        env = CollectEnv()
        assert len(PERMS) == 6
        _, goal = env.reset(np.random.default_rng(0), goal_index=4)
        assert goal.tolist() == [0, 0, 0, 0, 1, 0]


class TestPointMass:
    def test_oracle_policy_always_succeeds(self):
        env = PointMassEnv()
        rng = np.random.default_rng(0)
        for _ in range(50):
            env.reset(rng)
            total, done = 0.0, False
            while not done:
                r, _, _, done = env.step(env.oracle_option())
                total += r
            assert total > 0.0

    def test_wrong_order_crossing_ignored(self):
        env = PointMassEnv()
        env.reset(np.random.default_rng(1), start=(0.5, 0.74, 0.0, 0.0),
                  goal_index=0)  # order A,B,C; start on top of C
        a = np.zeros(4)
        a[:2] = WAYPOINTS[2] * 2.0 - 1.0
        env.step(a)
        assert not env.crossed[2] and env.progress == 0

    def test_episode_cap(self):
        env = PointMassEnv()
        env.reset(np.random.default_rng(2), start=(0.0, 1.0, 0.0, 0.0), goal_index=0)
        steps = 0
        done = False
        corner = np.array([-1.0, 1.0, 0.0, 0.0])
        while not done:
            _, n, _, done = env.step(corner)  # loiter away from waypoints
            steps += n
        assert steps <= env.max_primitive_steps

    def test_obs_and_flags(self):
        env = PointMassEnv()
        obs, goal = env.reset(np.random.default_rng(3))
        assert obs.shape == (7,) and goal.shape == (6,)
        assert np.isfinite(obs).all()


class TestReachGoal:
    def test_zero_action_from_rest_keeps_position(self):
        env = ReachGoalEnv()
        obs, goal = env.reset(np.random.default_rng(0))
        env.vel = np.zeros(2)
        r, n, obs2, _ = env.step(np.zeros(2))
        assert np.array_equal(obs2[:2], obs[:2])
        assert r == pytest.approx(-np.linalg.norm(obs[:2] - goal))
        assert n == 1

    def test_max_thrust_monotone_distance_decrease(self):
        env = ReachGoalEnv()
        obs, goal = env.reset(np.random.default_rng(1))
        env.pos = np.array([0.1, 0.1])
        env.vel = np.zeros(2)
        goal = env.goal.copy()
        d_prev = np.linalg.norm(env.pos - goal)
        for _ in range(10):
            direction = goal - env.pos
            a = direction / max(np.abs(direction).max(), 1e-9)
            env.step(a)
            d = np.linalg.norm(env.pos - goal)
            assert d < d_prev
            d_prev = d

    def test_terminal_at_cap(self):
        env = ReachGoalEnv()
        env.reset(np.random.default_rng(2))
        done = False
        steps = 0
        while not done:
            _, _, _, done = env.step(np.zeros(2))
            steps += 1
        assert steps == 200

    def test_no_nan_under_random_actions(self):
        env = ReachGoalEnv()
        rng = np.random.default_rng(3)
        env.reset(rng)
        for _ in range(300):
            _, _, obs, done = env.step(rng.uniform(-1, 1, 2))
            assert np.isfinite(obs).all()
            if done:
                env.reset(rng)
