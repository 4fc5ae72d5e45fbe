from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beer.envs import DOWN, LEFT, RIGHT, UP, GridWorld, Pendulum, make_env, wrap_angle
from beer.errors import EpisodeFinishedError
from helpers import chi_square_uniform_ok


def bfs_distances(env: GridWorld) -> dict[int, int]:
    """Shortest path lengths to the goal by breadth-first search over the move table."""
    dist = {env.terminal: 0}
    frontier = deque([env.terminal])
    while frontier:
        s = frontier.popleft()
        for p in range(env.n_states):
            if p not in dist and p != env.terminal and any(env.move(p, a) == s for a in range(4)):
                dist[p] = dist[s] + 1
                frontier.append(p)
    return dist


class TestGridWorld:
    def test_enter_goal(self):
        env = GridWorld()
        env.set_state(18)
        t = env.step(RIGHT)
        assert t.reward == 10.0 and t.done and not t.truncated
        assert np.argmax(t.next_state) == 19

    def test_boundary_clamp(self):
        env = GridWorld()
        env.set_state(0)
        t = env.step(UP)
        assert np.argmax(t.next_state) == 0 and t.reward == 0.0 and not t.done

    def test_moves(self):
        env = GridWorld()
        assert env.move(7, UP) == 2 and env.move(7, DOWN) == 12
        assert env.move(7, LEFT) == 6 and env.move(7, RIGHT) == 8
        assert env.move(4, RIGHT) == 4 and env.move(15, DOWN) == 15 and env.move(15, LEFT) == 15

    def test_reset_deterministic(self):
        a, b = GridWorld(), GridWorld()
        assert np.array_equal(a.reset(123), b.reset(123))

    def test_reset_uniform_over_non_terminal(self):
        env = GridWorld()
        rng = np.random.default_rng(0)
        counts = np.zeros(20)
        for _ in range(100_000):
            counts[np.argmax(env.reset(rng))] += 1
        assert counts[19] == 0
        assert chi_square_uniform_ok(counts[:19])

    def test_reachability(self):
        env = GridWorld()
        dist = bfs_distances(env)
        assert set(dist) == set(range(20))
        assert max(dist.values()) <= 7
        for s, d in dist.items():
            row, col = divmod(s, 5)
            assert d == (3 - row) + (4 - col)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_episode_return_in_zero_or_ten(self, seed):
        env = GridWorld()
        rng = np.random.default_rng(seed)
        env.reset(rng)
        total, finished = 0.0, False
        while not finished:
            t = env.step(int(rng.integers(4)))
            assert 0 <= np.argmax(t.next_state) <= 19
            total += t.reward
            finished = t.done or t.truncated
        assert total in (0.0, 10.0)

    def test_step_cap_truncates(self):
        env = GridWorld(max_episode_steps=3)
        env.set_state(0)
        flags = [env.step(UP).truncated for _ in range(3)]
        assert flags == [False, False, True]
        with pytest.raises(EpisodeFinishedError):
            env.step(UP)

    def test_step_after_goal_raises(self):
        env = GridWorld()
        env.set_state(18)
        env.step(RIGHT)
        with pytest.raises(EpisodeFinishedError):
            env.step(LEFT)

    @pytest.mark.parametrize("bad", [-1, 4, 1.5])
    def test_bad_action(self, bad):
        env = GridWorld()
        env.set_state(0)
        with pytest.raises(ValueError):
            env.step(bad)

    def test_determinism(self):
        def trace(seed):
            env = GridWorld()
            rng = np.random.default_rng(seed)
            env.reset(rng)
            out = []
            for a in [3, 3, 1, 0, 2, 1, 1, 3, 3, 3, 1]:
                if env.finished:
                    env.reset(rng)
                t = env.step(a)
                out.append((np.argmax(t.state), t.reward, np.argmax(t.next_state), t.done))
            return out
        assert trace(9) == trace(9)

    def test_state_snapshot(self):
        env = GridWorld()
        env.set_state(6)
        env.step(RIGHT)
        snap = env.get_state()
        other = GridWorld()
        other.load_state(snap)
        assert other.state == env.state
        a, b = other.step(DOWN), env.step(DOWN)
        assert np.array_equal(a.next_state, b.next_state) and a.reward == b.reward


class TestPendulum:
    def test_reset_unit_circle(self):
        env = Pendulum()
        rng = np.random.default_rng(1)
        for _ in range(100):
            obs = env.reset(rng)
            assert abs(obs[0] ** 2 + obs[1] ** 2 - 1.0) <= 1e-12
            assert -1.0 <= obs[2] <= 1.0

    def test_upright_fixed_point(self):
        env = Pendulum()
        env.set_state(0.0, 0.0)
        for _ in range(50):
            t = env.step([0.0])
        assert env.theta == 0.0 and env.theta_dot == 0.0 and t.reward == 0.0

    def test_hand_step(self):
        env = Pendulum()
        env.set_state(0.3, -0.5)
        t = env.step([1.0])
        thdot = -0.5 + 0.05 * (15.0 * np.sin(0.3) + 3.0 * 1.0)
        assert env.theta_dot == pytest.approx(thdot, abs=1e-15)
        assert env.theta == pytest.approx(0.3 + 0.05 * thdot, abs=1e-15)
        assert t.reward == pytest.approx(-(0.09 + 0.1 * 0.25 + 0.001), abs=1e-15)
        assert not t.done

    def test_speed_clamp(self):
        env = Pendulum()
        env.set_state(np.pi / 2, 7.99)
        env.step([2.0])
        assert env.theta_dot == 8.0

    def test_angle_wraps(self):
        assert wrap_angle(np.pi) == pytest.approx(np.pi)
        assert wrap_angle(-np.pi) == pytest.approx(np.pi)
        assert wrap_angle(3 * np.pi / 2) == pytest.approx(-np.pi / 2)

    def test_energy_drift(self):
        env = Pendulum(max_episode_steps=None)
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(50):
            env.set_state(rng.uniform(-np.pi, np.pi), rng.uniform(-1, 1))
            for _ in range(200):
                e0 = env.energy()
                env.step([0.0])
                assert abs(env.theta_dot) < env.max_speed
                worst = max(worst, abs(env.energy() - e0) / e0)
        assert worst < 0.05

    def test_episode_length(self):
        env = Pendulum()
        env.reset(0)
        flags = [env.step([0.0]) for _ in range(200)]
        assert flags[-1].truncated and not any(t.done for t in flags)
        assert not any(t.truncated for t in flags[:-1])
        with pytest.raises(EpisodeFinishedError):
            env.step([0.0])

    @pytest.mark.parametrize("bad", [[2.5], [np.nan], [0.0, 0.0]])
    def test_bad_torque(self, bad):
        env = Pendulum()
        env.reset(0)
        with pytest.raises(ValueError):
            env.step(bad)

    def test_determinism(self):
        def trace():
            env = Pendulum()
            env.reset(42)
            return [env.step([u]).next_state for u in np.linspace(-2, 2, 30)]
        assert all(np.array_equal(a, b) for a, b in zip(trace(), trace()))


def test_make_env():
    assert isinstance(make_env("gridworld"), GridWorld)
    assert isinstance(make_env("pendulum"), Pendulum)
    with pytest.raises(ValueError):
        make_env("cartpole")
