import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gogar_rl.errors import InvalidIndexError, ParameterError, TerminalStateError, ValidationError
from gogar_rl.fixtures import chain, gridworld, random_mdp, random_walk
from gogar_rl.mdp import (
    Mdp,
    discounted_return,
    generate_episode,
    optimal_action_sets,
    step,
    unique_optimal_states,
    value_iteration,
)


def two_state_chain():
    T = np.zeros((2, 1, 2))
    T[0, 0, 1] = 1.0
    R = np.zeros((2, 1, 2))
    R[0, 0, 1] = 1.0
    return Mdp(T, R, 0.9, terminals=[1], start_dist=[1.0, 0.0])


def line_chain(n):
    T = np.zeros((n, 1, n))
    for s in range(n - 1):
        T[s, 0, s + 1] = 1.0
    return Mdp(T, np.zeros_like(T), 0.9, terminals=[n - 1], start_dist=np.eye(n)[0])


def always(a):
    return lambda s, rng: a


class TestMdpValidation:
    def test_row_sum(self):
        T = np.zeros((2, 1, 2))
        T[0, 0, 1] = 0.9
        with pytest.raises(ValidationError, match="row sum"):
            Mdp(T, np.zeros_like(T), 0.9, terminals=[1])

    def test_negative_probability(self):
        T = np.zeros((2, 1, 2))
        T[0, 0] = (1.5, -0.5)
        with pytest.raises(ValidationError, match="row sum"):
            Mdp(T, np.zeros_like(T), 0.9, terminals=[1])

    def test_terminal_reward(self):
        T = np.zeros((2, 1, 2))
        T[0, 0, 1] = 1.0
        R = np.zeros_like(T)
        R[1, 0, 1] = 1.0
        with pytest.raises(ValidationError, match="terminal reward"):
            Mdp(T, R, 0.9, terminals=[1])

    def test_terminal_must_self_loop(self):
        T = np.zeros((2, 1, 2))
        T[:, 0, 0] = 1.0
        with pytest.raises(ValidationError, match="self-loop"):
            Mdp(T, np.zeros_like(T), 0.9, terminals=[1])

    def test_empty_terminal_row_filled(self):
        m = two_state_chain()
        assert m.transition[1, 0, 1] == 1.0

    @pytest.mark.parametrize("gamma", [1.0, -0.1, 1.5])
    def test_gamma_range(self, gamma):
        T = np.ones((1, 1, 1))
        with pytest.raises(ValidationError):
            Mdp(T, np.zeros_like(T), gamma)

    def test_start_sum(self):
        m = two_state_chain()
        with pytest.raises(ValidationError, match="start sum"):
            Mdp(m.transition, m.reward, 0.9, [1], start_dist=[0.5, 0.4])

    def test_arrays_frozen(self):
        m = chain()
        with pytest.raises(ValueError):
            m.transition[0, 0, 0] = 0.5

    @pytest.mark.parametrize("factory", [chain, random_walk, gridworld])
    def test_fixtures_are_valid(self, factory):
        m = factory()
        np.testing.assert_allclose(m.transition.sum(axis=2), 1.0, atol=1e-9)
        assert abs(m.start_dist.sum() - 1.0) < 1e-9
        for s in m.terminals:
            assert np.all(m.transition[s, :, s] == 1.0)
            assert not m.reward[s].any()


class TestStep:
    def test_deterministic_row(self):
        T = np.zeros((3, 1, 3))
        T[0, 0, 2] = 1.0
        T[1, 0, 0] = 1.0
        R = np.zeros_like(T)
        R[0, 0, 2] = 1.0
        m = Mdp(T, R, 0.9, terminals=[2])
        assert step(m, 0, 0, np.random.default_rng(0)) == (2, 1.0)

    def test_terminal_input(self):
        with pytest.raises(TerminalStateError):
            step(two_state_chain(), 1, 0, np.random.default_rng(0))

    @pytest.mark.parametrize("s,a", [(5, 0), (-1, 0), (0, 3)])
    def test_invalid_index(self, s, a):
        with pytest.raises(InvalidIndexError):
            step(two_state_chain(), s, a, np.random.default_rng(0))

    def test_empirical_frequency(self):
        T = np.zeros((2, 1, 2))
        T[:, 0] = (0.3, 0.7)
        m = Mdp(T, np.zeros_like(T), 0.9)
        rng = np.random.default_rng(7)
        hits = sum(step(m, 0, 0, rng)[0] for _ in range(100_000))
        assert abs(hits / 100_000 - 0.7) < 0.01


class TestGenerateEpisode:
    def test_one_step_chain(self):
        ep = generate_episode(two_state_chain(), always(0), np.random.default_rng(0), 10)
        assert ep.steps == [(0, 0, 1.0)]
        assert ep.final_state == 1

    def test_cap_honored(self):
        ep = generate_episode(line_chain(10), always(0), np.random.default_rng(0), 1)
        assert len(ep.steps) == 1
        assert ep.final_state == 1

    def test_bad_cap(self):
        with pytest.raises(ParameterError):
            generate_episode(line_chain(3), always(0), np.random.default_rng(0), 0)

    def test_seed_reproducible(self):
        m = random_walk()
        pol = lambda s, rng: int(rng.integers(2))
        a = generate_episode(m, pol, np.random.default_rng(3), 50)
        b = generate_episode(m, pol, np.random.default_rng(3), 50)
        assert a == b

    def test_consecutive_steps_consistent(self):
        m = gridworld()
        rng = np.random.default_rng(11)
        for _ in range(50):
            ep = generate_episode(m, lambda s, r: int(r.integers(4)), rng, 40)
            nxt = [s for s, _, _ in ep.steps[1:]] + [ep.final_state]
            for (s, a, r), sn in zip(ep.steps, nxt):
                assert m.transition[s, a, sn] > 0
                assert r == m.reward[s, a, sn]
            assert m.is_terminal(ep.final_state) or len(ep.steps) == 40


def naive_return(rewards, gamma, t):
    total = 0.0
    for k in range(len(rewards) - t):
        total += gamma**k * rewards[t + k]
    return total


class TestDiscountedReturn:
    def test_geometric(self):
        assert discounted_return([1, 1, 1], 0.5, 0) == 1.75

    def test_single(self):
        assert discounted_return([5], 0.9, 0) == 5.0

    def test_out_of_range(self):
        with pytest.raises(InvalidIndexError):
            discounted_return([1.0, 2.0], 0.9, 2)

    def test_matches_naive_sum(self, rng):
        rewards = rng.normal(size=20).tolist()
        for t in range(20):
            assert abs(discounted_return(rewards, 0.95, t) - naive_return(rewards, 0.95, t)) < 1e-12

    @settings(max_examples=200)
    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=30), st.floats(0, 0.999))
    def test_recursive_consistency(self, rewards, gamma):
        for t in range(len(rewards) - 1):
            lhs = discounted_return(rewards, gamma, t)
            rhs = rewards[t] + gamma * discounted_return(rewards, gamma, t + 1)
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def linear_solve_values(mdp, pi):
    # independent oracle: (I - gamma P_pi) V = r_pi with terminal rows zeroed
    n = mdp.n_states
    P = np.zeros((n, n))
    r = np.zeros(n)
    for s in range(n):
        if mdp.is_terminal(s):
            continue
        for sn in range(n):
            p = mdp.transition[s, pi[s], sn]
            P[s, sn] = p
            r[s] += p * mdp.reward[s, pi[s], sn]
    return np.linalg.solve(np.eye(n) - mdp.gamma * P, r)


class TestValueIteration:
    def test_chain_analytic(self):
        V, pi = value_iteration(chain(), 1e-12)
        assert V[1] == pytest.approx(1.0, abs=1e-9)
        assert V[0] == pytest.approx(0.9, abs=1e-9)
        assert pi[0] == 0 and pi[1] == 0

    def test_zero_rewards(self):
        m = random_walk()
        V, _ = value_iteration(Mdp(m.transition, np.zeros_like(m.reward), 0.9, m.terminals))
        assert not V.any()

    def test_bad_tol(self):
        with pytest.raises(ParameterError):
            value_iteration(chain(), 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_linear_solve(self, seed):
        m = random_mdp(np.random.default_rng(seed), 8, 3)
        V, pi = value_iteration(m, 1e-10)
        np.testing.assert_allclose(V, linear_solve_values(m, pi), atol=1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_bellman_residual(self, seed):
        m = random_mdp(np.random.default_rng(100 + seed), 6, 2)
        tol = 1e-9
        V, _ = value_iteration(m, tol)
        for s in range(m.n_states):
            if m.is_terminal(s):
                continue
            best = max(
                sum(m.transition[s, a, t] * (m.reward[s, a, t] + m.gamma * V[t]) for t in range(m.n_states))
                for a in range(m.n_actions)
            )
            assert abs(best - V[s]) < tol

    def test_ties_lowest_index(self):
        T = np.zeros((2, 3, 2))
        T[0, :, 1] = 1.0
        R = np.zeros_like(T)
        R[0, 1, 1] = R[0, 2, 1] = 1.0
        V, pi = value_iteration(Mdp(T, R, 0.9, [1]))
        assert pi[0] == 1

    def test_gridworld_unique_states(self):
        m = gridworld()
        V, pi = value_iteration(m)
        assert unique_optimal_states(m, V) == {3: 2, 7: 2, 11: 2, 12: 1, 13: 1, 14: 1}
        sets = optimal_action_sets(m, V)
        assert sets[0] == {1, 2}
        assert V[14] == pytest.approx(-1.0)
