"""Exact oracles and policy-quality metrics.

Nash equilibria come from value iteration whose backup solves each state's
stage matrix game; topologically ordered (finite-horizon) games are solved
exactly in one backward sweep. Best responses against a fixed opponent are
exact dynamic programs on the induced single-agent decision process, which
is strictly stronger than a learned approximation at tabular scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameSpec, Policy, Rng, rollout, sample_initial
from .matrix_game import solve


@dataclass(frozen=True)
class NESolution:
    """Equilibrium values, Q-values, and policies with the final residual.

    ``residual`` is the sup-norm gap between ``v_star`` and one more backup;
    it is exactly zero on the single-sweep path and at most the stopping
    tolerance otherwise. A residual above the requested tolerance flags
    non-convergence within the iteration budget.
    """

    v_star: np.ndarray  # (2, S)
    q_star: np.ndarray  # (2, S, A1, A2)
    ne_policy: Policy
    residual: float

    def converged(self, tol: float) -> bool:
        return self.residual <= tol


def _expected_next(game: GameSpec, v1: np.ndarray) -> np.ndarray:
    """E[V1(s') | s, a] for all pairs; terminal contributes zero."""
    v_ext = np.append(v1, 0.0)
    return (game.next_probs * v_ext[game.next_states]).sum(axis=3)


def shapley_backup(game: GameSpec, v1: np.ndarray) -> np.ndarray:
    """One value-iteration sweep for player 1: maximin of each stage matrix."""
    q1 = game.reward1 + game.discount * _expected_next(game, v1)
    return np.array([solve(q1[s]).value for s in range(game.state_count)])


def _solve_stages(game: GameSpec, v1: np.ndarray):
    """Stage solutions for the Q induced by ``v1``; returns (q1, values, p1, p2)."""
    a1, a2 = game.action_counts
    q1 = game.reward1 + game.discount * _expected_next(game, v1)
    values = np.empty(game.state_count)
    p1 = np.empty((game.state_count, a1))
    p2 = np.empty((game.state_count, a2))
    for s in range(game.state_count):
        sol = solve(q1[s])
        values[s] = sol.value
        p1[s] = sol.row_strategy
        p2[s] = sol.col_strategy
    return q1, values, p1, p2


def solve_ne(game: GameSpec, tol: float = 1e-10, max_iters: int = 100_000) -> NESolution:
    """Equilibrium of the full Markov game by stage-wise value iteration."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    s_count = game.state_count
    if game.is_topologically_ordered:
        # One backward sweep is exact: successors are already final.
        a1, a2 = game.action_counts
        v1 = np.zeros(s_count)
        v_ext = np.zeros(s_count + 1)
        q1 = np.empty((s_count, a1, a2))
        p1 = np.empty((s_count, a1))
        p2 = np.empty((s_count, a2))
        for s in range(s_count - 1, -1, -1):
            ev = (game.next_probs[s] * v_ext[game.next_states[s]]).sum(axis=2)
            q1[s] = game.reward1[s] + game.discount * ev
            sol = solve(q1[s])
            v1[s] = sol.value
            p1[s] = sol.row_strategy
            p2[s] = sol.col_strategy
            v_ext[s] = sol.value
        residual = 0.0
    else:
        v1 = np.zeros(s_count)
        for _ in range(max_iters):
            v_next = shapley_backup(game, v1)
            change = float(np.abs(v_next - v1).max())
            v1 = v_next
            if change < tol:
                break
        q1, values, p1, p2 = _solve_stages(game, v1)
        residual = float(np.abs(values - v1).max())
    v_star = np.stack([v1, -v1])
    q_star = np.stack([q1, -q1])
    return NESolution(v_star, q_star, Policy(p1, p2), residual)


def _marginal_backup(game: GameSpec, opponent: np.ndarray, player: int,
                     v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One sweep of the induced single-agent problem; returns (new v, q)."""
    reward = game.reward1 if player == 0 else -game.reward1
    ev = _expected_next(game, v)
    stage = reward + game.discount * ev
    if player == 0:
        q = np.einsum("sab,sb->sa", stage, opponent)
    else:
        q = np.einsum("sab,sa->sb", stage, opponent)
    return q.max(axis=1), q


def best_response(game: GameSpec, opponent: np.ndarray, player: int,
                  tol: float = 1e-12, max_iters: int = 100_000) -> tuple[np.ndarray, float]:
    """Exact optimal deterministic reply to a fixed opponent mixture.

    ``opponent`` is the other player's (S, A) policy table. Returns the
    one-hot policy (lowest-index argmax) and its value under the game's
    initial distribution.
    """
    if player not in (0, 1):
        raise ValueError("player must be 0 or 1")
    own_actions = game.action_counts[player]
    opp_actions = game.action_counts[1 - player]
    opponent = np.asarray(opponent, dtype=np.float64)
    if opponent.shape != (game.state_count, opp_actions):
        raise ValueError("opponent policy does not cover this game")
    s_count = game.state_count
    if game.is_topologically_ordered:
        reward = game.reward1 if player == 0 else -game.reward1
        v_ext = np.zeros(s_count + 1)
        q = np.empty((s_count, own_actions))
        for s in range(s_count - 1, -1, -1):
            ev = (game.next_probs[s] * v_ext[game.next_states[s]]).sum(axis=2)
            stage = reward[s] + game.discount * ev
            row = stage @ opponent[s] if player == 0 else opponent[s] @ stage
            q[s] = row
            v_ext[s] = row.max()
        v = v_ext[:s_count]
    else:
        v = np.zeros(s_count)
        for _ in range(max_iters):
            v_next, q = _marginal_backup(game, opponent, player, v)
            change = float(np.abs(v_next - v).max())
            v = v_next
            if change < tol:
                break
    policy = np.zeros((s_count, own_actions))
    policy[np.arange(s_count), q.argmax(axis=1)] = 1.0
    return policy, float(game.initial_dist @ v)


@dataclass(frozen=True)
class ExploitabilityReport:
    """Both best-response values against the fixed pair, and their sum."""

    br_value_1: float
    br_value_2: float
    total: float
    br_policy_1: np.ndarray
    br_policy_2: np.ndarray


def exploitability(game: GameSpec, joint: Policy) -> ExploitabilityReport:
    """Sum of each player's exact best-response value against the other.

    Zero exactly at a Nash equilibrium and non-negative otherwise; the
    initial-state expectation is computed exactly, not sampled.
    """
    br1, value1 = best_response(game, joint.p2, player=0)
    br2, value2 = best_response(game, joint.p1, player=1)
    return ExploitabilityReport(value1, value2, value1 + value2, br1, br2)


def oracle_weight(state: int, member_values: np.ndarray, oracle: NESolution) -> float:
    """Mean squared gap between signed member values and the NE value.

    ``member_values`` stacks signed value tables (any leading shape, last
    axis indexes states); with the two players' signed tables this equals
    half the sum of both players' squared value errors.
    """
    members = np.asarray(member_values, dtype=np.float64).reshape(-1, oracle.v_star.shape[1])
    gaps = oracle.v_star[0, state] - members[:, state]
    return float(np.mean(gaps**2))


def matchup_value(game: GameSpec, p1: np.ndarray, p2: np.ndarray,
                  tol: float = 1e-12, max_iters: int = 100_000) -> float:
    """Exact expected return of player 1 when both policies are fixed."""
    joint = Policy(p1, p2)  # validates shapes and rows
    s_count = game.state_count
    if game.is_topologically_ordered:
        v_ext = np.zeros(s_count + 1)
        for s in range(s_count - 1, -1, -1):
            ev = (game.next_probs[s] * v_ext[game.next_states[s]]).sum(axis=2)
            stage = game.reward1[s] + game.discount * ev
            v_ext[s] = joint.p1[s] @ stage @ joint.p2[s]
        v = v_ext[:s_count]
    else:
        v = np.zeros(s_count)
        for _ in range(max_iters):
            ev = _expected_next(game, v)
            stage = game.reward1 + game.discount * ev
            v_next = np.einsum("sa,sab,sb->s", joint.p1, stage, joint.p2)
            change = float(np.abs(v_next - v).max())
            v = v_next
            if change < tol:
                break
    return float(game.initial_dist @ v)


def evaluate_matchup(game: GameSpec, p1: np.ndarray, p2: np.ndarray,
                     episodes: int, rng: Rng, max_steps: int = 10_000) -> float:
    """Monte-Carlo mean of player 1's discounted return from the start states.

    The exact expectation is available from :func:`matchup_value`.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    joint = Policy(p1, p2)
    total = 0.0
    for _ in range(episodes):
        s0 = sample_initial(game, rng)
        traj = rollout(game, joint, s0, rng, max_steps)
        ret = 0.0
        scale = 1.0
        for tr in traj:
            ret += scale * tr.reward1
            scale *= game.discount
        total += ret
    return total / episodes
