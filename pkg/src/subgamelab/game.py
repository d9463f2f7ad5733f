"""Core abstractions for two-player zero-sum Markov games.

States and actions are dense integer indices. The transition kernel maps
(state, action1, action2) to a distribution over successor states plus a
distinguished terminal outcome, stored in padded support form so that both
deterministic and stochastic kernels share one representation. Only player
1's reward is stored; player 2's reward is its negation by construction.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Every stochastic operation takes an explicit generator; same seed, same draws.
Rng = np.random.Generator

_PROB_TOL = 1e-12


def make_rng(seed) -> Rng:
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GameSpec:
    """An enumerable two-player zero-sum Markov game.

    The kernel is stored as padded support arrays: ``next_states[s, a1, a2]``
    holds up to K successor indices with probabilities ``next_probs[s, a1, a2]``
    summing to one. The index ``state_count`` is the absorbing terminal marker;
    padding slots use that index with probability zero.

    ``features`` gives each state a fixed-length vector, pre-scaled so every
    dimension lies in [0, 1]; buffer pruning measures Euclidean distance on it.
    Finite-horizon games must encode the timestep in the state index so that
    transitions only move to strictly larger indices (checked lazily via
    ``is_topologically_ordered``).
    """

    next_states: np.ndarray  # (S, A1, A2, K) int64, entries in [0, S]
    next_probs: np.ndarray  # (S, A1, A2, K) float64, rows sum to 1
    reward1: np.ndarray  # (S, A1, A2) float64
    discount: float
    initial_dist: np.ndarray  # (S,) float64
    features: np.ndarray  # (S, d) float64 in [0, 1]
    horizon: int | None = None

    def __post_init__(self):
        ns = np.ascontiguousarray(self.next_states, dtype=np.int64)
        npr = np.ascontiguousarray(self.next_probs, dtype=np.float64)
        r1 = np.ascontiguousarray(self.reward1, dtype=np.float64)
        rho = np.ascontiguousarray(self.initial_dist, dtype=np.float64)
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        for name, arr in (("next_states", ns), ("next_probs", npr),
                          ("reward1", r1), ("initial_dist", rho), ("features", feats)):
            object.__setattr__(self, name, arr)

        if ns.ndim != 4 or npr.shape != ns.shape:
            raise ValueError("next_states/next_probs must share shape (S, A1, A2, K)")
        s_count = ns.shape[0]
        if r1.shape != ns.shape[:3]:
            raise ValueError("reward1 must have shape (S, A1, A2)")
        if min(ns.shape[:3]) < 1:
            raise ValueError("need at least one state and one action per player")
        if ns.min() < 0 or ns.max() > s_count:
            raise ValueError("next-state indices must lie in [0, state_count]")
        if npr.min() < -_PROB_TOL:
            raise ValueError("transition probabilities must be non-negative")
        row_sums = npr.sum(axis=3)
        if np.abs(row_sums - 1.0).max() > _PROB_TOL:
            raise ValueError("every transition row must sum to 1")
        if not np.isfinite(r1).all():
            raise ValueError("rewards must be finite")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        if rho.shape != (s_count,) or rho.min() < -_PROB_TOL:
            raise ValueError("initial_dist must be a length-S probability vector")
        if abs(rho.sum() - 1.0) > _PROB_TOL:
            raise ValueError("initial_dist must sum to 1")
        if feats.ndim != 2 or feats.shape[0] != s_count:
            raise ValueError("features must have shape (S, d)")
        if feats.size and (feats.min() < 0.0 or feats.max() > 1.0):
            raise ValueError("features must be pre-scaled to [0, 1] per dimension")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        for arr in (ns, npr, r1, rho, feats):
            arr.setflags(write=False)

    @property
    def state_count(self) -> int:
        return self.next_states.shape[0]

    @property
    def action_counts(self) -> tuple[int, int]:
        return self.next_states.shape[1], self.next_states.shape[2]

    @property
    def terminal_index(self) -> int:
        return self.state_count

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def feature_of(self, state: int) -> np.ndarray:
        return self.features[state]

    @cached_property
    def is_topologically_ordered(self) -> bool:
        """True when every positive-probability successor has a larger index.

        Such games are acyclic, so a single backward sweep of any dynamic
        program over the state index is exact.
        """
        here = np.arange(self.state_count).reshape(-1, 1, 1, 1)
        live = self.next_probs > 0.0
        return bool(np.all((self.next_states > here) | ~live))

    @classmethod
    def from_dense(cls, transition: np.ndarray, reward1: np.ndarray,
                   discount: float, initial_dist: np.ndarray,
                   features: np.ndarray | None = None,
                   horizon: int | None = None) -> "GameSpec":
        """Build a spec from a dense (S, A1, A2, S+1) transition tensor.

        Column S is the terminal outcome. Intended for small hand-built games;
        the padded support width is the largest per-row support size.
        """
        transition = np.asarray(transition, dtype=np.float64)
        s_count = transition.shape[0]
        if transition.shape[3] != s_count + 1:
            raise ValueError("dense transition must have S+1 outcome columns")
        support = transition > 0.0
        k = max(int(support.sum(axis=3).max()), 1)
        shape3 = transition.shape[:3]
        ns = np.full(shape3 + (k,), s_count, dtype=np.int64)
        npr = np.zeros(shape3 + (k,), dtype=np.float64)
        for s in range(shape3[0]):
            for a1 in range(shape3[1]):
                for a2 in range(shape3[2]):
                    idx = np.flatnonzero(support[s, a1, a2])
                    ns[s, a1, a2, : idx.size] = idx
                    npr[s, a1, a2, : idx.size] = transition[s, a1, a2, idx]
        if features is None:
            features = _default_features(s_count)
        return cls(ns, npr, reward1, discount, initial_dist, features, horizon)

    def dense_transition(self) -> np.ndarray:
        """Materialize the kernel as (S, A1, A2, S+1); small games only."""
        s_count = self.state_count
        if s_count > 2000:
            raise ValueError("dense transition would be too large")
        a1, a2 = self.action_counts
        out = np.zeros((s_count, a1, a2, s_count + 1))
        flat_idx = self.next_states.reshape(-1, self.next_states.shape[3])
        flat_p = self.next_probs.reshape(-1, self.next_states.shape[3])
        rows = np.repeat(np.arange(flat_idx.shape[0]), flat_idx.shape[1])
        np.add.at(out.reshape(-1, s_count + 1), (rows, flat_idx.ravel()), flat_p.ravel())
        return out


def _default_features(s_count: int) -> np.ndarray:
    if s_count == 1:
        return np.zeros((1, 1))
    return (np.arange(s_count, dtype=np.float64) / (s_count - 1)).reshape(-1, 1)


@dataclass(frozen=True)
class Policy:
    """Per-player state-conditioned mixed strategies.

    ``p1`` has shape (S, A1) and ``p2`` shape (S, A2); each row is a
    probability vector.
    """

    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        for name in ("p1", "p2"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be a (S, A) matrix")
            if arr.min() < 0.0:
                raise ValueError(f"{name} has negative probabilities")
            if np.abs(arr.sum(axis=1) - 1.0).max() > _PROB_TOL:
                raise ValueError(f"every {name} row must sum to 1")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.p1.shape[0] != self.p2.shape[0]:
            raise ValueError("p1 and p2 must cover the same states")


def uniform_policy(game: GameSpec) -> Policy:
    a1, a2 = game.action_counts
    s = game.state_count
    return Policy(np.full((s, a1), 1.0 / a1), np.full((s, a2), 1.0 / a2))


@dataclass(frozen=True)
class Transition:
    """One rollout sample: s, (a1, a2), player 1's reward, successor."""

    state: int
    action1: int
    action2: int
    reward1: float
    next_state: int  # equals the terminal index when terminal is set
    terminal: bool


def subgame_of(game: GameSpec, s0: int) -> GameSpec:
    """The same game restarted from ``s0``: a point-mass initial distribution."""
    s0 = int(s0)
    if not 0 <= s0 < game.state_count:
        raise ValueError(
            f"subgame start {s0} is not a valid non-terminal state "
            f"(valid range 0..{game.state_count - 1})")
    rho = np.zeros(game.state_count)
    rho[s0] = 1.0
    return dataclasses.replace(game, initial_dist=rho)


def _draw(cum: np.ndarray, rng: Rng) -> int:
    # inverse-CDF draw; clamp guards the u ~ 1.0 rounding edge
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(idx, cum.shape[0] - 1)


def sample_initial(game: GameSpec, rng: Rng) -> int:
    """Draw a start state from the game's initial distribution."""
    return _draw(np.cumsum(game.initial_dist), rng)


def rollout(game: GameSpec, policy: Policy, s0: int, rng: Rng,
            max_steps: int) -> list[Transition]:
    """Play one episode from ``s0`` under a fixed joint policy.

    The episode ends at the terminal marker or after ``max_steps`` steps,
    whichever comes first. Rewards are player 1's; player 2's are their
    negation by construction. The sample count equals the returned length.

    Identical (game, policy, s0, seed) inputs reproduce the trajectory
    bit for bit.
    """
    if not 0 <= s0 < game.state_count:
        raise ValueError(f"rollout start {s0} out of range")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    cum1 = np.cumsum(policy.p1, axis=1)
    cum2 = np.cumsum(policy.p2, axis=1)
    deterministic = game.next_states.shape[3] == 1
    terminal_idx = game.terminal_index
    traj: list[Transition] = []
    s = int(s0)
    for _ in range(max_steps):
        a1 = _draw(cum1[s], rng)
        a2 = _draw(cum2[s], rng)
        if deterministic:
            nxt = int(game.next_states[s, a1, a2, 0])
        else:
            k = _draw(np.cumsum(game.next_probs[s, a1, a2]), rng)
            nxt = int(game.next_states[s, a1, a2, k])
        r = float(game.reward1[s, a1, a2])
        assert np.isfinite(r)  # zero-sum holds by construction: r2 = -r1
        done = nxt == terminal_idx
        traj.append(Transition(s, a1, a2, r, nxt, done))
        if done:
            break
        s = nxt
    return traj
