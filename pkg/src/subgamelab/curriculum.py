"""Subgame curriculum: state weights, the particle buffer, and epoch loop.

The sampling weight per state combines how fast its value moved between two
consecutive checkpoints (bias term) with how much the value ensemble
disagrees right now (variance term). Episodes restart from buffered states
with probability p, weighted by those numbers; the rest restart from the
game's own initial distribution, which keeps equilibrium convergence intact.
When the buffer overflows, farthest point sampling keeps entries spread out
in feature space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import GameSpec, Rng, Transition, sample_initial
from .learner import Learner, ValueTable

METRIC_VARIANTS = ("full", "uniform", "bias_only", "variance_only", "td_error")


@dataclass(frozen=True)
class MetricConfig:
    """Weight-metric settings.

    ``alpha_bias`` scales the bias term in the full variant (this is distinct
    from the learning rate). ``ensemble_size`` is the number of independent
    learners per player whose signed values form the ensemble; the two
    players already contribute two members each. ``bias_mean_of_squares``
    switches the bias term from (mean checkpoint difference)^2 to the mean of
    squared differences, for the ablation-curious.
    """

    alpha_bias: float = 1.0
    variant: str = "full"
    ensemble_size: int = 1
    bias_mean_of_squares: bool = False

    def __post_init__(self):
        if self.alpha_bias < 0.0:
            raise ValueError("alpha_bias must be non-negative")
        if self.variant not in METRIC_VARIANTS:
            raise ValueError(f"variant must be one of {METRIC_VARIANTS}")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")


@dataclass(frozen=True)
class SamplerConfig:
    """Probability of restarting from the buffer instead of the start states."""

    p: float = 0.7

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")


@dataclass(frozen=True)
class ValueEnsemble:
    """Signed value tables for every ensemble member, now and one epoch ago.

    ``current`` and ``previous`` have shape (M, 2, S) where member values are
    already sign-adjusted: player 1's values as-is, player 2's negated, so
    all members estimate the same quantity.
    """

    current: np.ndarray
    previous: np.ndarray

    def __post_init__(self):
        cur = np.asarray(self.current, dtype=np.float64)
        prev = np.asarray(self.previous, dtype=np.float64)
        if cur.shape != prev.shape or cur.ndim != 3 or cur.shape[1] != 2:
            raise ValueError("ensemble tables must share shape (M, 2, S)")
        object.__setattr__(self, "current", cur)
        object.__setattr__(self, "previous", prev)


def signed_values(vt: ValueTable) -> np.ndarray:
    """Sign-adjust per-player values so both estimate player 1's value."""
    return np.stack([vt.v[0], -vt.v[1]])


def compute_weight(state: int, ens: ValueEnsemble, cfg: MetricConfig,
                   td_context: Transition | None = None,
                   discount: float = 1.0) -> float:
    """Sampling weight of one state under the configured metric variant.

    full: alpha_bias * (mean checkpoint difference)^2 plus the population
    variance of the current member values. bias_only / variance_only keep
    the respective term alone; uniform is constant 1; td_error uses
    |r + discount * V(s') - V(s)| from the given transition with player 1's
    mean value. Always non-negative.
    """
    if cfg.variant == "uniform":
        return 1.0
    if cfg.variant == "td_error":
        if td_context is None:
            raise ValueError("td_error variant needs the transition at this state")
        if td_context.state != state:
            raise ValueError("td_context must be a transition taken at this state")
        v1 = ens.current[:, 0, :]
        v_here = float(v1[:, td_context.state].mean())
        v_next = 0.0 if td_context.terminal else float(v1[:, td_context.next_state].mean())
        return abs(td_context.reward1 + discount * v_next - v_here)
    cur = ens.current[:, :, state].ravel()
    prev = ens.previous[:, :, state].ravel()
    if cfg.variant == "variance_only":
        return float(np.var(cur))
    diffs = cur - prev
    if cfg.bias_mean_of_squares:
        bias = float(np.mean(diffs**2))
    else:
        bias = float(np.mean(diffs)) ** 2
    if cfg.variant == "bias_only":
        return bias
    return cfg.alpha_bias * bias + float(np.var(cur))


@dataclass
class WeightedStateBuffer:
    """Capacity-bounded particle set of (state, feature vector, weight).

    States are deduplicated by index; re-inserting overwrites the weight with
    the newer value. Insertion never prunes; callers prune when the size
    exceeds the capacity.
    """

    capacity: int
    entries: dict[int, tuple[np.ndarray, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    def __len__(self) -> int:
        return len(self.entries)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """States, features, weights in ascending state order (deterministic)."""
        states = np.array(sorted(self.entries), dtype=np.int64)
        feats = np.stack([self.entries[int(s)][0] for s in states]) if states.size else np.empty((0, 0))
        weights = np.array([self.entries[int(s)][1] for s in states])
        return states, feats, weights


def buffer_insert(buf: WeightedStateBuffer, states: list[tuple[int, float]],
                  game: GameSpec) -> WeightedStateBuffer:
    """Union the (state, weight) pairs into the buffer; newest weight wins."""
    for state, weight in states:
        if weight < 0.0 or not np.isfinite(weight):
            raise ValueError("weights must be finite and non-negative")
        buf.entries[int(state)] = (game.feature_of(int(state)), float(weight))
    return buf


def fps_prune(buf: WeightedStateBuffer, k: int) -> WeightedStateBuffer:
    """Keep k entries by greedy farthest point sampling; identity if small.

    Seeded at the maximum-weight entry (ties break to the lowest state
    index), then repeatedly adds the entry with the largest Euclidean
    distance to the selected set. Deterministic on identical inputs; kept
    entries retain their weights.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(buf) <= k:
        return buf
    states, feats, weights = buf.arrays()
    if feats.min() < 0.0 or feats.max() > 1.0:
        raise ValueError("buffer features must be normalized to [0, 1]")
    selected = [int(np.argmax(weights))]
    dist = np.linalg.norm(feats - feats[selected[0]], axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(dist))
        selected.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(feats - feats[nxt], axis=1))
    keep = sorted(int(states[i]) for i in selected)
    buf.entries = {s: buf.entries[s] for s in keep}
    return buf


def random_prune(buf: WeightedStateBuffer, k: int, rng: Rng) -> WeightedStateBuffer:
    """Uniformly random k-subset; baseline for the FPS spread comparison."""
    if len(buf) <= k:
        return buf
    states, _, _ = buf.arrays()
    keep = sorted(int(s) for s in rng.choice(states, size=k, replace=False))
    buf.entries = {s: buf.entries[s] for s in keep}
    return buf


def sample_subgame(buf: WeightedStateBuffer | None, game: GameSpec,
                   cfg: SamplerConfig, rng: Rng) -> int:
    """Choose an episode's start state.

    With probability p and a usable buffer, draw a buffered state with
    probability proportional to its weight; otherwise draw from the game's
    initial distribution. An empty buffer or all-zero weights fall back to
    the initial distribution without consuming the p-coin's draw when p=0.
    """
    if buf is not None and cfg.p > 0.0 and len(buf) > 0:
        states, _, weights = buf.arrays()
        total = weights.sum()
        if total > 0.0 and rng.random() < cfg.p:
            cum = np.cumsum(weights / total)
            idx = min(int(np.searchsorted(cum, rng.random(), side="right")),
                      states.size - 1)
            return int(states[idx])
    return sample_initial(game, rng)


def curriculum_epoch(learners: list[Learner], buf: WeightedStateBuffer | None,
                     game: GameSpec, metric_cfg: MetricConfig,
                     sampler_cfg: SamplerConfig, episodes_per_epoch: int,
                     max_steps: int, evaluator=None):
    """One curriculum epoch: checkpoint values, train, reweight the buffer.

    Every learner runs ``episodes_per_epoch`` episodes whose start states come
    from :func:`sample_subgame` (each learner consumes its own generator).
    Afterwards the states acted on this epoch get fresh weights from the
    current-vs-checkpoint ensemble and are merged into the buffer, which is
    pruned back to capacity by FPS. Passing ``buf=None`` disables all buffer
    work, which is exactly plain self-play.

    ``evaluator``, when given, is called after every episode with the number
    of new samples and may return record rows; the epoch stops early once
    ``evaluator.should_stop`` turns true. Returns (learners, buf, rows).
    """
    rows = []
    if buf is not None:
        previous = np.stack([signed_values(lr.values()) for lr in learners])
    visited: dict[int, Transition] = {}
    stop = False
    for lr in learners:
        for _ in range(episodes_per_epoch):
            s0 = sample_subgame(buf, game, sampler_cfg, lr.rng)
            traj = lr.run_episode(s0, max_steps)
            for tr in traj:
                visited[tr.state] = tr
            if evaluator is not None:
                rows.extend(evaluator.after_episode(len(traj)))
                if evaluator.should_stop:
                    stop = True
                    break
        if stop:
            break
    if buf is not None and visited:
        current = np.stack([signed_values(lr.values()) for lr in learners])
        ens = ValueEnsemble(current=current, previous=previous)
        fresh = []
        for state in sorted(visited):
            td = visited[state] if metric_cfg.variant == "td_error" else None
            fresh.append((state, compute_weight(state, ens, metric_cfg,
                                                td_context=td,
                                                discount=game.discount)))
        buffer_insert(buf, fresh, game)
        if len(buf) > buf.capacity:
            fps_prune(buf, buf.capacity)
    return learners, buf, rows
