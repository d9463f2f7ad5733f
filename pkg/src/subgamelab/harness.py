"""Experiment orchestration: seeded runs, convergence curves, CSV emission.

Three training methods share one evaluation pipeline:

* ``self_play``      - every episode starts from the game's own distribution;
* ``sacl``           - the weighted-buffer curriculum epoch loop;
* ``full_access_order`` - episodes restart from each state in reverse index
  order, advancing when that state's own Q-entries are learned, which
  realizes the easiest-subgame-first schedule on the iterated game.

Records are reproducible byte for byte given the same config (wall-clock
column aside).
"""

from __future__ import annotations

import io
import time
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

from .curriculum import (MetricConfig, SamplerConfig, WeightedStateBuffer,
                         curriculum_epoch)
from .envs import build_env, make_rps, RpsParams
from .evaluation import NESolution, exploitability, solve_ne
from .game import GameSpec, rollout, uniform_policy
from .learner import Learner, LearnerConfig, q_error

METHODS = ("sacl", "self_play", "full_access_order")

RECORD_COLUMNS = ("seed", "method", "env", "samples_consumed", "q_error",
                  "exploitability", "buffer_size", "wall_clock")


@dataclass(frozen=True)
class RecordRow:
    seed: int
    method: str
    env: str
    samples_consumed: int
    q_error: float
    exploitability: float
    buffer_size: int
    wall_clock: float


@dataclass
class ExperimentRecord:
    """Time series of evaluation rows across one or more seeded runs."""

    rows: list[RecordRow] = field(default_factory=list)

    def filter_seed(self, seed: int) -> "ExperimentRecord":
        return ExperimentRecord([r for r in self.rows if r.seed == seed])

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(RECORD_COLUMNS) + "\n")
        for r in self.rows:
            out.write(f"{r.seed},{r.method},{r.env},{r.samples_consumed},"
                      f"{r.q_error!r},{r.exploitability!r},{r.buffer_size},"
                      f"{r.wall_clock!r}\n")
        return out.getvalue()

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce an experiment."""

    env: str
    env_params: dict
    method: str
    learner: LearnerConfig = LearnerConfig()
    metric: MetricConfig = MetricConfig()
    sampler: SamplerConfig = SamplerConfig()
    capacity_k: int = 64
    episodes_per_epoch: int = 8
    seeds: tuple[int, ...] = (0,)
    sample_budget: int = 10_000
    eval_every: int = 100
    convergence_threshold: float = 1e-2

    def __post_init__(self):
        errors = validate_run_config(self)
        if errors:
            raise ValueError("invalid run config:\n" + "\n".join(f"- {e}" for e in errors))


def validate_run_config(cfg: RunConfig) -> list[str]:
    errors = []
    if cfg.env not in ("rps", "grid_pursuit"):
        errors.append(f"env must be rps or grid_pursuit, got '{cfg.env}'")
    if cfg.method not in METHODS:
        errors.append(f"method must be one of {METHODS}, got '{cfg.method}'")
    if cfg.capacity_k < 1:
        errors.append("capacity_k must be >= 1")
    if cfg.episodes_per_epoch < 1:
        errors.append("episodes_per_epoch must be >= 1")
    if not cfg.seeds:
        errors.append("at least one seed is required")
    if cfg.sample_budget <= 0:
        errors.append("sample_budget must be positive")
    if cfg.eval_every <= 0:
        errors.append("eval_every must be positive")
    if cfg.convergence_threshold <= 0:
        errors.append("convergence_threshold must be positive")
    return errors


class _Evaluator:
    """Fires q-error / exploitability rows on the eval_every sample grid."""

    def __init__(self, cfg: RunConfig, game: GameSpec, oracle: NESolution,
                 learners: list[Learner], buf, seed: int):
        self.cfg = cfg
        self.game = game
        self.oracle = oracle
        self.learners = learners
        self.buf = buf
        self.seed = seed
        self.samples = 0
        self.next_mark = cfg.eval_every
        self.converged = False
        self.start = time.perf_counter()

    @property
    def should_stop(self) -> bool:
        return self.converged or self.samples >= self.cfg.sample_budget

    def _row(self) -> RecordRow:
        lr = self.learners[0]
        err = q_error(lr.qtable, self.oracle)
        expl = exploitability(self.game, lr.greedy_policy()).total
        if err < self.cfg.convergence_threshold:
            self.converged = True
        return RecordRow(self.seed, self.cfg.method, self.cfg.env, self.samples,
                         err, expl, len(self.buf) if self.buf is not None else 0,
                         time.perf_counter() - self.start)

    def after_episode(self, n_samples: int) -> list[RecordRow]:
        self.samples += n_samples
        rows = []
        if self.samples >= self.next_mark and not self.converged:
            rows.append(self._row())
            # rows carry true sample counts, so one crossing per episode
            step = self.cfg.eval_every
            self.next_mark = (self.samples // step + 1) * step
        if self.converged or self.samples >= self.cfg.sample_budget:
            if not rows or rows[-1].samples_consumed < self.samples:
                rows.append(self._row())
        return rows


def _episode_cap(game: GameSpec) -> int:
    return game.horizon if game.horizon is not None else max(1000, 10 * game.state_count)


def _local_q_error(learner: Learner, oracle: NESolution, state: int) -> float:
    return float(np.abs(learner.qtable.q[:, state] - oracle.q_star[:, state]).max())


def _run_single(cfg: RunConfig, game: GameSpec, oracle: NESolution,
                seed: int) -> Iterator[RecordRow]:
    n_learners = cfg.metric.ensemble_size if cfg.method == "sacl" else 1
    learners = [Learner(game, cfg.learner, np.random.default_rng([seed, m]))
                for m in range(n_learners)]
    buf = WeightedStateBuffer(cfg.capacity_k) if cfg.method == "sacl" else None
    sampler = cfg.sampler if cfg.method == "sacl" else SamplerConfig(p=0.0)
    ev = _Evaluator(cfg, game, oracle, learners, buf, seed)
    cap = _episode_cap(game)

    if cfg.method == "full_access_order":
        order = list(range(game.state_count - 1, -1, -1))
        pos = 0
        lr = learners[0]
        while not ev.should_stop:
            s0 = order[min(pos, len(order) - 1)]
            traj = lr.run_episode(s0, cap)
            rows = ev.after_episode(len(traj))
            while (pos < len(order)
                   and _local_q_error(lr, oracle, order[pos]) < cfg.convergence_threshold):
                pos += 1
            yield from rows
        return

    while not ev.should_stop:
        _, buf, rows = curriculum_epoch(learners, buf, game, cfg.metric, sampler,
                                        cfg.episodes_per_epoch, cap, evaluator=ev)
        yield from rows


def run_experiment(cfg: RunConfig) -> ExperimentRecord:
    """Run every seed of the configured experiment and collect record rows.

    Each seed stops at its sample budget or as soon as the sup-norm Q error
    against the exact oracle drops below the convergence threshold.
    """
    game = build_env(cfg.env, cfg.env_params)
    oracle = solve_ne(game)
    record = ExperimentRecord()
    for seed in cfg.seeds:
        record.rows.extend(_run_single(cfg, game, oracle, seed))
    return record


def samples_to_converge(record: ExperimentRecord, threshold: float) -> int | None:
    """First sample count at which the recorded Q error crosses the threshold."""
    if not record.rows:
        raise ValueError("record is empty")
    for row in record.rows:
        if row.q_error < threshold:
            return row.samples_consumed
    return None


# ---------------------------------------------------------------------------
# Motivating-example experiments


def fig2_run_config(n: int, method: str, seeds: tuple[int, ...],
                    threshold: float = 1e-2) -> RunConfig:
    """Per-method defaults for the samples-to-convergence sweep.

    Deterministic kernels call for a constant unit learning rate and fully
    uniform exploration. The buffered curriculum uses the uniform metric
    here: with exactly zero-initialized tables the value-change weights stay
    zero until rewards propagate, while uniform weights reproduce the
    spread-over-visited-states resets that make coverage linear in n.
    Budgets are generous; runs stop early at convergence.
    """
    learner = LearnerConfig(lr=1.0, lr_decay=None, epsilon=1.0, batch_size=1)
    if method == "self_play":
        budget = 5_000 + 300 * 3**n
    elif method == "sacl":
        budget = 3_000 + 2_000 * n
    else:
        budget = 2_000 + 500 * n
    return RunConfig(
        env="rps", env_params={"rps_n": n}, method=method, learner=learner,
        metric=MetricConfig(variant="uniform"), sampler=SamplerConfig(p=0.7),
        capacity_k=64, episodes_per_epoch=4, seeds=seeds, sample_budget=budget,
        eval_every=50, convergence_threshold=threshold)


FIG2_COLUMNS = ("n", "method", "mean_samples", "stderr", "seeds", "censored")


def replicate_fig2(n_max: int, seeds: int, threshold: float = 1e-2):
    """Mean samples-to-convergence per (n, method) over seeded runs.

    Returns one dict per (n, method) with the converged-seed mean, its
    standard error, the contributing seed count, the censored count, and the
    per-seed sample counts (None where the budget ran out). Censored seeds
    never enter a mean; they are flagged in the ``censored`` column.
    """
    if n_max > 10:
        raise ValueError("n_max capped at 10")
    seed_tuple = tuple(range(seeds))
    out = []
    for n in range(1, n_max + 1):
        for method in ("self_play", "sacl", "full_access_order"):
            cfg = fig2_run_config(n, method, seed_tuple, threshold)
            record = run_experiment(cfg)
            per_seed = [samples_to_converge(record.filter_seed(s), threshold)
                        for s in seed_tuple]
            done = [s for s in per_seed if s is not None]
            censored = len(per_seed) - len(done)
            mean = float(np.mean(done)) if done else float("nan")
            stderr = float(np.std(done, ddof=1) / np.sqrt(len(done))) if len(done) > 1 else 0.0
            out.append({"n": n, "method": method, "mean_samples": mean,
                        "stderr": stderr, "seeds": len(done), "censored": censored,
                        "per_seed": per_seed})
    return out


def fig2_to_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    out.write(",".join(FIG2_COLUMNS) + "\n")
    for r in rows:
        out.write(f"{r['n']},{r['method']},{r['mean_samples']!r},"
                  f"{r['stderr']!r},{r['seeds']},{r['censored']}\n")
    return out.getvalue()


def coverage_experiment(n: int, seeds: int, base_seed: int = 0) -> float:
    """Mean environment steps to visit every state of the iterated game.

    Play is uniformly random; whenever an episode ends the game restarts
    from the newest state discovered so far. Visiting all n states this way
    costs about three steps per new state.
    """
    if n < 2:
        raise ValueError("coverage needs n >= 2")
    game = make_rps(RpsParams(n))
    policy = uniform_policy(game)
    totals = []
    for s in range(seeds):
        rng = np.random.default_rng([base_seed, s])
        newest = 0
        visited = {0}
        steps = 0
        while len(visited) < n:
            traj = rollout(game, policy, newest, rng, max_steps=n + 1)
            for tr in traj:
                steps += 1
                if not tr.terminal and tr.next_state not in visited:
                    visited.add(tr.next_state)
                    newest = tr.next_state
                if len(visited) == n:
                    break
        totals.append(steps)
    return float(np.mean(totals))


def joint_action_coverage(seeds: int, base_seed: int = 0) -> float:
    """Mean episodes of one-round play until all nine joint actions appear."""
    game = make_rps(RpsParams(1))
    policy = uniform_policy(game)
    counts = []
    for s in range(seeds):
        rng = np.random.default_rng([base_seed, s])
        seen: set[tuple[int, int]] = set()
        episodes = 0
        while len(seen) < 9:
            traj = rollout(game, policy, 0, rng, max_steps=1)
            episodes += 1
            seen.add((traj[0].action1, traj[0].action2))
        counts.append(episodes)
    return float(np.mean(counts))


# ---------------------------------------------------------------------------
# Flat key=value config files

_CONFIG_KEYS = {
    "env": str, "rps_n": int, "grid_width": int, "grid_height": int,
    "grid_horizon": int, "capture_reward": float, "method": str,
    "lr": float, "lr_decay": str, "epsilon": float, "batch_size": int,
    "p": float, "capacity_k": int, "alpha_bias": float, "variant": str,
    "ensemble_size": int, "episodes_per_epoch": int, "seeds": str,
    "sample_budget": int, "eval_every": int, "convergence_threshold": float,
}


def parse_config(text: str) -> RunConfig:
    """Parse a flat ``key = value`` config into a RunConfig.

    Unknown keys, bad values, and missing required keys are all collected and
    reported together.
    """
    raw: dict[str, str] = {}
    errors: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _CONFIG_KEYS:
            errors.append(f"line {lineno}: unknown key '{key}'")
            continue
        raw[key] = value

    typed: dict = {}
    for key, value in raw.items():
        try:
            typed[key] = _CONFIG_KEYS[key](value)
        except ValueError:
            errors.append(f"key '{key}': cannot parse '{value}' as {_CONFIG_KEYS[key].__name__}")

    for required in ("env", "method"):
        if required not in typed:
            errors.append(f"missing required key '{required}'")
    if typed.get("env") == "rps" and "rps_n" not in typed:
        errors.append("env rps requires rps_n")
    if typed.get("env") == "grid_pursuit":
        for key in ("grid_width", "grid_height", "grid_horizon"):
            if key not in typed:
                errors.append(f"env grid_pursuit requires {key}")

    seeds: tuple[int, ...] = (0,)
    if "seeds" in typed:
        try:
            seeds = tuple(int(tok) for tok in typed["seeds"].split(",") if tok.strip())
            if not seeds:
                raise ValueError
        except ValueError:
            errors.append(f"key 'seeds': cannot parse '{typed['seeds']}' as comma-separated integers")

    lr_decay: str | float | None = "visit_count"
    if "lr_decay" in typed:
        token = typed["lr_decay"].strip().lower()
        if token in ("none", ""):
            lr_decay = None
        elif token == "visit_count":
            lr_decay = "visit_count"
        else:
            try:
                lr_decay = float(token)
            except ValueError:
                errors.append("key 'lr_decay': expected none, visit_count, or a float")

    if errors:
        raise ValueError("config errors:\n" + "\n".join(f"- {e}" for e in errors))

    learner = LearnerConfig(
        lr=typed.get("lr", 1.0), lr_decay=lr_decay,
        epsilon=typed.get("epsilon", 1.0), batch_size=typed.get("batch_size", 1))
    metric = MetricConfig(
        alpha_bias=typed.get("alpha_bias", 1.0), variant=typed.get("variant", "full"),
        ensemble_size=typed.get("ensemble_size", 1))
    sampler = SamplerConfig(p=typed.get("p", 0.7))
    env_params = {k: typed[k] for k in
                  ("rps_n", "grid_width", "grid_height", "grid_horizon", "capture_reward")
                  if k in typed}
    # coarser evaluation suits the larger game
    default_eval = 1000 if typed["env"] == "grid_pursuit" else 100
    return RunConfig(
        env=typed["env"], env_params=env_params, method=typed["method"],
        learner=learner, metric=metric, sampler=sampler,
        capacity_k=typed.get("capacity_k", 64),
        episodes_per_epoch=typed.get("episodes_per_epoch", 8), seeds=seeds,
        sample_budget=typed.get("sample_budget", 10_000),
        eval_every=typed.get("eval_every", default_eval),
        convergence_threshold=typed.get("convergence_threshold", 1e-2))
