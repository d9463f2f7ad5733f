"""Exact solver for one-shot two-player zero-sum matrix games.

``solve`` returns the maximin value together with optimal mixed strategies
for both sides. The matrix is the row player's payoff; the column player
receives its negation. Two deterministic paths are used:

* a pure saddle-point check (max-min over rows equals min-max over columns),
  resolved with lowest-index tie-breaking, which covers the many stage games
  whose optimum is a pure pair;
* otherwise a dense primal simplex with Bland's rule on the classic
  positive-payoff transformation. Payoffs are shifted so the minimum entry
  is exactly 1, which also makes the pivot path invariant to adding a
  constant to every entry.

Matrices here are tiny (tens of actions), so no sparsity or scaling tricks
are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# feasibility/optimality tolerance for the simplex; results are quoted at 1e-9
_TOL = 1e-10


@dataclass(frozen=True)
class MatrixSolution:
    """Game value plus maximin strategies for the row and column players."""

    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def _validate_payoff(payoff) -> np.ndarray:
    a = np.asarray(payoff, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("payoff must be a non-empty 2-D matrix")
    if not np.isfinite(a).all():
        raise ValueError("payoff entries must be finite")
    return a


def _pure_saddle(a: np.ndarray) -> MatrixSolution | None:
    row_mins = a.min(axis=1)
    col_maxs = a.max(axis=0)
    maximin = row_mins.max()
    minimax = col_maxs.min()
    if maximin != minimax:
        return None
    i = int(np.argmax(row_mins))
    j = int(np.argmin(col_maxs))
    p = np.zeros(a.shape[0])
    q = np.zeros(a.shape[1])
    p[i] = 1.0
    q[j] = 1.0
    return MatrixSolution(float(maximin), p, q)


def _simplex_positive(b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Solve the positive-payoff game ``b`` (all entries >= 1).

    Works on the column player's scaled LP  max 1'u  s.t.  b u <= 1, u >= 0,
    starting from the all-slack basis. At the optimum 1/objective is the game
    value, the basic u recovers the column strategy, and the objective-row
    entries under the slack columns recover the row strategy (the dual).
    Bland's rule (lowest eligible index, ties by lowest basis variable) makes
    the pivot path deterministic and cycle-free.
    """
    m, n = b.shape
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = b
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = 1.0
    tableau[m, :n] = -1.0
    basis = list(range(n, n + m))

    while True:
        obj = tableau[m, :-1]
        entering = np.flatnonzero(obj < -_TOL)
        if entering.size == 0:
            break
        j = int(entering[0])
        col = tableau[:m, j]
        eligible = np.flatnonzero(col > _TOL)
        if eligible.size == 0:  # cannot happen with b >= 1
            raise ArithmeticError("maximin LP unbounded")
        ratios = tableau[eligible, -1] / col[eligible]
        best = ratios.min()
        tied = eligible[ratios <= best + _TOL * (1.0 + abs(best))]
        r = int(tied[np.argmin([basis[i] for i in tied])])
        tableau[r] /= tableau[r, j]
        factor = tableau[:, j].copy()
        factor[r] = 0.0
        tableau -= np.outer(factor, tableau[r])
        basis[r] = j

    sigma = tableau[m, -1]
    if sigma <= _TOL:
        raise ArithmeticError("degenerate maximin LP objective")
    u = np.zeros(n)
    for i, var in enumerate(basis):
        if var < n:
            u[var] = tableau[i, -1]
    y = tableau[m, n : n + m]
    value = 1.0 / sigma
    return value, y * value, u * value


def _clean_distribution(p: np.ndarray) -> np.ndarray:
    p = np.where(p < 0.0, 0.0, p)
    return p / p.sum()


def solve(payoff) -> MatrixSolution:
    """Maximin value and mutually best-responding mixed strategies.

    Deterministic for a given matrix; when several equilibria exist the
    returned one is whichever the fixed saddle/pivot path produces.
    """
    a = _validate_payoff(payoff)
    saddle = _pure_saddle(a)
    if saddle is not None:
        return saddle
    shift = 1.0 - a.min()
    value, p, q = _simplex_positive(a + shift)
    return MatrixSolution(float(value - shift),
                          _clean_distribution(p), _clean_distribution(q))


def best_response_value(payoff, opponent, side: str) -> tuple[float, int]:
    """Best pure reply and its payoff against a fixed mixed opponent.

    ``side`` names the responding player: ``"row"`` answers a column mixture,
    ``"col"`` answers a row mixture (and maximizes the negated payoff).
    Returns the lowest-index maximizer.
    """
    a = _validate_payoff(payoff)
    opponent = np.asarray(opponent, dtype=np.float64)
    if side == "row":
        if opponent.shape != (a.shape[1],):
            raise ValueError("opponent mixture must have one entry per column")
        scores = a @ opponent
    elif side == "col":
        if opponent.shape != (a.shape[0],):
            raise ValueError("opponent mixture must have one entry per row")
        scores = -(opponent @ a)
    else:
        raise ValueError("side must be 'row' or 'col'")
    action = int(np.argmax(scores))
    return float(scores[action]), action
