"""Self-contained solver for  max c.x  subject to  |a_i . x| <= 1.

The restricted problems are solved by a revised simplex on the equivalent
weight-minimization form: minimize the total weight sum(|y_i|) of a
representation c = sum_i y_i a_i.  Bases are n x n (n = number of variables,
always small here), rows enter through pricing, and the optimal simplex
multipliers are exactly the primal maximizer.  Free variables are handled
natively -- no nonnegativity split -- and x = 0 is always feasible, so no
phase-one is needed: any spanning subset of rows yields a feasible basis
after sign flips.

The full program has an astronomically large row family, so ``solve_lazy``
runs a cutting-plane loop: solve the restricted program on a pooled row set,
ask the separation oracle for violated rows at the optimizer, add the worst
offenders, repeat.  Declaring optimality always goes through one exact
separation pass, which is what makes the downstream bracket sound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import inf

import numpy as np
import scipy.linalg

from .errors import BudgetExceeded, NumericalError, ShapeMismatch, UnboundedProblem
from .lp_model import (
    DEFAULT_EVAL_BUDGET,
    LpProblem,
    row_coefficients,
    rows_block,
    seed_selectors,
    separate_exact,
    separate_heuristic,
)

__all__ = ["SolverConfig", "LpSolution", "solve_dense", "solve_dense_problem", "solve_lazy"]

_RATIO_TIE = 1e-12
_PIVOT_TOL = 1e-11
_DEGENERATE_STEP = 1e-12
_BLAND_AFTER = 25


@dataclass(frozen=True)
class SolverConfig:
    tol_feas: float = 1e-9
    tol_opt: float = 1e-9
    max_rows: int = 2_000_000
    max_iterations: int = 200  # cutting-plane rounds
    separation_mode: str = "heuristic_then_exact"  # or "exact"
    eval_budget: int = DEFAULT_EVAL_BUDGET  # per exact separation call
    seed: int = 0
    heuristic_starts: int = 16
    rows_per_round: int = 32
    max_pivots: int = 100_000
    refactor_every: int = 64

    def __post_init__(self):
        if self.tol_feas <= 0 or self.tol_opt <= 0:
            raise ShapeMismatch("tolerances must be positive")
        if self.tol_feas < self.tol_opt:
            raise ShapeMismatch("tol_feas must be >= tol_opt or pooled rows could recycle")
        if self.separation_mode not in ("exact", "heuristic_then_exact"):
            raise ShapeMismatch(f"unknown separation mode {self.separation_mode!r}")
        if self.max_iterations < 1 or self.rows_per_round < 1:
            raise ShapeMismatch("iteration and row-batch limits must be >= 1")


@dataclass
class LpSolution:
    value: float
    primal: np.ndarray
    active_rows: list
    status: str  # 'optimal' | 'budget_exceeded' | 'iteration_limit'
    telemetry: dict = field(default_factory=dict)


class _UnboundedRestricted(Exception):
    def __init__(self, ray):
        super().__init__("restricted problem unbounded")
        self.ray = ray


def _simplex_core(A: np.ndarray, c: np.ndarray, cfg: SolverConfig):
    """Optimal basic solution of max c.x over |A x| <= 1.

    Returns (value, x, basis_row_indices, signs, pivots).  Raises
    _UnboundedRestricted with an ascent ray when c leaves the row span.
    """
    M, n = A.shape
    if np.abs(c).max() == 0.0:
        return 0.0, np.zeros(n), np.empty(0, dtype=np.int64), np.empty(0), 0

    # Rank handling: work inside the row span; if c sticks out, that residual
    # direction is feasible for every two-sided row and improves forever.
    Q, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        ray = c / np.linalg.norm(c)
        raise _UnboundedRestricted(ray)
    rank = int(np.count_nonzero(diag > max(M, n) * np.finfo(float).eps * diag[0]))
    reduced = rank < n
    if reduced:
        Qr = Q[:, :rank]
        c_perp = c - Qr @ (Qr.T @ c)
        nperp = np.linalg.norm(c_perp)
        if nperp > 1e-10 * max(1.0, np.linalg.norm(c)):
            raise _UnboundedRestricted(c_perp / nperp)
        Ar = A @ Qr
        cr = Qr.T @ c
    else:
        Qr = None
        Ar = A
        cr = c
    r = rank

    basis = np.array(piv[:r], dtype=np.int64)
    signs = np.ones(r)

    def refactor():
        B = (Ar[basis] * signs[:, None]).T
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"basis became singular: {exc}") from exc
        y = Binv @ cr
        neg = y < 0
        signs[neg] *= -1.0
        Binv[neg] *= -1.0
        y[neg] *= -1.0
        np.maximum(y, 0.0, out=y)
        return Binv, y

    Binv, y = refactor()
    pivots = 0
    streak = 0
    bland = False
    clean_checks = 0
    ones = np.ones(r)

    while True:
        pi = Binv.T @ ones
        scores = Ar @ pi
        viol = np.abs(scores) - 1.0
        if bland:
            cand = np.flatnonzero(viol > cfg.tol_opt)
            enter = int(cand[0]) if cand.size else -1
        else:
            enter = int(np.argmax(viol))
            if viol[enter] <= cfg.tol_opt:
                enter = -1
        if enter < 0:
            # Optimality per pricing; re-verify on a fresh factorization.
            Binv, y = refactor()
            pi = Binv.T @ ones
            scores = Ar @ pi
            if np.abs(scores).max() <= 1.0 + cfg.tol_feas or clean_checks >= 5:
                if np.abs(scores).max() > 1.0 + 4.0 * cfg.tol_feas:
                    raise NumericalError("pricing disagrees after refactorization")
                x = Qr @ pi if reduced else pi
                value = float(np.dot(c, x))
                return value, x, basis.copy(), signs.copy(), pivots
            clean_checks += 1
            continue

        sigma = 1.0 if scores[enter] > 0 else -1.0
        d = sigma * Ar[enter]
        w = Binv @ d
        eligible = np.flatnonzero(w > _PIVOT_TOL)
        if eligible.size == 0:
            raise NumericalError(
                "ratio test found no pivot; the weight problem cannot be unbounded"
            )
        ratios = y[eligible] / w[eligible]
        t = float(ratios.min())
        ties = eligible[ratios <= t + _RATIO_TIE * (1.0 + abs(t))]
        if bland:
            order = np.lexsort((np.where(signs[ties] > 0, 0, 1), basis[ties]))
            leave = int(ties[order[0]])
        else:
            leave = int(ties[np.argmax(w[ties])])

        wl = w[leave]
        corr = w.copy()
        corr[leave] -= 1.0
        Binv -= np.outer(corr, Binv[leave] / wl)
        y -= t * w
        y[leave] = t
        np.maximum(y, 0.0, out=y)
        basis[leave] = enter
        signs[leave] = sigma
        pivots += 1

        if t <= _DEGENERATE_STEP:
            streak += 1
            if streak >= _BLAND_AFTER:
                bland = True
        else:
            streak = 0
            bland = False
        if pivots % cfg.refactor_every == 0:
            Binv, y = refactor()
        if pivots > cfg.max_pivots:
            raise NumericalError(f"pivot limit {cfg.max_pivots} exceeded")


def solve_dense(rows: np.ndarray, objective: np.ndarray, cfg: SolverConfig | None = None,
                selectors=None) -> LpSolution:
    """Solve max c.x over |row . x| <= 1 with the rows fully materialized."""
    cfg = cfg or SolverConfig()
    rows = np.ascontiguousarray(np.asarray(rows, dtype=np.float64))
    objective = np.asarray(objective, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != objective.shape[0]:
        raise ShapeMismatch(
            f"rows {rows.shape} incompatible with objective {objective.shape}"
        )
    if rows.shape[0] > cfg.max_rows:
        raise BudgetExceeded(
            f"{rows.shape[0]} rows exceed the materialization budget {cfg.max_rows}",
            required=rows.shape[0],
            budget=cfg.max_rows,
        )
    try:
        value, x, basis, signs, pivots = _simplex_core(rows, objective, cfg)
    except _UnboundedRestricted as ub:
        raise UnboundedProblem(
            "row set does not bound the objective (non-spanning rows)", ray=ub.ray
        ) from None
    if selectors is not None:
        active = [selectors[int(i)] for i in basis]
    else:
        active = [int(i) for i in basis]
    return LpSolution(
        value=value,
        primal=x,
        active_rows=active,
        status="optimal",
        telemetry={"pivots": pivots, "rows": int(rows.shape[0])},
    )


def solve_dense_problem(problem: LpProblem, cfg: SolverConfig | None = None,
                        chunk: int = 65536) -> LpSolution:
    """Materialize the full row universe of a program and solve it densely."""
    cfg = cfg or SolverConfig()
    total = problem.rows_total
    if total > cfg.max_rows:
        raise BudgetExceeded(
            f"row universe {total} exceeds the materialization budget {cfg.max_rows}",
            required=total,
            budget=cfg.max_rows,
        )
    blocks = [rows_block(problem, lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
    rows = np.vstack(blocks) if blocks else np.zeros((0, problem.num_vars))
    counts = problem.row_counts
    sol = solve_dense(rows, problem.objective, cfg)
    active = []
    for flat in sol.active_rows:
        sel = []
        rem = int(flat)
        for j in range(problem.order - 1, -1, -1):
            sel.append(rem % counts[j])
            rem //= counts[j]
        active.append(tuple(reversed(sel)))
    sol.active_rows = active
    sol.telemetry["rows_total"] = total
    return sol


def solve_lazy(problem: LpProblem, cfg: SolverConfig | None = None,
               seed_rows=None) -> LpSolution:
    """Cutting-plane solve of the full program.

    Seeds with one near-axis row per variable, then alternates restricted
    solves with separation.  In heuristic_then_exact mode rounds are driven
    by the cheap ascent oracle until it finds nothing, after which one exact
    pass either certifies optimality or supplies the violated rows it found.
    The restricted value is nonincreasing across rounds and the universe is
    finite, so termination at the dense optimum is guaranteed.
    """
    cfg = cfg or SolverConfig()
    c = problem.objective
    n = problem.num_vars
    telemetry = {
        "rows_total": problem.rows_total,
        "separation_mode": cfg.separation_mode,
        "restricted_values": [],
        "rounds": 0,
        "pivots": 0,
        "evals": 0,
        "separations": 0,
        "sep_max": None,
    }
    if np.abs(c).max() == 0.0:
        telemetry["rows_generated"] = 0
        return LpSolution(0.0, np.zeros(n), [], "optimal", telemetry)

    pool_sel = list(seed_rows) if seed_rows is not None else seed_selectors(problem)
    pool_sel = [tuple(int(v) for v in s) for s in pool_sel]
    pool_set = set(pool_sel)
    pool_rows = [row_coefficients(problem, s) for s in pool_sel]
    rng = np.random.default_rng(cfg.seed)
    value, x = inf, np.zeros(n)

    def finish(status):
        telemetry["rows_generated"] = len(pool_sel)
        return LpSolution(value, x, active_sel, status, telemetry)

    active_sel = []
    for rnd in range(cfg.max_iterations):
        telemetry["rounds"] = rnd + 1
        A = np.vstack(pool_rows)
        try:
            value, x, basis, signs, pivots = _simplex_core(A, c, cfg)
        except _UnboundedRestricted as ub:
            # Pull rows that cut the ascent ray; with a spanning covering
            # product some row always sees the ray.
            res = separate_exact(
                problem, ub.ray, budget=cfg.eval_budget,
                collect_above=1e-12, max_collect=cfg.rows_per_round,
            )
            telemetry["evals"] += res.evals
            telemetry["separations"] += 1
            if res.value <= 1e-12:
                raise UnboundedProblem(
                    "covering product does not span the variable space", ray=ub.ray
                ) from None
            fresh = [s for _, s in res.violations if s not in pool_set]
            if not fresh:
                fresh = [res.selector] if res.selector not in pool_set else []
            if not fresh:
                raise NumericalError("unbounded restricted program but no new cutting row")
            for s in fresh:
                pool_sel.append(s)
                pool_set.add(s)
                pool_rows.append(row_coefficients(problem, s))
            continue
        telemetry["pivots"] += pivots
        telemetry["restricted_values"].append(value)
        active_sel = [pool_sel[int(i)] for i in basis]

        if len(pool_sel) >= cfg.max_rows:
            return finish("budget_exceeded")

        new_rows = []
        if cfg.separation_mode == "heuristic_then_exact":
            h = separate_heuristic(
                problem, x, starts=cfg.heuristic_starts, rng=rng,
                collect_above=1.0 + cfg.tol_feas, max_collect=cfg.rows_per_round,
            )
            telemetry["evals"] += h.evals
            new_rows = [s for _, s in h.violations if s not in pool_set]
        if not new_rows:
            try:
                e = separate_exact(
                    problem, x, budget=cfg.eval_budget,
                    collect_above=1.0 + cfg.tol_feas, max_collect=cfg.rows_per_round,
                )
            except BudgetExceeded:
                return finish("budget_exceeded")
            telemetry["evals"] += e.evals
            telemetry["separations"] += 1
            telemetry["sep_max"] = e.value
            if e.value <= 1.0 + cfg.tol_feas:
                return finish("optimal")
            new_rows = [s for _, s in e.violations if s not in pool_set]
            if not new_rows:
                raise NumericalError(
                    "exact separation reported a violation but every offender is pooled"
                )
        for s in new_rows:
            pool_sel.append(s)
            pool_set.add(s)
            pool_rows.append(row_coefficients(problem, s))
    return finish("iteration_limit")
