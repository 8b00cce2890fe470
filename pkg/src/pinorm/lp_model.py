"""Objective and constraint construction for the covering-relaxed norm program.

The program maximizes <rho, lambda> over tensors lambda whose evaluations
against every product of covering directions stay in [-1, 1].  A constraint
row is indexed by a selector s = (s_1, ..., s_k), one stored direction per
factor; its coefficient vector is the flattened outer product of those
directions (real case), or that outer product folded onto the free variables
of the realified program (complex case).

Rows are generated on demand and the universe is never materialized unless a
dense solve explicitly asks for it.  Separation evaluates the whole family at
a candidate lambda: exactly (hierarchical contraction with norm-based pruning,
vectorized at the final two factors) or heuristically (multi-start alternating
coordinate ascent over the stored directions).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from math import prod

import numpy as np

from .covering import Covering
from .errors import BudgetExceeded, ShapeMismatch
from .tensor_core import (
    ComplexTensor,
    Field,
    RealTensor,
    realify_array,
    realify_objective,
)

__all__ = [
    "LpProblem",
    "ConstraintRow",
    "SeparationResult",
    "build_real",
    "build_complex",
    "row_coefficients",
    "rows_block",
    "enumerate_rows",
    "variables_to_tensor",
    "seed_selectors",
    "separate_exact",
    "separate_heuristic",
    "DEFAULT_EVAL_BUDGET",
]

DEFAULT_EVAL_BUDGET = 1_000_000_000


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Immutable handle: objective vector plus the per-factor row source."""

    objective: np.ndarray
    coverings: tuple[Covering, ...]
    field: Field
    dims: tuple[int, ...]  # factor dims of the underlying tensor

    def __post_init__(self):
        obj = np.ascontiguousarray(np.asarray(self.objective, dtype=np.float64))
        obj.setflags(write=False)
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "coverings", tuple(self.coverings))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def cover_dims(self) -> tuple[int, ...]:
        return tuple(c.dim for c in self.coverings)

    @property
    def free_shape(self) -> tuple[int, ...]:
        """Variable index space: dims for real, (n_1..n_{k-1}, 2 n_k) for complex."""
        if self.field is Field.REAL:
            return self.dims
        return self.dims[:-1] + (2 * self.dims[-1],)

    @property
    def num_vars(self) -> int:
        return prod(self.free_shape)

    @property
    def row_counts(self) -> tuple[int, ...]:
        return tuple(c.stored_count for c in self.coverings)

    @property
    def rows_total(self) -> int:
        return prod(self.row_counts)


@dataclass(frozen=True, eq=False)
class ConstraintRow:
    selector: tuple[int, ...]
    coeffs: np.ndarray


@dataclass
class SeparationResult:
    value: float
    selector: tuple[int, ...]
    evals: int
    violations: list  # [(value, selector)], descending, above the collect threshold


def build_real(rho: RealTensor, coverings) -> LpProblem:
    """Program for a real tensor: one covering per factor, matching dims."""
    coverings = tuple(coverings)
    dims = rho.shape.dims
    if len(coverings) != len(dims):
        raise ShapeMismatch(
            f"{len(dims)} factors need {len(dims)} coverings, got {len(coverings)}"
        )
    for j, (n, cov) in enumerate(zip(dims, coverings)):
        if cov.dim != n:
            raise ShapeMismatch(
                f"factor {j} has dim {n} but covering has dim {cov.dim}"
            )
    return LpProblem(rho.coords.ravel(), coverings, Field.REAL, dims)


def build_complex(rho: ComplexTensor, coverings) -> LpProblem:
    """Program for a complex tensor: coverings live on the doubled factors."""
    coverings = tuple(coverings)
    dims = rho.shape.dims
    if len(coverings) != len(dims):
        raise ShapeMismatch(
            f"{len(dims)} factors need {len(dims)} coverings, got {len(coverings)}"
        )
    for j, (n, cov) in enumerate(zip(dims, coverings)):
        if cov.dim != 2 * n:
            raise ShapeMismatch(
                f"factor {j} realifies to dim {2 * n} but covering has dim {cov.dim}"
            )
    return LpProblem(realify_objective(rho), coverings, Field.COMPLEX, dims)


def variables_to_tensor(problem: LpProblem, x: np.ndarray) -> np.ndarray:
    """Variable vector -> the real tensor the covering rows act on.

    Real case: plain reshape.  Complex case: the free variables are assembled
    into the complex tensor and rewritten over the doubled factors, so the
    row family is evaluated exactly as the program constrains it.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.num_vars,):
        raise ShapeMismatch(
            f"variable vector length {x.shape} != {problem.num_vars}"
        )
    if problem.field is Field.REAL:
        return x.reshape(problem.dims)
    nk = problem.dims[-1]
    free = x.reshape(problem.free_shape)
    lam = free[..., :nk] + 1j * free[..., nk:]
    return realify_array(lam)


def _factor_vectors(problem: LpProblem, selector) -> list[np.ndarray]:
    out = []
    for j, s in enumerate(selector):
        cov = problem.coverings[j]
        if not 0 <= s < cov.stored_count:
            raise ShapeMismatch(f"selector {selector} out of range at factor {j}")
        out.append(cov.directions[s])
    return out


def row_coefficients(problem: LpProblem, selector) -> np.ndarray:
    """Coefficient vector of one row over the program's variables."""
    selector = tuple(int(s) for s in selector)
    if len(selector) != problem.order:
        raise ShapeMismatch("selector length does not match factor count")
    bs = _factor_vectors(problem, selector)
    if problem.field is Field.REAL:
        acc = bs[0]
        for b in bs[1:]:
            acc = np.multiply.outer(acc, b)
        return acc.ravel()
    k = problem.order
    zs = []
    for j, b in enumerate(bs):
        n = problem.dims[j]
        z = b[:n] + 1j * b[n:]
        if j == k - 1:
            z = z.conj()
        zs.append(z)
    mu = zs[0]
    for z in zs[1:]:
        mu = np.multiply.outer(mu, z)
    coeffs = np.concatenate([mu.real, -mu.imag], axis=-1)
    return coeffs.ravel()


def rows_block(problem: LpProblem, start: int, stop: int) -> np.ndarray:
    """Rows start..stop (lexicographic in the selector, last factor fastest)."""
    total = problem.rows_total
    if not 0 <= start <= stop <= total:
        raise ShapeMismatch(f"row range [{start}, {stop}) outside universe {total}")
    count = stop - start
    counts = problem.row_counts
    k = problem.order
    sel = np.empty((count, k), dtype=np.int64)
    rem = np.arange(start, stop, dtype=np.int64)
    for j in range(k - 1, -1, -1):
        sel[:, j] = rem % counts[j]
        rem //= counts[j]
    if problem.field is Field.REAL:
        acc = problem.coverings[0].directions[sel[:, 0]]
        for j in range(1, k):
            nxt = problem.coverings[j].directions[sel[:, j]]
            acc = (acc[:, :, None] * nxt[:, None, :]).reshape(count, -1)
        return acc
    zmats = []
    for j, cov in enumerate(problem.coverings):
        n = problem.dims[j]
        z = cov.directions[:, :n] + 1j * cov.directions[:, n:]
        if j == k - 1:
            z = z.conj()
        zmats.append(z)
    acc = zmats[0][sel[:, 0]]
    for j in range(1, k):
        nxt = zmats[j][sel[:, j]]
        acc = (acc[:, :, None] * nxt[:, None, :]).reshape(count, -1)
    nk = problem.dims[-1]
    acc = acc.reshape(count, -1, nk)
    out = np.concatenate([acc.real, -acc.imag], axis=-1)
    return out.reshape(count, problem.num_vars)


def enumerate_rows(problem: LpProblem, start: int = 0, stop: int | None = None, chunk: int = 4096):
    """Stream ConstraintRow objects without materializing the universe."""
    total = problem.rows_total
    stop = total if stop is None else stop
    if not 0 <= start <= stop <= total:
        raise ShapeMismatch(f"row range [{start}, {stop}) outside universe {total}")
    counts = problem.row_counts
    k = problem.order
    for lo in range(start, stop, chunk):
        hi = min(lo + chunk, stop)
        block = rows_block(problem, lo, hi)
        for offset in range(hi - lo):
            flat = lo + offset
            sel = []
            rem = flat
            for j in range(k - 1, -1, -1):
                sel.append(rem % counts[j])
                rem //= counts[j]
            yield ConstraintRow(tuple(reversed(sel)), block[offset])


def seed_selectors(problem: LpProblem) -> list[tuple[int, ...]]:
    """One row per variable: per factor, the stored direction nearest the axis.

    The free-variable index space is coordinatewise contained in the covering
    index space, so the axis lookup applies uniformly to both fields.
    """
    nearest = [np.argmax(np.abs(cov.directions), axis=0) for cov in problem.coverings]
    shape = problem.free_shape
    sels = {}
    for flat in range(prod(shape)):
        idx = np.unravel_index(flat, shape)
        sel = tuple(int(nearest[j][i]) for j, i in enumerate(idx))
        sels.setdefault(sel, None)
    return list(sels.keys())


# ---------------------------------------------------------------------------
# Separation
# ---------------------------------------------------------------------------


class _EvalCounter:
    """Counts direction evaluations; raises when a hard budget is crossed."""

    __slots__ = ("count", "budget")

    def __init__(self, budget=None):
        self.count = 0
        self.budget = budget

    def charge(self, n: int):
        self.count += int(n)
        if self.budget is not None and self.count > self.budget:
            raise BudgetExceeded(
                f"separation needs more than {self.budget} direction evaluations",
                required=self.count,
                budget=self.budget,
            )


class _Best:
    """Running max with lowest-lexicographic tie-breaking on the selector."""

    __slots__ = ("value", "selector")

    def __init__(self):
        self.value = -1.0
        self.selector = None

    def offer(self, value: float, selector: tuple[int, ...]):
        if value > self.value or (
            value == self.value
            and (self.selector is None or selector < self.selector)
        ):
            self.value = value
            self.selector = selector

    @property
    def floor(self) -> float:
        return self.value


class _TopK:
    """Bounded collection of (value, selector) pairs above a threshold."""

    def __init__(self, threshold: float, cap: int):
        self.threshold = threshold
        self.cap = cap
        self._heap = []  # min-heap of (value, neg-lex marker irrelevant, selector)
        self._seen = set()

    @property
    def floor(self) -> float:
        if self.cap <= 0:
            return np.inf
        if len(self._heap) < self.cap:
            return self.threshold
        return self._heap[0][0]

    def offer(self, value: float, selector: tuple[int, ...]):
        if self.cap <= 0 or value <= self.threshold or selector in self._seen:
            return
        if len(self._heap) < self.cap:
            heapq.heappush(self._heap, (value, selector))
            self._seen.add(selector)
        elif value > self._heap[0][0]:
            _, old = heapq.heappushpop(self._heap, (value, selector))
            self._seen.discard(old)
            self._seen.add(selector)

    def items(self) -> list:
        return sorted(self._heap, key=lambda vs: (-vs[0], vs[1]))


def _unfold(T: np.ndarray, mode: int) -> np.ndarray:
    return np.reshape(np.moveaxis(T, mode, 0), (T.shape[mode], -1))


def _contract_except(T: np.ndarray, vecs, skip: int) -> np.ndarray:
    v = T
    for ax in range(len(vecs) - 1, -1, -1):
        if ax == skip:
            continue
        v = np.tensordot(v, vecs[ax], axes=(ax, 0))
    return v


def _heuristic_core(T, coverings, starts, rng, max_sweeps, counter, best, collector):
    """Alternating coordinate ascent over stored directions, multi-start."""
    k = len(coverings)
    dirmats = [c.directions for c in coverings]
    counts = [c.stored_count for c in coverings]
    det_sel = []
    for j in range(k):
        M = _unfold(T, j)
        if M.shape[1] == 0 or not np.any(M):
            det_sel.append(0)
            continue
        u = np.linalg.svd(M, compute_uv=True)[0][:, 0]
        counter.charge(counts[j])
        det_sel.append(int(np.argmax(np.abs(dirmats[j] @ u))))
    for start in range(starts):
        if start == 0:
            sel = list(det_sel)
        else:
            sel = [int(rng.integers(c)) for c in counts]
        prev = None
        for _ in range(max_sweeps):
            for j in range(k):
                vecs = [dirmats[i][sel[i]] for i in range(k)]
                v = _contract_except(T, vecs, j)
                counter.charge(counts[j])
                scores = dirmats[j] @ v
                sel[j] = int(np.argmax(np.abs(scores)))
            if sel == prev:
                break
            prev = list(sel)
        vecs = [dirmats[i][sel[i]] for i in range(k)]
        v = _contract_except(T, vecs, k - 1)
        value = float(abs(np.dot(v, dirmats[k - 1][sel[k - 1]])))
        best.offer(value, tuple(sel))
        if collector is not None:
            collector.offer(value, tuple(sel))


def _effective_floor(best: _Best, collector) -> float:
    t = best.value * (1.0 - 1e-12)
    if collector is not None:
        t = min(t, collector.floor * (1.0 - 1e-12))
    return t


def _collect_from_block(collector, absblock, rows_idx, cols_idx, prefix):
    floor = collector.floor
    pos = np.argwhere(absblock > floor)
    if pos.shape[0] > 4 * collector.cap:
        vals = absblock[pos[:, 0], pos[:, 1]]
        keep = np.argpartition(-vals, 4 * collector.cap)[: 4 * collector.cap]
        pos = pos[keep]
    for i, j in pos:
        collector.offer(
            float(absblock[i, j]), prefix + (int(rows_idx[i]), int(cols_idx[j]))
        )


def _sep_bilinear(T, cov1, cov2, counter, best, collector, prefix,
                  row_chunk=2048, col_chunk=16384):
    """Exact max of |b1^T T b2| over both coverings, with norm-based pruning.

    Rows (and columns) whose contracted euclidean norm cannot beat the
    current best are skipped; the survivors are scanned in descending bound
    order in vectorized blocks, so the scan exits as soon as bounds fall
    below the running max.
    """
    D1, D2 = cov1.directions, cov2.directions
    N1, N2 = D1.shape[0], D2.shape[0]
    counter.charge(N1)
    W1 = D1 @ T
    u1 = np.linalg.norm(W1, axis=1)
    counter.charge(N2)
    W2 = D2 @ T.T
    u2 = np.linalg.norm(W2, axis=1)
    # Cheap boost: scan the single most promising row before filtering.
    i0 = int(np.argmax(u1))
    counter.charge(N2)
    vals0 = np.abs(D2 @ W1[i0])
    j0 = int(np.argmax(vals0))
    best.offer(float(vals0[j0]), prefix + (i0, j0))
    if collector is not None and float(vals0[j0]) > collector.floor:
        _collect_from_block(
            collector, vals0[None, :], np.array([i0]), np.arange(N2), prefix
        )
    thresh = _effective_floor(best, collector)
    S1 = np.flatnonzero(u1 > thresh)
    S2 = np.flatnonzero(u2 > thresh)
    if S1.size == 0 or S2.size == 0:
        return
    order = np.argsort(-u1[S1], kind="stable")
    S1 = S1[order]
    E1 = W1[S1]
    E2 = D2[S2]
    for rlo in range(0, S1.size, row_chunk):
        thresh = _effective_floor(best, collector)
        if u1[S1[rlo]] <= thresh:
            break
        rhi = min(rlo + row_chunk, S1.size)
        for clo in range(0, S2.size, col_chunk):
            chi = min(clo + col_chunk, S2.size)
            counter.charge((rhi - rlo) * (chi - clo))
            block = E1[rlo:rhi] @ E2[clo:chi].T
            np.abs(block, out=block)
            bm = float(block.max()) if block.size else -1.0
            if bm >= best.value:
                for i, j in np.argwhere(block == bm):
                    best.offer(bm, prefix + (int(S1[rlo + i]), int(S2[clo + j])))
            if collector is not None and bm > collector.floor:
                _collect_from_block(
                    collector, block, S1[rlo:rhi], S2[clo:chi], prefix
                )


def _sep_recursive(T, coverings, counter, best, collector, prefix):
    k = len(coverings)
    if k == 1:
        D = coverings[0].directions
        counter.charge(D.shape[0])
        vals = np.abs(D @ T)
        i = int(np.argmax(vals))
        best.offer(float(vals[i]), prefix + (i,))
        if collector is not None:
            for j in np.flatnonzero(vals > collector.floor):
                collector.offer(float(vals[j]), prefix + (int(j),))
        return
    if k == 2:
        _sep_bilinear(T, coverings[0], coverings[1], counter, best, collector, prefix)
        return
    D = coverings[0].directions
    N0 = D.shape[0]
    counter.charge(N0)
    C = np.tensordot(D, T, axes=(1, 0))
    bounds = np.linalg.norm(C.reshape(N0, -1), axis=1)
    order = np.argsort(-bounds, kind="stable")
    for s in order:
        if bounds[s] <= _effective_floor(best, collector):
            break
        _sep_recursive(C[s], coverings[1:], counter, best, collector, prefix + (int(s),))


def separate_exact(
    problem: LpProblem,
    x: np.ndarray,
    *,
    budget: int = DEFAULT_EVAL_BUDGET,
    collect_above: float | None = None,
    max_collect: int = 32,
) -> SeparationResult:
    """Exact maximum of |row . x| over the whole row universe.

    Hierarchical: the candidate tensor is contracted one factor at a time,
    branches are visited in descending euclidean-bound order and pruned once
    they cannot beat the incumbent, and the final two factors are scanned as
    vectorized blocks.  The result is exact, never approximate; if the scan
    would exceed ``budget`` direction evaluations it raises BudgetExceeded
    instead of degrading.
    """
    T = variables_to_tensor(problem, x)
    k = problem.order
    counter = _EvalCounter(budget)
    collector = _TopK(collect_above, max_collect) if collect_above is not None else None
    first = tuple([0] * k)
    if not np.any(T):
        return SeparationResult(0.0, first, 0, [])
    best = _Best()
    # Deterministic warm start sharpens pruning before the exact scan.
    _heuristic_core(
        T, problem.coverings, 1, None, 30, counter, best, collector
    )
    _sep_recursive(T, problem.coverings, counter, best, collector, ())
    violations = collector.items() if collector is not None else []
    return SeparationResult(best.value, best.selector, counter.count, violations)


def separate_heuristic(
    problem: LpProblem,
    x: np.ndarray,
    *,
    starts: int = 16,
    rng=None,
    max_sweeps: int = 30,
    collect_above: float | None = None,
    max_collect: int = 32,
) -> SeparationResult:
    """Multi-start alternating ascent; value is a lower bound on the exact max."""
    T = variables_to_tensor(problem, x)
    k = problem.order
    if rng is None:
        rng = np.random.default_rng(0)
    counter = _EvalCounter(None)
    collector = _TopK(collect_above, max_collect) if collect_above is not None else None
    if not np.any(T):
        return SeparationResult(0.0, tuple([0] * k), 0, [])
    best = _Best()
    _heuristic_core(
        T, problem.coverings, starts, rng, max_sweeps, counter, best, collector
    )
    violations = collector.items() if collector is not None else []
    return SeparationResult(best.value, best.selector, counter.count, violations)
