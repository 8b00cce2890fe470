"""Dense tensors, multipartite density matrices, and complex-to-real rewriting.

The data model is deliberately small: a tensor is an immutable dense
coefficient array tagged with its factor dimensions and scalar field, and a
density matrix knows how to flatten itself into the order-2p tensor whose
projective norm decides separability.  The complex-to-real rewriting doubles
every factor dimension while preserving the injective norm, which is what
lets the complex problem ride on the real linear program.

Index convention: 0-based in code, row-major dense layout with the last
index fastest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from itertools import product
from math import prod

import numpy as np

from .errors import InvalidField, InvalidState, ShapeMismatch

__all__ = [
    "Field",
    "Shape",
    "RealTensor",
    "ComplexTensor",
    "DensityMatrix",
    "RealifiedIndexMap",
    "state_to_tensor",
    "realify_tensor",
    "realify_array",
    "realify_objective",
    "pairing",
    "tensor_to_json_dict",
    "tensor_from_json_dict",
    "state_to_json_dict",
    "state_from_json_dict",
    "load_tensor",
    "save_tensor",
    "load_state",
    "save_state",
]

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-9

# Exact powers of the imaginary unit; (1j ** p) is not exact for p >= 2.
_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


class Field(str, Enum):
    """Scalar field of a tensor's coefficients."""

    REAL = "real"
    COMPLEX = "complex"


@dataclass(frozen=True)
class Shape:
    """Factor dimensions (n_1, ..., n_k) plus the scalar field."""

    dims: tuple[int, ...]
    field: Field = Field.REAL

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 1:
            raise ShapeMismatch("a tensor needs at least one factor")
        if any(n < 1 for n in dims):
            raise ShapeMismatch(f"factor dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "field", Field(self.field))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return prod(self.dims)


def _frozen_array(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RealTensor:
    """Order-k tensor with real coefficients, immutable after construction."""

    shape: Shape
    coords: np.ndarray

    def __post_init__(self):
        if self.shape.field is not Field.REAL:
            raise InvalidField("RealTensor requires a real-field shape")
        coords = _frozen_array(self.coords, np.float64)
        if coords.shape != self.shape.dims:
            raise ShapeMismatch(
                f"coords shape {coords.shape} does not match dims {self.shape.dims}"
            )
        if not np.all(np.isfinite(coords)):
            raise ShapeMismatch("tensor entries must be finite")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_array(cls, arr) -> "RealTensor":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(Shape(arr.shape, Field.REAL), arr)

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.coords.ravel()))


@dataclass(frozen=True, eq=False)
class ComplexTensor:
    """Order-k tensor with complex coefficients, immutable after construction."""

    shape: Shape
    coords: np.ndarray

    def __post_init__(self):
        if self.shape.field is not Field.COMPLEX:
            raise InvalidField("ComplexTensor requires a complex-field shape")
        coords = _frozen_array(self.coords, np.complex128)
        if coords.shape != self.shape.dims:
            raise ShapeMismatch(
                f"coords shape {coords.shape} does not match dims {self.shape.dims}"
            )
        if not np.all(np.isfinite(coords)):
            raise ShapeMismatch("tensor entries must be finite")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_array(cls, arr) -> "ComplexTensor":
        arr = np.asarray(arr, dtype=np.complex128)
        return cls(Shape(arr.shape, Field.COMPLEX), arr)

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.coords.ravel()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Multipartite state: per-party dimensions plus the full matrix.

    Construction validates hermiticity, unit trace and positivity at fixed
    tolerances; failures raise InvalidState.  Certification claims are only
    meaningful for genuine states, so these are errors, not warnings.
    """

    party_dims: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.party_dims)
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise InvalidState(f"party dimensions must be >= 1, got {dims}")
        entries = _frozen_array(self.entries, np.complex128)
        total = prod(dims)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidState(f"state matrix must be square, got {entries.shape}")
        if entries.shape[0] != total:
            raise InvalidState(
                f"matrix size {entries.shape[0]} does not match party dims {dims}"
            )
        if not np.all(np.isfinite(entries)):
            raise InvalidState("state matrix entries must be finite")
        scale = max(1.0, float(np.abs(entries).max()))
        if np.abs(entries - entries.conj().T).max() > TOL_HERM * scale:
            raise InvalidState("state matrix is not hermitian within tolerance")
        tr = complex(np.trace(entries))
        if abs(tr - 1.0) > TOL_TRACE * max(1.0, abs(tr)):
            raise InvalidState(f"state trace {tr} is not 1 within tolerance")
        evals = np.linalg.eigvalsh(entries)
        if evals.min() < -TOL_PSD * scale:
            raise InvalidState(
                f"state matrix has negative eigenvalue {evals.min():.3e}"
            )
        object.__setattr__(self, "party_dims", dims)
        object.__setattr__(self, "entries", entries)

    @property
    def parties(self) -> int:
        return len(self.party_dims)

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.abs(self.entries).max()))
        return float(np.abs(self.entries.imag).max()) <= tol * scale


def state_to_tensor(rho: DensityMatrix) -> ComplexTensor:
    """Flatten a p-party state into an order-2p coefficient tensor.

    Factor pair (2j, 2j+1) holds the row/column indices of party j, so the
    coordinate at (i_1, i_1', i_2, i_2', ...) is the matrix entry
    <i_1 i_2 ...| rho |i_1' i_2' ...>.  The state is separable exactly when
    the projective norm of the result is at most 1.
    """
    d = rho.party_dims
    p = len(d)
    t = rho.entries.reshape(d + d)
    perm = []
    for j in range(p):
        perm += [j, p + j]
    coords = np.ascontiguousarray(t.transpose(perm))
    dims = []
    for dj in d:
        dims += [dj, dj]
    return ComplexTensor(Shape(tuple(dims), Field.COMPLEX), coords)


def realify_array(coords: np.ndarray) -> np.ndarray:
    """Complex-to-real rewrite at the array level; see realify_tensor."""
    coords = np.asarray(coords, dtype=np.complex128)
    dims = coords.shape
    k = len(dims)
    out = np.empty(tuple(2 * n for n in dims), dtype=np.float64)
    for halves in product((0, 1), repeat=k):
        shift = sum(halves[:-1])
        block = _I_POW[shift % 4] * coords
        sel = block.real if halves[-1] == 0 else block.imag
        out[tuple(slice(h * n, (h + 1) * n) for h, n in zip(halves, dims))] = sel
    return out


def realify_tensor(lam: ComplexTensor) -> RealTensor:
    """Rewrite a complex order-k tensor as a real tensor on doubled factors.

    For a full index (i_1, ..., i_k) over (2n_1, ..., 2n_k), let p be the
    number of input factors j < k with i_j > n_j and ihat the per-factor
    reduced index.  The entry is Re(i^p * lam_ihat) when i_k <= n_k and
    Im(i^p * lam_ihat) otherwise.  Viewed as a (k-1)-linear operator into
    the last factor, the rewrite preserves the operator norm.
    """
    if not isinstance(lam, ComplexTensor):
        raise InvalidField("realify_tensor expects a complex tensor")
    return RealTensor.from_array(realify_array(lam.coords))


def realify_objective(rho: ComplexTensor) -> np.ndarray:
    """Objective coefficients over the free variables of the realified program.

    Free variables live on the index space (n_1, ..., n_{k-1}, 2 n_k): the
    low output half carries coefficient +Re(rho), the high half -Im(rho).
    Returns the flattened coefficient vector of length 2 * prod(n_j).
    """
    if not isinstance(rho, ComplexTensor):
        raise InvalidField("realify_objective expects a complex tensor")
    c = rho.coords
    out = np.concatenate([c.real, -c.imag], axis=-1)
    return np.ascontiguousarray(out.ravel())


# Free-variable families: 'r' holds Re(lam), 'q' holds Im(lam).
# Selector cycles as the quarter-turn count p runs 0..3:
#   Re(i^p z): (+r, -q, -r, +q)       Im(i^p z): (+q, +r, -q, -r)
_RE_CYCLE = (("r", 1), ("q", -1), ("r", -1), ("q", 1))
_IM_CYCLE = (("q", 1), ("r", 1), ("q", -1), ("r", -1))


@dataclass(frozen=True)
class RealifiedIndexMap:
    """How one full realified index ties back to the free variables."""

    reduced: tuple[int, ...]
    shift_count: int
    output_imag: bool
    source: str  # 'r' or 'q'
    sign: int

    @classmethod
    def from_full_index(cls, dims: tuple[int, ...], idx: tuple[int, ...]) -> "RealifiedIndexMap":
        """Map a 0-based index over (2n_1, ..., 2n_k) back to a free variable."""
        k = len(dims)
        if len(idx) != k:
            raise ShapeMismatch("index order does not match tensor order")
        halves = tuple(1 if i >= n else 0 for i, n in zip(idx, dims))
        for i, n in zip(idx, dims):
            if not 0 <= i < 2 * n:
                raise ShapeMismatch(f"index {idx} out of range for doubled dims")
        reduced = tuple(i - n * h for i, n, h in zip(idx, dims, halves))
        p = sum(halves[:-1])
        cycle = _IM_CYCLE if halves[-1] else _RE_CYCLE
        source, sign = cycle[p % 4]
        return cls(reduced, p, bool(halves[-1]), source, sign)

    def free_index(self, dims: tuple[int, ...]) -> tuple[int, ...]:
        """Index into the (n_1, ..., n_{k-1}, 2 n_k) free-variable space."""
        last = self.reduced[-1] + (dims[-1] if self.source == "q" else 0)
        return self.reduced[:-1] + (last,)


def pairing(rho: RealTensor, lam: RealTensor) -> float:
    """Bilinear duality pairing: the coordinatewise product summed over all indices."""
    if rho.shape.dims != lam.shape.dims:
        raise ShapeMismatch(
            f"pairing needs matching shapes, got {rho.shape.dims} and {lam.shape.dims}"
        )
    return float(np.dot(rho.coords.ravel(), lam.coords.ravel()))


# ---------------------------------------------------------------------------
# JSON interchange
#
# Tensor files: {"shape": [n1, ..., nk], "field": "real"|"complex",
#                "coords": [...]} with coords a flat row-major list; complex
# entries are [re, im] pairs.
# State files:  {"party_dims": [d1, ..., dp], "matrix": [[...]]} with every
# entry a [re, im] pair.
# ---------------------------------------------------------------------------


def tensor_to_json_dict(t) -> dict:
    if isinstance(t, RealTensor):
        coords = [float(x) for x in t.coords.ravel()]
    elif isinstance(t, ComplexTensor):
        coords = [[float(z.real), float(z.imag)] for z in t.coords.ravel()]
    else:
        raise InvalidField(f"not a tensor: {type(t).__name__}")
    return {
        "shape": list(t.shape.dims),
        "field": t.shape.field.value,
        "coords": coords,
    }


def tensor_from_json_dict(obj: dict):
    try:
        dims = tuple(int(n) for n in obj["shape"])
        field = Field(obj["field"])
        coords = obj["coords"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidState(f"malformed tensor object: {exc}") from exc
    size = prod(dims)
    if len(coords) != size:
        raise InvalidState(
            f"coords length {len(coords)} does not match shape {dims} (expects {size})"
        )
    try:
        if field is Field.REAL:
            arr = np.array([float(x) for x in coords], dtype=np.float64)
            return RealTensor(Shape(dims, field), arr.reshape(dims))
        arr = np.array(
            [complex(float(re), float(im)) for re, im in coords], dtype=np.complex128
        )
        return ComplexTensor(Shape(dims, field), arr.reshape(dims))
    except (TypeError, ValueError, ShapeMismatch) as exc:
        raise InvalidState(f"malformed tensor coords: {exc}") from exc


def state_to_json_dict(rho: DensityMatrix) -> dict:
    mat = [
        [[float(z.real), float(z.imag)] for z in row]
        for row in rho.entries
    ]
    return {"party_dims": list(rho.party_dims), "matrix": mat}


def state_from_json_dict(obj: dict) -> DensityMatrix:
    try:
        dims = tuple(int(d) for d in obj["party_dims"])
        rows = obj["matrix"]
        mat = np.array(
            [[complex(float(re), float(im)) for re, im in row] for row in rows],
            dtype=np.complex128,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidState(f"malformed state object: {exc}") from exc
    return DensityMatrix(dims, mat)


def load_tensor(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidState(f"not valid JSON: {path}: {exc}") from exc
    return tensor_from_json_dict(obj)


def save_tensor(t, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tensor_to_json_dict(t), fh)
        fh.write("\n")


def load_state(path) -> DensityMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidState(f"not valid JSON: {path}: {exc}") from exc
    return state_from_json_dict(obj)


def save_state(rho: DensityMatrix, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_json_dict(rho), fh)
        fh.write("\n")
