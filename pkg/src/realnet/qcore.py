"""Dense linear algebra for finite-dimensional states and measurements.

Conventions used throughout the package:

* storage is row-major (numpy C order);
* subsystem 0 is the most significant tensor factor, so the computational
  basis state ``|b0 b1 ... bn>`` sits at index ``b0*d1*...*dn + ...``;
* "real" is a predicate (``max |Im| <= 1e-12``), never a separate type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
REAL_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when subsystem metadata is missing or inconsistent."""


class NotPositiveError(ValueError):
    """Raised when an operator that must be PSD is not, beyond tolerance."""


def _as_dims(dims) -> tuple[int, ...] | None:
    if dims is None:
        return None
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    return dims


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Complex matrix with optional subsystem dimensions.

    The wrapped array is copied and frozen on construction.
    """

    data: np.ndarray
    dims: tuple[int, ...] | None = None

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex, order="C")
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-d array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        dims = _as_dims(self.dims)
        if dims is not None:
            if arr.shape[0] != arr.shape[1]:
                raise DimensionError("dims metadata requires a square matrix")
            if int(np.prod(dims)) != arr.shape[0]:
                raise DimensionError(
                    f"product of dims {dims} does not match size {arr.shape[0]}")
        object.__setattr__(self, "dims", dims)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __matmul__(self, other: DenseMatrix) -> DenseMatrix:
        dims = self.dims if self.dims == _dims_of(other) else None
        return DenseMatrix(self.data @ _arr(other), dims)

    def __add__(self, other: DenseMatrix) -> DenseMatrix:
        return DenseMatrix(self.data + _arr(other), self.dims)

    def __sub__(self, other: DenseMatrix) -> DenseMatrix:
        return DenseMatrix(self.data - _arr(other), self.dims)

    def __mul__(self, scalar) -> DenseMatrix:
        return DenseMatrix(self.data * scalar, self.dims)

    __rmul__ = __mul__

    def __neg__(self) -> DenseMatrix:
        return DenseMatrix(-self.data, self.dims)

    def dag(self) -> DenseMatrix:
        return DenseMatrix(self.data.conj().T, self.dims)

    def conj(self) -> DenseMatrix:
        return DenseMatrix(self.data.conj(), self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def with_dims(self, dims: Sequence[int] | None) -> DenseMatrix:
        return DenseMatrix(self.data, dims)

    # predicates ---------------------------------------------------------
    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        if self.rows != self.cols:
            return False
        return bool(np.max(np.abs(self.data - self.data.conj().T), initial=0.0) <= tol)

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return bool(np.max(np.abs(self.data.imag), initial=0.0) <= tol)

    def is_psd(self, tol: float = DEFAULT_TOL) -> bool:
        if not self.is_hermitian(tol):
            return False
        return min_eigenvalue(self) >= -tol

    def is_density(self, tol: float = DEFAULT_TOL) -> bool:
        return self.is_psd(tol) and abs(self.trace() - 1) <= tol

    def allclose(self, other, tol: float = DEFAULT_TOL) -> bool:
        other = _arr(other)
        return other.shape == self.shape and bool(np.max(np.abs(self.data - other)) <= tol)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        flat = self.data.ravel()
        return {
            "rows": self.rows,
            "cols": self.cols,
            "dims": list(self.dims) if self.dims is not None else None,
            "re": flat.real.tolist(),
            "im": flat.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> DenseMatrix:
        rows, cols = int(payload["rows"]), int(payload["cols"])
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros_like(re)), dtype=float)
        if re.size != rows * cols or im.size != rows * cols:
            raise DimensionError(
                f"expected {rows * cols} entries, got re={re.size} im={im.size}")
        return cls((re + 1j * im).reshape(rows, cols), payload.get("dims"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> DenseMatrix:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class Ket:
    """State vector. Normalization is checked unless ``normalized=False``."""

    amplitudes: np.ndarray
    dims: tuple[int, ...] | None = None
    normalized: bool = True
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        vec = np.array(self.amplitudes, dtype=complex).ravel()
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)
        dims = _as_dims(self.dims)
        if dims is not None and int(np.prod(dims)) != vec.size:
            raise DimensionError(f"product of dims {dims} does not match size {vec.size}")
        object.__setattr__(self, "dims", dims)
        if self.normalized and abs(np.vdot(vec, vec).real - 1) > self.tol:
            raise ValueError(f"ket has squared norm {np.vdot(vec, vec).real}, expected 1")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def projector(self) -> DenseMatrix:
        v = self.amplitudes
        return DenseMatrix(np.outer(v, v.conj()), self.dims)

    def inner(self, other: Ket) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _arr(m) -> np.ndarray:
    return m.data if isinstance(m, DenseMatrix) else np.asarray(m)


def _dims_of(m):
    return m.dims if isinstance(m, DenseMatrix) else None


def as_matrix(m, dims: Sequence[int] | None = None) -> DenseMatrix:
    """Coerce an array or DenseMatrix; explicit ``dims`` override existing metadata."""
    if isinstance(m, DenseMatrix):
        return m if dims is None else m.with_dims(dims)
    return DenseMatrix(np.asarray(m), dims)


def min_eigenvalue(m) -> float:
    a = _arr(m)
    return float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])


# ---------------------------------------------------------------------------
# tensor structure


def tensor(*ops) -> DenseMatrix:
    """Kronecker product; dims concatenate (a factor without dims counts as one subsystem)."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    mats = [as_matrix(o) for o in ops]
    data = reduce(np.kron, (m.data for m in mats))
    dims: list[int] = []
    square = all(m.rows == m.cols for m in mats)
    for m in mats:
        dims.extend(m.dims if m.dims is not None else (m.rows,))
    return DenseMatrix(data, dims if square else None)


def _require_dims(m: DenseMatrix) -> tuple[int, ...]:
    if m.dims is None:
        raise DimensionError("operation requires subsystem dims metadata")
    return m.dims


def _check_indices(idx: Iterable[int], n: int) -> list[int]:
    idx = sorted({int(i) for i in idx})
    for i in idx:
        if not 0 <= i < n:
            raise DimensionError(f"subsystem index {i} out of range for {n} subsystems")
    return idx


def partial_trace(m, keep: Iterable[int], dims: Sequence[int] | None = None) -> DenseMatrix:
    """Trace out every subsystem not listed in ``keep``."""
    m = as_matrix(m, dims)
    dims = _require_dims(m)
    n = len(dims)
    keep = _check_indices(keep, n)
    drop = [i for i in range(n) if i not in keep]
    t = m.data.reshape(dims + dims)
    # trace from the highest index down so remaining axis positions stay valid
    for count, i in enumerate(sorted(drop, reverse=True)):
        remaining = n - count
        t = np.trace(t, axis1=i, axis2=i + remaining)
    kept = tuple(dims[i] for i in keep)
    d = int(np.prod(kept)) if kept else 1
    return DenseMatrix(t.reshape(d, d), kept if kept else (1,))


def partial_transpose(m, sys: Iterable[int], dims: Sequence[int] | None = None) -> DenseMatrix:
    """Transpose the listed tensor factors only."""
    m = as_matrix(m, dims)
    dims = _require_dims(m)
    n = len(dims)
    sys = _check_indices(sys, n)
    t = m.data.reshape(dims + dims)
    perm = list(range(2 * n))
    for i in sys:
        perm[i], perm[n + i] = perm[n + i], perm[i]
    return DenseMatrix(t.transpose(perm).reshape(m.shape), dims)


def permute_subsystems(m, order: Sequence[int]) -> DenseMatrix:
    """Reorder tensor factors; ``order[k]`` names the old subsystem placed at position k."""
    m = as_matrix(m)
    dims = _require_dims(m)
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise DimensionError(f"{order} is not a permutation of {n} subsystems")
    t = m.data.reshape(dims + dims).transpose(order + [n + k for k in order])
    new_dims = tuple(dims[k] for k in order)
    return DenseMatrix(t.reshape(m.shape), new_dims)


def born(rho, effect, tol: float = DEFAULT_TOL) -> float:
    """Probability ``tr(rho @ effect)`` with the validity checks of the Born rule."""
    rho, effect = as_matrix(rho), as_matrix(effect)
    if not rho.is_psd(tol) or abs(rho.trace() - 1) > tol:
        raise NotPositiveError("rho must be a PSD matrix with unit trace")
    if not effect.is_psd(tol):
        raise NotPositiveError("effect must be PSD")
    if min_eigenvalue(np.eye(effect.rows) - effect.data) < -tol:
        raise NotPositiveError("effect must be bounded by the identity")
    val = np.trace(rho.data @ effect.data)
    if abs(val.imag) > tol:
        raise NotPositiveError(f"probability has imaginary part {val.imag}")
    return float(val.real)


def trace_norm(m) -> float:
    a = _arr(m)
    return float(np.sum(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))


def trace_distance(a, b) -> float:
    """Trace-norm distance ``||a - b||_1`` (no factor 1/2)."""
    return trace_norm(_arr(a) - _arr(b))


# ---------------------------------------------------------------------------
# constructors

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

PAULI = {"x": DenseMatrix(SX), "y": DenseMatrix(SY), "z": DenseMatrix(SZ)}


def identity(d: int, dims: Sequence[int] | None = None) -> DenseMatrix:
    return DenseMatrix(np.eye(d), dims)


def basis_ket(index: int, dim: int) -> Ket:
    v = np.zeros(dim)
    v[index] = 1
    return Ket(v)


def ket(amplitudes, dims: Sequence[int] | None = None, normalize: bool = False) -> Ket:
    v = np.asarray(amplitudes, dtype=complex)
    if normalize:
        v = v / np.linalg.norm(v)
    return Ket(v, dims)


# b = b1 b2 -> Bell label; this ordering is used wherever Bob's outcome is an index 0..3.
BELL_LABELS = ("phi+", "psi+", "phi-", "psi-")
BELL_BITS = ("00", "01", "10", "11")


def bell_basis() -> tuple[Ket, Ket, Ket, Ket]:
    """Bell kets ordered 00 -> phi+, 01 -> psi+, 10 -> phi-, 11 -> psi-.

    ``psi- = (|10> - |01>)/sqrt(2)``, the opposite global sign from the
    common convention.
    """
    s = 1 / np.sqrt(2)
    phi_p = Ket([s, 0, 0, s], (2, 2))
    psi_p = Ket([0, s, s, 0], (2, 2))
    phi_m = Ket([s, 0, 0, -s], (2, 2))
    psi_m = Ket([0, -s, s, 0], (2, 2))
    return phi_p, psi_p, phi_m, psi_m


def phi_plus() -> DenseMatrix:
    return bell_basis()[0].projector()


def plus_i() -> Ket:
    return Ket(np.array([1, 1j]) / np.sqrt(2))


def minus_i() -> Ket:
    return Ket(np.array([1, -1j]) / np.sqrt(2))


def controlled(u, n_control_first: bool = True) -> np.ndarray:
    """Controlled-``u`` with a single qubit control as the first (or last) factor."""
    u = _arr(u)
    d = u.shape[0]
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    if n_control_first:
        return np.kron(p0, np.eye(d)) + np.kron(p1, u)
    return np.kron(np.eye(d), p0) + np.kron(u, p1)


# ---------------------------------------------------------------------------
# random instances (used by tests and the CLI self-checks)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None,
                   real: bool = False) -> DenseMatrix:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank))
    if not real:
        g = g + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return DenseMatrix(rho / np.trace(rho).real)


def random_unitary(d: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    g = rng.standard_normal((d, d))
    if not real:
        g = g + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_projective_measurement(d: int, n_outcomes: int, rng: np.random.Generator,
                                  real: bool = False) -> list[DenseMatrix]:
    """Rank-split projective measurement: a random basis partitioned into n_outcomes groups."""
    if n_outcomes > d:
        raise ValueError("cannot have more projective outcomes than the dimension")
    u = random_unitary(d, rng, real)
    cuts = np.sort(rng.choice(np.arange(1, d), n_outcomes - 1, replace=False)) if n_outcomes > 1 else []
    groups = np.split(np.arange(d), cuts)
    return [DenseMatrix(u[:, g] @ u[:, g].conj().T) for g in groups]


def random_povm(d: int, n_outcomes: int, rng: np.random.Generator,
                real: bool = False) -> list[DenseMatrix]:
    """Random POVM by normalizing random PSD operators with ``S^{-1/2}``."""
    ops = [random_density(d, rng, real=real).data for _ in range(n_outcomes)]
    total = sum(ops)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [DenseMatrix(inv_sqrt @ op @ inv_sqrt) for op in ops]


def random_involution(d: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """Hermitian O with O @ O = I and a random (possibly unbalanced) spectrum of +-1."""
    u = random_unitary(d, rng, real)
    signs = rng.choice([-1.0, 1.0], size=d)
    return (u * signs) @ u.conj().T


def is_complete(effects: Sequence, tol: float = DEFAULT_TOL) -> bool:
    effects = [_arr(e) for e in effects]
    total = sum(effects)
    return bool(np.max(np.abs(total - np.eye(total.shape[0]))) <= tol)
