"""Dense complex operator algebra: states, entropies, norms, tensor products.

All entropic quantities are in nats (natural log).  Matrix functions are
computed by eigendecomposition; dimensions here are small (<= 64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_TOL = 1e-10
RANK_TOL = 1e-10     # eigenvalues below this do not count toward the support
SUPPORT_TOL = 1e-8   # residual allowed in the range-inclusion test


class InvalidOperand(ValueError):
    """Operand violates a state/operator invariant."""


class DimensionMismatch(ValueError):
    """Operands live on incompatible spaces."""


# ---------------------------------------------------------------------------
# extended reals

@dataclass(frozen=True)
class ExtendedReal:
    """A nonnegative real in nats, or a distinguished +infinity."""

    value: float = 0.0
    is_infinite: bool = False

    @staticmethod
    def finite(x: float) -> "ExtendedReal":
        return ExtendedReal(float(x), False)

    @staticmethod
    def infinite() -> "ExtendedReal":
        return ExtendedReal(0.0, True)

    @staticmethod
    def from_float(x: float) -> "ExtendedReal":
        if math.isinf(x):
            return ExtendedReal.infinite()
        if math.isnan(x):
            raise ValueError("NaN is not an extended real")
        return ExtendedReal(float(x), False)

    @property
    def is_finite(self) -> bool:
        return not self.is_infinite

    def __float__(self) -> float:
        return math.inf if self.is_infinite else self.value

    def __add__(self, other):
        o = other if isinstance(other, ExtendedReal) else ExtendedReal.from_float(other)
        if self.is_infinite or o.is_infinite:
            return ExtendedReal.infinite()
        return ExtendedReal(self.value + o.value, False)

    __radd__ = __add__

    def __lt__(self, other):
        return float(self) < float(other)

    def __le__(self, other):
        return float(self) <= float(other)

    def __gt__(self, other):
        return float(self) > float(other)

    def __ge__(self, other):
        return float(self) >= float(other)

    def __repr__(self):
        return "ExtendedReal(+inf)" if self.is_infinite else f"ExtendedReal({self.value!r})"


INF = ExtendedReal.infinite()


# ---------------------------------------------------------------------------
# operator types

def _as_square_complex(entries) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidOperand(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class HermitianOperator:
    """A self-adjoint dense complex matrix."""

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _as_square_complex(self.mat)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InvalidOperand("matrix is not Hermitian within 1e-10")
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)


@dataclass(frozen=True)
class DensityOperator:
    """A positive unit-trace matrix (a quantum state)."""

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _as_square_complex(self.mat)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InvalidOperand("state is not Hermitian within 1e-10")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise InvalidOperand(f"state trace {np.trace(m)} is not 1 within 1e-10")
        if np.linalg.eigvalsh(m).min() < -EIG_TOL:
            raise InvalidOperand("state has an eigenvalue below -1e-10")
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Spectrum clamped at zero."""
        return np.maximum(np.linalg.eigvalsh(self.mat), 0.0)

    @staticmethod
    def pure(vec) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return DensityOperator(np.outer(v, v.conj()))

    @staticmethod
    def basis_state(dim: int, k: int) -> "DensityOperator":
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        return DensityOperator.pure(v)

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityOperator":
        return DensityOperator(np.eye(dim, dtype=complex) / dim)

    @staticmethod
    def diagonal(probs) -> "DensityOperator":
        p = np.asarray(probs, dtype=float)
        return DensityOperator(np.diag(p.astype(complex)))


# ---------------------------------------------------------------------------
# raw-array numerics (the solver-facing layer works on plain ndarrays)

def entropy_raw(mat: np.ndarray) -> float:
    lam = np.maximum(np.linalg.eigvalsh(mat), 0.0)
    nz = lam[lam > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def relative_entropy_raw(a: np.ndarray, b: np.ndarray,
                         rank_tol: float = RANK_TOL,
                         support_tol: float = SUPPORT_TOL) -> float:
    """tr(a log a) - tr(a log b) on a common refinement; math.inf when
    the support of a is not contained in the support of b."""
    la, ua = np.linalg.eigh(a)
    lb, ub = np.linalg.eigh(b)
    la = np.maximum(la, 0.0)
    lb = np.maximum(lb, 0.0)

    keep_b = lb > rank_tol
    if not np.all(keep_b):
        p_b = ub[:, keep_b]
        keep_a = la > rank_tol
        va = ua[:, keep_a]
        # residual of each a-eigenvector outside ran b
        resid = np.linalg.norm(va - p_b @ (p_b.conj().T @ va), axis=0)
        if resid.size and np.max(resid) > support_tol:
            return math.inf

    nz = la[la > 0.0]
    tr_a_loga = float(np.sum(nz * np.log(nz)))
    vb = ub[:, keep_b]
    diag_a_in_b = np.real(np.einsum("ij,jk,ki->i", vb.conj().T, a, vb))
    tr_a_logb = float(np.sum(np.log(lb[keep_b]) * diag_a_in_b))
    return tr_a_loga - tr_a_logb


def trace_norm(mat: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(mat))))


def logm_psd(mat: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """log on the support, 0 on the kernel (pseudo-log of a PSD matrix)."""
    lam, u = np.linalg.eigh(mat)
    lg = np.where(lam > rank_tol, np.log(np.maximum(lam, rank_tol)), 0.0)
    return (u * lg) @ u.conj().T


def sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    lam, u = np.linalg.eigh(mat)
    return (u * np.sqrt(np.maximum(lam, 0.0))) @ u.conj().T


def pinv_sqrtm_psd(mat: np.ndarray, cutoff: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse of mat^(1/2): zero on the orthocomplement
    of the support (eigenvalues <= cutoff treated as 0)."""
    lam, u = np.linalg.eigh(mat)
    inv = np.where(lam > cutoff, 1.0 / np.sqrt(np.maximum(lam, cutoff)), 0.0)
    return (u * inv) @ u.conj().T


def support_projector(mat: np.ndarray, cutoff: float = 1e-12) -> np.ndarray:
    lam, u = np.linalg.eigh(mat)
    keep = lam > cutoff
    v = u[:, keep]
    return v @ v.conj().T


def entropy_batch(mats: np.ndarray) -> np.ndarray:
    """Entropies of a stack of density matrices, shape (..., d, d)."""
    lam = np.maximum(np.linalg.eigvalsh(mats), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0.0, lam * np.log(np.maximum(lam, 1e-300)), 0.0)
    return -np.sum(terms, axis=-1)


# ---------------------------------------------------------------------------
# public operations on states

def entropy(a: DensityOperator) -> ExtendedReal:
    """von Neumann entropy -sum lam_i log lam_i (0 log 0 = 0), in nats."""
    if not isinstance(a, DensityOperator):
        raise InvalidOperand("entropy expects a DensityOperator")
    return ExtendedReal.finite(entropy_raw(a.mat))


def relative_entropy(a: DensityOperator, b: DensityOperator) -> ExtendedReal:
    """H(a || b); +infinity when ran a is not contained in ran b."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim} differ")
    return ExtendedReal.from_float(relative_entropy_raw(a.mat, b.mat))


def trace_distance(a: DensityOperator, b: DensityOperator) -> float:
    """||a - b||_1, in [0, 2]."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim} differ")
    return trace_norm(a.mat - b.mat)


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    return DensityOperator(np.kron(a.mat, b.mat))


def partial_trace_raw(w: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    da, db = dims
    t = w.reshape(da, db, da, db)
    if keep == 0:
        return np.trace(t, axis1=1, axis2=3)
    return np.trace(t, axis1=0, axis2=2)


def partial_trace(w: DensityOperator, dims: tuple[int, int], keep: str = "first") -> DensityOperator:
    """Reduced state of a bipartite w with factor dims (dA, dB)."""
    da, db = dims
    if w.dim != da * db:
        raise DimensionMismatch(f"dim {w.dim} does not factor as {da}*{db}")
    k = 0 if keep in ("first", "left", 0) else 1
    return DensityOperator(partial_trace_raw(w.mat, (da, db), k))


# ---------------------------------------------------------------------------
# random generators (seeded; used by solvers and tests)

def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> DensityOperator:
    r = rank or dim
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_pure(rng: np.random.Generator, dim: int) -> DensityOperator:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return DensityOperator.pure(v)
