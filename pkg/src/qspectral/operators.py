"""Dense operator algebra on finite-dimensional Hilbert spaces.

Operators are stored as complex128 numpy arrays. The typed wrappers
(:class:`HermitianOperator`, :class:`PositiveOperator`, :class:`DensityMatrix`)
validate their invariant once at construction; every function in this module
also accepts a plain ``ndarray`` wherever an operator is expected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from qspectral.errors import CapacityError, DimensionError, EigenSolverError, ValidationError

DEFAULT_DIM_CAP = 2**14
HERM_TOL = 1e-10
POS_TOL = 1e-10
TRACE_TOL = 1e-10
PURIFY_RANK_TOL = 1e-12
TIE_REL = 1e-12

RELATIONS = (">=", ">", "<=", "<")


def _max_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


class HermitianOperator:
    """Square complex matrix equal to its own adjoint up to ``HERM_TOL``.

    The wrapped array is made read-only; ``herm_defect`` records the max-norm
    of ``M - M^dagger`` observed at construction.
    """

    def __init__(self, matrix, *, check: bool = True):
        m = np.array(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionError(f"expected a nonempty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("matrix has non-finite entries")
        defect = _max_norm(m - m.conj().T)
        if check and defect > HERM_TOL * (1.0 + _max_norm(m)):
            raise ValidationError(f"matrix is not Hermitian (defect {defect:.3e})")
        m.setflags(write=False)
        self.matrix = m
        self.herm_defect = defect

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class PositiveOperator(HermitianOperator):
    """Hermitian operator with nonnegative spectrum (within ``POS_TOL``)."""

    def __init__(self, matrix, *, check: bool = True, min_eig: float | None = None):
        super().__init__(matrix, check=check)
        if min_eig is None:
            evals = np.linalg.eigvalsh(self.matrix)
            min_eig = float(evals[0])
            norm = float(np.max(np.abs(evals)))
            if check and min_eig < -POS_TOL * (1.0 + norm):
                raise ValidationError(f"operator is not positive (min eigenvalue {min_eig:.3e})")
        self.min_eig = float(min_eig)


class DensityMatrix(PositiveOperator):
    """Positive operator of unit trace."""

    def __init__(self, matrix, *, check: bool = True, min_eig: float | None = None):
        super().__init__(matrix, check=check, min_eig=min_eig)
        tr = float(np.trace(self.matrix).real)
        if check and abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix must have unit trace, got {tr!r}")
        self.trace_value = tr


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition ``A = U diag(eigenvalues) U^dagger`` with ascending eigenvalues."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


@dataclass(frozen=True)
class SubsystemShape:
    """Tensor-factor structure of an operator, e.g. ``SubsystemShape((2, 2), ("A", "B"))``."""

    factor_dims: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        labels = tuple(self.labels) or tuple(_default_labels(len(dims)))
        if not dims or any(d < 1 for d in dims):
            raise DimensionError(f"factor dims must be positive, got {self.factor_dims}")
        if len(labels) != len(dims) or len(set(labels)) != len(labels):
            raise DimensionError(f"need {len(dims)} distinct labels, got {labels}")
        object.__setattr__(self, "factor_dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return math.prod(self.factor_dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DimensionError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def dims_of(self, labels: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.factor_dims[self.index(lab)] for lab in labels)

    def power(self, n: int) -> "SubsystemShape":
        """Shape of the n-fold tensor power, copies ordered ``(A1 B1)(A2 B2)...``."""
        labels = tuple(f"{lab}{k}" for k in range(1, n + 1) for lab in self.labels)
        return SubsystemShape(self.factor_dims * n, labels)


def _default_labels(k: int) -> list[str]:
    return [chr(ord("A") + i) for i in range(k)] if k <= 26 else [f"S{i}" for i in range(k)]


Operand = Union[HermitianOperator, np.ndarray]


def as_array(a: Operand) -> np.ndarray:
    if isinstance(a, HermitianOperator):
        return a.matrix
    return np.asarray(a, dtype=np.complex128)


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def _eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        norm = _max_norm(a)
        raise EigenSolverError(
            f"eigensolver did not converge for dim={a.shape[0]} operator "
            f"(max-norm {norm:.3e}, finite={bool(np.all(np.isfinite(a)))})"
        ) from exc


def eig_hermitian(a: Operand) -> Spectrum:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    m = as_array(a)
    if not isinstance(a, HermitianOperator):
        m = HermitianOperator(m).matrix
    w, v = _eigh(m)
    return Spectrum(w, v)


def tie_tolerance(eigenvalues: np.ndarray) -> float:
    """Band around zero inside which an eigenvalue counts as zero."""
    norm = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    return TIE_REL * (1.0 + norm)


def select_eigenvalues(eigenvalues: np.ndarray, relation: str) -> np.ndarray:
    """Boolean mask of eigenvalues of ``A - B`` picked by ``{A rel B}``.

    Zero eigenvalues (within :func:`tie_tolerance`) belong to ``>=`` and ``<=``,
    so that ``{A >= B} + {A < B} = I``.
    """
    tau = tie_tolerance(eigenvalues)
    if relation == ">=":
        return eigenvalues >= -tau
    if relation == ">":
        return eigenvalues > tau
    if relation == "<=":
        return eigenvalues <= tau
    if relation == "<":
        return eigenvalues < -tau
    raise ValueError(f"relation must be one of {RELATIONS}, got {relation!r}")


def projector_from_spectrum(w: np.ndarray, v: np.ndarray, relation: str = ">=") -> np.ndarray:
    cols = v[:, select_eigenvalues(w, relation)]
    return cols @ cols.conj().T


def spectral_projector(a: Operand, b: Operand, relation: str = ">=") -> PositiveOperator:
    """Orthogonal projector ``{A rel B}`` onto the selected eigenspace of ``A - B``."""
    am, bm = as_array(a), as_array(b)
    _check_same_dim(am, bm)
    w, v = _eigh(hermitize(am - bm))
    proj = projector_from_spectrum(w, v, relation)
    return PositiveOperator(hermitize(proj), check=False, min_eig=0.0)


def positive_part_trace(a: Operand, b: Operand) -> float:
    """``Tr[{A >= B}(A - B)]``, the sum of the nonnegative eigenvalues of ``A - B``."""
    am, bm = as_array(a), as_array(b)
    _check_same_dim(am, bm)
    w = np.linalg.eigvalsh(hermitize(am - bm))
    return float(np.sum(w[w > 0]))


def tensor_product(ops: Sequence[Operand], cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Kronecker product of ``ops`` in list order."""
    if not ops:
        raise ValueError("tensor_product needs at least one operator")
    mats = [as_array(o) for o in ops]
    total = math.prod(m.shape[0] for m in mats)
    if total > cap:
        raise CapacityError(f"tensor product dim {total} exceeds the dense cap {cap}")
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def tensor_power(op: Operand, n: int, cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    if n < 1:
        raise ValueError(f"tensor power needs n >= 1, got {n}")
    return tensor_product([op] * n, cap=cap)


def partial_trace(a: Operand, shape: SubsystemShape, keep: Sequence[str]) -> np.ndarray:
    """Trace out every factor not in ``keep``; kept factors stay in ``keep`` order."""
    m = as_array(a)
    if m.shape[0] != shape.dim:
        raise DimensionError(f"shape {shape.factor_dims} (dim {shape.dim}) inconsistent with operator dim {m.shape[0]}")
    keep = list(keep)
    if not keep:
        raise DimensionError("empty keep-set; use the total trace instead")
    if len(set(keep)) != len(keep):
        raise DimensionError(f"duplicate labels in keep-set {keep}")
    k_idx = [shape.index(lab) for lab in keep]
    t_idx = [i for i in range(len(shape.factor_dims)) if i not in k_idx]
    k = len(shape.factor_dims)
    dims = shape.factor_dims
    t = m.reshape(dims + dims)
    # bring kept row axes, traced row axes, kept column axes, traced column axes together
    order = k_idx + t_idx + [k + i for i in k_idx] + [k + i for i in t_idx]
    t = t.transpose(order)
    dk = math.prod(dims[i] for i in k_idx)
    dt = math.prod(dims[i] for i in t_idx)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ijkj->ik", t)


def permute_subsystems(a: Operand, shape: SubsystemShape, order: Sequence[str]) -> np.ndarray:
    """Reorder tensor factors so they appear in ``order``."""
    m = as_array(a)
    idx = [shape.index(lab) for lab in order]
    if sorted(idx) != list(range(len(shape.factor_dims))):
        raise DimensionError(f"order {list(order)} is not a permutation of {shape.labels}")
    dims = shape.factor_dims
    k = len(dims)
    t = m.reshape(dims + dims).transpose(idx + [k + i for i in idx])
    return t.reshape(m.shape)


def embed(op: Operand, shape: SubsystemShape, labels: Sequence[str]) -> np.ndarray:
    """``op`` acting on the factors ``labels`` of ``shape``, tensored with identity elsewhere."""
    m = as_array(op)
    labels = list(labels)
    sub_dim = math.prod(shape.dims_of(labels))
    if m.shape[0] != sub_dim:
        raise DimensionError(f"operator dim {m.shape[0]} does not match subsystems {labels} (dim {sub_dim})")
    rest = [lab for lab in shape.labels if lab not in labels]
    rest_dim = math.prod(shape.dims_of(rest)) if rest else 1
    full = np.kron(m, np.eye(rest_dim))
    current = SubsystemShape(shape.dims_of(labels + rest), tuple(labels + rest))
    return permute_subsystems(full, current, shape.labels)


def purify(rho: Operand) -> np.ndarray:
    """Pure state on ``d x r`` whose reduction to the first factor is ``rho``.

    ``r`` is the number of eigenvalues above ``PURIFY_RANK_TOL``; the returned
    matrix is the projector onto ``sum_i sqrt(l_i) |i>|i>``.
    """
    m = as_array(rho)
    w, v = _eigh(hermitize(m))
    keep = w > PURIFY_RANK_TOL
    w, v = w[keep], v[:, keep]
    r = len(w)
    # |psi> = sum_i sqrt(l_i) |v_i> (x) |i>
    psi = (v * np.sqrt(w)).reshape(-1) if r else np.zeros(m.shape[0], dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------------------
# random sampling

SAMPLE_KINDS = ("density_hs", "pure_haar", "contraction", "unitary_haar", "classical_joint")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(d: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = d if cols is None else cols
    return (rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))) / math.sqrt(2)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(d, rng))
    diag = np.diag(r)
    phases = diag / np.abs(diag)
    return q * phases


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    """Entries uniform in the complex unit square, then Hermitized."""
    m = rng.uniform(-1, 1, (d, d)) + 1j * rng.uniform(-1, 1, (d, d))
    return hermitize(m)


def sample(kind: str, dims, seed=None):
    """Draw a random operator; deterministic for a given integer ``seed``.

    ``dims`` is an int, or a tuple whose product is taken (``classical_joint``
    accepts ``(d_A, d_B)`` for a joint distribution on ``d_A * d_B`` outcomes).
    Returns a :class:`DensityMatrix` for state kinds, a :class:`PositiveOperator`
    for ``contraction`` and a unitary ndarray for ``unitary_haar``.
    """
    d = int(math.prod(dims)) if isinstance(dims, (tuple, list)) else int(dims)
    if d < 1:
        raise DimensionError(f"dims must be >= 1, got {dims}")
    rng = _rng(seed)
    if kind == "density_hs":
        g = ginibre(d, rng)
        rho = g @ g.conj().T
        return DensityMatrix(hermitize(rho / np.trace(rho).real))
    if kind == "pure_haar":
        psi = ginibre(d, rng, 1)[:, 0]
        psi /= np.linalg.norm(psi)
        return DensityMatrix(np.outer(psi, psi.conj()))
    if kind == "contraction":
        u = haar_unitary(d, rng)
        vals = rng.uniform(0.0, 1.0, d)
        return PositiveOperator(hermitize((u * vals) @ u.conj().T), min_eig=float(vals.min()))
    if kind == "unitary_haar":
        return haar_unitary(d, rng)
    if kind == "classical_joint":
        p = rng.dirichlet(np.ones(d))
        return DensityMatrix(np.diag(p).astype(np.complex128))
    raise ValueError(f"unknown sample kind {kind!r}; expected one of {SAMPLE_KINDS}")
