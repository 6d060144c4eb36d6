"""Tail functionals of the difference operator ``rho_n - s * omega_n``.

Three functionals share one spectral projector ``P = {rho >= s omega}``:

* ``positive_tail``: ``Tr[P (rho - s omega)]``
* ``rho_tail``:      ``Tr[P rho]``
* ``omega_tail``:    ``Tr[P omega]``

Two engines evaluate them. The dense engine diagonalizes the full operator.
The type-class engine handles commuting i.i.d. pairs ``(diag p)^{(x)n}`` vs
``(diag q)^{(x)n}`` by summing over the ``C(n+d-1, d-1)`` count vectors in log
space, so its cost is polynomial in ``n``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from qspectral.errors import CapacityError, DimensionError, ValidationError
from qspectral.operators import (
    DEFAULT_DIM_CAP,
    Operand,
    SubsystemShape,
    as_array,
    hermitize,
    select_eigenvalues,
    tensor_power,
)

FUNCTIONALS = ("positive_tail", "rho_tail", "omega_tail")
TYPECLASS_CAP = 10**7
LOG_S_CLIP = 700.0
LLR_TIE_REL = 1e-12
COMMUTE_TOL = 1e-10


@dataclass(frozen=True)
class ScaledPair:
    """``(rho, omega)`` together with the scale ``s = e^{n gamma}``."""

    rho: np.ndarray
    omega: np.ndarray
    s: float
    n: int = 1
    gamma: float | None = None

    def __post_init__(self):
        rho, omega = as_array(self.rho), as_array(self.omega)
        if rho.shape != omega.shape:
            raise DimensionError(f"rho and omega differ in dimension: {rho.shape} vs {omega.shape}")
        if not (math.isfinite(self.s) and self.s > 0):
            raise ValidationError(f"scale must be finite and positive, got {self.s!r}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "omega", omega)
        if self.gamma is None:
            object.__setattr__(self, "gamma", math.log(self.s) / self.n)

    @classmethod
    def from_gamma(cls, rho: Operand, omega: Operand, n: int, gamma: float) -> "ScaledPair":
        return cls(rho, omega, scale_from_gamma(n, gamma), n, gamma)


def scale_from_gamma(n: int, gamma: float) -> float:
    """``e^{n gamma}``, with the exponent clipped to +/-700 so it stays finite."""
    return math.exp(min(max(n * gamma, -LOG_S_CLIP), LOG_S_CLIP))


def dense_tails(rho: np.ndarray, omega: np.ndarray, s: float) -> tuple[float, float, float]:
    """``(positive_tail, rho_tail, omega_tail)`` from a single eigendecomposition."""
    w, v = np.linalg.eigh(hermitize(rho - s * omega))
    mask = select_eigenvalues(w, ">=")
    cols = v[:, mask]
    pos = float(np.sum(np.maximum(w[mask], 0.0)))
    r = float(np.real(np.sum(cols.conj() * (rho @ cols))))
    o = float(np.real(np.sum(cols.conj() * (omega @ cols))))
    return pos, r, o


def positive_tail(pair: ScaledPair) -> float:
    """``Tr[(rho - s omega)_+]``."""
    return dense_tails(pair.rho, pair.omega, pair.s)[0]


def rho_tail(pair: ScaledPair) -> float:
    """``Tr[{rho >= s omega} rho]``."""
    return dense_tails(pair.rho, pair.omega, pair.s)[1]


def omega_tail(pair: ScaledPair) -> float:
    """``Tr[{rho >= s omega} omega]``; never exceeds ``Tr(rho) / s``."""
    return dense_tails(pair.rho, pair.omega, pair.s)[2]


# ---------------------------------------------------------------------------
# type-class engine


def type_count(n: int, d: int) -> int:
    return math.comb(n + d - 1, d - 1)


@functools.lru_cache(maxsize=64)
def compositions(n: int, d: int) -> np.ndarray:
    """All count vectors of length ``d`` summing to ``n``, in colexicographic order."""
    if d == 1:
        out = np.array([[n]], dtype=np.int64)
    else:
        out = np.concatenate(
            [
                np.column_stack([compositions(n - last, d - 1), np.full(type_count(n - last, d - 1), last)])
                for last in range(n + 1)
            ]
        )
    out.setflags(write=False)
    return out


def _log1mexp(x: np.ndarray) -> np.ndarray:
    """``log(1 - e^x)`` for ``x <= 0``; ``-inf`` at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    neg = x < 0
    xn = x[neg]
    out[neg] = np.where(xn > -math.log(2), np.log(-np.expm1(xn)), np.log1p(-np.exp(xn)))
    return out


class TypeClassTable:
    """Per-type log masses of ``(diag p)^{(x)n}`` and ``(diag q)^{(x)n}``."""

    def __init__(self, p, q, n: int, cap: int = TYPECLASS_CAP):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.ndim != 1 or p.shape != q.shape:
            raise DimensionError(f"p and q must be equal-length vectors, got {p.shape}, {q.shape}")
        if np.any(p < 0) or np.any(q < 0):
            raise ValidationError("p and q must be nonnegative")
        if n < 1:
            raise ValueError(f"blocklength must be >= 1, got {n}")
        d = len(p)
        count = type_count(n, d)
        if count > cap:
            raise CapacityError(f"type-class enumeration needs {count} types (n={n}, d={d}); cap is {cap}")
        t = compositions(n, d)
        with np.errstate(divide="ignore"):
            logp, logq = np.log(p), np.log(q)
        log_mult = gammaln(n + 1) - np.sum(gammaln(t + 1), axis=1)
        used = t > 0
        self.log_p = log_mult + np.sum(np.where(used, t * np.where(used, logp, 0.0), 0.0), axis=1)
        self.log_q = log_mult + np.sum(np.where(used, t * np.where(used, logq, 0.0), 0.0), axis=1)
        # per-string log-likelihood ratio; strings with zero rho-mass never enter the set
        with np.errstate(invalid="ignore"):
            llr = self.log_p - self.log_q
        llr[np.isneginf(self.log_p)] = -np.inf
        self.llr = llr
        self.n = n
        self.types = t

    def tails(self, gamma: float) -> tuple[float, float, float]:
        ng = self.n * gamma
        member = self.llr >= ng - LLR_TIE_REL * (1.0 + abs(ng))
        if not np.any(member):
            return 0.0, 0.0, 0.0
        lp, lq, llr = self.log_p[member], self.log_q[member], self.llr[member]
        rho_t = float(np.exp(logsumexp(lp)))
        omega_t = float(np.exp(logsumexp(lq))) if np.any(np.isfinite(lq)) else 0.0
        # each member type contributes M P_t (1 - s Q_t / P_t) >= 0
        with np.errstate(invalid="ignore"):
            shrink = np.where(np.isposinf(llr), -np.inf, ng - llr)
        pos_terms = lp + _log1mexp(np.minimum(shrink, 0.0))
        pos = float(np.exp(logsumexp(pos_terms))) if np.any(np.isfinite(pos_terms)) else 0.0
        return pos, rho_t, omega_t


def typeclass_tail(p, q, n: int, gamma: float, which: str = "positive_tail") -> float:
    """Tail functional of ``(diag p)^{(x)n}`` vs ``(diag q)^{(x)n}`` at ``s = e^{n gamma}``."""
    return TypeClassTable(p, q, n).tails(gamma)[FUNCTIONALS.index(_check_functional(which))]


def _check_functional(which: str) -> str:
    aliases = {"positive": "positive_tail", "rho": "rho_tail", "omega": "omega_tail"}
    which = aliases.get(which, which)
    if which not in FUNCTIONALS:
        raise ValueError(f"unknown functional {which!r}; expected one of {FUNCTIONALS}")
    return which


# ---------------------------------------------------------------------------
# sequences


def joint_diagonal(rho: np.ndarray, omega: np.ndarray, tol: float = COMMUTE_TOL):
    """Eigenvalues ``(p, q)`` of two commuting Hermitian operators in a shared basis, else ``None``."""
    scale = 1.0 + max(np.abs(rho).max(), np.abs(omega).max())
    if np.abs(rho @ omega - omega @ rho).max() > tol * scale:
        return None
    d = rho.shape[0]
    if np.abs(omega - omega[0, 0] * np.eye(d)).max() <= tol * scale:
        return np.linalg.eigvalsh(hermitize(rho)), np.full(d, omega[0, 0].real)
    # a generic real combination has simple spectrum when rho and omega commute
    _, v = np.linalg.eigh(hermitize(rho + (math.sqrt(2) / math.pi) * omega))
    p = np.real(np.einsum("ji,jk,ki->i", v.conj(), rho, v))
    q = np.real(np.einsum("ji,jk,ki->i", v.conj(), omega, v))
    if np.abs((v * p) @ v.conj().T - rho).max() > 1e3 * tol * scale:
        return None
    if np.abs((v * q) @ v.conj().T - omega).max() > 1e3 * tol * scale:
        return None
    return np.clip(p, 0.0, None), np.clip(q, 0.0, None)


OmegaRule = Callable[[np.ndarray, SubsystemShape], np.ndarray]


class PairSequence:
    """A sequence ``n -> (rho_n, omega_n)``.

    Build one with :meth:`iid`, :meth:`classical` or :meth:`explicit`. An
    optional ``omega_rule`` derives ``omega_n`` from ``rho_n`` and its
    subsystem shape at every ``n``; this is how entropic reference operators
    (identity, ``I (x) rho_B``, ``rho_A (x) rho_B``) are built.
    """

    def __init__(self, kind: str, *, rho=None, omega=None, p=None, q=None, table=None,
                 shape: SubsystemShape | None = None, omega_rule: OmegaRule | None = None):
        if kind not in ("iid_quantum", "iid_classical", "explicit"):
            raise ValueError(f"unknown sequence kind {kind!r}")
        self.kind = kind
        self.shape = shape
        self.omega_rule = omega_rule
        self.rho = None if rho is None else as_array(rho)
        self.omega = None if omega is None else as_array(omega)
        self.p = None if p is None else np.asarray(p, dtype=float)
        self.q = None if q is None else np.asarray(q, dtype=float)
        self.table = table
        self._diag = None
        if kind == "iid_quantum":
            if self.rho is None:
                raise ValidationError("iid_quantum sequences need a single-copy rho")
            if self.shape is None:
                self.shape = SubsystemShape((self.rho.shape[0],))
            if self.omega is None:
                self.omega = omega_rule(self.rho, self.shape.power(1)) if omega_rule else np.eye(self.rho.shape[0])
            if self.rho.shape != self.omega.shape:
                raise DimensionError(f"rho and omega differ in dimension: {self.rho.shape} vs {self.omega.shape}")
            self._diag = joint_diagonal(self.rho, self.omega)
        elif kind == "iid_classical":
            if self.p is None or self.q is None or self.p.shape != self.q.shape:
                raise ValidationError("iid_classical sequences need equal-length p and q")
            if np.any(self.p < 0) or abs(self.p.sum() - 1.0) > 1e-10 or np.any(self.q < 0):
                raise ValidationError("p must be a probability vector and q nonnegative")
            self._diag = (self.p, self.q)
        elif not table:
            raise ValidationError("explicit sequences need a nonempty table {n: (rho_n, omega_n)}")

    @classmethod
    def iid(cls, rho, omega=None, shape: SubsystemShape | None = None) -> "PairSequence":
        return cls("iid_quantum", rho=rho, omega=omega, shape=shape)

    @classmethod
    def classical(cls, p, q) -> "PairSequence":
        return cls("iid_classical", p=p, q=q)

    @classmethod
    def explicit(cls, table: Mapping[int, tuple], shape: SubsystemShape | None = None,
                 omega_rule: OmegaRule | None = None) -> "PairSequence":
        """``table`` maps ``n`` to ``(rho_n, omega_n)``; ``omega_n`` may be ``None`` when a rule is given.

        ``shape`` is the single-copy shape; ``rho_n`` is taken to live on ``shape.power(n)``.
        """
        return cls("explicit", table=dict(table), shape=shape, omega_rule=omega_rule)

    def derive(self, rho_map: Callable[[np.ndarray, SubsystemShape], np.ndarray], shape: SubsystemShape,
               omega_rule: OmegaRule) -> "PairSequence":
        """New sequence with ``rho_n`` mapped per ``n`` and ``omega_n`` rebuilt by ``omega_rule``.

        Both callables receive the copy-indexed shape ``shape.power(n)`` of their input.
        """
        if self.kind == "explicit":
            if self.shape is None:
                raise ValidationError("explicit sequences need a subsystem shape to derive from")
            table = {n: (rho_map(as_array(r), self.shape.power(n)), None) for n, (r, _) in self.table.items()}
            return PairSequence.explicit(table, shape=shape, omega_rule=omega_rule)
        if self.kind == "iid_classical":
            rho, base = np.diag(self.p).astype(np.complex128), SubsystemShape((len(self.p),))
        else:
            rho, base = self.rho, self.shape
        return PairSequence("iid_quantum", rho=rho_map(rho, base.power(1)), shape=shape, omega_rule=omega_rule)

    @property
    def commuting(self) -> bool:
        return self._diag is not None

    def diagonal_data(self):
        """Single-copy ``(p, q)`` for the type-class engine, or ``None``."""
        return self._diag

    def single_dim(self) -> int:
        if self.kind == "iid_classical":
            return len(self.p)
        if self.kind == "iid_quantum":
            return self.rho.shape[0]
        raise ValueError("explicit sequences have no single-copy dimension")

    def dense_dim(self, n: int) -> int:
        if self.kind == "explicit":
            if n not in self.table:
                raise KeyError(f"explicit sequence has no entry for n={n}; have {sorted(self.table)}")
            return as_array(self.table[n][0]).shape[0]
        return self.single_dim() ** n

    def pair(self, n: int, cap: int = DEFAULT_DIM_CAP) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``(rho_n, omega_n)``."""
        if self.dense_dim(n) > cap:
            raise CapacityError(f"dense dim {self.dense_dim(n)} at n={n} exceeds the dense cap {cap}")
        if self.kind == "explicit":
            r, o = self.table[n]
            r = as_array(r)
            if o is None:
                if self.omega_rule is None:
                    raise ValidationError(f"no omega for n={n} and no omega rule")
                o = self.omega_rule(r, self.shape.power(n))
            return r, as_array(o)
        if self.kind == "iid_classical":
            return (np.diag(_kron_power(self.p, n)).astype(np.complex128),
                    np.diag(_kron_power(self.q, n)).astype(np.complex128))
        rho_n = tensor_power(self.rho, n, cap=cap)
        if self.omega_rule is not None:
            return rho_n, self.omega_rule(rho_n, self.shape.power(n))
        return rho_n, tensor_power(self.omega, n, cap=cap)


def _kron_power(v: np.ndarray, n: int) -> np.ndarray:
    out = v
    for _ in range(n - 1):
        out = np.kron(out, v)
    return out


# ---------------------------------------------------------------------------
# dispatch


class TailFunction:
    """``gamma -> (positive_tail, rho_tail, omega_tail)`` for one sequence at one ``n``.

    ``engine="auto"`` picks the type-class engine whenever the sequence is
    commuting and the type count fits, the dense engine otherwise.
    """

    def __init__(self, seq: PairSequence, n: int, engine: str = "auto",
                 cap: int = DEFAULT_DIM_CAP, type_cap: int = TYPECLASS_CAP):
        self.n = n
        diag = seq.diagonal_data() if seq.kind != "explicit" else None
        can_type = diag is not None and type_count(n, len(diag[0])) <= type_cap
        can_dense = seq.dense_dim(n) <= cap
        if engine == "auto":
            if can_type:
                engine = "typeclass"
            elif can_dense:
                engine = "dense"
            else:
                count = type_count(n, len(diag[0])) if diag is not None else None
                raise CapacityError(
                    f"n={n} exceeds both engines: dense dim {seq.dense_dim(n)} > cap {cap}; "
                    + (f"type count {count} > cap {type_cap}" if count else "sequence is not commuting (no type-class path)")
                )
        if engine == "typeclass":
            if diag is None:
                raise ValueError("type-class engine needs a commuting i.i.d. sequence")
            self._table = TypeClassTable(diag[0], diag[1], n, cap=type_cap)
        elif engine == "dense":
            self._rho, self._omega = seq.pair(n, cap=cap)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        self.engine = engine
        self._cache: dict[float, tuple[float, float, float]] = {}

    def __call__(self, gamma: float) -> tuple[float, float, float]:
        gamma = float(gamma)
        hit = self._cache.get(gamma)
        if hit is None:
            if self.engine == "typeclass":
                hit = self._table.tails(gamma)
            else:
                hit = dense_tails(self._rho, self._omega, scale_from_gamma(self.n, gamma))
            self._cache[gamma] = hit
        return hit

    def value(self, gamma: float, which: str = "positive_tail") -> float:
        return self(gamma)[FUNCTIONALS.index(_check_functional(which))]


@dataclass(frozen=True)
class SpectrumCurve:
    n: int
    gammas: np.ndarray
    values: np.ndarray
    functional: str
    engine: str

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.gammas.tolist(), self.values.tolist()))


def spectrum_curve(seq: PairSequence, n: int, gammas: Sequence[float], functional: str = "positive_tail",
                   engine: str = "auto", cap: int = DEFAULT_DIM_CAP) -> SpectrumCurve:
    """Sample a tail functional over a strictly increasing ``gamma`` grid."""
    functional = _check_functional(functional)
    g = np.asarray(gammas, dtype=float)
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
        raise ValueError("gamma grid must be a nonempty strictly increasing sequence")
    f = TailFunction(seq, n, engine=engine, cap=cap)
    idx = FUNCTIONALS.index(functional)
    values = np.array([f(x)[idx] for x in g])
    return SpectrumCurve(n, g, values, functional, f.engine)
