"""CPTP maps in Kraus form."""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from qspectral.errors import CapacityError, DimensionError, ValidationError
from qspectral.operators import DEFAULT_DIM_CAP, Operand, as_array, haar_unitary, hermitize

CPTP_TOL = 1e-9
UNITAL_TOL = 1e-9


class KrausChannel:
    """Channel ``A -> sum_k K_k A K_k^dagger`` with ``sum_k K_k^dagger K_k = I``.

    ``cptp_defect`` is the max-norm of ``sum_k K_k^dagger K_k - I`` at
    construction and must not exceed ``CPTP_TOL``.
    """

    def __init__(self, kraus_ops: Sequence[np.ndarray], *, check: bool = True):
        ops = [np.array(k, dtype=np.complex128) for k in kraus_ops]
        if not ops:
            raise ValidationError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ops):
            raise DimensionError("Kraus operators must share one 2-d shape")
        self.dim_out, self.dim_in = shape
        stacked = np.stack(ops)
        for k in ops:
            k.setflags(write=False)
        self.kraus_ops = tuple(ops)
        gram = np.einsum("kji,kjl->il", stacked.conj(), stacked)
        self.cptp_defect = float(np.max(np.abs(gram - np.eye(self.dim_in))))
        if check and self.cptp_defect > CPTP_TOL:
            raise ValidationError(f"Kraus family is not trace preserving (defect {self.cptp_defect:.3e})")
        self._stacked = stacked

    def __len__(self):
        return len(self.kraus_ops)

    def __repr__(self):
        return f"KrausChannel(dim_in={self.dim_in}, dim_out={self.dim_out}, kraus={len(self)})"

    def __call__(self, a: Operand) -> np.ndarray:
        return apply_channel(self, a)


def apply_channel(channel: KrausChannel, a: Operand) -> np.ndarray:
    m = as_array(a)
    if m.shape != (channel.dim_in, channel.dim_in):
        raise DimensionError(f"channel expects dim {channel.dim_in} input, got {m.shape}")
    k = channel._stacked
    out = np.einsum("kij,jl,kml->im", k, m, k.conj(), optimize=True)
    return hermitize(out) if np.allclose(m, m.conj().T) else out


def random_channel(dim_in: int, dim_env: int, seed=None) -> KrausChannel:
    """Stinespring channel from a Haar unitary on system (x) environment.

    The environment starts in its first basis vector; Kraus operators are
    ``K_e = (I (x) <e|) U (I (x) |0>)``.
    """
    if dim_in < 1 or dim_env < 1:
        raise DimensionError(f"dims must be >= 1, got {dim_in}, {dim_env}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = haar_unitary(dim_in * dim_env, rng).reshape(dim_in, dim_env, dim_in, dim_env)
    return KrausChannel([u[:, e, :, 0] for e in range(dim_env)])


def is_unital(channel: KrausChannel) -> tuple[bool, float]:
    """Return ``(unital, defect)`` with defect the max-norm of ``sum K K^dagger - I``."""
    if channel.dim_in != channel.dim_out:
        raise DimensionError(f"unitality needs dim_in == dim_out, got {channel.dim_in} -> {channel.dim_out}")
    k = channel._stacked
    defect = float(np.max(np.abs(np.einsum("kij,klj->il", k, k.conj()) - np.eye(channel.dim_out))))
    return defect <= UNITAL_TOL, defect


def channel_power(channel: KrausChannel, n: int, cap: int = DEFAULT_DIM_CAP) -> KrausChannel:
    """``channel^{(x) n}`` as the Kraus family of all n-fold Kronecker products."""
    if n < 1:
        raise ValueError(f"channel_power needs n >= 1, got {n}")
    count = len(channel) ** n
    dim = max(channel.dim_in, channel.dim_out) ** n
    if dim > cap or count > cap:
        raise CapacityError(
            f"channel power n={n} needs {count} Kraus ops of dim {dim}; dense cap is {cap}"
        )
    if n == 1:
        return channel
    ops = []
    for combo in itertools.product(channel.kraus_ops, repeat=n):
        out = combo[0]
        for k in combo[1:]:
            out = np.kron(out, k)
        ops.append(out)
    return KrausChannel(ops)


# ---------------------------------------------------------------------------
# standard channels


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel([np.eye(d)])


def dephasing(d: int) -> KrausChannel:
    ops = []
    for i in range(d):
        k = np.zeros((d, d))
        k[i, i] = 1.0
        ops.append(k)
    return KrausChannel(ops)


def depolarizing(d: int, p: float) -> KrausChannel:
    """``rho -> (1 - p) rho + p I/d`` via the Weyl (clock-and-shift) basis."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p}")
    omega = np.exp(2j * math.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    ops = []
    for a in range(d):
        for b in range(d):
            w = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            weight = 1 - p + p / d**2 if (a, b) == (0, 0) else p / d**2
            if weight > 0:
                ops.append(math.sqrt(weight) * w)
    return KrausChannel(ops)


def amplitude_damping(gamma: float) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"damping parameter must lie in [0, 1], got {gamma}")
    return KrausChannel(
        [
            np.array([[1.0, 0.0], [0.0, math.sqrt(1 - gamma)]]),
            np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]]),
        ]
    )


def random_unital_channel(d: int, n_unitaries: int, seed=None) -> KrausChannel:
    """Random mixture of Haar unitaries; unital by construction."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(n_unitaries))
    return KrausChannel([math.sqrt(w) * haar_unitary(d, rng) for w in weights])


def partial_channel(channel: KrausChannel, d_left: int, d_right: int = 1) -> KrausChannel:
    """``id_left (x) channel (x) id_right``."""
    il, ir = np.eye(d_left), np.eye(d_right)
    return KrausChannel([np.kron(np.kron(il, k), ir) for k in channel.kraus_ops])
