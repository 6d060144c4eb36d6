"""Operator/channel files, builtin names and CSV output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from qspectral.channels import KrausChannel, amplitude_damping, dephasing, depolarizing, identity_channel
from qspectral.errors import DimensionError, ValidationError
from qspectral.operators import SubsystemShape, as_array
from qspectral.rates import RateEstimate
from qspectral.spectrum import SpectrumCurve

SPECTRUM_HEADER = ("n", "gamma", "f", "functional", "engine")
RATE_HEADER = ("n", "epsilon", "sup_thresh", "inf_thresh", "midpoint", "engine", "kind")


def fmt(x) -> str:
    """12 significant digits, '.' decimal point, locale independent."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


# ---------------------------------------------------------------------------
# operators


def matrix_to_json(m: np.ndarray) -> list:
    m = as_array(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(rows) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"matrix entries must be [re, im] pairs: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"matrix must be a square array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def write_operator(path, m: np.ndarray, dims: Sequence[int] | None = None) -> None:
    m = as_array(m)
    dims = list(dims) if dims else [m.shape[0]]
    if math.prod(dims) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not multiply to matrix size {m.shape[0]}")
    Path(path).write_text(json.dumps({"dims": dims, "matrix": matrix_to_json(m)}) + "\n")


def read_operator(path) -> tuple[np.ndarray, SubsystemShape]:
    doc = json.loads(Path(path).read_text())
    if "matrix" not in doc:
        raise ValidationError(f"{path}: operator file needs a 'matrix' field")
    m = matrix_from_json(doc["matrix"])
    dims = tuple(int(d) for d in doc.get("dims", [m.shape[0]]))
    if math.prod(dims) != m.shape[0]:
        raise DimensionError(f"{path}: dims {list(dims)} do not multiply to matrix size {m.shape[0]}")
    return m, SubsystemShape(dims)


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"{what}: {exc}") from exc


def builtin_state(name: str) -> tuple[np.ndarray, SubsystemShape]:
    """``bell``, ``ghz3``, ``maxmixed:<d>``, ``diag:<p1,...>``, ``classical:<p11,p12;p21,p22>``."""
    head, _, arg = name.partition(":")
    if head == "bell":
        psi = np.zeros(4)
        psi[0] = psi[3] = 1 / math.sqrt(2)
        return np.outer(psi, psi).astype(np.complex128), SubsystemShape((2, 2))
    if head == "ghz3":
        psi = np.zeros(8)
        psi[0] = psi[7] = 1 / math.sqrt(2)
        return np.outer(psi, psi).astype(np.complex128), SubsystemShape((2, 2, 2))
    if head == "maxmixed":
        try:
            d = int(arg)
        except ValueError:
            raise ValidationError(f"maxmixed needs an integer dimension, got {arg!r}") from None
        if d < 1:
            raise DimensionError(f"maxmixed dimension must be >= 1, got {d}")
        return np.eye(d, dtype=np.complex128) / d, SubsystemShape((d,))
    if head == "diag":
        p = np.array(_floats(arg, name))
        _check_probs(p, name)
        return np.diag(p).astype(np.complex128), SubsystemShape((len(p),))
    if head == "classical":
        rows = [_floats(r, name) for r in arg.split(";")]
        if len({len(r) for r in rows}) != 1:
            raise DimensionError(f"{name}: rows of a classical joint must have equal length")
        joint = np.array(rows)
        _check_probs(joint.ravel(), name)
        return np.diag(joint.ravel()).astype(np.complex128), SubsystemShape(joint.shape)
    raise ValidationError(f"unknown builtin state {name!r}")


def _check_probs(p: np.ndarray, name: str) -> None:
    if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ValidationError(f"{name}: entries must be nonnegative and sum to 1")


def load_state(source: str) -> tuple[np.ndarray, SubsystemShape]:
    """A builtin name, or a path to an operator JSON file."""
    if Path(source).is_file():
        return read_operator(source)
    return builtin_state(source)


# ---------------------------------------------------------------------------
# channels


def write_channel(path, channel: KrausChannel) -> None:
    doc = {"dim_in": channel.dim_in, "dim_out": channel.dim_out,
           "kraus": [matrix_to_json(k) for k in channel.kraus_ops]}
    Path(path).write_text(json.dumps(doc) + "\n")


def read_channel(path) -> KrausChannel:
    doc = json.loads(Path(path).read_text())
    ops = []
    for k in doc.get("kraus", []):
        arr = np.array(k, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise DimensionError(f"{path}: Kraus operators must be arrays of [re, im] pairs")
        ops.append(arr[..., 0] + 1j * arr[..., 1])
    channel = KrausChannel(ops)
    if (channel.dim_in, channel.dim_out) != (doc.get("dim_in", channel.dim_in), doc.get("dim_out", channel.dim_out)):
        raise DimensionError(f"{path}: declared dims disagree with the Kraus operators")
    return channel


def builtin_channel(name: str) -> KrausChannel:
    """``identity:<d>``, ``dephase:<d>``, ``depolarize:<d>:<p>``, ``amplitude_damping:<gamma>``."""
    head, *args = name.split(":")
    try:
        if head == "identity" and len(args) == 1:
            return identity_channel(int(args[0]))
        if head == "dephase" and len(args) == 1:
            return dephasing(int(args[0]))
        if head == "depolarize" and len(args) == 2:
            return depolarizing(int(args[0]), float(args[1]))
        if head == "amplitude_damping" and len(args) == 1:
            return amplitude_damping(float(args[0]))
    except ValueError as exc:
        raise ValidationError(f"bad channel {name!r}: {exc}") from exc
    raise ValidationError(f"unknown builtin channel {name!r}")


def load_channel(source: str) -> KrausChannel:
    if Path(source).is_file():
        return read_channel(source)
    return builtin_channel(source)


# ---------------------------------------------------------------------------
# CSV


def _write_rows(target, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write to a path, or to an open text stream such as ``sys.stdout``."""
    if hasattr(target, "write"):
        _csv_rows(target, header, rows)
        return
    with open(target, "w", newline="") as fh:
        _csv_rows(fh, header, rows)


def _csv_rows(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])


def write_spectrum_csv(path, curves: Sequence[SpectrumCurve]) -> None:
    rows = ((c.n, g, v, c.functional, c.engine) for c in curves for g, v in c.points)
    _write_rows(path, SPECTRUM_HEADER, rows)


def write_rate_csv(path, estimates: Sequence[RateEstimate]) -> None:
    rows = (
        (r.n, r.epsilon, r.sup_thresh, r.inf_thresh, r.midpoint, r.engine, est.kind)
        for est in estimates
        for r in est.records
    )
    _write_rows(path, RATE_HEADER, rows)
