import math

import numpy as np
import pytest

from qspectral import io
from qspectral.channels import random_channel
from qspectral.errors import DimensionError, ValidationError
from qspectral.operators import partial_trace, sample
from qspectral.rates import RateEstimate, RateRecord
from qspectral.spectrum import SpectrumCurve


def test_operator_roundtrip(tmp_path, rng):
    rho = sample("density_hs", 4, rng).matrix
    path = tmp_path / "rho.json"
    io.write_operator(path, rho, dims=[2, 2])
    back, shape = io.read_operator(path)
    assert np.array_equal(back, rho)
    assert shape.factor_dims == (2, 2)
    with pytest.raises(DimensionError):
        io.write_operator(path, rho, dims=[3])


def test_operator_file_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dims": [3], "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}')
    with pytest.raises(DimensionError):
        io.read_operator(path)
    path.write_text('{"dims": [2]}')
    with pytest.raises(ValidationError):
        io.read_operator(path)


def test_builtin_states():
    bell, shape = io.builtin_state("bell")
    assert shape.factor_dims == (2, 2)
    assert np.allclose(partial_trace(bell, shape, ["B"]), np.eye(2) / 2)
    ghz, shape = io.builtin_state("ghz3")
    assert ghz[0, 7] == pytest.approx(0.5) and shape.factor_dims == (2, 2, 2)
    mm, _ = io.builtin_state("maxmixed:3")
    assert np.allclose(mm, np.eye(3) / 3)
    d, _ = io.builtin_state("diag:0.75,0.25")
    assert np.allclose(d, np.diag([0.75, 0.25]))
    joint, shape = io.builtin_state("classical:0.1,0.2;0.3,0.4")
    assert shape.factor_dims == (2, 2)
    assert np.allclose(np.diag(joint).real, [0.1, 0.2, 0.3, 0.4])


@pytest.mark.parametrize("name", ["werner", "maxmixed:x", "diag:0.5,0.6", "classical:0.5;0.25,0.25", "diag:a,b"])
def test_builtin_state_errors(name):
    with pytest.raises((ValidationError, DimensionError)):
        io.builtin_state(name)


def test_load_state_prefers_file(tmp_path):
    path = tmp_path / "bell"
    io.write_operator(path, np.eye(2) / 2)
    m, _ = io.load_state(str(path))
    assert m.shape == (2, 2)


def test_channels(tmp_path):
    t = random_channel(2, 3, seed=1)
    path = tmp_path / "t.json"
    io.write_channel(path, t)
    back = io.read_channel(path)
    assert all(np.array_equal(a, b) for a, b in zip(t.kraus_ops, back.kraus_ops))
    assert len(io.builtin_channel("dephase:3")) == 3
    assert io.builtin_channel("identity:2").dim_in == 2
    assert len(io.builtin_channel("depolarize:2:0.3")) == 4
    assert io.builtin_channel("amplitude_damping:0.5").cptp_defect < 1e-15
    with pytest.raises(ValidationError):
        io.builtin_channel("depolarize:2")
    with pytest.raises(ValidationError):
        io.builtin_channel("amplitude_damping:2")


def test_fmt():
    assert io.fmt(3) == "3"
    assert io.fmt(1 / 3) == "0.333333333333"
    assert io.fmt(-math.log(2)) == "-0.69314718056"
    assert io.fmt(float("inf")) == "inf"
    assert io.fmt("dense") == "dense"


def test_csv_headers_and_newlines(tmp_path):
    curve = SpectrumCurve(2, np.array([0.0, 0.5]), np.array([0.25, 0.0]), "positive_tail", "dense")
    path = tmp_path / "c.csv"
    io.write_spectrum_csv(path, [curve])
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines() == ["n,gamma,f,functional,engine", "2,0,0.25,positive_tail,dense", "2,0.5,0,positive_tail,dense"]

    est = RateEstimate([RateRecord(4, 0.01, 0.5, 0.1, 0.3, "typeclass")], "entropy")
    path = tmp_path / "r.csv"
    io.write_rate_csv(path, [est])
    assert path.read_text().splitlines() == [
        "n,epsilon,sup_thresh,inf_thresh,midpoint,engine,kind",
        "4,0.01,0.5,0.1,0.3,typeclass,entropy",
    ]
