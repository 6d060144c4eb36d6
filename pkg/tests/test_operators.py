import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspectral.errors import DimensionError, ValidationError
from qspectral.operators import (
    DensityMatrix,
    HermitianOperator,
    PositiveOperator,
    SubsystemShape,
    eig_hermitian,
    embed,
    partial_trace,
    permute_subsystems,
    positive_part_trace,
    purify,
    random_hermitian,
    sample,
    spectral_projector,
    tensor_power,
    tensor_product,
)

from conftest import PAULI_X


def test_eig_diagonal_and_pauli():
    s = eig_hermitian(np.diag([1.0, -1.0]))
    assert np.allclose(s.eigenvalues, [-1, 1])
    s = eig_hermitian(PAULI_X)
    assert np.allclose(s.eigenvalues, [-1, 1])
    minus = np.array([1, -1]) / math.sqrt(2)
    plus = np.array([1, 1]) / math.sqrt(2)
    assert abs(abs(np.vdot(minus, s.eigenvectors[:, 0])) - 1) < 1e-12
    assert abs(abs(np.vdot(plus, s.eigenvectors[:, 1])) - 1) < 1e-12


def test_eig_reconstruction(rng):
    a = random_hermitian(8, rng)
    s = eig_hermitian(a)
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert np.max(np.abs(s.reconstruct() - a)) < 1e-10
    u = s.eigenvectors
    assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-10


def test_projector_examples():
    assert np.allclose(spectral_projector(np.diag([2.0, -1.0]), np.zeros((2, 2))).matrix, np.diag([1, 0]))
    a = np.diag([0.3, 0.7])
    assert np.allclose(spectral_projector(a, a, ">=").matrix, np.eye(2))
    assert np.allclose(spectral_projector(a, a, ">").matrix, 0)
    p = spectral_projector(PAULI_X, np.zeros((2, 2))).matrix
    assert np.allclose(p, np.full((2, 2), 0.5))


def test_projector_complement(rng):
    for d in (2, 3, 5):
        a, b = random_hermitian(d, rng), random_hermitian(d, rng)
        ge = spectral_projector(a, b, ">=").matrix
        lt = spectral_projector(a, b, "<").matrix
        assert np.max(np.abs(ge + lt - np.eye(d))) < 1e-9
        assert np.max(np.abs(ge @ ge - ge)) < 1e-9


def test_projector_rejects_bad_relation():
    with pytest.raises(ValueError):
        spectral_projector(np.eye(2), np.eye(2), "=>")


def test_positive_part_examples(rng):
    assert positive_part_trace(np.diag([1.0, -1.0]), np.zeros((2, 2))) == pytest.approx(1.0)
    a = random_hermitian(4, rng)
    assert positive_part_trace(a, a) == pytest.approx(0.0, abs=1e-15)
    b = random_hermitian(4, rng)
    # independent oracle: eigvals from scipy on the difference
    import scipy.linalg

    lam = scipy.linalg.eigvalsh(a - b)
    assert positive_part_trace(a, b) == pytest.approx(np.sum(np.maximum(lam, 0)), abs=1e-12)


def test_tensor_product_examples(rng):
    assert np.allclose(tensor_product([np.diag([1.0, 2.0]), np.diag([1.0, 3.0])]), np.diag([1, 3, 2, 6]))
    assert np.allclose(tensor_product([np.eye(2), np.eye(2)]), np.eye(4))
    r, s = sample("density_hs", 3, rng).matrix, sample("density_hs", 2, rng).matrix
    assert abs(np.trace(tensor_product([r, s])) - 1) < 1e-12
    assert tensor_power(r, 3).shape == (27, 27)


def test_partial_trace_examples(bell, rng):
    rho, shape = bell
    assert np.allclose(partial_trace(rho, shape, ["A"]), np.eye(2) / 2)
    r, s = sample("density_hs", 3, rng).matrix, sample("density_hs", 2, rng).matrix
    sh = SubsystemShape((3, 2))
    assert np.max(np.abs(partial_trace(np.kron(r, s), sh, ["A"]) - r)) < 1e-12
    assert np.max(np.abs(partial_trace(np.kron(r, s), sh, ["B"]) - s)) < 1e-12
    two = sample("density_hs", 4, rng).matrix
    assert abs(np.trace(partial_trace(two, SubsystemShape((2, 2)), ["B"])) - 1) < 1e-12


def test_partial_trace_keep_order(rng):
    a, b, c = (sample("density_hs", d, rng).matrix for d in (2, 3, 2))
    sh = SubsystemShape((2, 3, 2))
    full = np.kron(np.kron(a, b), c)
    assert np.allclose(partial_trace(full, sh, ["C", "A"]), np.kron(c, a))
    assert np.allclose(permute_subsystems(full, sh, ["C", "B", "A"]), np.kron(np.kron(c, b), a))


def test_embed(rng):
    b = sample("density_hs", 3, rng).matrix
    sh = SubsystemShape((2, 3))
    assert np.allclose(embed(b, sh, ["B"]), np.kron(np.eye(2), b))
    with pytest.raises(DimensionError):
        embed(b, sh, ["A"])


def test_shape_power_labels():
    sh = SubsystemShape((2, 3)).power(2)
    assert sh.labels == ("A1", "B1", "A2", "B2")
    assert sh.factor_dims == (2, 3, 2, 3)


def test_purify_examples(rng):
    psi = purify(np.eye(2) / 2)
    assert psi.shape == (4, 4)
    assert abs(np.trace(psi @ psi) - 1) < 1e-12
    assert np.allclose(partial_trace(psi, SubsystemShape((2, 2)), ["B"]), np.eye(2) / 2)

    pure = sample("pure_haar", 3, rng).matrix
    out = purify(pure)
    assert out.shape == (3, 3)
    assert np.allclose(out, pure, atol=1e-10)

    u = sample("unitary_haar", 4, rng)
    rho = (u * np.array([0.5, 0.3, 0.2, 0.0])) @ u.conj().T
    out = purify(rho)
    assert out.shape == (12, 12)
    assert np.max(np.abs(partial_trace(out, SubsystemShape((4, 3)), ["A"]) - rho)) < 1e-10


def test_sample_properties():
    rho = sample("density_hs", 4, seed=7)
    assert abs(np.trace(rho.matrix).real - 1) < 1e-12
    assert np.linalg.eigvalsh(rho.matrix)[0] >= -1e-12
    c = sample("contraction", 4, seed=7)
    lam = np.linalg.eigvalsh(c.matrix)
    assert lam[0] >= -1e-12 and lam[-1] <= 1 + 1e-12
    u = sample("unitary_haar", 3, seed=7)
    assert np.max(np.abs(u.conj().T @ u - np.eye(3))) < 1e-12
    assert np.array_equal(sample("density_hs", 4, seed=7).matrix, rho.matrix)
    joint = sample("classical_joint", (2, 3), seed=1).matrix
    assert joint.shape == (6, 6) and np.allclose(joint, np.diag(np.diag(joint)))
    with pytest.raises(ValueError):
        sample("ginibre", 2, seed=0)


def test_type_invariants():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValidationError):
        PositiveOperator(np.diag([1.0, -0.5]))
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.5, 0.6]))
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(DimensionError):
        HermitianOperator(np.zeros((2, 3)))
    op = HermitianOperator(np.diag([1.0, 2.0]))
    assert not op.matrix.flags.writeable
    assert op.herm_defect == 0.0


def test_dimension_cap():
    from qspectral.errors import CapacityError

    with pytest.raises(CapacityError):
        tensor_power(np.eye(2) / 2, 15)


def test_lemma1_spot(rng):
    for d in (2, 4, 8, 16):
        for _ in range(50):
            a, b = random_hermitian(d, rng), random_hermitian(d, rng)
            p = sample("contraction", d, rng).matrix
            lhs = np.trace(p @ (a - b)).real
            norm = np.max(np.abs(np.linalg.eigvalsh(a - b)))
            assert lhs <= positive_part_trace(a, b) + 1e-9 * (1 + norm)


hermitian_seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seed=hermitian_seeds, d=st.integers(min_value=1, max_value=6))
def test_positive_part_dominates_trace(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    assert positive_part_trace(a, b) >= max(0.0, np.trace(a - b).real) - 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=hermitian_seeds, d=st.integers(min_value=1, max_value=6))
def test_lemma1_property(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    p = sample("contraction", d, rng).matrix
    norm = np.max(np.abs(np.linalg.eigvalsh(a - b)))
    assert np.trace(p @ (a - b)).real <= positive_part_trace(a, b) + 1e-9 * (1 + norm)
