import math

import numpy as np
import pytest

from qkdsim.errors import ValidationError
from qkdsim.states import (
    DensityOperator,
    StateVector,
    TensorFactorization,
    partial_trace,
    permute_factors,
    pure_state,
    spectral,
    tensor,
    von_neumann_entropy,
)

from conftest import binary_entropy, random_density, random_unitary


class TestValidation:
    def test_non_hermitian_rejected(self):
        with pytest.raises(ValidationError, match="hermitian"):
            DensityOperator([[0.5, 1j], [0, 0.5]])

    def test_wrong_trace_rejected(self):
        with pytest.raises(ValidationError, match="unit-trace"):
            DensityOperator([[0.6, 0], [0, 0.6]])

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(ValidationError, match="positive-semidefinite"):
            DensityOperator([[1.2, 0], [0, -0.2]])

    def test_small_negative_jitter_tolerated(self):
        rho = DensityOperator([[1 + 5e-11, 0], [0, -5e-11]])
        assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-9)

    def test_non_normalized_vector_rejected(self):
        with pytest.raises(ValidationError, match="normalized"):
            StateVector([1.0, 1.0])

    def test_matrix_is_frozen(self):
        rho = pure_state([1, 0])
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 0.0

    def test_bad_factorization_rejected(self):
        rho = random_density(np.random.default_rng(0), 4)
        with pytest.raises(ValidationError, match="factorization"):
            partial_trace(rho, (2, 3), keep=[0])

    def test_empty_keep_rejected(self):
        rho = random_density(np.random.default_rng(0), 4)
        with pytest.raises(ValidationError, match="keep-set"):
            partial_trace(rho, (2, 2), keep=[])


class TestPureState:
    def test_basis_projector(self):
        rho = pure_state([1, 0])
        np.testing.assert_allclose(rho.matrix, np.diag([1.0, 0.0]), atol=1e-12)

    def test_plus_state(self):
        rho = pure_state(np.array([1, 1]) / math.sqrt(2))
        np.testing.assert_allclose(rho.matrix, np.full((2, 2), 0.5), atol=1e-12)

    def test_outer_product_oracle(self):
        theta = 0.7
        v = np.array([math.cos(theta), math.sin(theta)])
        rho = pure_state(v)
        expected = np.array(
            [
                [math.cos(theta) ** 2, math.cos(theta) * math.sin(theta)],
                [math.cos(theta) * math.sin(theta), math.sin(theta) ** 2],
            ]
        )
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)


class TestTensorAndPartialTrace:
    def test_mixed_identity_product(self):
        half = DensityOperator(np.eye(2) / 2)
        out = tensor(half, half)
        np.testing.assert_allclose(out.matrix, np.eye(4) / 4, atol=1e-12)

    def test_trace_out_second_factor_recovers_first(self, rng):
        a = random_density(rng, 2)
        b = random_density(rng, 3)
        back = partial_trace(tensor(a, b), (2, 3), keep=[0])
        np.testing.assert_allclose(back.matrix, a.matrix, atol=1e-10)

    def test_bell_state_marginal_is_mixed(self):
        bell = pure_state(np.array([1, 0, 0, 1]) / math.sqrt(2))
        reduced = partial_trace(bell, (2, 2), keep=[1])
        np.testing.assert_allclose(reduced.matrix, np.eye(2) / 2, atol=1e-12)

    def test_two_qubit_letter_state(self):
        # xi(0) for the ideal-eavesdropping example: same qubit twice.
        s = 0.5
        phi = pure_state([1, 0])
        letter = tensor(phi, phi)
        kept = partial_trace(letter, (2, 2), keep=[0])
        np.testing.assert_allclose(kept.matrix, phi.matrix, atol=1e-12)
        assert letter.dim == 4

    def test_keep_order_independent(self, rng):
        rho = random_density(rng, 8)
        f = TensorFactorization((2, 2, 2))
        a = partial_trace(partial_trace(rho, f, keep=[0, 2]), (2, 2), keep=[0])
        b = partial_trace(rho, f, keep=[0])
        np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-10)

    def test_permute_factors_roundtrip(self, rng):
        rho = random_density(rng, 8)
        out = permute_factors(rho.matrix, (2, 2, 2), (2, 0, 1))
        back = permute_factors(out, (2, 2, 2), (1, 2, 0))
        np.testing.assert_allclose(back, rho.matrix, atol=1e-14)


class TestSpectralAndEntropy:
    def test_diagonal_spectrum(self):
        vals, _ = spectral(DensityOperator(np.diag([0.75, 0.25])))
        np.testing.assert_allclose(vals, [0.75, 0.25], atol=1e-12)

    def test_pure_state_spectrum(self):
        plus = pure_state(np.array([1, 1]) / math.sqrt(2))
        vals, _ = spectral(plus)
        np.testing.assert_allclose(vals, [1.0, 0.0], atol=1e-12)

    def test_two_state_mixture_closed_form(self):
        # (|phi><phi| + |psi><psi|)/2 has eigenvalues (1 +- s)/2.
        s = 0.5
        phi = np.array([1.0, 0.0])
        psi = np.array([s, math.sqrt(1 - s * s)])
        mix = DensityOperator((np.outer(phi, phi) + np.outer(psi, psi)) / 2)
        vals, vecs = spectral(mix)
        np.testing.assert_allclose(vals, [(1 + s) / 2, (1 - s) / 2], atol=1e-12)
        recon = (vecs * vals) @ vecs.conj().T
        assert np.abs(recon - mix.matrix).max() < 1e-9

    def test_eigenvalues_sum_to_one(self, rng):
        for _ in range(20):
            vals, _ = spectral(random_density(rng, 4))
            assert abs(vals.sum() - 1.0) < 1e-9

    def test_pure_state_zero_entropy(self):
        assert von_neumann_entropy(pure_state([1, 0])) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed_entropy(self):
        assert von_neumann_entropy(DensityOperator(np.eye(2) / 2)) == pytest.approx(1.0)

    def test_binary_mixture_entropy(self):
        rho = DensityOperator(np.diag([0.75, 0.25]))
        assert von_neumann_entropy(rho) == pytest.approx(binary_entropy(0.25), abs=1e-12)
        assert von_neumann_entropy(rho) == pytest.approx(0.811278, abs=1e-6)

    def test_unitary_invariance(self, rng):
        for _ in range(10):
            rho = random_density(rng, 3)
            u = random_unitary(rng, 3)
            rotated = DensityOperator(u @ rho.matrix @ u.conj().T)
            assert von_neumann_entropy(rotated) == pytest.approx(
                von_neumann_entropy(rho), abs=1e-9
            )

    def test_entropy_additive_on_products(self, rng):
        for _ in range(10):
            a = random_density(rng, 2)
            b = random_density(rng, 3)
            assert von_neumann_entropy(tensor(a, b)) == pytest.approx(
                von_neumann_entropy(a) + von_neumann_entropy(b), abs=1e-9
            )

    def test_entropy_bounds(self, rng):
        for _ in range(20):
            rho = random_density(rng, 4)
            h = von_neumann_entropy(rho)
            assert 0.0 <= h <= 2.0 + 1e-12
