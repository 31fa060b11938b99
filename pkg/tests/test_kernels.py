import numpy as np
import pytest

from conftest import brute_kmer_kernel
from dyadkrr.errors import CapacityError, InvalidInputError, InvalidParameterError
from dyadkrr.kernels import (
    KernelSpec,
    PairwiseKernelSpec,
    delta_kernel,
    kernel_matrix,
    pairwise_kernel_matrix,
)


class TestKernelSpec:
    def test_gaussian_needs_gamma(self):
        with pytest.raises(InvalidParameterError):
            KernelSpec("gaussian")
        with pytest.raises(InvalidParameterError):
            KernelSpec("gaussian", gamma=0.0)

    def test_spectrum_needs_k(self):
        with pytest.raises(InvalidParameterError):
            KernelSpec("spectrum", k=0)

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            KernelSpec("polynomial")


class TestLinearKernel:
    def test_dot_product(self):
        out = kernel_matrix(KernelSpec("linear"), [[1.0, 2.0]], [[3.0, 4.0]])
        assert out == pytest.approx(np.array([[11.0]]))

    def test_symmetric_psd(self, rng):
        x = rng.standard_normal((6, 3))
        k = kernel_matrix(KernelSpec("linear"), x)
        assert np.max(np.abs(k - k.T)) < 1e-12
        eig = np.linalg.eigvalsh(k)
        assert eig[0] >= -1e-8 * max(eig[-1], 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            kernel_matrix(KernelSpec("linear"), [[1.0, 2.0]], [[1.0, 2.0, 3.0]])

    def test_empty_inputs(self):
        with pytest.raises(InvalidInputError):
            kernel_matrix(KernelSpec("linear"), [])


class TestGaussianKernel:
    def test_unit_diagonal(self, rng):
        x = rng.standard_normal((5, 4))
        k = kernel_matrix(KernelSpec("gaussian", gamma=1.0), x)
        assert np.allclose(np.diag(k), 1.0, atol=1e-12)

    def test_explicit_value(self):
        x = np.array([[0.0], [1.0]])
        k = kernel_matrix(KernelSpec("gaussian", gamma=2.0), x)
        assert k[0, 1] == pytest.approx(np.exp(-2.0))

    def test_symmetric(self, rng):
        x = rng.standard_normal((7, 2))
        k = kernel_matrix(KernelSpec("gaussian", gamma=0.5), x)
        assert np.max(np.abs(k - k.T)) < 1e-12


class TestSpectrumKernel:
    def test_repeated_kmer(self):
        k = kernel_matrix(KernelSpec("spectrum", k=3), ["AAAA"], ["AAAA"])
        assert k == pytest.approx(np.array([[4.0]]))

    def test_matches_bruteforce_counting(self, rng):
        alphabet = "ACGT"
        seqs = [
            "".join(rng.choice(list(alphabet), size=rng.integers(4, 12)))
            for _ in range(5)
        ]
        k = kernel_matrix(KernelSpec("spectrum", k=3), seqs)
        for i, a in enumerate(seqs):
            for j, b in enumerate(seqs):
                assert k[i, j] == pytest.approx(brute_kmer_kernel(a, b, 3))

    def test_self_kernel_is_count_vector_norm(self):
        s = "ABABAB"
        k = kernel_matrix(KernelSpec("spectrum", k=2), [s])
        counts = {}
        for i in range(len(s) - 1):
            counts[s[i : i + 2]] = counts.get(s[i : i + 2], 0) + 1
        assert k[0, 0] == pytest.approx(sum(c * c for c in counts.values()))

    def test_short_sequence_rejected(self):
        with pytest.raises(InvalidInputError):
            kernel_matrix(KernelSpec("spectrum", k=3), ["AB"])

    def test_normalized_unit_diagonal(self):
        seqs = ["AAAA", "ABAB", "BBBA"]
        k = kernel_matrix(KernelSpec("spectrum", k=2, normalize=True), seqs)
        assert np.allclose(np.diag(k), 1.0, atol=1e-12)
        assert np.max(np.abs(k - k.T)) < 1e-12


class TestSelfKernelProperties:
    def test_all_kinds_symmetric_psd(self, rng):
        x = rng.standard_normal((6, 3))
        seqs = ["ACGTAC", "GGTTAA", "ACACAC", "TTTTTT", "AGAGAG", "CCCGGG"]
        cases = [
            (KernelSpec("linear"), x),
            (KernelSpec("gaussian", gamma=0.7), x),
            (KernelSpec("spectrum", k=2), seqs),
            (KernelSpec("spectrum", k=2, normalize=True), seqs),
        ]
        for spec, inputs in cases:
            k = kernel_matrix(spec, inputs)
            assert np.max(np.abs(k - k.T)) < 1e-12
            eig = np.linalg.eigvalsh(k)
            assert eig[0] >= -1e-8 * max(eig[-1], 1.0)


class TestDeltaKernel:
    def test_scalar_values(self):
        assert delta_kernel("a", "a") == 1.0
        assert delta_kernel("a", "b") == 0.0

    def test_matrix_is_identity(self):
        ids = ["x", "y", "z"]
        k = kernel_matrix(KernelSpec("delta"), ids)
        assert np.array_equal(k, np.eye(3))


class TestNormalization:
    def test_linear_normalized_diagonal(self, rng):
        x = rng.standard_normal((4, 3)) + 2.0
        k = kernel_matrix(KernelSpec("linear", normalize=True), x)
        assert np.allclose(np.diag(k), 1.0, atol=1e-12)

    def test_zero_self_similarity_rejected(self):
        with pytest.raises(InvalidInputError):
            kernel_matrix(KernelSpec("linear", normalize=True), [[0.0, 0.0]])


class TestPrecomputed:
    def test_cannot_evaluate(self):
        with pytest.raises(InvalidInputError):
            kernel_matrix(KernelSpec("precomputed"), [[1.0]])


class TestPairwiseKernelMatrix:
    def test_identity_tensor_product(self):
        spec = PairwiseKernelSpec(KernelSpec("linear"), KernelSpec("linear"))
        out = pairwise_kernel_matrix(spec, np.eye(2), np.eye(2))
        assert np.array_equal(out, np.eye(4))

    def test_scalar_two_step(self):
        spec = PairwiseKernelSpec(
            KernelSpec("linear"), KernelSpec("linear"),
            variant="two_step", lambda_d=1.0, lambda_t=1.0,
        )
        out = pairwise_kernel_matrix(spec, [[1.0]], [[1.0]])
        assert out == pytest.approx(np.array([[4.0]]))

    def test_entrywise_convention(self, rng):
        k = rng.standard_normal((3, 3))
        k = (k + k.T) / 2
        g = rng.standard_normal((2, 2))
        g = (g + g.T) / 2
        spec = PairwiseKernelSpec(KernelSpec("linear"), KernelSpec("linear"))
        gamma = pairwise_kernel_matrix(spec, k, g)
        n = 3
        # oracle: elementwise loop over pairs, pair (i, j) at position j*n + i
        for i in range(3):
            for j in range(2):
                for i2 in range(3):
                    for j2 in range(2):
                        assert gamma[j * n + i, j2 * n + i2] == pytest.approx(
                            k[i, i2] * g[j, j2]
                        )

    def test_two_step_equals_shifted_tensor_product(self, rng):
        k = rng.standard_normal((3, 3))
        k = k @ k.T
        g = rng.standard_normal((2, 2))
        g = g @ g.T
        plain = PairwiseKernelSpec(KernelSpec("linear"), KernelSpec("linear"))
        shifted = PairwiseKernelSpec(
            KernelSpec("linear"), KernelSpec("linear"),
            variant="two_step", lambda_d=0.4, lambda_t=2.5,
        )
        direct = pairwise_kernel_matrix(shifted, k, g)
        via_plain = pairwise_kernel_matrix(
            plain, k + 0.4 * np.eye(3), g + 2.5 * np.eye(2)
        )
        assert np.allclose(direct, via_plain, atol=1e-12)

    def test_capacity_cap(self):
        spec = PairwiseKernelSpec(KernelSpec("linear"), KernelSpec("linear"))
        with pytest.raises(CapacityError):
            pairwise_kernel_matrix(spec, np.eye(3), np.eye(3), max_pair_dim=8)

    def test_two_step_spec_needs_lambdas(self):
        with pytest.raises(InvalidParameterError):
            PairwiseKernelSpec(
                KernelSpec("linear"), KernelSpec("linear"), variant="two_step"
            )
