"""Arrangement tests: detector bases, coefficient tensors, transport and the
two invariance checks, each against explicit-contraction oracles."""

import numpy as np
import pytest

from tqm import linalg
from tqm.arrangements import (
    BasisChange,
    DetectorBasis,
    ExperimentalArrangement,
    Factorization,
    QuantumLab,
    build_arrangement,
    check_basis_invariance,
    check_factorization_invariance,
    coarse_grain,
    marginal_intensities,
    potentia,
    potentia_table,
    power_of_action,
    transform_arrangement,
)
from tqm.errors import (
    BasisMismatch,
    DimensionCapExceeded,
    DimensionMismatch,
    EmptySubset,
    IndexOutOfRange,
    NonUnitaryLambda,
    NotAPartition,
    NotASubspace,
    NotUnitary,
    TqmError,
)
from tqm.random import rand_density, rand_isometry, rand_product_basis, rand_unitary
from tqm.states import Power, intensity, make_isa, pure_isa

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
BELL = np.zeros(4, dtype=complex)
BELL[0] = BELL[3] = 1 / np.sqrt(2)


def comp_basis(*dims):
    return DetectorBasis([np.eye(d) for d in dims])


def transform_oracle(alpha_flat, source_dims, target_dims, lam_flat):
    """The double contraction written as explicit loops over multi-indices."""
    n = int(np.prod(source_dims))
    m = int(np.prod(target_dims))
    assert n == m
    out = np.zeros((n, n), dtype=complex)
    for kappa in range(n):
        for kappa_p in range(n):
            acc = 0j
            for k in range(n):
                for k_p in range(n):
                    acc += (
                        alpha_flat[k, k_p]
                        * lam_flat[kappa, k]
                        * np.conj(lam_flat[kappa_p, k_p])
                    )
            out[kappa, kappa_p] = acc
    return out


class TestFactorization:
    def test_basics(self):
        f = Factorization([2, 3])
        assert f.total_dim == 6
        assert f.num_screens == 2

    def test_rejects_single_place_screen(self):
        with pytest.raises(TqmError):
            Factorization([2, 1])

    def test_dimension_cap(self):
        with pytest.raises(DimensionCapExceeded):
            Factorization([2] * 7)  # 128 > 64
        assert Factorization([2] * 7, max_dim=128).total_dim == 128

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("TQM_MAX_DIM", "16")
        with pytest.raises(DimensionCapExceeded):
            Factorization([2, 2, 2, 2, 2])
        monkeypatch.setenv("TQM_MAX_DIM", "256")
        assert Factorization([2] * 7).total_dim == 128


class TestDetectorBasis:
    def test_requires_unitary_screens(self):
        with pytest.raises(NotUnitary):
            DetectorBasis([np.array([[1, 1], [0, 1]])])

    def test_product_vectors_orthonormal(self):
        rng = np.random.default_rng(31)
        b = rand_product_basis([2, 3], rng)
        gram = b.matrix.conj().T @ b.matrix
        np.testing.assert_allclose(gram, np.eye(6), atol=1e-12)

    def test_vector_layout_row_major(self):
        b = comp_basis(2, 2)
        # screen 1 most significant: |2,1> sits at flat position 2
        np.testing.assert_array_equal(b.vector((2, 1)), [0, 0, 1, 0])
        assert b.multi_indices() == [(1, 1), (1, 2), (2, 1), (2, 2)]


class TestPowerOfAction:
    def test_computational_indices(self):
        p = power_of_action(comp_basis(2, 2), (1, 1))
        np.testing.assert_array_equal(p.matrix, np.diag([1.0, 0, 0, 0]))

    def test_hadamard_screen(self):
        p = power_of_action(DetectorBasis([HADAMARD]), (1,))
        np.testing.assert_allclose(p.matrix, np.full((2, 2), 0.5), atol=1e-15)

    def test_always_rank_one_projector(self):
        rng = np.random.default_rng(32)
        b = rand_product_basis([2, 2, 2], rng)
        for ks in b.multi_indices():
            p = power_of_action(b, ks)
            assert linalg.is_projector(p.matrix, 1e-10)
            assert linalg.rank(p.matrix) == 1

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            power_of_action(comp_basis(2, 2), (3, 1))
        with pytest.raises(IndexOutOfRange):
            power_of_action(comp_basis(2, 2), (0, 1))


class TestBuildArrangement:
    def test_maximally_mixed_computational(self):
        ea = build_arrangement(make_isa(np.diag([0.5, 0.5])), comp_basis(2))
        np.testing.assert_allclose(ea.flat, np.diag([0.5, 0.5]), atol=1e-15)

    def test_ground_state_hadamard_conjugation_oracle(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        b = DetectorBasis([HADAMARD])
        ea = build_arrangement(make_isa(rho), b)
        oracle = HADAMARD.conj().T @ rho @ HADAMARD
        np.testing.assert_allclose(ea.flat, oracle, atol=1e-15)
        np.testing.assert_allclose(ea.flat, np.full((2, 2), 0.5), atol=1e-15)

    def test_bell_diagonal(self):
        ea = build_arrangement(pure_isa(BELL), comp_basis(2, 2))
        np.testing.assert_allclose(
            np.diagonal(ea.flat).real, [0.5, 0.0, 0.0, 0.5], atol=1e-15
        )

    def test_diagonal_equals_power_intensities(self):
        rng = np.random.default_rng(33)
        isa = make_isa(rand_density(6, rng))
        b = rand_product_basis([2, 3], rng)
        ea = build_arrangement(isa, b)
        for ks in b.multi_indices():
            direct = intensity(isa, power_of_action(b, ks))
            assert abs(potentia(ea, ks) - direct) <= 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_arrangement(make_isa(np.diag([0.5, 0.5])), comp_basis(2, 2))


class TestPotentia:
    def test_bell_first_index(self):
        ea = build_arrangement(pure_isa(BELL), comp_basis(2, 2))
        assert potentia(ea, (1, 1)) == pytest.approx(0.5, abs=1e-15)

    def test_sums_to_one(self):
        rng = np.random.default_rng(34)
        for _ in range(10):
            isa = make_isa(rand_density(8, rng))
            b = rand_product_basis([2, 2, 2], rng)
            ea = build_arrangement(isa, b)
            total = sum(potentia(ea, ks) for ks in b.multi_indices())
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_eigenbasis_leading_entry(self):
        rng = np.random.default_rng(35)
        u = rand_unitary(4, rng)
        rho = np.outer(u[:, 0], u[:, 0].conj())
        ea = build_arrangement(make_isa(rho), DetectorBasis([u]))
        assert potentia(ea, (1,)) == pytest.approx(1.0, abs=1e-12)

    def test_table_matches_diag(self):
        rng = np.random.default_rng(36)
        isa = make_isa(rand_density(4, rng))
        b = rand_product_basis([2, 2], rng)
        ea = build_arrangement(isa, b)
        table = potentia_table(ea)
        np.testing.assert_allclose(
            table.intensities, np.clip(np.diagonal(ea.flat).real, 0, 1), atol=1e-15
        )


class TestTransform:
    def test_identity_change(self):
        rng = np.random.default_rng(37)
        b = rand_product_basis([2, 2], rng)
        ea = build_arrangement(make_isa(rand_density(4, rng)), b)
        moved = transform_arrangement(ea, BasisChange.between(b, b))
        np.testing.assert_allclose(moved.flat, ea.flat, atol=1e-12)

    def test_hadamard_conjugation(self):
        comp = comp_basis(2)
        had = DetectorBasis([HADAMARD])
        ea = build_arrangement(make_isa(np.diag([1.0, 0.0])), comp)
        moved = transform_arrangement(ea, BasisChange.between(comp, had))
        np.testing.assert_allclose(moved.flat, np.full((2, 2), 0.5), atol=1e-15)

    def test_refactor_four_to_two_by_two(self):
        # same flattened coefficients, new index structure 1<->(1,1), 2<->(1,2),
        # 3<->(2,1), 4<->(2,2)
        rng = np.random.default_rng(38)
        isa = make_isa(rand_density(4, rng))
        single = comp_basis(4)
        double = comp_basis(2, 2)
        ea = build_arrangement(isa, single)
        moved = transform_arrangement(ea, BasisChange.between(single, double))
        np.testing.assert_allclose(moved.flat, ea.flat, atol=1e-15)
        assert moved.coefficients.shape == (2, 2, 2, 2)
        for flat_index, ks in [(1, (1, 1)), (2, (1, 2)), (3, (2, 1)), (4, (2, 2))]:
            assert potentia(moved, ks) == pytest.approx(
                potentia(ea, (flat_index,)), abs=1e-15
            )

    def test_matches_double_contraction_oracle(self):
        rng = np.random.default_rng(39)
        for dims in [(2, 2), (2, 3), (2, 2, 2)]:
            n = int(np.prod(dims))
            isa = make_isa(rand_density(n, rng))
            src = rand_product_basis(list(dims), rng)
            dst = rand_product_basis([n], rng)
            ea = build_arrangement(isa, src)
            change = BasisChange.between(src, dst)
            moved = transform_arrangement(ea, change)
            oracle = transform_oracle(ea.flat, dims, (n,), change.flat)
            assert np.max(np.abs(moved.flat - oracle)) <= 1e-12

    def test_preserves_hermiticity_diag_sum_and_spectrum(self):
        rng = np.random.default_rng(40)
        isa = make_isa(rand_density(6, rng))
        b1 = rand_product_basis([2, 3], rng)
        b2 = rand_product_basis([6], rng)
        ea = build_arrangement(isa, b1)
        moved = transform_arrangement(ea, BasisChange.between(b1, b2))
        flat = moved.flat
        assert linalg.frobenius(flat - flat.conj().T) <= 1e-9
        assert np.diagonal(flat).real.sum() == pytest.approx(1.0, abs=1e-9)
        s1 = np.linalg.eigvalsh(ea.flat)
        s2 = np.linalg.eigvalsh(flat)
        assert np.max(np.abs(s1 - s2)) <= 1e-9

    def test_composition_of_changes(self):
        rng = np.random.default_rng(41)
        isa = make_isa(rand_density(4, rng))
        b1, b2, b3 = (rand_product_basis([2, 2], rng) for _ in range(3))
        ea = build_arrangement(isa, b1)
        c12 = BasisChange.between(b1, b2)
        c23 = BasisChange.between(b2, b3)
        two_step = transform_arrangement(transform_arrangement(ea, c12), c23)
        one_step = transform_arrangement(ea, c12.compose(c23))
        assert np.max(np.abs(two_step.flat - one_step.flat)) <= 1e-10

    def test_basis_mismatch(self):
        rng = np.random.default_rng(42)
        b1 = rand_product_basis([2, 2], rng)
        b2 = rand_product_basis([2, 2], rng)
        ea = build_arrangement(make_isa(rand_density(4, rng)), b1)
        with pytest.raises(BasisMismatch):
            transform_arrangement(ea, BasisChange.between(b2, b1))

    def test_non_unitary_lambda(self):
        b = comp_basis(2)
        with pytest.raises(NonUnitaryLambda):
            BasisChange(b, b, np.array([[1, 1], [0, 1]]))


class TestBasisInvariance:
    def test_same_basis_zero_deviation(self):
        rng = np.random.default_rng(43)
        lab = QuantumLab(make_isa(rand_density(4, rng)))
        b = rand_product_basis([2, 2], rng)
        report = check_basis_invariance(lab, b, b)
        assert report.passed
        assert report.max_deviation <= 1e-14

    def test_computational_vs_random_d4(self):
        rng = np.random.default_rng(44)
        lab = QuantumLab(make_isa(rand_density(4, rng)))
        report = check_basis_invariance(lab, comp_basis(2, 2), rand_product_basis([2, 2], rng))
        assert report.passed

    def test_dimension_mismatch(self):
        lab = QuantumLab(make_isa(np.diag([0.5, 0.5])))
        with pytest.raises(DimensionMismatch):
            check_basis_invariance(lab, comp_basis(2, 2), comp_basis(2, 2))


class TestCoarseGrain:
    def bell_ea(self):
        return build_arrangement(pure_isa(BELL), comp_basis(2, 2))

    def test_singleton_partition_is_identity(self):
        ea = self.bell_ea()
        table = coarse_grain(ea, [[1], [2], [3], [4]])
        np.testing.assert_allclose(
            table.intensities, np.clip(np.diagonal(ea.flat).real, 0, 1), atol=1e-15
        )

    def test_single_group_gives_identity_power(self):
        ea = self.bell_ea()
        table = coarse_grain(ea, [[1, 2, 3, 4]])
        assert len(table) == 1
        np.testing.assert_allclose(table.powers[0].matrix, np.eye(4), atol=1e-12)
        assert table.intensities[0] == pytest.approx(1.0, abs=1e-12)

    def test_bell_grouped_by_first_screen(self):
        # oracle: partial trace over screen 2 has diagonal (0.5, 0.5)
        ea = self.bell_ea()
        table = coarse_grain(ea, [[1, 2], [3, 4]])
        reduced = linalg.partial_trace(ea.flat, [2, 2], {2})
        np.testing.assert_allclose(table.intensities, np.diagonal(reduced).real, atol=1e-12)
        np.testing.assert_allclose(table.intensities, [0.5, 0.5], atol=1e-12)

    def test_grouped_powers_are_projectors(self):
        rng = np.random.default_rng(45)
        ea = build_arrangement(make_isa(rand_density(6, rng)), rand_product_basis([2, 3], rng))
        table = coarse_grain(ea, [[1, 4], [2, 5], [3, 6]])
        for p in table.powers:
            assert linalg.is_projector(p.matrix, 1e-10)
        assert table.intensities.sum() == pytest.approx(1.0, abs=1e-9)

    def test_rejects_non_partition(self):
        ea = self.bell_ea()
        with pytest.raises(NotAPartition):
            coarse_grain(ea, [[1, 2], [2, 3, 4]])
        with pytest.raises(NotAPartition):
            coarse_grain(ea, [[1, 2], [4]])
        with pytest.raises(NotAPartition):
            coarse_grain(ea, [[0, 1], [2, 3]])


class TestMarginalIntensities:
    def test_product_state_keep_first(self):
        isa = make_isa(linalg.kron(np.diag([1.0, 0.0]), np.full((2, 2), 0.5)))
        ea = build_arrangement(isa, comp_basis(2, 2))
        table = marginal_intensities(ea, [1])
        np.testing.assert_allclose(table.intensities, [1.0, 0.0], atol=1e-12)

    def test_bell_keep_first(self):
        ea = build_arrangement(pure_isa(BELL), comp_basis(2, 2))
        table = marginal_intensities(ea, [1])
        np.testing.assert_allclose(table.intensities, [0.5, 0.5], atol=1e-12)

    def test_keep_all_is_diagonal(self):
        rng = np.random.default_rng(46)
        ea = build_arrangement(make_isa(rand_density(4, rng)), rand_product_basis([2, 2], rng))
        table = marginal_intensities(ea, [1, 2])
        np.testing.assert_allclose(
            table.intensities, np.clip(np.diagonal(ea.flat).real, 0, 1), atol=1e-15
        )

    def test_agrees_with_coarse_grain(self):
        rng = np.random.default_rng(47)
        dims = (2, 3, 2)
        ea = build_arrangement(make_isa(rand_density(12, rng)), rand_product_basis(list(dims), rng))
        table = marginal_intensities(ea, [1, 3])
        # partition the flat indices by their (k1, k3) values
        groups = {}
        for flat, ks in enumerate(ea.basis.multi_indices(), start=1):
            groups.setdefault((ks[0], ks[2]), []).append(flat)
        keys = sorted(groups)  # row-major over kept screens
        grained = coarse_grain(ea, [groups[k] for k in keys])
        np.testing.assert_allclose(table.intensities, grained.intensities, atol=1e-10)

    def test_empty_subset(self):
        ea = build_arrangement(pure_isa(BELL), comp_basis(2, 2))
        with pytest.raises(EmptySubset):
            marginal_intensities(ea, [])


class TestFactorizationInvariance:
    def test_small_equals_big(self):
        rng = np.random.default_rng(48)
        lab = QuantumLab(make_isa(rand_density(4, rng)))
        b = rand_product_basis([2, 2], rng)
        report = check_factorization_invariance(lab, b, b)
        assert report.passed
        assert report.max_deviation <= 1e-12

    def test_marginal_mode_matches_marginal_intensities(self):
        rng = np.random.default_rng(49)
        lab = QuantumLab(make_isa(rand_density(4, rng)))
        big = comp_basis(2, 2)
        small = comp_basis(2)
        report = check_factorization_invariance(lab, small, big, keep_screens=[1])
        assert report.passed
        ea = build_arrangement(lab.isa, big)
        np.testing.assert_allclose(
            report.small_values, marginal_intensities(ea, [1]).intensities, atol=1e-12
        )

    def test_random_sub_basis_projector_sum_oracle(self):
        rng = np.random.default_rng(50)
        rho = rand_density(8, rng)
        lab = QuantumLab(make_isa(rho))
        big = rand_product_basis([2, 2, 2], rng)
        small = rand_product_basis([2, 2], rng)
        v = rand_isometry(8, 4, rng)
        report = check_factorization_invariance(lab, small, big, isometry=v)
        assert report.passed
        # oracle: each big value is Tr(rho * V P_s V^dagger) computed directly
        bs = small.matrix
        for s in range(4):
            w = v @ bs[:, s]
            direct = np.trace(rho @ np.outer(w, w.conj())).real
            assert report.big_values[s] == pytest.approx(direct, abs=1e-9)

    def test_rejects_non_isometry(self):
        rng = np.random.default_rng(51)
        lab = QuantumLab(make_isa(rand_density(4, rng)))
        bad = np.ones((4, 2))
        with pytest.raises(NotASubspace):
            check_factorization_invariance(lab, comp_basis(2), comp_basis(2, 2), isometry=bad)

    def test_rejects_mismatched_kept_screens(self):
        rng = np.random.default_rng(52)
        lab = QuantumLab(make_isa(rand_density(6, rng)))
        with pytest.raises(NotASubspace):
            check_factorization_invariance(
                lab, comp_basis(2), comp_basis(2, 3), keep_screens=[2]
            )


class TestQuantumLab:
    def test_register_and_lookup(self):
        rng = np.random.default_rng(53)
        lab = QuantumLab(make_isa(rand_density(4, rng)))
        ea = lab.build(comp_basis(2, 2), name="comp")
        assert lab.arrangement("comp") is ea
        assert lab.names() == ["comp"]

    def test_rejects_oversized_arrangement(self):
        lab = QuantumLab(make_isa(np.diag([0.5, 0.5])))
        big = build_arrangement(make_isa(np.eye(4) / 4), comp_basis(2, 2))
        with pytest.raises(DimensionMismatch):
            lab.register("big", big)

    def test_smaller_arrangement_allowed(self):
        lab = QuantumLab(make_isa(np.eye(4) / 4))
        small = build_arrangement(make_isa(np.diag([0.5, 0.5])), comp_basis(2))
        lab.register("small", small)
        assert lab.arrangement("small").degree == 2


class TestArrangementValidation:
    def test_rejects_non_hermitian_coefficients(self):
        with pytest.raises(TqmError):
            ExperimentalArrangement(comp_basis(2), np.array([[0.5, 1.0], [0.0, 0.5]]))

    def test_rejects_bad_diagonal(self):
        with pytest.raises(TqmError):
            ExperimentalArrangement(comp_basis(2), np.diag([0.7, 0.7]))
