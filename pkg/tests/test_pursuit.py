import numpy as np
import pytest

from sparseimg import (
    MatrixDictionary,
    PursuitExhaustedError,
    PursuitState,
    StoppingRule,
    orthogonalize_and_update,
    run_omp,
    select_atom,
)

from _oracles import least_squares_coeffs


def toy_dictionary():
    """e1 and the normalized sum direction, in dimension 2."""
    return MatrixDictionary(np.array([[1.0, 1.0 / np.sqrt(2)], [0.0, 1.0 / np.sqrt(2)]]))


def random_dictionary(rng, dim, n_atoms):
    atoms = rng.normal(size=(dim, n_atoms))
    return MatrixDictionary(atoms / np.linalg.norm(atoms, axis=0))


class TestStoppingRule:
    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            StoppingRule(mode="whenever")

    def test_rejects_negative_threshold(self):
        with pytest.raises(ValueError, match="sse_threshold"):
            StoppingRule(mode="target_sse", sse_threshold=-1.0)

    def test_cap_required_for_cap_modes(self):
        with pytest.raises(ValueError, match="atom_cap"):
            StoppingRule(mode="max_atoms")

    def test_cap_above_dimension_rejected_at_run(self, dict2_linear16):
        rule = StoppingRule(mode="both", sse_threshold=1.0, atom_cap=300)
        with pytest.raises(ValueError, match="dimension"):
            run_omp(np.zeros((16, 16)), dict2_linear16, rule)


class TestSelectAtom:
    def test_planted_2d_atom(self, dict2_linear16):
        U = dict2_linear16.base.matrix
        state = PursuitState(np.outer(U[:, 5], U[:, 2]), capacity=4)
        assert select_atom(state, dict2_linear16) == (5, 2)

    def test_toy_prefers_larger_inner_product(self):
        # |<f, a2>| = 1.5/sqrt(2) beats |<f, a1>| = 1
        state = PursuitState(np.array([1.0, 0.5]), capacity=2)
        assert select_atom(state, toy_dictionary()) == 1

    def test_zero_residual_ties_break_to_smallest_address(self, dict2_linear16):
        state = PursuitState(np.zeros((16, 16)), capacity=4)
        assert select_atom(state, dict2_linear16) == (0, 0)

    def test_masked_atoms_are_skipped(self):
        md = toy_dictionary()
        state = PursuitState(np.array([1.0, 0.5]), capacity=2)
        state.masked.add(1)
        assert select_atom(state, md) == 0

    def test_all_masked_raises(self):
        md = toy_dictionary()
        state = PursuitState(np.array([1.0, 0.5]), capacity=2)
        state.masked.update({0, 1})
        with pytest.raises(PursuitExhaustedError):
            select_atom(state, md)


class TestOrthogonalizeAndUpdate:
    def test_first_iteration_uses_atom_directly(self):
        md = toy_dictionary()
        f = np.array([1.0, 0.5])
        state = PursuitState(f, capacity=2)
        orthogonalize_and_update(state, md, 1)
        atom = md.atom_flat(1)
        np.testing.assert_allclose(state.orthonormal_basis[:, 0], atom, atol=1e-15)
        np.testing.assert_allclose(state.dual_basis[:, 0], atom, atol=1e-15)
        assert state.coefficients[0] == pytest.approx(atom @ f, abs=1e-15)

    def test_duplicate_direction_is_masked_and_state_unchanged(self):
        md = MatrixDictionary(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]))
        f = np.array([0.7, -0.2])
        state = PursuitState(f, capacity=2)
        orthogonalize_and_update(state, md, 0)
        residual_before = state.residual.copy()
        orthogonalize_and_update(state, md, 2)  # same direction as atom 0
        assert state.masked == {2}
        assert state.k == 1
        assert state.selected == [0]
        np.testing.assert_array_equal(state.residual, residual_before)

    def test_reselecting_accepted_atom_is_an_error(self):
        md = toy_dictionary()
        state = PursuitState(np.array([1.0, 0.5]), capacity=2)
        orthogonalize_and_update(state, md, 0)
        with pytest.raises(ValueError, match="already"):
            orthogonalize_and_update(state, md, 0)

    def test_coefficients_match_normal_equations(self):
        rng = np.random.default_rng(11)
        md = random_dictionary(rng, 8, 20)
        f = rng.normal(size=8)
        state = PursuitState(f, capacity=5)
        for _ in range(5):
            orthogonalize_and_update(state, md, select_atom(state, md))
        np.testing.assert_allclose(
            state.coefficients, least_squares_coeffs(md, state.selected, f), atol=1e-10
        )

    def test_state_invariants(self):
        rng = np.random.default_rng(3)
        md = random_dictionary(rng, 12, 30)
        f = rng.normal(size=12)
        state = PursuitState(f, capacity=8)
        for _ in range(8):
            orthogonalize_and_update(state, md, select_atom(state, md))
        Q = state.orthonormal_basis
        np.testing.assert_allclose(Q.T @ Q, np.eye(8), atol=1e-8)
        # biorthogonality against the selected atoms
        A = np.column_stack([md.atom_flat(i) for i in state.selected])
        np.testing.assert_allclose(state.dual_basis.T @ A, np.eye(8), atol=1e-6)
        # Pythagoras for the orthogonal projection
        approx = A @ state.coefficients
        lhs = f @ f
        rhs = approx @ approx + state.residual_sse
        assert abs(lhs - rhs) <= 1e-8 * (f @ f)


class TestRunOmp:
    def test_single_planted_atom(self, dict2_linear16):
        U = dict2_linear16.base.matrix
        f = 3.7 * np.outer(U[:, 2], U[:, 9])
        block, residual_norm = run_omp(f, dict2_linear16, StoppingRule("target_sse", 1e-12))
        assert len(block) == 1
        (address, coeff), = block.entries
        assert address == (2, 9)
        assert coeff == pytest.approx(3.7, abs=1e-10)
        assert residual_norm <= 1e-10

    def test_three_separated_atoms_recovered_exactly(self, dict2_linear16):
        U = dict2_linear16.base.matrix
        f = (
            2.0 * np.outer(U[:, 0], U[:, 40])
            - 1.5 * np.outer(U[:, 33], U[:, 5])
            + 0.7 * np.outer(U[:, 60], U[:, 70])
        )
        block, residual_norm = run_omp(f, dict2_linear16, StoppingRule("target_sse", 1e-20))
        assert residual_norm**2 <= 1e-20
        assert len(block) <= 16 * 16
        assert sorted(addr for addr, _ in block.entries) == [(0, 40), (33, 5), (60, 70)]

    def test_infinite_threshold_selects_nothing(self, dict2_linear16):
        f = np.ones((16, 16))
        block, residual_norm = run_omp(
            f, dict2_linear16, StoppingRule("target_sse", float("inf"))
        )
        assert block.entries == []
        assert residual_norm == pytest.approx(np.linalg.norm(f))

    def test_max_atoms_mode_stops_at_cap(self, dict2_linear16):
        rng = np.random.default_rng(0)
        f = rng.normal(size=(16, 16))
        block, _ = run_omp(f, dict2_linear16, StoppingRule("max_atoms", atom_cap=7))
        assert len(block) == 7

    def test_approximation_equals_projection(self):
        rng = np.random.default_rng(23)
        md = random_dictionary(rng, 10, 25)
        f = rng.normal(size=10)
        block, _ = run_omp(f, md, StoppingRule("max_atoms", atom_cap=6))
        addresses = [addr for addr, _ in block.entries]
        A = np.column_stack([md.atom_flat(i) for i in addresses])
        projection = A @ np.linalg.lstsq(A, f, rcond=None)[0]
        approx = md.reconstruct(block.entries)
        np.testing.assert_allclose(approx, projection, rtol=1e-6, atol=1e-9)

    def test_zero_correlation_stops_without_error(self):
        # dictionary spans only the first two coordinates; the rest of the
        # signal is unreachable and the selection maximum drops to zero
        md = MatrixDictionary(np.eye(3)[:, :2])
        f = np.array([1.0, 0.0, 2.0])
        block, residual_norm = run_omp(f, md, StoppingRule("target_sse", 0.0))
        assert block.entries == [(0, 1.0)]
        assert residual_norm == pytest.approx(2.0)

    def test_exhaustion_raises_when_threshold_unreachable(self):
        # duplicated oblique atom: once masked there is nothing left to try,
        # but floating-point dust keeps the correlations nonzero
        a = np.array([1.0, 1.0]) / np.sqrt(2)
        md = MatrixDictionary(np.column_stack([a, a]))
        f = np.array([0.3, 0.7])
        with pytest.raises(PursuitExhaustedError):
            run_omp(f, md, StoppingRule("target_sse", 0.0))

    def test_signal_shape_mismatch(self, dict2_linear16):
        with pytest.raises(ValueError, match="shape"):
            run_omp(np.zeros(256), dict2_linear16, StoppingRule("target_sse", 1.0))

    def test_determinism(self, dict2_linear16):
        rng = np.random.default_rng(5)
        f = rng.integers(0, 256, size=(16, 16)).astype(float)
        rule = StoppingRule("both", sse_threshold=500.0, atom_cap=64)
        first, _ = run_omp(f, dict2_linear16, rule)
        second, _ = run_omp(f, dict2_linear16, rule)
        assert first.entries == second.entries

    def test_trace_rows(self, dict2_linear16):
        rng = np.random.default_rng(9)
        f = rng.normal(size=(16, 16))
        trace = []
        block, _ = run_omp(f, dict2_linear16, StoppingRule("max_atoms", atom_cap=5), trace=trace)
        assert len(trace) == len(block) == 5
        ks = [row[0] for row in trace]
        assert ks == [1, 2, 3, 4, 5]
        addresses = [row[1] for row in trace]
        assert addresses == [addr for addr, _ in block.entries]
        sses = [row[3] for row in trace]
        assert all(b <= a for a, b in zip(sses, sses[1:]))

    def test_residual_monotone_and_orthogonal(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            dim = int(rng.integers(4, 17))
            md = random_dictionary(rng, dim, int(rng.integers(dim, 41)))
            f = rng.normal(size=dim)
            trace = []
            cap = int(rng.integers(1, min(dim, 10) + 1))
            block, residual_norm = run_omp(
                f, md, StoppingRule("max_atoms", atom_cap=cap), trace=trace
            )
            sses = [f @ f] + [row[3] for row in trace]
            assert all(b <= a + 1e-12 for a, b in zip(sses, sses[1:]))
            # selected atoms are orthogonal to the final residual
            residual = f - md.reconstruct(block.entries)
            for addr, _ in block.entries:
                assert abs(md.atom_flat(addr) @ residual) <= 1e-6 * np.linalg.norm(f)

    def test_coefficients_match_pseudo_inverse_on_small_instances(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            dim = int(rng.integers(2, 5))
            n_atoms = int(rng.integers(2, 11))
            md = random_dictionary(rng, dim, n_atoms)
            f = rng.normal(size=dim)
            cap = int(rng.integers(1, min(dim, n_atoms) + 1))
            block, _ = run_omp(f, md, StoppingRule("max_atoms", atom_cap=cap))
            if not block.entries:
                continue
            addresses = [addr for addr, _ in block.entries]
            coeffs = np.array([c for _, c in block.entries])
            np.testing.assert_allclose(
                coeffs, least_squares_coeffs(md, addresses, f), atol=1e-8
            )

    def test_reorthogonalization_keeps_gram_tight_at_full_depth(self, dict2_linear16):
        rng = np.random.default_rng(41)
        f = rng.normal(size=(16, 16))
        rule = StoppingRule("max_atoms", atom_cap=256)
        state = PursuitState(f, capacity=256)
        for _ in range(256):
            orthogonalize_and_update(state, dict2_linear16, select_atom(state, dict2_linear16))
        Q = state.orthonormal_basis
        deviation = np.max(np.abs(Q.T @ Q - np.eye(state.k)))
        print(f"Gram deviation after {state.k} iterations: {deviation:.3e}")
        assert state.k == 256
        assert deviation < 1e-10
