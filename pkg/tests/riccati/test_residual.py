# tests/riccati/test_residual.py
"""
압축 잔차 norm 테스트 (dense oracle 과 비교)
"""

import numpy as np
import numpy.testing as npt
import scipy.linalg as la
from django.test import SimpleTestCase

from apps.riccati.exceptions import Breakdown, RiccatiError
from apps.riccati.schemas import ProjectorChoice
from apps.riccati.services.brad import extend, init
from apps.riccati.services.dense_care import DenseReport, solve_care_dense
from apps.riccati.services.problem import CareProblem
from apps.riccati.services.projector import LowRankSolution, build_L, project
from apps.riccati.services.residual import (
    dense_residual_matrix,
    dense_residual_oracle,
    residual_norm,
    residual_norm_generalized,
    residual_rank_profile,
    residual_workspace,
    swap_matrix,
)
from tests.riccati import factories


def _solve_projected(brad, L):
    projected = project(brad, L)
    solution = solve_care_dense(projected.Aj, projected.Bj, projected.Cj)
    if solution.report != DenseReport.ACCURATE:
        return None
    return solution.Y


def _oracle_scale(problem, X) -> float:
    A, E, B, C = problem.dense()
    return max(
        1.0,
        la.norm(C.conj().T @ C),
        la.norm(A) * la.norm(X) * la.norm(E),
        la.norm(E.conj().T @ X @ B) ** 2,
    )


class TestSwapMatrix(SimpleTestCase):
    def test_blocks(self):
        J = swap_matrix(2)
        npt.assert_array_equal(J[:2, 2:], np.eye(2))
        npt.assert_array_equal(J[2:, :2], np.eye(2))
        npt.assert_array_equal(J[:2, :2], 0)
        npt.assert_array_equal(J @ J, np.eye(4))


class TestResidualAgainstOracle(SimpleTestCase):
    def _check(self, problem, brad, L, Y):
        X = LowRankSolution(brad=brad, basis=brad.K, Y=Y).dense()
        expected = dense_residual_oracle(problem, X)
        actual = residual_norm_generalized(brad, L, Y, problem.E)
        self.assertLessEqual(abs(actual - expected), 1e-8 * _oracle_scale(problem, X))

    def test_sweep_over_test_spaces(self):
        gen = factories.rng(30)
        choices = [
            ProjectorChoice(variant="K"),
            ProjectorChoice(variant="H"),
            ProjectorChoice.parse("combo:1,1"),
        ]
        checked = 0
        for trial in range(90):
            problem = factories.random_problem(
                gen,
                n=int(gen.integers(30, 121)),
                m=int(gen.integers(1, 4)),
                p=int(gen.integers(1, 4)),
                complex_=trial % 3 == 1,
                generalized=trial % 4 == 3,
            )
            j = int(gen.integers(1, 9))
            choice = choices[(trial // 3) % 3]
            brad = factories.build_brad(problem, factories.random_shifts(gen, j))
            try:
                L = build_L(brad, choice)
                Y = _solve_projected(brad, L)
            except RiccatiError:
                continue
            if Y is None:
                continue
            with self.subTest(trial=trial, choice=choice.label):
                self._check(problem, brad, L, Y)
            checked += 1
        self.assertGreaterEqual(checked, 50)

    def test_other_test_spaces(self):
        gen = factories.rng(31)
        choices = [ProjectorChoice(variant="H"), ProjectorChoice.parse("combo:1,1j")]
        checked = 0
        for trial in range(40):
            problem = factories.random_problem(gen, n=16, m=2, p=int(gen.integers(1, 3)))
            brad = factories.build_brad(problem, factories.random_shifts(gen, 3))
            choice = choices[trial % 2]
            try:
                L = build_L(brad, choice)
                Y = _solve_projected(brad, L)
            except RiccatiError:
                continue
            if Y is None:
                continue
            with self.subTest(trial=trial, choice=choice.label):
                self._check(problem, brad, L, Y)
            checked += 1
        self.assertGreater(checked, 0)

    def test_spectral_norm(self):
        problem = factories.random_problem(factories.rng(32), n=15, p=2)
        brad = factories.build_brad(problem, [-0.5, -2.0, -6.0])
        Y = _solve_projected(brad, brad.K)
        X = LowRankSolution(brad=brad, basis=brad.K, Y=Y).dense()
        self.assertAlmostEqual(
            residual_norm(brad, brad.K, Y, kind="2"),
            dense_residual_oracle(problem, X, kind="2"),
            delta=1e-8 * _oracle_scale(problem, X),
        )


class TestResidualRank(SimpleTestCase):
    """비절단 잔차의 rank 는 정확히 2p"""

    def test_dense_residual_rank(self):
        gen = factories.rng(35)
        checked = 0
        for trial in range(24):
            p = int(gen.integers(1, 4))
            problem = factories.random_problem(gen, n=int(gen.integers(30, 121)), m=2, p=p)
            brad = factories.build_brad(problem, factories.random_shifts(gen, int(gen.integers(1, 3))))
            try:
                Y = _solve_projected(brad, brad.K)
            except RiccatiError:
                continue
            if Y is None:
                continue
            X = LowRankSolution(brad=brad, basis=brad.K, Y=Y).dense()
            residual = dense_residual_matrix(problem, X)
            s = la.svdvals(residual)
            A = problem.A.toarray()
            scale = la.norm(A, 2) * la.norm(X, 2) + la.norm(problem.C, 2) ** 2 + la.norm(X @ problem.B, 2) ** 2
            # 반올림 오차에 묻히지 않을 만큼 잔차가 큰 경우만
            if s[0] < 1e-3 * scale:
                continue
            with self.subTest(trial=trial, p=p):
                self.assertLessEqual(s[2 * p], 1e-10 * s[0])
                self.assertEqual(residual_workspace(brad, brad.K, Y).rank(), 2 * p)
            checked += 1
        self.assertGreaterEqual(checked, 10)


class TestResidualStructure(SimpleTestCase):
    def test_zero_iterate_with_vanishing_projected_output(self):
        # Cj = 0 이므로 Y = 0 이 축소 방정식을 만족, 잔차는 C^H C
        problem = CareProblem.from_arrays(
            np.array([[-3.0, 2.0], [-2.0, 1.0]]), np.array([[1.0], [1.0]]), np.array([[1.0, 0.0]])
        )
        brad = extend(init(problem), -1.0)
        projected = project(brad, brad.K)
        npt.assert_allclose(projected.Cj, 0, atol=1e-14)
        Y = np.zeros((1, 1))
        self.assertAlmostEqual(residual_norm(brad, brad.K, Y), 1.0, places=12)
        self.assertAlmostEqual(dense_residual_oracle(problem, np.zeros((2, 2))), 1.0, places=12)

    def test_invariant_space_has_zero_residual(self):
        with self.assertRaises(Breakdown) as ctx:
            extend(init(factories.scalar_problem()), -1.0)
        brad = ctx.exception.invariant_brad
        projected = project(brad, brad.K)
        Y = solve_care_dense(projected.Aj, projected.Bj, projected.Cj).Y
        workspace = residual_workspace(brad, brad.K, Y)
        self.assertEqual(workspace.d_c, 0)
        self.assertEqual(residual_norm(brad, brad.K, Y), 0.0)
        self.assertAlmostEqual((brad.V @ brad.K @ Y @ brad.K.conj().T @ brad.V.conj().T)[0, 0].real,
                               np.sqrt(2) - 1, places=12)

    def test_rank_profile(self):
        problem = factories.random_problem(factories.rng(33), n=20, p=2)
        brad = factories.build_brad(problem, [-0.5, -3.0])
        Y = _solve_projected(brad, brad.K)
        profile = residual_rank_profile(brad, brad.K, Y)
        self.assertEqual(profile.shape, (4,))
        self.assertTrue(np.all(np.diff(profile) <= 0))
        workspace = residual_workspace(brad, brad.K, Y)
        self.assertLessEqual(workspace.rank(), 2 * workspace.d_c)

    def test_generalized_without_E_matches_standard(self):
        problem = factories.random_problem(factories.rng(34), n=18, p=1)
        brad = factories.build_brad(problem, [-0.7, -4.0])
        Y = _solve_projected(brad, brad.K)
        self.assertEqual(
            residual_norm_generalized(brad, brad.K, Y, None), residual_norm(brad, brad.K, Y)
        )
