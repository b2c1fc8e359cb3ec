# tests/riccati/test_truncation.py
"""
truncation 테스트
"""

from unittest.mock import patch

import numpy as np
import numpy.testing as npt
import scipy.linalg as la
from django.test import SimpleTestCase

from apps.riccati.exceptions import AllTruncated
from apps.riccati.schemas import TruncationPolicy
from apps.riccati.services.dense_care import solve_care_dense
from apps.riccati.services.projector import LowRankSolution, project
from apps.riccati.services.residual import (
    dense_residual_matrix,
    dense_residual_oracle,
    residual_norm,
    residual_workspace,
)
from apps.riccati.services.truncation import (
    truncate,
    truncated_residual_norm,
    truncated_workspace,
)
from tests.riccati import factories


def _galerkin_iterate(seed: int, n: int = 20, p: int = 2, shifts=(-0.5, -2.0, -8.0)):
    problem = factories.random_problem(factories.rng(seed), n=n, p=p)
    brad = factories.build_brad(problem, list(shifts))
    projected = project(brad, brad.K)
    Y = solve_care_dense(projected.Aj, projected.Bj, projected.Cj).Y
    return problem, brad, Y


class TestTruncate(SimpleTestCase):
    def test_full_rank_keeps_everything(self):
        _, brad, Y = _galerkin_iterate(40)
        trunc = truncate(brad, Y, TruncationPolicy(tau=1e-14))
        jp = brad.K.shape[1]
        self.assertEqual(trunc.r, jp)
        self.assertEqual(trunc.discarded.size, brad.rows - jp)
        self.assertTrue(np.all(trunc.eigenvalues > 0))
        self.assertTrue(np.all(np.diff(trunc.eigenvalues) <= 0))

    def test_full_rank_preserves_iterate_and_residual(self):
        problem, brad, Y = _galerkin_iterate(41)
        trunc = truncate(brad, Y, TruncationPolicy(tau=1e-14))
        X = LowRankSolution(brad=brad, basis=brad.K, Y=Y).dense()
        X_hat = LowRankSolution.from_truncated(trunc).dense()
        npt.assert_allclose(X_hat, X, atol=1e-10 * max(1.0, np.linalg.norm(X)))
        self.assertAlmostEqual(
            truncated_residual_norm(trunc),
            residual_norm(brad, brad.K, Y),
            delta=1e-8 * max(1.0, np.linalg.norm(problem.C) ** 2),
        )

    def test_drops_negligible_direction(self):
        problem, brad, _ = _galerkin_iterate(42, p=1, shifts=(-0.5, -3.0))
        # K^+ 로 K Y K^H 의 고유값을 직접 지정
        Q = np.linalg.qr(brad.K)[0]
        target = Q @ np.diag([1.0, -1e-20]) @ Q.conj().T
        K_pinv = np.linalg.pinv(brad.K)
        Y = K_pinv @ target @ K_pinv.conj().T
        trunc = truncate(brad, Y, TruncationPolicy(tau=1e-12))
        self.assertEqual(trunc.r, 1)
        self.assertAlmostEqual(trunc.eigenvalues[0], 1.0, places=10)
        self.assertEqual(trunc.Qhat.shape, (brad.rows, 1))
        npt.assert_allclose(trunc.Qhat.conj().T @ trunc.Qhat, [[1.0]], atol=1e-12)

    def test_truncated_decomposition_holds(self):
        # A^H V Qhat = V Hhat
        problem, brad, Y = _galerkin_iterate(43)
        trunc = truncate(brad, Y, TruncationPolicy(tau=1e-3))
        A = problem.A.toarray()
        lhs = A.conj().T @ brad.V @ trunc.Qhat
        npt.assert_allclose(lhs, brad.V @ trunc.Hhat, atol=1e-9 * np.linalg.norm(A))

    def test_residual_rank_bound(self):
        _, brad, Y = _galerkin_iterate(44)
        trunc = truncate(brad, Y, TruncationPolicy(tau=1e-3))
        workspace = truncated_workspace(trunc)
        self.assertEqual(workspace.d_c, brad.rows - trunc.r)
        self.assertLessEqual(workspace.rank(), 2 * workspace.d_c)

    def test_truncated_residual_tracks_dense_oracle(self):
        problem, brad, Y = _galerkin_iterate(45)
        trunc = truncate(brad, Y, TruncationPolicy(tau=1e-14))
        X_hat = LowRankSolution.from_truncated(trunc).dense()
        self.assertAlmostEqual(
            truncated_residual_norm(trunc),
            dense_residual_oracle(problem, X_hat),
            delta=1e-7 * max(1.0, np.linalg.norm(problem.C) ** 2),
        )

    def test_all_truncated(self):
        _, brad, Y = _galerkin_iterate(46)
        with self.assertRaises(AllTruncated):
            truncate(brad, -np.eye(Y.shape[0]))
        with self.assertRaises(AllTruncated):
            truncate(brad, np.zeros_like(Y))

    def test_brad_untouched(self):
        _, brad, Y = _galerkin_iterate(47)
        K_before = brad.K.copy()
        truncate(brad, Y, TruncationPolicy(tau=1e-2))
        npt.assert_array_equal(brad.K, K_before)

    def test_threshold_uses_spectral_radius(self):
        _, brad, Y = _galerkin_iterate(49)
        with patch("apps.riccati.services.truncation.spectral_radius", return_value=1e30) as mock_rho:
            with self.assertRaises(AllTruncated):
                truncate(brad, Y)
        mock_rho.assert_called_once()


def _tau_dropping_smallest(brad, Y) -> float:
    """양의 고유값 중 가장 작은 하나만 버리는 tau"""
    M = brad.K @ Y @ brad.K.conj().T
    eigenvalues = np.sort(np.linalg.eigvalsh(0.5 * (M + M.conj().T)))[::-1]
    jp = brad.K.shape[1]
    rho = np.max(np.abs(eigenvalues))
    return 0.5 * (eigenvalues[jp - 2] + eigenvalues[jp - 1]) / rho


class TestTruncatedResidual(SimpleTestCase):
    def test_projected_truncated_residual_vanishes(self):
        # Pi = V Qhat Qhat^H V^H 로 양쪽 투영한 truncated 잔차는 0
        problem, brad, Y = _galerkin_iterate(60, n=40, p=2)
        trunc = truncate(brad, Y, TruncationPolicy(tau=_tau_dropping_smallest(brad, Y)))
        self.assertEqual(trunc.r, brad.K.shape[1] - 1)

        X_hat = LowRankSolution.from_truncated(trunc).dense()
        Z = brad.V @ trunc.Qhat
        Pi = Z @ Z.conj().T
        residual = dense_residual_matrix(problem, X_hat)
        CtC = problem.C.conj().T @ problem.C
        self.assertLessEqual(la.norm(Pi @ residual @ Pi.conj().T), 1e-8 * la.norm(CtC))

    def test_nothing_truncated_keeps_residual(self):
        _, brad, Y = _galerkin_iterate(61, n=40, p=2, shifts=(-0.5, -4.0))
        trunc = truncate(brad, Y, TruncationPolicy(tau=1e-14))
        self.assertEqual(trunc.r, brad.K.shape[1])
        expected = residual_norm(brad, brad.K, Y)
        self.assertLessEqual(abs(truncated_residual_norm(trunc) - expected), 1e-10 * expected)

    def test_exact_ranks(self):
        for seed in (62, 63, 64):
            with self.subTest(seed=seed):
                _, brad, Y = _galerkin_iterate(seed, n=40, p=2)
                p = brad.p
                self.assertEqual(residual_workspace(brad, brad.K, Y).rank(), 2 * p)

                trunc = truncate(brad, Y, TruncationPolicy(tau=_tau_dropping_smallest(brad, Y)))
                workspace = truncated_workspace(trunc)
                d_c = brad.rows - trunc.r
                self.assertEqual(d_c, p + 1)
                self.assertEqual(workspace.rank(), 2 * d_c)
