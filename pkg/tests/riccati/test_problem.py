# tests/riccati/test_problem.py
"""
CARE 문제 정의 / 검증 / fdm 생성기 테스트
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import numpy.testing as npt
import scipy.linalg as la
import scipy.sparse as sp
import sympy
from django.test import SimpleTestCase

from apps.riccati.exceptions import (
    CapExceeded,
    DimensionMismatch,
    EmptyIndicator,
    SingularE,
)
from apps.riccati.schemas import FdmSpec
from apps.riccati.services.matrix_market import write_matrix_market
from apps.riccati.services.problem import (
    CareProblem,
    coefficient_function,
    fdm_2d_problem,
    fdm_from_spec,
    grid_coordinates,
    load_problem,
    validate,
)


class TestValidate(SimpleTestCase):
    def test_accepts_consistent_problem(self):
        problem = CareProblem.from_arrays(-np.eye(20), np.ones((20, 1)), np.ones((1, 20)))
        self.assertIs(validate(problem), problem)
        self.assertEqual((problem.n, problem.m, problem.p), (20, 1, 1))
        self.assertFalse(problem.is_generalized)

    def test_one_dimensional_blocks(self):
        problem = CareProblem.from_arrays(-np.eye(3), np.ones(3), np.ones(3))
        self.assertEqual(problem.B.shape, (3, 1))
        self.assertEqual(problem.C.shape, (1, 3))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            validate(CareProblem.from_arrays(-np.eye(3), np.ones((2, 1)), np.ones((1, 3))))
        with self.assertRaises(DimensionMismatch):
            validate(CareProblem.from_arrays(-np.eye(3), np.ones((3, 1)), np.ones((1, 4))))
        with self.assertRaises(DimensionMismatch):
            validate(CareProblem.from_arrays(np.ones((3, 2)), np.ones((3, 1)), np.ones((1, 2))))

    def test_singular_E(self):
        E = np.diag([1.0, 1.0, 0.0])
        with self.assertRaises(SingularE):
            validate(CareProblem.from_arrays(-np.eye(3), np.ones((3, 1)), np.ones((1, 3)), E))

    def test_wide_blocks_warn(self):
        problem = CareProblem.from_arrays(-np.eye(4), np.ones((4, 2)), np.ones((1, 4)))
        with self.assertLogs("apps.riccati.services.problem", level="WARNING"):
            validate(problem)

    def test_dense_cap(self):
        problem = CareProblem.from_arrays(sp.identity(600) * -1.0, np.ones((600, 1)), np.ones((1, 600)))
        with self.assertRaises(CapExceeded):
            problem.dense()


class TestCoefficients(SimpleTestCase):
    def test_expression(self):
        f = coefficient_function("10*x + y**2")
        npt.assert_allclose(f(np.array([0.5, 1.0]), np.array([2.0, 0.0])), [9.0, 10.0])

    def test_constant_broadcasts(self):
        f = coefficient_function("0")
        self.assertEqual(f(np.zeros(4), np.zeros(4)).shape, (4,))

    def test_grid_coordinates(self):
        x, y, h = grid_coordinates(3)
        self.assertAlmostEqual(h, 0.25)
        npt.assert_allclose(x[:3], [0.25, 0.5, 0.75])
        npt.assert_allclose(y[:3], [0.25, 0.25, 0.25])


class TestFdm(SimpleTestCase):
    def test_dimensions(self):
        problem = fdm_2d_problem(10)
        self.assertEqual(problem.A.shape, (100, 100))
        self.assertEqual(problem.B.shape, (100, 1))
        self.assertEqual(problem.C.shape, (1, 100))
        # 5-point stencil
        self.assertLessEqual(problem.A.nnz, 5 * 100)

    def test_stable(self):
        A = fdm_2d_problem(5).A.toarray()
        self.assertTrue(np.all(la.eigvals(A).real < 0))

    def test_indicators(self):
        problem = fdm_2d_problem(10)
        x, _, _ = grid_coordinates(10)
        b = problem.B[:, 0].real
        c = problem.C[0].real
        npt.assert_array_equal(b, ((x > 0.1) & (x <= 0.3)).astype(float))
        npt.assert_array_equal(c, ((x > 0.7) & (x <= 0.9)).astype(float))
        self.assertTrue(set(np.unique(b)) <= {0.0, 1.0})

    def test_empty_indicator(self):
        with self.assertRaises(EmptyIndicator):
            fdm_2d_problem(3, b_range=(0.8, 0.9))

    def test_stencil_against_symbolic_discretization(self):
        """sympy 로 유도한 중심차분 계수와 비교"""
        grid = 4
        problem = fdm_2d_problem(grid, convection_x="10*x", convection_y="100*y", reaction="x*y")
        A = problem.A.toarray().real
        xs, ys, h_value = grid_coordinates(grid)

        u = sympy.Function("u")
        x, y, h = sympy.symbols("x y h")
        # -(-Δu + f_x u_x + f_y u_y + g u) 의 중심차분
        stencil = -(
            -(u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4 * u(x, y)) / h**2
            + 10 * x * (u(x + h, y) - u(x - h, y)) / (2 * h)
            + 100 * y * (u(x, y + h) - u(x, y - h)) / (2 * h)
            + x * y * u(x, y)
        )
        stencil = sympy.expand(stencil)
        offsets = {
            (0, 0): u(x, y),
            (1, 0): u(x + h, y),
            (-1, 0): u(x - h, y),
            (0, 1): u(x, y + h),
            (0, -1): u(x, y - h),
        }
        coefficients = {
            key: sympy.lambdify((x, y, h), stencil.coeff(term))
            for key, term in offsets.items()
        }

        for row in range(grid * grid):
            ix, iy = row % grid, row // grid
            for (dx, dy), f in coefficients.items():
                jx, jy = ix + dx, iy + dy
                if not (0 <= jx < grid and 0 <= jy < grid):
                    continue
                expected = f(xs[row], ys[row], h_value)
                self.assertAlmostEqual(A[row, jy * grid + jx], expected, places=8)

    def test_from_spec(self):
        spec = FdmSpec.parse("6,10*x,100*y,0.1:0.3,0.7:0.9")
        problem = fdm_from_spec(spec)
        reference = fdm_2d_problem(6)
        npt.assert_array_equal(problem.A.toarray(), reference.A.toarray())
        npt.assert_array_equal(problem.C, reference.C)


class TestLoadProblem(SimpleTestCase):
    def test_manifest_with_relative_paths(self):
        gen = np.random.default_rng(5)
        A = -np.eye(12) + 0.1 * np.diag(np.ones(11), 1)
        B = gen.standard_normal((12, 1))
        C = gen.standard_normal((1, 12))
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            write_matrix_market(tmp / "A.mtx", sp.csc_matrix(A))
            write_matrix_market(tmp / "B.mtx", B)
            write_matrix_market(tmp / "C.mtx", C)
            (tmp / "manifest.json").write_text(
                json.dumps({"A": "A.mtx", "B": "B.mtx", "C": "C.mtx"}), encoding="utf-8"
            )
            problem = load_problem(tmp / "manifest.json")

        npt.assert_array_equal(problem.A.toarray(), A)
        npt.assert_array_equal(problem.B, B)
        npt.assert_array_equal(problem.C, C)
        self.assertIsNone(problem.E)

    def test_manifest_with_fdm_spec(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "manifest.json"
            path.write_text(json.dumps({"fdm": {"grid": 5}}), encoding="utf-8")
            problem = load_problem(path)
        self.assertEqual(problem.n, 25)
