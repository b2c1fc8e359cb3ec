# tests/riccati/test_matrix_market.py
"""
Matrix Market 입출력 테스트
"""

import tempfile
from pathlib import Path

import numpy as np
import numpy.testing as npt
import scipy.sparse as sp
from django.test import SimpleTestCase

from apps.riccati.exceptions import ParseError, UnsupportedField
from apps.riccati.services.matrix_market import load_matrix_market, write_matrix_market


class TestLoadMatrixMarket(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_diagonal_coordinate(self):
        path = self._write(
            "diag.mtx",
            "%%MatrixMarket matrix coordinate real general\n"
            "% comment\n"
            "3 3 3\n1 1 1.0\n2 2 2.0\n3 3 3.0\n",
        )
        M = load_matrix_market(path)
        self.assertTrue(sp.issparse(M))
        npt.assert_array_equal(M.toarray(), np.diag([1.0, 2.0, 3.0]))
        self.assertEqual(M.dtype, np.complex128)

    def test_symmetric_expansion(self):
        path = self._write(
            "sym.mtx",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 1 5.0\n",
        )
        npt.assert_array_equal(load_matrix_market(path).toarray(), [[1.0, 5.0], [5.0, 0.0]])

    def test_dense_array(self):
        path = self._write(
            "B.mtx",
            "%%MatrixMarket matrix array complex general\n2 1\n1.0 2.0\n3.0 -1.0\n",
        )
        M = load_matrix_market(path)
        self.assertIsInstance(M, np.ndarray)
        npt.assert_array_equal(M, [[1 + 2j], [3 - 1j]])

    def test_malformed_banner(self):
        path = self._write("bad.mtx", "%%MatrixMarket tensor coordinate real general\n1 1 1\n1 1 1\n")
        with self.assertRaises(ParseError) as ctx:
            load_matrix_market(path)
        self.assertEqual(ctx.exception.line, 1)
        self.assertEqual(ctx.exception.get_data(), {"line": 1})
        self.assertTrue(ctx.exception.detail.startswith("line 1:"))

    def test_pattern_unsupported(self):
        path = self._write(
            "pattern.mtx", "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n"
        )
        with self.assertRaises(UnsupportedField):
            load_matrix_market(path)

    def test_index_out_of_range(self):
        path = self._write(
            "range.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"
        )
        with self.assertRaises(ParseError) as ctx:
            load_matrix_market(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_entry_count(self):
        path = self._write(
            "count.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"
        )
        with self.assertRaises(ParseError):
            load_matrix_market(path)


class TestWriteMatrixMarket(SimpleTestCase):
    def test_round_trip_is_exact(self):
        gen = np.random.default_rng(3)
        A = sp.random(20, 20, density=0.2, random_state=4, format="csc") * np.pi
        B = gen.standard_normal((20, 2)) + 1j * gen.standard_normal((20, 2))
        with tempfile.TemporaryDirectory() as tmp:
            a_path = write_matrix_market(Path(tmp) / "A.mtx", A)
            b_path = write_matrix_market(Path(tmp) / "B.mtx", B)
            self.assertIn("real", a_path.read_text().splitlines()[0])
            npt.assert_array_equal(load_matrix_market(a_path).toarray(), A.toarray())
            npt.assert_array_equal(load_matrix_market(b_path), B)
