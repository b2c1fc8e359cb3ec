# apps/riccati/services/matrix_market.py
"""
Matrix Market (.mtx) 입출력

헤더와 본문 형식은 직접 검사해서 줄 번호가 붙은 ParseError 를 내고,
실제 값 읽기/쓰기는 scipy.io 에 맡깁니다.
"""

import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse as sp

from apps.riccati.exceptions import ParseError, UnsupportedField

logger = logging.getLogger(__name__)

BANNER = "%%matrixmarket"
FORMATS = ("coordinate", "array")
FIELDS = ("real", "complex", "integer", "pattern")
SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")

# 값 1개를 표현하는 토큰 수
VALUE_TOKENS = {"real": 1, "integer": 1, "complex": 2}

MatrixLike = Union[np.ndarray, sp.csc_matrix]


def _parse_banner(line: str) -> Tuple[str, str, str]:
    tokens = line.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != BANNER or tokens[1] != "matrix":
        raise ParseError("malformed Matrix Market header", line=1)
    fmt, field, symmetry = tokens[2:]
    if fmt not in FORMATS or field not in FIELDS or symmetry not in SYMMETRIES:
        raise ParseError(f"unsupported header '{line.strip()}'", line=1)
    return fmt, field, symmetry


def _expected_entries(fmt: str, symmetry: str, rows: int, cols: int, nnz: int) -> int:
    if fmt == "coordinate":
        return nnz
    if symmetry == "general":
        return rows * cols
    if symmetry == "skew-symmetric":
        return rows * (rows - 1) // 2
    return rows * (rows + 1) // 2


def _check_body(lines: List[str], start: int, fmt: str, field: str, shape, expected: int):
    rows, cols = shape
    width = VALUE_TOKENS[field] + (2 if fmt == "coordinate" else 0)
    count = 0
    for offset, line in enumerate(lines[start:], start=start + 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        tokens = stripped.split()
        if len(tokens) != width:
            raise ParseError(f"expected {width} tokens, got {len(tokens)}", line=offset)
        try:
            if fmt == "coordinate":
                i, j = int(tokens[0]), int(tokens[1])
                if not (1 <= i <= rows and 1 <= j <= cols):
                    raise ParseError(f"index ({i}, {j}) out of range", line=offset)
            [float(token) for token in tokens[-VALUE_TOKENS[field]:]]
        except ValueError:
            raise ParseError(f"non-numeric entry '{stripped}'", line=offset)
        count += 1

    if count != expected:
        raise ParseError(
            f"expected {expected} entries, found {count}", line=len(lines)
        )


def load_matrix_market(path) -> MatrixLike:
    """
    Matrix Market 파일 읽기

    coordinate 는 csc sparse, array 는 dense ndarray (모두 complex128).
    symmetric / hermitian 저장은 full 로 확장됩니다.

    Raises:
        ParseError: 헤더/크기/본문 형식 오류 (line 포함)
        UnsupportedField: pattern 행렬
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError("empty file", line=1)

    fmt, field, symmetry = _parse_banner(lines[0])
    if field == "pattern":
        raise UnsupportedField(f"{path.name}: pattern matrices carry no values")

    size_index = 1
    while size_index < len(lines) and (
        not lines[size_index].strip() or lines[size_index].lstrip().startswith("%")
    ):
        size_index += 1
    if size_index >= len(lines):
        raise ParseError("missing size line", line=len(lines))

    size_tokens = lines[size_index].split()
    try:
        sizes = [int(token) for token in size_tokens]
    except ValueError:
        raise ParseError("size line must be integers", line=size_index + 1)
    if len(sizes) != (3 if fmt == "coordinate" else 2) or min(sizes) < 0:
        raise ParseError("malformed size line", line=size_index + 1)

    rows, cols = sizes[0], sizes[1]
    nnz = sizes[2] if fmt == "coordinate" else rows * cols
    expected = _expected_entries(fmt, symmetry, rows, cols, nnz)
    _check_body(lines, size_index + 1, fmt, field, (rows, cols), expected)

    data = scipy.io.mmread(str(path))
    logger.debug(f"[MatrixMarket] read {path.name}: {rows}x{cols} {fmt} {field} {symmetry}")
    if sp.issparse(data):
        return sp.csc_matrix(data, dtype=np.complex128)
    return np.asarray(data, dtype=np.complex128)


def write_matrix_market(path, M, comment: str = "") -> Path:
    """
    Matrix Market 파일 쓰기 (17 유효숫자, general 저장)

    허수부가 모두 0 이면 real field 로 씁니다.
    """
    path = Path(path)
    if sp.issparse(M):
        M = sp.coo_matrix(M)
        if np.iscomplexobj(M.data) and not np.any(M.data.imag):
            M = sp.coo_matrix((M.data.real, (M.row, M.col)), shape=M.shape)
    else:
        M = np.atleast_2d(np.asarray(M))
        if np.iscomplexobj(M) and not np.any(M.imag):
            M = M.real

    scipy.io.mmwrite(str(path), M, comment=comment, precision=17, symmetry="general")
    logger.debug(f"[MatrixMarket] wrote {path.name}: {M.shape[0]}x{M.shape[1]}")
    return path
