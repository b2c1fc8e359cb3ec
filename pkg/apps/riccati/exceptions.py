from typing import Any, Dict, Optional


class RiccatiError(Exception):
    """
    솔버 공통 예외

    default_code / default_detail 은 서브클래스에서 재정의하고,
    exit_code 는 CLI 종료 코드로 그대로 사용됩니다.

    종료 코드는 0 수렴, 1 치명적 오류, 2 shift 소진, 3 부분 비교 실패 네 가지뿐입니다.
    오류 종류의 구분은 응답의 code (default_code) 가 담당하며 클래스마다 고유합니다.
    """

    exit_code = 1
    default_code = "RICCATI_ERROR"
    default_detail = "Riccati solver error"

    def __init__(
        self, detail: Optional[str] = None, code: Optional[str] = None
    ) -> None:
        if detail is not None:
            self.default_detail = detail

        if code is not None:
            self.default_code = code
        super().__init__(self.default_detail)

    @property
    def detail(self) -> str:
        return self.default_detail

    @property
    def code(self) -> str:
        return self.default_code

    def get_data(self) -> Dict[str, Any]:
        return {}

    def get_response(self) -> dict:
        return {
            "success": False,
            "code": self.default_code,
            "message": self.default_detail,
            "data": self.get_data(),
        }


# ============================================================
# problem / matrix market
# ============================================================


class DimensionMismatch(RiccatiError):
    default_code = "DIMENSION_MISMATCH"
    default_detail = "Inconsistent matrix dimensions"


class SingularE(RiccatiError):
    default_code = "SINGULAR_E"
    default_detail = "E is singular"


class EmptyIndicator(RiccatiError):
    default_code = "EMPTY_INDICATOR"
    default_detail = "Indicator range captures no grid node"


class ParseError(RiccatiError):
    default_code = "PARSE_ERROR"
    default_detail = "Malformed Matrix Market file"

    def __init__(
        self,
        detail: Optional[str] = None,
        line: Optional[int] = None,
        code: Optional[str] = None,
    ) -> None:
        self.line = line
        if detail is not None and line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail=detail, code=code)

    def get_data(self) -> Dict[str, Any]:
        return {"line": self.line}


class UnsupportedField(RiccatiError):
    default_code = "UNSUPPORTED_FIELD"
    default_detail = "Pattern matrices carry no values"


class ConfigError(RiccatiError):
    default_code = "CONFIG_ERROR"
    default_detail = "Invalid configuration"


class CapExceeded(RiccatiError):
    default_code = "CAP_EXCEEDED"
    default_detail = "Problem too large for a dense evaluation"


# ============================================================
# kernels
# ============================================================


class NonHermitianInput(RiccatiError):
    default_code = "NON_HERMITIAN_INPUT"
    default_detail = "Matrix is not Hermitian"


class ReorderingFailure(RiccatiError):
    default_code = "REORDERING_FAILURE"
    default_detail = "Schur reordering failed"


class ShiftHitsSpectrum(RiccatiError):
    default_code = "SHIFT_HITS_SPECTRUM"
    default_detail = "Shifted matrix is numerically singular"

    def __init__(
        self, detail: Optional[str] = None, pole: Optional[complex] = None
    ) -> None:
        self.pole = pole
        super().__init__(detail=detail)

    def get_data(self) -> Dict[str, Any]:
        if self.pole is None:
            return {}
        return {"pole": [self.pole.real, self.pole.imag]}


class RankDeficient(RiccatiError):
    default_code = "RANK_DEFICIENT"
    default_detail = "Matrix is numerically rank deficient"


# ============================================================
# shifts
# ============================================================


class InfiniteShift(RiccatiError):
    default_code = "INFINITE_SHIFT"
    default_detail = "Shifts must be finite"


class EmptyList(RiccatiError):
    default_code = "EMPTY_LIST"
    default_detail = "Shift list is empty"


class EstimateFailure(RiccatiError):
    default_code = "ESTIMATE_FAILURE"
    default_detail = "Spectral estimate did not converge"


# ============================================================
# brad
# ============================================================


class RankDeficientC(RiccatiError):
    default_code = "RANK_DEFICIENT_C"
    default_detail = "C^H has numerically dependent columns"


class Breakdown(RiccatiError):
    """
    새 블록이 기존 basis 에 종속 (deflation 미지원)

    invariant_brad 가 있으면 새 블록이 완전히 소멸한 경우(부분공간이 불변)이며,
    square K/H 를 가진 마지막 분해를 담고 있습니다.
    """

    default_code = "BREAKDOWN"
    default_detail = "Rational Arnoldi breakdown"

    def __init__(self, detail: Optional[str] = None, invariant_brad=None) -> None:
        self.invariant_brad = invariant_brad
        super().__init__(detail=detail)

    def get_data(self) -> Dict[str, Any]:
        return {"invariant": self.invariant_brad is not None}


# ============================================================
# dense_care
# ============================================================


class NoStabilizingSolution(RiccatiError):
    default_code = "NO_STABILIZING_SOLUTION"
    default_detail = "No stabilizing solution (Hamiltonian eigenvalues near the imaginary axis)"


class IllConditionedU1(RiccatiError):
    default_code = "ILL_CONDITIONED_U1"
    default_detail = "Invariant subspace basis U1 is ill conditioned"


class SpectrumCollision(RiccatiError):
    default_code = "SPECTRUM_COLLISION"
    default_detail = "Lyapunov operator is singular"


# ============================================================
# projector / residual / truncation
# ============================================================


class SingularLtK(RiccatiError):
    default_code = "SINGULAR_LTK"
    default_detail = "L^H K is numerically singular"


class SingularUW(RiccatiError):
    default_code = "SINGULAR_UW"
    default_detail = "U^H W is numerically singular"


class AllTruncated(RiccatiError):
    default_code = "ALL_TRUNCATED"
    default_detail = "Truncation discarded every eigenvalue"


class ShiftsExhausted(RiccatiError):
    """허용오차 도달 전에 shift (또는 block 예산) 소진. result 에 best-so-far 결과를 담습니다."""

    exit_code = 2
    default_code = "SHIFTS_EXHAUSTED"
    default_detail = "Shifts exhausted before reaching the tolerance"

    def __init__(self, detail: Optional[str] = None, result=None) -> None:
        self.result = result
        super().__init__(detail=detail)


class NumericalFailure(RiccatiError):
    """LAPACK 등 라이브러리 수준의 수치 실패를 감싼 오류 (LinAlgError, ValueError ...)"""

    default_code = "NUMERICAL_FAILURE"
    default_detail = "Numerical library failure"
