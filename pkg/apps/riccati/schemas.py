# apps/riccati/schemas.py
"""
경계(boundary) 스키마

CLI 인자, manifest JSON, history 레코드처럼 프로세스 밖과 주고받는 값만
pydantic 모델로 검증합니다. 수치 컨테이너(행렬)는 services 쪽 dataclass 가 담당합니다.
"""

import json
from pathlib import Path
from typing import ClassVar, List, Literal, Optional, Tuple

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)


def _to_complex(value) -> complex:
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.strip().replace(" ", "").replace("i", "j"))
    raise ValueError(f"not a complex number: {value!r}")


class ProjectorChoice(BaseModel):
    """
    test space L 선택

    - K: Galerkin (L = K)
    - H: Petrov-Galerkin (L = H)
    - combo: L = alpha*H - beta*K
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variant: Literal["K", "H", "combo"] = "K"
    alpha: complex = complex(1.0)
    beta: complex = complex(1.0)

    @field_validator("alpha", "beta", mode="before")
    @classmethod
    def _coerce_complex(cls, value):
        return _to_complex(value)

    @model_validator(mode="after")
    def _check_combo(self):
        if self.variant == "combo" and abs(self.alpha) + abs(self.beta) == 0:
            raise ValueError("combo requires |alpha| + |beta| != 0")
        return self

    @field_serializer("alpha", "beta")
    def _serialize_complex(self, value: complex) -> List[float]:
        return [value.real, value.imag]

    @classmethod
    def parse(cls, text: str) -> "ProjectorChoice":
        """'K' | 'H' | 'combo:ALPHA,BETA' 형식 파싱"""
        text = text.strip()
        if text in ("K", "H"):
            return cls(variant=text)
        if text.startswith("combo:"):
            parts = text[len("combo:"):].split(",")
            if len(parts) != 2:
                raise ValueError(f"combo expects two coefficients: {text!r}")
            return cls(variant="combo", alpha=parts[0], beta=parts[1])
        raise ValueError(f"unknown projector choice: {text!r}")

    @property
    def label(self) -> str:
        if self.variant != "combo":
            return self.variant
        return f"combo:{_format_complex(self.alpha)},{_format_complex(self.beta)}"


def _format_complex(value: complex) -> str:
    if value.imag == 0:
        return f"{value.real:g}"
    return f"{value.real:g}{value.imag:+g}j"


class TruncationPolicy(BaseModel):
    """K Y K^H 의 고유값 중 tau * rho 이하(비양수 포함)는 버립니다."""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(default=1e-12, gt=0.0, lt=1.0)


class SolveOptions(BaseModel):
    """outer iteration 옵션"""

    model_config = ConfigDict(validate_assignment=True)

    tol: float = Field(default=1e-10, gt=0.0)
    max_blocks: Optional[int] = Field(default=None, ge=1)
    truncate: bool = False
    policy: TruncationPolicy = TruncationPolicy()
    norm: Literal["fro", "2"] = "fro"
    # 상대 잔차의 분모: ||C C^H||, ||C^H C|| (같은 값), 또는 1 (절대 잔차)
    denominator: Literal["cch", "chc", "abs"] = "cch"


class FdmSpec(BaseModel):
    """
    2차원 convection-diffusion 생성기 스펙

    -Δu + f_x u_x + f_y u_y + g u (unit square, Dirichlet) 를
    g^2 개 내부 격자점에서 이산화합니다.
    """

    model_config = ConfigDict(frozen=True, str_strip_whitespace=True)

    grid: int = Field(ge=2)
    convection_x: str = "10*x"
    convection_y: str = "100*y"
    reaction: str = "0"
    b_range: Tuple[float, float] = (0.1, 0.3)
    c_range: Tuple[float, float] = (0.7, 0.9)

    @field_validator("b_range", "c_range")
    @classmethod
    def _check_range(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = value
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"range must satisfy 0 <= lo < hi <= 1, got {value}")
        return value

    @classmethod
    def parse(cls, text: str) -> "FdmSpec":
        """
        CLI 형식 'G[,FX,FY,BLO:BHI,CLO:CHI]' 파싱

        예: '100', '20,10*x,100*y,0.1:0.3,0.7:0.9'
        """
        parts = [part.strip() for part in text.split(",")]
        data = {"grid": int(parts[0])}
        if len(parts) > 1 and parts[1]:
            data["convection_x"] = parts[1]
        if len(parts) > 2 and parts[2]:
            data["convection_y"] = parts[2]
        for key, part in zip(("b_range", "c_range"), parts[3:5]):
            lo, _, hi = part.partition(":")
            data[key] = (float(lo), float(hi))
        if len(parts) > 5:
            raise ValueError(f"too many fields in fdm spec: {text!r}")
        return cls(**data)


class ProblemManifest(BaseModel):
    """
    문제 manifest (JSON)

    A, B, C (선택적으로 E) 의 Matrix Market 경로 또는 fdm 생성기 스펙 중 하나.
    상대 경로는 manifest 파일 위치 기준입니다.
    """

    model_config = ConfigDict(validate_assignment=True)

    A: Optional[str] = None
    E: Optional[str] = None
    B: Optional[str] = None
    C: Optional[str] = None
    fdm: Optional[FdmSpec] = None

    @model_validator(mode="after")
    def _check_source(self):
        has_files = any(p is not None for p in (self.A, self.B, self.C))
        if self.fdm is not None and has_files:
            raise ValueError("manifest names both matrix files and an fdm spec")
        if self.fdm is None and not all(p is not None for p in (self.A, self.B, self.C)):
            raise ValueError("manifest needs A, B and C (or an fdm spec)")
        return self

    @classmethod
    def from_file(cls, path: Path) -> "ProblemManifest":
        path = Path(path)
        manifest = cls(**json.loads(path.read_text(encoding="utf-8")))
        base = path.resolve().parent
        for key in ("A", "E", "B", "C"):
            value = getattr(manifest, key)
            if value is not None and not Path(value).is_absolute():
                setattr(manifest, key, str(base / value))
        return manifest


class HistoryRecord(BaseModel):
    """outer iteration 한 step 의 기록"""

    j: int = Field(ge=1)
    dim: int = Field(ge=1, description="columns of K (subspace dimension before truncation)")
    shift_re: float
    shift_im: float
    rel_residual: Optional[float] = None
    residual_rank: Optional[int] = None
    r: Optional[int] = Field(default=None, description="kept rank after truncation")
    trunc_rel_residual: Optional[float] = None
    trunc_residual_rank: Optional[int] = None
    stored_columns: int = Field(ge=0, description="n-length columns needed to store the reported iterate")
    cond_LtK: Optional[float] = None
    seconds: float = Field(ge=0.0)
    flag: Optional[str] = Field(default=None, description="non-fatal step condition")

    CSV_COLUMNS: ClassVar[Tuple[str, ...]] = (
        "j",
        "dim",
        "shift_re",
        "shift_im",
        "rel_residual",
        "residual_rank",
        "r",
        "trunc_rel_residual",
        "trunc_residual_rank",
        "stored_columns",
        "cond_LtK",
        "flag",
    )


class RunConfig(BaseModel):
    """
    CLI 실행 설정

    problem / fdm 중 하나, shifts_file / heuristic 중 하나가 필요합니다.
    """

    model_config = ConfigDict(validate_assignment=True)

    problem: Optional[Path] = None
    fdm: Optional[FdmSpec] = None
    shifts_file: Optional[Path] = None
    heuristic: Optional[int] = Field(default=None, ge=1)
    allow_repeated_shifts: bool = False
    choices: List[ProjectorChoice] = Field(default_factory=lambda: [ProjectorChoice()], min_length=1)
    options: SolveOptions = SolveOptions()
    out: Path = Path("out")
    mm_out: bool = False
    dense_verify: bool = False
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check_sources(self):
        if (self.problem is None) == (self.fdm is None):
            raise ValueError("exactly one of problem manifest or fdm spec is required")
        if (self.shifts_file is None) == (self.heuristic is None):
            raise ValueError("exactly one of shifts file or heuristic count is required")
        return self

    @property
    def choice(self) -> ProjectorChoice:
        return self.choices[0]
