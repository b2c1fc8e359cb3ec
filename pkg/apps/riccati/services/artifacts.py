# apps/riccati/services/artifacts.py
"""
실행 결과 파일 쓰기

    config.json    실행 설정 echo (재현용)
    history.json   HistoryRecord JSON schema + step 기록
    history.csv    plot 용 표 (seconds 제외, 실행 간 byte 단위 동일)
    solution.npz   Z (n x q, column-major), Y (q x q), metadata (JSON 문자열)
    Z.mtx, Y.mtx   --mm-out 일 때 npz 대신
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional

import numpy as np

from apps.riccati.schemas import HistoryRecord, RunConfig
from apps.riccati.services.matrix_market import write_matrix_market

logger = logging.getLogger(__name__)

CHOICE_COLUMN = "choice"


def prepare_out_dir(out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_config(out: Path, config: RunConfig) -> Path:
    path = Path(out) / "config.json"
    path.write_text(config.model_dump_json(indent=2), encoding="utf-8")
    return path


def _history_document(curves: Mapping[str, Any]) -> Dict[str, Any]:
    return {
        "schema": HistoryRecord.model_json_schema(),
        "curves": {
            label: {
                "converged": history.converged,
                "records": [record.model_dump(mode="json") for record in history.records],
            }
            for label, history in curves.items()
        },
    }


def write_history_json(out: Path, curves: Mapping[str, Any]) -> Path:
    """
    Args:
        curves: choice label → ConvergenceHistory
    """
    path = Path(out) / "history.json"
    path.write_text(json.dumps(_history_document(curves), indent=2), encoding="utf-8")
    return path


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_history_csv(out: Path, curves: Mapping[str, Any], keyed: bool = False) -> Path:
    """
    keyed=True 이면 첫 열에 choice label 을 붙인 병합 표를 씁니다.
    """
    path = Path(out) / "history.csv"
    columns = list(HistoryRecord.CSV_COLUMNS)
    header = [CHOICE_COLUMN] + columns if keyed else columns

    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for label, history in curves.items():
            for record in history.records:
                row = [_csv_value(getattr(record, column)) for column in columns]
                writer.writerow([label] + row if keyed else row)
    return path


def solution_metadata(solution, label: str, converged: bool, extra: Optional[dict] = None) -> dict:
    brad = solution.brad
    metadata = {
        "choice": label,
        "converged": converged,
        "n": brad.problem.n,
        "rank": solution.rank,
        "truncated": solution.truncated,
        "blocks": brad.j,
        "shifts": [[s.real, s.imag] for s in brad.shifts],
    }
    if extra:
        metadata.update(extra)
    return metadata


def write_solution(out: Path, solution, metadata: dict, mm_out: bool = False) -> Iterable[Path]:
    """X = Z Y Z^H 저장"""
    out = Path(out)
    Z = solution.Z()
    Y = solution.Y
    if mm_out:
        comment = json.dumps(metadata)
        paths = (
            write_matrix_market(out / "Z.mtx", Z, comment=comment),
            write_matrix_market(out / "Y.mtx", Y, comment=comment),
        )
    else:
        path = out / "solution.npz"
        np.savez(
            path,
            Z=np.asfortranarray(Z),
            Y=np.asarray(Y),
            metadata=np.array(json.dumps(metadata)),
        )
        paths = (path,)
    logger.info(f"[Artifacts] wrote solution (rank {solution.rank}) to {out}")
    return paths


def read_solution(path) -> tuple:
    """(Z, Y, metadata) 읽기 (solution.npz)"""
    with np.load(Path(path), allow_pickle=False) as data:
        return data["Z"], data["Y"], json.loads(str(data["metadata"]))
