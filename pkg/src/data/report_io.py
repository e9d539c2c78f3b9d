"""
报告输出模块 - 以固定列顺序写出 CSV / JSON 报告
"""
import dataclasses
import json
import math
import os
from typing import Any, Dict, List, Sequence, Union

import pandas as pd

from src.logger_config import logger
from src.exceptions.exceptions import ReportWriteError

# 报告类型名 -> 列顺序
SCHEMAS: Dict[str, List[str]] = {
    "VoronoiEvaluation": ["x", "M", "T", "exact", "main_term", "residual"],
    "WindowScan": ["x", "c", "plus", "minus", "zero", "lower_target"],
    "KernelTest": ["t", "kappa", "tau", "J", "expected", "deviation"],
    "ExtremaReport": ["X", "C", "x1", "x2", "S1", "S2", "c1_emp", "c2_emp", "lemma_holds"],
    "SignCounts": ["x", "plus", "minus", "zero", "zero_tolerance"],
    "PerronComparison": ["x", "T", "P", "kappa", "oracle", "direct", "deviation"],
    "ExponentFit": ["slope", "stderr", "r2", "n_points"],
    "PropertyResult": ["module", "invariant", "passed", "detail"],
}

FLOAT_FORMAT = "%.17g"


def _as_rows(report) -> List[Any]:
    if dataclasses.is_dataclass(report) and not isinstance(report, type):
        return [report]
    return list(report)


def report_columns(rows: Sequence[Any]) -> List[str]:
    """按报告类型返回列顺序；未登记的 dataclass 使用字段声明顺序"""
    if not rows:
        raise ReportWriteError("Cannot infer the schema of an empty report")
    first = rows[0]
    name = type(first).__name__
    if name in SCHEMAS:
        return SCHEMAS[name]
    if dataclasses.is_dataclass(first):
        return [f.name for f in dataclasses.fields(first)]
    if isinstance(first, dict):
        return list(first.keys())
    raise ReportWriteError(f"Unsupported report row type {name}")


def _records(rows: Sequence[Any], columns: List[str]) -> List[Dict[str, Any]]:
    records = []
    for row in rows:
        source = row if isinstance(row, dict) else {c: getattr(row, c) for c in columns}
        records.append({c: source[c] for c in columns})
    return records


def _prepare(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def to_frame(report, columns: List[str] = None) -> pd.DataFrame:
    """把报告行转为列顺序固定的 DataFrame"""
    rows = _as_rows(report)
    columns = columns or report_columns(rows)
    return pd.DataFrame(_records(rows, columns), columns=columns)


def emit_csv(report, path: str, columns: List[str] = None) -> str:
    """
    写出 CSV，浮点数保留 17 位有效数字

    :param report: 单个 dataclass 报告或其列表
    :raises: ReportWriteError 如果路径不可写
    """
    frame = to_frame(report, columns)
    try:
        _prepare(path)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        logger.error(f"Cannot write CSV report {path}: {e}", exc_info=True)
        raise ReportWriteError(f"Cannot write CSV report {path}: {e}") from e
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def emit_json(report, path: str, columns: List[str] = None) -> str:
    """
    写出 JSON 数组，每行一个对象，键按列顺序排列

    :raises: ReportWriteError 如果路径不可写
    """
    rows = _as_rows(report)
    columns = columns or report_columns(rows)
    records = [{k: _plain(v) for k, v in record.items()} for record in _records(rows, columns)]
    try:
        _prepare(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(records, f, ensure_ascii=False, indent=2, allow_nan=False)
            f.write("\n")
    except OSError as e:
        logger.error(f"Cannot write JSON report {path}: {e}", exc_info=True)
        raise ReportWriteError(f"Cannot write JSON report {path}: {e}") from e
    logger.info(f"Wrote {len(records)} records to {path}")
    return path


def _plain(value):
    # numpy 标量转为 Python 内置类型；float 的 repr 可无损往返，非有限值写为 null
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def emit(report, path: str) -> str:
    """按扩展名选择 CSV 或 JSON"""
    if path.lower().endswith(".json"):
        return emit_json(report, path)
    return emit_csv(report, path)
