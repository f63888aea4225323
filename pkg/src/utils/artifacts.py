"""
输出文件（CSV / JSON）的渲染与写入

CSV：UTF-8，首行 "# schema: <名称>/<版本>"，其后为表头；小数点为 '.'
JSON：UTF-8，键排序，顶层带 schema 与 schema_version
"""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from src.exceptions import FileError

logger = logging.getLogger(__name__)

SCHEMA_VERSIONS = {
    "spectrum": 1,
    "table1": 1,
    "verify": 1,
    "sample": 1,
    "eigensolve": 1,
    "matrix": 1,
}


def format_number(value: Any) -> str:
    """浮点数用 repr（最短往返表示），其余原样转字符串"""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(schema: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}/{SCHEMA_VERSIONS[schema]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


def render_json(schema: str, payload: Dict[str, Any]) -> str:
    doc = dict(payload)
    doc["schema"] = schema
    doc["schema_version"] = SCHEMA_VERSIONS[schema]
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def render(schema: str, fmt: str, header: Sequence[str], rows: List[Sequence[Any]],
           extra: Optional[Dict[str, Any]] = None) -> str:
    """同一份表格数据按 fmt 渲染；JSON 时每行变成以表头为键的对象"""
    if fmt == "csv":
        return render_csv(schema, header, rows)
    payload = dict(extra or {})
    payload["rows"] = [dict(zip(header, row)) for row in rows]
    return render_json(schema, payload)


def write_artifact(text: str, path: Optional[str]) -> None:
    """
    写出渲染结果；path 为 None 时写到标准输出

    Raises:
        FileError: 目标文件无法写入
    """
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise FileError(f"无法写入输出文件: {target}", details={"path": str(target), "reason": str(e)}) from e
    logger.info("已写出 %s（%d 字节）", target, len(text.encode("utf-8")))


def spectrum_artifact(rows, fmt: str) -> str:
    header = ["K", "b", "epsilon", "degeneracy"]
    data = [[r.K, r.b_value, r.epsilon, r.degeneracy] for r in rows]
    return render("spectrum", fmt, header, data)


def table1_artifact(rows, fmt: str) -> str:
    if fmt == "csv":
        data = [
            [row.K, row.l_tilde, l, " ".join(c.to_json()), str(c), row.convention.value]
            for row in rows
            for l, c in row.coeffs.items()
        ]
        return render_csv("table1", ["K", "l_tilde", "l", "poly", "expr", "convention"], data)
    convention = rows[0].convention.value if rows else None
    return render_json("table1", {"convention": convention, "rows": [row.to_json() for row in rows]})


def eigen_artifact(result, closed_form, fmt: str) -> str:
    header = ["index", "K", "epsilon_plus_1_numeric", "epsilon_plus_1_closed_form", "abs_error"]
    data = [
        [i, K, value, exact, abs(value - exact)]
        for i, (value, (K, exact)) in enumerate(zip(result.eigenvalues, closed_form))
    ]
    extra = {
        "l": result.l_channel,
        "b": result.b_value,
        "n": result.grid.n,
        "richardson": result.richardson,
    }
    return render("eigensolve", fmt, header, data, extra)


def matrix_artifact(values: np.ndarray, fmt: str, extra: Optional[Dict[str, Any]] = None) -> str:
    header = ["row", "col", "real", "imag", "abs"]
    data = [
        [r, c, float(values[r, c].real), float(values[r, c].imag), float(abs(values[r, c]))]
        for r in range(values.shape[0])
        for c in range(values.shape[1])
    ]
    return render("matrix", fmt, header, data, extra)


def sample_artifact(chi: np.ndarray, phi: np.ndarray, values: np.ndarray, norm: float, fmt: str,
                    extra: Optional[Dict[str, Any]] = None) -> str:
    """values 的形状为 (len(chi), len(phi))"""
    header = ["chi", "phi", "abs_value", "norm"]
    data = [
        [float(c), float(p), float(abs(values[i, j])), norm]
        for i, c in enumerate(chi)
        for j, p in enumerate(phi)
    ]
    return render("sample", fmt, header, data, extra)


def verify_artifact(report_dict: Dict[str, Any]) -> str:
    return render_json("verify", report_dict)
