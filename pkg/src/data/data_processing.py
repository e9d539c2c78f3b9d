"""
数据处理模块 - 读写逐素数特征值文件，约定转换与经典特征值归一化
"""
import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from src.logger_config import logger
from src.exceptions.exceptions import (
    EigenvalueFileError,
    InvalidLocalFactorError,
    MissingPrimeDataError,
    ReportWriteError,
)
from src.satake.satake_core import EigenformData, LocalFactor, hecke_to_local, primes_up_to

CONVENTIONS = ("lambda", "e1e2", "classical")
HEADER_KEYS = ("label", "k", "convention", "prime_bound")


@dataclass(frozen=True)
class EigenvalueRow:
    """一行 (p, v1, v2)，数值保留原始十进制字符串"""
    p: int
    v1: str
    v2: str
    line_number: int = 0


@dataclass(frozen=True)
class EigenvalueFile:
    """
    特征值文件：头部元数据与按素数升序的数据行
    """
    label: str
    weight: int
    convention: str
    prime_bound: int
    rows: Tuple[EigenvalueRow, ...] = field(repr=False)
    family: Optional[str] = None
    path: Optional[str] = None

    @property
    def genuine(self) -> bool:
        return self.family is None


def format_value(value) -> str:
    """浮点数写 17 位有效数字，有理数写 a/b"""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _parse_number(text: str, exact: bool):
    value = Fraction(text) if exact else float(Fraction(text)) if "/" in text else float(text)
    if not exact and not math.isfinite(value):
        raise ValueError(f"non-finite value '{text}'")
    return value


def _error(message: str, path: Optional[str], line_number: Optional[int]) -> EigenvalueFileError:
    where = f"{path or '<text>'}:{line_number}" if line_number else (path or "<text>")
    logger.error(f"{where}: {message}")
    return EigenvalueFileError(f"{where}: {message}", path=path, line_number=line_number)


def _parse_header(line: str, path: Optional[str]) -> Dict[str, str]:
    if not line.startswith("#"):
        raise _error("first line must be a '# label=... k=... convention=... prime_bound=...' header", path, 1)
    fields = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if not sep or not value:
            raise _error(f"malformed header field '{token}'", path, 1)
        fields[key] = value
    missing = [key for key in HEADER_KEYS if key not in fields]
    if missing:
        raise _error(f"header is missing {', '.join(missing)}", path, 1)
    if fields["convention"] not in CONVENTIONS:
        raise _error(f"unknown convention '{fields['convention']}', expected one of {CONVENTIONS}", path, 1)
    return fields


def parse_eigenvalue_text(lines: Iterable[str], path: Optional[str] = None) -> EigenvalueFile:
    """
    解析特征值文件文本

    :param lines: 文件各行
    :param path: 仅用于错误信息
    :return: EigenvalueFile（数值仍为原始字符串）
    :raises: EigenvalueFileError 头部错误、行格式错误（带行号）、素数不递增或超出上界、空数据体
    :raises: MissingPrimeDataError 素数有缺口，指出第一个缺失的素数
    """
    lines = list(lines)
    if not lines:
        raise _error("file is empty", path, None)
    header = _parse_header(lines[0].strip(), path)
    try:
        weight = int(header["k"])
        prime_bound = int(header["prime_bound"])
    except ValueError as e:
        raise _error(f"header k and prime_bound must be integers: {e}", path, 1) from e

    rows: List[EigenvalueRow] = []
    last_p = 0
    for line_number, raw in enumerate(lines[1:], start=2):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 3:
            raise _error(f"expected 3 fields 'p v1 v2', got {len(parts)}", path, line_number)
        try:
            p = int(parts[0])
            _parse_number(parts[1], exact=False)
            _parse_number(parts[2], exact=False)
        except (ValueError, ZeroDivisionError) as e:
            raise _error(f"malformed row '{text}': {e}", path, line_number) from e
        if p <= last_p:
            raise _error(f"primes must be strictly increasing, {p} follows {last_p}", path, line_number)
        if p > prime_bound:
            raise _error(f"prime {p} exceeds declared prime_bound {prime_bound}", path, line_number)
        rows.append(EigenvalueRow(p=p, v1=parts[1], v2=parts[2], line_number=line_number))
        last_p = p

    if not rows:
        raise _error("file has a header but no data rows", path, None)
    expected = primes_up_to(prime_bound).tolist()
    prime_set = set(expected)
    present = {row.p for row in rows}
    for row in rows:
        if row.p not in prime_set:
            raise _error(f"{row.p} is not a prime", path, row.line_number)
    for p in expected:
        if int(p) not in present:
            raise MissingPrimeDataError(f"{path or '<text>'}: no row for prime {int(p)} "
                                        f"(prime_bound={prime_bound})", prime=int(p))
    return EigenvalueFile(label=header["label"], weight=weight, convention=header["convention"],
                          prime_bound=prime_bound, rows=tuple(rows), family=header.get("family"), path=path)


def load_file(path: str) -> EigenvalueFile:
    """读取并解析特征值文件"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise _error(f"cannot read file: {e}", path, None) from e
    return parse_eigenvalue_text(lines, path=path)


def to_eigenform(ef: EigenvalueFile, exact: bool = False) -> EigenformData:
    """
    由文件构造 EigenformData：lambda 约定经 hecke_to_local 转换，e1e2 约定直接使用

    :param exact: 用 Fraction 解析数值（有理数据的精确路径）
    :raises: EigenvalueFileError 约定为 classical（需先归一化）或数值无效
    """
    if ef.convention == "classical":
        raise _error("classical eigenvalues must be normalized first (see the 'normalize' command)", ef.path, 1)
    locals_ = {}
    for row in ef.rows:
        try:
            v1 = _parse_number(row.v1, exact)
            v2 = _parse_number(row.v2, exact)
            if ef.convention == "lambda":
                locals_[row.p] = hecke_to_local(row.p, v1, v2)
            else:
                locals_[row.p] = LocalFactor(row.p, v1, v2)
        except InvalidLocalFactorError as e:
            raise _error(str(e), ef.path, row.line_number) from e
    try:
        return EigenformData(weight=ef.weight, fe_sign=(-1) ** ef.weight, label=ef.label, locals=locals_,
                             prime_bound=ef.prime_bound, genuine=ef.genuine)
    except InvalidLocalFactorError as e:
        raise _error(str(e), ef.path, 1) from e


def load(path: str, exact: bool = False) -> EigenformData:
    """读取特征值文件并返回 EigenformData"""
    ef = load_file(path)
    F = to_eigenform(ef, exact=exact)
    logger.info(f"Loaded '{F.label}' (k={F.weight}, {ef.convention}) with primes up to {F.prime_bound} from {path}")
    return F


def from_eigenform(F: EigenformData, convention: str = "e1e2", family: Optional[str] = None) -> EigenvalueFile:
    """
    把 EigenformData 转成文件表示

    :param convention: "e1e2" 直接写 (e1, e2)；"lambda" 写 (lambda(p), lambda(p^2))
    """
    if convention not in ("lambda", "e1e2"):
        raise EigenvalueFileError(f"cannot write convention '{convention}'")
    rows = []
    for p in sorted(F.locals):
        f = F.locals[p]
        if convention == "e1e2":
            v1, v2 = f.e1, f.e2
        else:
            inv_p = Fraction(1, p) if f.is_exact else 1.0 / p
            v1, v2 = f.e1, f.e1 * f.e1 - f.e2 - inv_p
        rows.append(EigenvalueRow(p=p, v1=format_value(v1), v2=format_value(v2)))
    if family is None and not F.genuine:
        family = "synthetic"
    return EigenvalueFile(label=F.label, weight=F.weight, convention=convention, prime_bound=F.prime_bound,
                          rows=tuple(rows), family=family)


def render_eigenvalue_file(ef: EigenvalueFile) -> str:
    header = f"# label={ef.label} k={ef.weight} convention={ef.convention} prime_bound={ef.prime_bound}"
    if ef.family is not None:
        header += f" family={ef.family}"
    body = [f"{row.p} {row.v1} {row.v2}" for row in ef.rows]
    return "\n".join([header] + body) + "\n"


def write_eigenvalue_file(ef: EigenvalueFile, path: str) -> str:
    """
    写出特征值文件，数值字符串原样保留

    :raises: ReportWriteError 如果路径不可写
    """
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(render_eigenvalue_file(ef))
    except OSError as e:
        logger.error(f"Cannot write eigenvalue file {path}: {e}", exc_info=True)
        raise ReportWriteError(f"Cannot write eigenvalue file {path}: {e}") from e
    logger.info(f"Wrote {len(ef.rows)} rows of '{ef.label}' to {path}")
    return path


def convert_convention(ef: EigenvalueFile, target: str) -> EigenvalueFile:
    """
    lambda <-> e1e2 转换：e2 = lambda(p)^2 - lambda(p^2) - 1/p
    """
    if ef.convention == target:
        return ef
    if {ef.convention, target} != {"lambda", "e1e2"}:
        raise EigenvalueFileError(f"cannot convert {ef.convention} to {target}", path=ef.path)
    F = to_eigenform(ef)
    converted = from_eigenform(F, convention=target, family=ef.family)
    return replace(converted, path=ef.path)


def normalize_classical(rows: Sequence[Tuple[int, float, float]], k: int, exponent: float = None,
                        label: str = "normalized", prime_bound: int = None) -> EigenvalueFile:
    """
    经典 Hecke 特征值归一化：lambda_F(p) = lambda_cl(p) p^{-exponent}, lambda_F(p^2) = lambda_cl(p^2) p^{-2 exponent}

    :param rows: (p, lambda_cl(p), lambda_cl(p^2))
    :param k: 权
    :param exponent: 归一化指数，默认 k - 3/2
    :return: lambda 约定的 EigenvalueFile
    """
    exponent = exponent if exponent is not None else k - 1.5
    if exponent != k - 1.5:
        logger.warning(f"Normalizing with exponent {exponent}, not the usual k - 3/2 = {k - 1.5}")
    out = []
    for p, lam_p, lam_p2 in rows:
        scale = float(p) ** -exponent
        out.append(EigenvalueRow(p=int(p), v1=format_value(float(lam_p) * scale),
                                 v2=format_value(float(lam_p2) * scale * scale)))
    bound = prime_bound if prime_bound is not None else (out[-1].p if out else 0)
    return EigenvalueFile(label=label, weight=k, convention="lambda", prime_bound=bound, rows=tuple(out))


def normalize_file(ef: EigenvalueFile, exponent: float) -> EigenvalueFile:
    """把 classical 约定的文件归一化为 lambda 约定"""
    if ef.convention != "classical":
        raise EigenvalueFileError(f"normalize expects a classical file, got convention '{ef.convention}'",
                                  path=ef.path)
    rows = [(row.p, _parse_number(row.v1, False), _parse_number(row.v2, False)) for row in ef.rows]
    return replace(normalize_classical(rows, ef.weight, exponent, label=ef.label, prime_bound=ef.prime_bound),
                   family=ef.family)
