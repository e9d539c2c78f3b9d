"""
命令执行模块 - 把命令行参数落到各数值模块，返回状态字典
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from src.logger_config import logger
from src.config import config as default_config
from src.exceptions.exceptions import InvalidConfigurationError
from src.satake.satake_core import EigenformData
from src.coeffs.coeff_engine import CoefficientEngine
from src.voronoi.voronoi_eval import PerronConfig, VoronoiEvaluator
from src.detector.sign_detector import SignDetector, phase_aligned_t
from src.checks.property_suite import PropertySuite
from src.data.data_collection import FAMILIES, SyntheticFormModule, SyntheticSpec
from src.data.data_processing import (
    from_eigenform,
    load,
    load_file,
    normalize_file,
    write_eigenvalue_file,
)
from src.data.report_io import emit

COMMANDS = ("gen", "coeffs", "voronoi", "perron", "kernel", "extrema", "scan", "check", "normalize")
TABLE_COMMANDS = ("coeffs", "voronoi", "kernel", "extrema", "scan", "check")


def parse_grid(text: str) -> List[float]:
    """
    解析 lo:hi:count:log|lin 网格

    :raises: InvalidConfigurationError 如果格式错误
    """
    parts = text.split(":")
    if len(parts) != 4 or parts[3] not in ("log", "lin"):
        raise InvalidConfigurationError(f"Grid must look like lo:hi:count:log|lin, got '{text}'")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise InvalidConfigurationError(f"Malformed grid '{text}': {e}") from e
    if count < 1 or hi < lo:
        raise InvalidConfigurationError(f"Grid needs count >= 1 and lo <= hi, got '{text}'")
    if parts[3] == "log":
        if lo <= 0:
            raise InvalidConfigurationError(f"Log grid needs lo > 0, got '{text}'")
        values = np.geomspace(lo, hi, count)
    else:
        values = np.linspace(lo, hi, count)
    return [float(v) for v in values]


@dataclass(frozen=True)
class MRule:
    """M 的选取规则：const:<int> 或 pow:<float>（M = floor(x^e)）"""
    kind: str
    value: float

    def __call__(self, x: float) -> int:
        if self.kind == "const":
            return int(self.value)
        return max(1, int(math.floor(x ** self.value)))

    def __str__(self):
        return f"{self.kind}:{self.value:g}"


def parse_m_rule(text: str) -> MRule:
    kind, sep, value = text.partition(":")
    if not sep or kind not in ("const", "pow"):
        raise InvalidConfigurationError(f"M-rule must be const:<int> or pow:<float>, got '{text}'")
    try:
        number = int(value) if kind == "const" else float(value)
    except ValueError as e:
        raise InvalidConfigurationError(f"Malformed M-rule '{text}': {e}") from e
    if number < 0:
        raise InvalidConfigurationError(f"M-rule value must be non-negative, got '{text}'")
    return MRule(kind, number)


def parse_gen(text: str, prime_bound: int, weight: int = None) -> SyntheticSpec:
    """解析 tempered:<seed> / sk:<seed> / trivial"""
    family, _, seed = text.partition(":")
    if family not in FAMILIES:
        raise InvalidConfigurationError(f"--gen must be one of tempered:<seed>, sk:<seed>, trivial; got '{text}'")
    try:
        seed_value = int(seed) if seed else 0
    except ValueError as e:
        raise InvalidConfigurationError(f"Seed must be an integer in '{text}'") from e
    kwargs = {"weight": weight} if weight is not None else {}
    return SyntheticSpec(family=family, prime_bound=prime_bound, seed=seed_value, **kwargs)


@dataclass
class RunConfig:
    """
    一次命令运行的全部参数
    """
    command: str
    input_path: Optional[str] = None
    gen: Optional[str] = None
    N: Optional[int] = None
    x_grid: Optional[str] = None
    t_grid: Optional[str] = None
    m_rule: str = "pow:0.6"
    kappa: Optional[float] = None
    tau: Optional[int] = None
    eps: Optional[float] = None
    C: Optional[float] = None
    zero_tol: Optional[float] = None
    threads: Optional[int] = None
    out: Optional[str] = None
    fe_sign: bool = False
    align: Optional[bool] = None
    x: Optional[float] = None
    T: float = 1000.0
    P: int = 499
    exponent: Optional[float] = None
    weight: Optional[int] = None

    def validate(self):
        """
        :raises: InvalidConfigurationError 输入来源不唯一、缺少必需参数等
        """
        if self.command not in COMMANDS:
            raise InvalidConfigurationError(f"Unknown command '{self.command}'")
        if self.command == "gen":
            if not self.gen or self.input_path:
                raise InvalidConfigurationError("gen needs --gen and no --input")
            if not self.N or self.N < 2:
                raise InvalidConfigurationError("gen needs --N >= 2 (prime bound)")
            return
        if self.command == "normalize":
            if not self.input_path or self.gen:
                raise InvalidConfigurationError("normalize needs --input and no --gen")
            if self.exponent is None:
                raise InvalidConfigurationError("normalize needs an explicit --exponent (usually k - 3/2)")
            return
        if bool(self.input_path) == bool(self.gen):
            raise InvalidConfigurationError("Exactly one of --input or --gen is required")
        if self.command in TABLE_COMMANDS and (self.N is None or self.N < 1):
            raise InvalidConfigurationError(f"{self.command} needs --N >= 1")
        if self.command in ("voronoi", "extrema", "scan") and not self.x_grid:
            raise InvalidConfigurationError(f"{self.command} needs --x-grid")
        if self.command == "kernel" and not (self.x_grid or self.t_grid):
            raise InvalidConfigurationError("kernel needs --t-grid or --x-grid")
        if self.command == "perron" and self.x is None:
            raise InvalidConfigurationError("perron needs --x")
        if self.tau is not None and self.tau not in (1, -1):
            raise InvalidConfigurationError(f"--tau must be 1 or -1, got {self.tau}")
        if self.threads is not None and self.threads < 1:
            raise InvalidConfigurationError(f"--threads must be >= 1, got {self.threads}")


class CommandRunner:
    """
    负责执行各个命令并返回结果字典
    """
    def __init__(self, cfg=None):
        """
        :param cfg: Config 实例，默认使用全局配置
        """
        self.cfg = cfg or default_config
        self.generator = SyntheticFormModule()
        logger.info("CommandRunner initialized.")

    def _threads(self, rc: RunConfig) -> int:
        return rc.threads if rc.threads is not None else self.cfg.THREADS

    def _map(self, rc: RunConfig, fn: Callable, items: Sequence) -> List:
        # executor.map 保持输入顺序
        threads = self._threads(rc)
        if threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]

    def _engine(self, rc: RunConfig) -> CoefficientEngine:
        return CoefficientEngine(zero_tol=rc.zero_tol if rc.zero_tol is not None else self.cfg.ZERO_TOL,
                                 rp_tol=self.cfg.RP_TOL, segment_size=self.cfg.SEGMENT_SIZE)

    def _detector(self, rc: RunConfig) -> SignDetector:
        cfg = self.cfg
        return SignDetector(kappa=rc.kappa if rc.kappa is not None else cfg.KERNEL_KAPPA,
                            n_quad=cfg.N_QUAD,
                            eps=rc.eps if rc.eps is not None else cfg.SIGN_EPS,
                            window_c=rc.C if rc.C is not None else cfg.WINDOW_C,
                            zero_tol=rc.zero_tol if rc.zero_tol is not None else cfg.ZERO_TOL,
                            piece_budget=cfg.QUAD_PIECE_BUDGET,
                            c_osc=cfg.PHASE_CONSTANT)

    def _evaluator(self, rc: RunConfig) -> VoronoiEvaluator:
        return VoronoiEvaluator(phase_constant=self.cfg.PHASE_CONSTANT, phase_step=self.cfg.PERRON_PHASE_STEP,
                                threads=self._threads(rc))

    def _form(self, rc: RunConfig, prime_bound: int) -> EigenformData:
        if rc.input_path:
            return load(rc.input_path)
        return self.generator.generate(parse_gen(rc.gen, prime_bound, rc.weight))

    def _out(self, rc: RunConfig, default_name: str) -> str:
        return rc.out or self.cfg.data_path(default_name)

    @staticmethod
    def _sibling(path: str, suffix: str) -> str:
        root, ext = os.path.splitext(path)
        return f"{root}{suffix}{ext or '.csv'}"

    @staticmethod
    def _require_grid(values: Sequence[float], limit: int, what: str):
        if values and max(values) > limit:
            raise InvalidConfigurationError(f"{what} reaches {max(values):.6g}, beyond --N={limit}")

    def run(self, rc: RunConfig) -> Dict[str, Any]:
        """校验参数并分派到 cmd_<command>"""
        rc.validate()
        logger.info(f"Running command '{rc.command}'")
        return getattr(self, f"cmd_{rc.command}")(rc)

    def cmd_gen(self, rc: RunConfig) -> Dict[str, Any]:
        spec = parse_gen(rc.gen, rc.N, rc.weight)
        F = self.generator.generate(spec)
        path = write_eigenvalue_file(from_eigenform(F, "e1e2", family=spec.family),
                                     self._out(rc, f"{F.label}.txt"))
        return {"status": "success", "message": f"Wrote '{F.label}' with primes up to {rc.N} to {path}",
                "outputs": [path]}

    def cmd_coeffs(self, rc: RunConfig) -> Dict[str, Any]:
        engine = self._engine(rc)
        F = self._form(rc, rc.N)
        t = engine.build_table(F, rc.N)
        counts = engine.sign_counts(t, rc.N)
        stats = {
            "N": rc.N,
            "S_F(N)": float(t.prefix_a[-1]),
            "plus": counts.plus,
            "minus": counts.minus,
            "zero": counts.zero,
            "hecke_crosscheck": engine.crosscheck_hecke(t),
            "rp_violations": len(engine.rp_violation_scan(t)),
            "mean_value_ratio": engine.mean_value_ratio(t),
        }
        outputs = []
        if rc.out:
            n = np.arange(t.N + 1)
            rows = [{"n": int(i), "a": float(t.a[i]), "lam": float(t.lam[i]), "d4": int(t.d4[i]),
                     "prefix_a": float(t.prefix_a[i])} for i in n[1:]]
            outputs.append(emit(rows, rc.out))
        message = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in stats.items())
        return {"status": "success", "message": message, "stats": stats, "outputs": outputs}

    def cmd_voronoi(self, rc: RunConfig) -> Dict[str, Any]:
        xs = parse_grid(rc.x_grid)
        self._require_grid(xs, rc.N, "x-grid")
        rule = parse_m_rule(rc.m_rule)
        self._require_grid([rule(x) for x in xs], rc.N, "M-rule")
        F = self._form(rc, rc.N)
        t = self._engine(rc).build_table(F, rc.N)
        evaluator = self._evaluator(rc)
        fit = None
        if len(xs) >= 8:
            fit, evaluations = evaluator.error_exponent_fit(t, xs, rule, apply_fe_sign=rc.fe_sign)
        else:
            logger.warning(f"Only {len(xs)} x values, skipping the exponent fit (needs 8)")
            evaluations = evaluator.evaluate_grid(t, xs, rule, apply_fe_sign=rc.fe_sign)
        path = self._out(rc, f"voronoi_{F.label}.csv")
        outputs = [emit(evaluations, path)]
        message = f"{len(evaluations)} evaluations with M-rule {rule}"
        if fit is not None:
            outputs.append(emit(fit, self._sibling(path, "_fit")))
            message += f"; residual exponent {fit.slope:.4f} +/- {fit.stderr:.4f}"
        if not t.genuine:
            message += " (synthetic data: no functional equation, main term not expected to match)"
        return {"status": "success", "message": message, "outputs": outputs, "fit": fit}

    def cmd_perron(self, rc: RunConfig) -> Dict[str, Any]:
        x = rc.x
        cfg = PerronConfig(T=rc.T, P=rc.P, kappa=self.cfg.PERRON_KAPPA)
        top = max(rc.P, int(math.floor(2 * x)))
        F = self._form(rc, top)
        t = self._engine(rc).build_table(F, int(math.floor(2 * x)))
        evaluator = self._evaluator(rc)
        row = evaluator.perron_compare(F, t, x, cfg)
        envelope = evaluator.perron_envelope(x, cfg.T, cfg.kappa, t)
        outputs = [emit(row, self._out(rc, f"perron_{F.label}.csv"))]
        return {"status": "success", "outputs": outputs, "row": row,
                "message": f"oracle {row.oracle:.10g}, direct {row.direct:.10g}, deviation {row.deviation:.3e} "
                           f"(envelope {envelope:.3e})"}

    def cmd_kernel(self, rc: RunConfig) -> Dict[str, Any]:
        detector = self._detector(rc)
        align = rc.align if rc.align is not None else self.cfg.ALIGN_KERNEL_PHASE
        # --t-grid 直接给出 t；否则取 t = floor(X^{1/4})
        if rc.t_grid:
            raw = parse_grid(rc.t_grid)
        else:
            raw = [float(math.floor(X ** 0.25)) for X in parse_grid(rc.x_grid)]
        ts = [phase_aligned_t(tv, detector.c_osc) if align else tv for tv in raw]
        kappa = detector.kappa
        bad = [tv for tv in ts if not tv > 2 * kappa]
        if bad:
            raise InvalidConfigurationError(f"Kernel scale t={bad[0]:.6g} is not above 2*kappa={2 * kappa:g}")
        self._require_grid([(tv + kappa) ** 4 for tv in ts], rc.N, "(t + kappa)^4")
        F = self._form(rc, rc.N)
        t = self._engine(rc).build_table(F, rc.N)
        taus = [rc.tau] if rc.tau is not None else [1, -1]
        jobs = [(tv, tau) for tv in ts for tau in taus]
        results = self._map(rc, lambda job: detector.j_tau(t, job[0], kappa, job[1]), jobs)
        path = emit(results, self._out(rc, f"kernel_{F.label}.csv"))
        message = f"{len(results)} kernel tests (kappa={kappa:g}, aligned={align})"
        if not t.genuine:
            message += " (synthetic data: J_tau ~ tau/2 is only expected for genuine eigenforms)"
        return {"status": "success", "message": message, "outputs": [path]}

    def cmd_extrema(self, rc: RunConfig) -> Dict[str, Any]:
        detector = self._detector(rc)
        C = detector.window_c
        Xs = parse_grid(rc.x_grid)
        self._require_grid([X + C * X ** 0.75 for X in Xs], rc.N, "extrema window")
        F = self._form(rc, rc.N)
        t = self._engine(rc).build_table(F, rc.N)
        reports = self._map(rc, lambda X: detector.find_extrema(t, X, C), Xs)
        path = emit(reports, self._out(rc, f"extrema_{F.label}.csv"))
        holding = sum(1 for r in reports if r.lemma_holds)
        return {"status": "success", "outputs": [path],
                "message": f"{holding} of {len(reports)} windows have S1 > 0 > S2 (C={C:g})"}

    def cmd_scan(self, rc: RunConfig) -> Dict[str, Any]:
        detector = self._detector(rc)
        c = detector.window_c
        xs = parse_grid(rc.x_grid)
        self._require_grid([x + c * x ** 0.75 for x in xs], rc.N, "scan window")
        F = self._form(rc, rc.N)
        t = self._engine(rc).build_table(F, rc.N)
        scans = self._map(rc, lambda x: detector.scan_window(t, x, c), xs)
        path = emit(scans, self._out(rc, f"scan_{F.label}.csv"))
        reached = sum(1 for s in scans if s.plus >= s.lower_target and s.minus >= s.lower_target)
        return {"status": "success", "outputs": [path],
                "message": f"{reached} of {len(scans)} windows reach x^(3/8-eps) in both signs "
                           f"(c={c:g}, eps={detector.eps:g})"}

    def cmd_check(self, rc: RunConfig) -> Dict[str, Any]:
        engine = self._engine(rc)
        suite = PropertySuite(tempered_tol=self.cfg.TEMPERED_TOL, rp_tol=self.cfg.RP_TOL, engine=engine,
                              evaluator=self._evaluator(rc), detector=self._detector(rc))
        F = self._form(rc, rc.N)
        results = suite.run(F, rc.N)
        summary = PropertySuite.summary(results)
        outputs = [emit(results, rc.out)] if rc.out else []
        lines = [f"{'PASS' if r.passed else 'FAIL'} {r.module}.{r.invariant}: {r.detail}" for r in results]
        status = "success" if summary["failed"] == 0 else "failed"
        return {"status": status, "message": "\n".join(lines), "outputs": outputs, "summary": summary}

    def cmd_normalize(self, rc: RunConfig) -> Dict[str, Any]:
        ef = load_file(rc.input_path)
        normalized = normalize_file(ef, rc.exponent)
        path = write_eigenvalue_file(normalized, self._out(rc, f"{ef.label}_normalized.txt"))
        return {"status": "success", "outputs": [path],
                "message": f"Normalized {len(normalized.rows)} rows of '{ef.label}' with exponent {rc.exponent:g}"}
