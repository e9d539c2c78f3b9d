"""
主程序入口 - 解析命令行参数并执行 spinor zeta 数值命令
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse

from src.logger_config import logger
from src.config.config import Config
from src.exceptions.exceptions import ACCURACY_ERRORS, SpinorZetaError
from src.control.commands import COMMANDS, CommandRunner, RunConfig

EXIT_OK = 0
EXIT_FAILED = 2
EXIT_ACCURACY = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Spinor zeta 数值引擎：系数表、Voronoi 截断、核检测与符号扫描")
    parser.add_argument("command", choices=COMMANDS, help="要执行的命令")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--input", type=str, help="特征值文件路径")
    source.add_argument("--gen", type=str, help="合成数据：tempered:<seed> | sk:<seed> | trivial")
    parser.add_argument("--N", type=int, help="系数表长度（gen 时为素数上界）")
    parser.add_argument("--x-grid", dest="x_grid", type=str, help="网格 lo:hi:count:log|lin")
    parser.add_argument("--t-grid", dest="t_grid", type=str,
                        help="kernel 命令的 t 网格（缺省时由 x-grid 取 floor(x^(1/4))）")
    parser.add_argument("--M-rule", dest="m_rule", type=str, default="pow:0.6", help="const:<int> 或 pow:<float>")
    parser.add_argument("--kappa", type=float, help="核频率尺度")
    parser.add_argument("--tau", type=int, choices=(1, -1), help="只计算一个 tau（默认两者）")
    parser.add_argument("--eps", type=float, help="符号扫描目标 x^(3/8-eps) 的 eps")
    parser.add_argument("--C", type=float, help="窗口系数")
    parser.add_argument("--zero-tol", dest="zero_tol", type=float, help="符号零带（相对 d_4(n)）")
    parser.add_argument("--threads", type=int, help="线程数")
    parser.add_argument("--out", type=str, help="输出路径（.csv 或 .json）")
    parser.add_argument("--fe-sign", dest="fe_sign", action="store_true", help="主项乘以 (-1)^k")
    parser.add_argument("--no-align", dest="align", action="store_false", default=None,
                        help="kernel 命令不做相位对齐")
    parser.add_argument("--x", type=float, help="perron 命令的 x（非整数）")
    parser.add_argument("--T", type=float, default=1000.0, help="Perron 积分高度")
    parser.add_argument("--P", type=int, default=499, help="Euler 乘积截断素数")
    parser.add_argument("--exponent", type=float, help="normalize 命令的归一化指数")
    parser.add_argument("--weight", type=int, help="合成数据的权")
    parser.add_argument("--config", type=str, help="配置文件路径")
    return parser


def main(argv=None) -> int:
    """
    主函数：解析参数、执行命令并返回退出码

    :return: 0 成功；2 输入或性质检查失败；3 数值精度失败
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    cfg = Config(args.config) if args.config else None
    runner = CommandRunner(cfg)
    rc = RunConfig(command=args.command, input_path=args.input, gen=args.gen, N=args.N, x_grid=args.x_grid,
                   t_grid=args.t_grid, m_rule=args.m_rule, kappa=args.kappa, tau=args.tau, eps=args.eps, C=args.C,
                   zero_tol=args.zero_tol, threads=args.threads, out=args.out, fe_sign=args.fe_sign,
                   align=args.align, x=args.x, T=args.T, P=args.P, exponent=args.exponent, weight=args.weight)
    try:
        result = runner.run(rc)
    except ACCURACY_ERRORS as e:
        logger.error(f"{args.command} failed on numerical accuracy: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ACCURACY
    except SpinorZetaError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED

    print(result["message"])
    for path in result.get("outputs", []):
        print(f"wrote {path}")
    return EXIT_OK if result["status"] == "success" else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
