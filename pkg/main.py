import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from src.config import load_run_config
from src.services.selftest import Selftest
from src.services.zeta_lab import ZetaLab
from src.utils.artifacts import ArtifactWriter, dumps
from src.utils.errors import AcceptanceError, ZetaLabError
from src.utils.logger import set_level, setup_logger
from src.utils.parallel import set_threads

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a complex number: {text}") from e


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zeta-lab",
                                     description="Random Euler-product model of zeta: moments, tails and checks")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--threads", type=int, help="worker cap for every parallel stage")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--format", choices=["csv", "json", "both"])
    parser.add_argument("--emit-plots", dest="emit_plots", choices=["none", "gnuplot"])
    parser.add_argument("--samples", type=int, help="empirical heights per window")
    parser.add_argument("--model-samples", dest="model_samples", type=int, help="model draws")
    parser.add_argument("--backend", choices=["auto", "full-zeta", "dirichlet-RY"])
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    moments = subparsers.add_parser("moments", help="log E|zeta(sigma, X)|^z")
    moments.add_argument("--sigma", type=float)
    moments.add_argument("--z-re", dest="z_re", type=float)
    moments.add_argument("--z-im", dest="z_im", type=float)

    tail = subparsers.add_parser("tail", help="saddle-point and Monte Carlo tail of log|zeta(sigma, X)|")
    tail.add_argument("--sigma", type=float)
    tail.add_argument("--tau", type=float)
    tail.add_argument("--mc-samples", dest="mc_samples", type=int)

    charfun = subparsers.add_parser("charfun", help="empirical against model characteristic function")
    charfun.add_argument("--sigma", type=float)
    charfun.add_argument("--T", dest="T", type=float)
    charfun.add_argument("--u", type=float)
    charfun.add_argument("--v", type=float)

    trend = subparsers.add_parser("discrepancy", help="discrepancy decay along T")
    trend.add_argument("--sigma", type=float)
    trend.add_argument("--T-list", dest="T_list", type=_float_list)
    trend.add_argument("--grid", type=int)

    census = subparsers.add_parser("apoints", help="a-point census against the predicted density")
    census.add_argument("--a", type=_complex)
    census.add_argument("--sigma1", type=float)
    census.add_argument("--sigma2", type=float)
    census.add_argument("--T", dest="T", type=float)
    census.add_argument("--h", type=float)

    constants = subparsers.add_parser("constants", help="asymptotic constants g0, g1, g2 and A(sigma)")
    constants.add_argument("--sigma", type=float)

    selftest = subparsers.add_parser("selftest", help="acceptance suite")
    selftest.add_argument("--scale", choices=["quick", "full"])
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    values = {key: value for key, value in vars(args).items()
              if key not in ("config", "log_level", "subcommand", "a") and value is not None}
    a = getattr(args, "a", None)
    if a is not None:
        values["a_re"], values["a_im"] = a.real, a.imag
    return values


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and map its outcome to an exit code.

    Returns:
        int: 0 ok, 2 configuration error, 3 numeric failure, 4 acceptance failure.
    """
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    try:
        cfg = load_run_config(args.config, _overrides(args))
        set_threads(cfg.threads)
        logger.info(f"zeta-lab {args.subcommand} seed={cfg.seed} threads={cfg.threads}")
        if args.subcommand == "selftest":
            report = Selftest(cfg.scale, cfg.seed).run()
            writer = ArtifactWriter(cfg.output_dir, "selftest", "json")
            writer.write_json("selftest", report)
            writer.write_manifest({"scale": cfg.scale}, cfg.seed)
            sys.stdout.buffer.write(dumps(report) + b"\n")
            if not report.passed:
                failed = [result.name for result in report.results if not result.passed]
                raise AcceptanceError(f"failed checks: {', '.join(failed)}", "cli", "selftest")
        else:
            report = getattr(ZetaLab(cfg), args.subcommand)()
            sys.stdout.buffer.write(dumps(report) + b"\n")
    except ValidationError as e:
        logger.error(f"[cli.{args.subcommand}] invalid input: {e}")
        return EXIT_CONFIG
    except ZetaLabError as e:
        logger.error(str(e))
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
