import argparse
from typing import Any

from pydantic import ValidationError

from cli.commands import COMMANDS, run_command
from cli.run_config import FLAG_FIELDS, coerce_flag, resolve_config
from core.errors import InputError, KrylovError
from core.logger import logger


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_path", help="JSON run configuration")
    common.add_argument("--hamiltonian", help="Hamiltonian JSON (dense re/im or qubits/terms)")
    common.add_argument("--model", help="model family JSON, e.g. {\"family\": \"meixner\", ...}")
    common.add_argument("--seed-operator", help="seed operator: a Pauli label such as XZ or a JSON file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="random seed for generated systems")
    common.add_argument("--t-max", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--times", help="explicit comma-separated time grid, overrides --t-max/--samples")
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--term-tol", type=float)
    common.add_argument("--tail-tol", type=float)
    return common


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="krylov-sphere",
        description="Krylov chains, amplitude evolution and the geometry of operator growth.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()

    lanczos = sub.add_parser("lanczos", parents=[common], help="build the Krylov chain")
    lanczos.add_argument("--dump-basis", action="store_true", default=None)
    sub.add_parser("evolve", parents=[common], help="evolve the amplitudes (ODE and spectral)")
    sub.add_parser("geometry", parents=[common], help="speed, Frenet quantities, return bound, Hall equality")
    bounds = sub.add_parser("bounds", parents=[common], help="light-cone tail, fronts, complexity")
    bounds.add_argument("--envelope-grid", action="store_true", default=None)
    sub.add_parser("model", parents=[common], help="closed-form amplitudes of a solvable family")
    verify = sub.add_parser("verify", parents=[common], help="run the verification suite")
    verify.add_argument("--checks", help="comma-separated subset of checks; empty runs nothing")
    verify.add_argument("--inject-bug", choices=["hopping_sign"])
    verify.add_argument("--random-systems", type=int)
    return parser.parse_args(argv)


def _cli_values(args: argparse.Namespace) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for field in FLAG_FIELDS.values():
        value = getattr(args, field, None)
        if value is None:
            continue
        values[field] = coerce_flag(field, value) if field in ("times", "checks") else value
    return values


def main(argv: list[str] | None = None) -> int:
    args = _parse_args(argv)
    if args.command not in COMMANDS:
        logger.error(f"[cli] unknown command '{args.command}'")
        return 2
    try:
        config = resolve_config(_cli_values(args), args.config_path)
        return run_command(args.command, config)
    except ValidationError as exc:
        logger.error(f"[cli] invalid configuration: {exc}")
        return InputError.exit_code
    except KrylovError as exc:
        logger.error(f"[cli] {args.command} failed: {exc}")
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"[cli] internal error in {args.command}: {exc}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
