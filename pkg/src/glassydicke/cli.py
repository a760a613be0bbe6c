"""Command-line entry point: ``glassydicke <subcommand> [flags]``.

Exit codes: 0 success, 1 usage / parameter error, 2 numerical non-convergence,
3 failed validation.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import os
import sys
from typing import Any, Sequence

from . import config as C

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="glassydicke", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, keys in C.COMMAND_KEYS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file (or a previous output) to start from")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--threads", type=int, default=None, help="worker processes")
        if name in ("mc", "avg"):
            sp.add_argument("--summary", help="path for the JSON summary")
        for key, spec in keys.items():
            if key == "quick":
                sp.add_argument("--quick", dest="quick", action="store_const", const=True, default=None)
                continue
            if key == "warm_start":
                sp.add_argument("--no-warm-start", dest="warm_start", action="store_const",
                                const=False, default=None)
                continue
            flags = [_flag(key)]
            if key == "lambda":
                flags.append("--lam")
            sp.add_argument(*flags, dest=key, type=str, default=None, help=spec.help)
    return p


def _threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get(C.ENV_PREFIX + "THREADS")
        value = int(env) if env else (os.cpu_count() or 1)
    if value < 1:
        raise C.ConfigError(f"threads must be >= 1, got {value}")
    return value


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _solver_options(cfg):
    from .rs import SolverOptions

    return SolverOptions(tol=cfg["tol"], max_iter=cfg["max_iter"], damping=cfg["damping"],
                         order=cfg["order"])


def cmd_oracle(cfg, args) -> int:
    from .exact import enumerate_classical, quantum_closed_form, verify_mapping
    from .model import build_effective, sample_disorder

    dis = sample_disorder(cfg["n"], cfg["j0"], cfg["j"], cfg["seed"])
    cl = enumerate_classical(build_effective(dis, cfg["lambda"]), cfg["beta"])
    qu = quantum_closed_form(dis, cfg["lambda"], cfg["beta"])
    rec = {**cl.__dict__, **qu.__dict__, "residual": verify_mapping(dis, cfg["lambda"], cfg["beta"]),
           "config": C.echo_dict("oracle", cfg)}
    with _output(args.out) as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_rs(cfg, args) -> int:
    from .phase import classify
    from .rs import RSParams, solve_rs

    jt0 = cfg["jtilde0"]
    if jt0 is None:
        jt0 = cfg["j0"] + 2.0 * cfg["lambda"] ** 2
    params = RSParams(T=cfg["t"], jtilde0=jt0, J=cfg["j"], lam=cfg["lambda"])
    sol = solve_rs(params, _solver_options(cfg))
    rec = {**sol.__dict__, "jtilde0": jt0, "label": classify(sol).value,
           "config": C.echo_dict("rs", cfg)}
    with _output(args.out) as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def _scan(command, cfg, args) -> int:
    from .phase import GridSpec, optical_grid, scan_matter, scan_optical, write_csv

    opts = _solver_options(cfg)
    workers = _threads(args.threads)
    if command == "scan-matter":
        grid = GridSpec(cfg["jt_min"], cfg["jt_max"], cfg["jt_steps"], cfg["t_min"], cfg["t_max"],
                        cfg["t_steps"], J=cfg["j"], lam=cfg["lambda"], tol=cfg["class_tol"])
        pts = scan_matter(grid, opts, warm_start=cfg["warm_start"], workers=workers)
    else:
        grid = optical_grid(cfg["lam_min"], cfg["lam_max"], cfg["lam_steps"], cfg["t_min"],
                            cfg["t_max"], cfg["t_steps"], J0=cfg["j0"], J=cfg["j"], tol=cfg["class_tol"])
        pts = scan_optical(grid, opts, warm_start=cfg["warm_start"], workers=workers)
    with _output(args.out) as fh:
        write_csv(pts, fh, C.echo_lines(command, cfg))
    return EXIT_OK if all(p.converged for p in pts) else EXIT_NONCONVERGED


def _mc_config(cfg):
    from .montecarlo import MCConfig, geometric_ladder

    ladder = cfg["ladder"] or tuple(geometric_ladder(cfg["t_min"], cfg["t_max"], cfg["rungs"]))
    return MCConfig(sweeps=cfg["sweeps"], burn_in=cfg["burn_in"], ladder=tuple(ladder),
                    exchange_interval=cfg["exchange_interval"], seed=cfg["seed"],
                    block_count=cfg["blocks"])


def _mc(command, cfg, args) -> int:
    from .model import ModelParams, build_effective, sample_disorder
    from .montecarlo import disorder_average, run_parallel_tempering, summary_json, write_csv

    mcc = _mc_config(cfg)
    if command == "mc":
        dis = sample_disorder(cfg["n"], cfg["j0"], cfg["j"], cfg["seed"])
        est = run_parallel_tempering(build_effective(dis, cfg["lambda"]), mcc)
    else:
        params = ModelParams(N=cfg["n"], lam=cfg["lambda"], J0=cfg["j0"], J=cfg["j"], T=mcc.ladder[0])
        est = disorder_average(params, cfg["realizations"], mcc, workers=_threads(args.threads))
    with _output(args.out) as fh:
        write_csv(est, fh, C.echo_lines(command, cfg))
    summary = summary_json(est, C.echo_dict(command, cfg))
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(summary + "\n")
    return EXIT_OK


def cmd_validate(cfg, args) -> int:
    from .validation import run_all

    buf = io.StringIO()
    ok = run_all(quick=cfg["quick"], stream=buf)
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return EXIT_OK if ok else EXIT_VALIDATION


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        keys = C.COMMAND_KEYS[args.command]
        file_values = C.read_config_file(args.config) if args.config else None
        flags: dict[str, Any] = {k: getattr(args, k, None) for k in keys}
        cfg = C.resolve(keys, args.command, file_values, flags)
        if args.command == "oracle":
            return cmd_oracle(cfg, args)
        if args.command == "rs":
            return cmd_rs(cfg, args)
        if args.command.startswith("scan-"):
            return _scan(args.command, cfg, args)
        if args.command in ("mc", "avg"):
            return _mc(args.command, cfg, args)
        return cmd_validate(cfg, args)
    except (UsageError, C.ConfigError, ValueError, OSError) as exc:
        print(f"glassydicke: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
