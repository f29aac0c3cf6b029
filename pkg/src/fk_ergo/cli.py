"""
Command line: ``fk-ergo run <config> [--out DIR] [--seed N]``,
``fk-ergo validate <config>`` and ``fk-ergo list-scenarios``.

Exit codes: 0 when every check passes, 1 when a check fails (the failures are
listed in ``failures.json``), 2 for configuration or parameter errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_study
from .reports import write_failures
from .scenario import SCENARIOS, ScenarioError
from .studies import run_study

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2


def _run_one(config: Path, out, seed) -> int:
    spec = load_study(config)
    out = Path(out or spec.output_dir or Path("fk_ergo_out") / config.stem)
    result = run_study(spec, out, seed=seed)
    header = f"config: {config.name}\nscenario digest: {spec.scenario.digest()}"
    text = result.summary_text(header)
    (out / "summary.txt").write_text(text)
    write_failures(out / "failures.json", result)
    sys.stdout.write(text)
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def _cmd_run(args) -> int:
    config = Path(args.config)
    if not config.is_dir():
        return _run_one(config, args.out, args.seed)
    # batch: every *.toml in the directory, each into its own subdirectory
    files = sorted(config.glob("*.toml"))
    if not files:
        raise ConfigError(f"{config}: no .toml files in directory")
    base = Path(args.out) if args.out else Path("fk_ergo_out")
    codes = []
    for f in files:
        sys.stdout.write(f"== {f.name}\n")
        try:
            codes.append(_run_one(f, base / f.stem, args.seed))
        except (ConfigError, ScenarioError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            codes.append(EXIT_CONFIG)
    return max(codes)


def _cmd_validate(args) -> int:
    spec = load_study(args.config)
    problems = spec.scenario.violations(spec.grid)
    if problems:
        for p in problems:
            print(f"hypothesis violated: {p}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: study={spec.study} scenario={spec.scenario.digest()} nodes={spec.grid.n_nodes}")
    return EXIT_OK


def _cmd_list(args) -> int:
    width = max(len(n) for n in SCENARIOS)
    for name in sorted(SCENARIOS):
        s = SCENARIOS[name]
        print(f"{name:<{width}}  {s.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fk-ergo",
                                description="Feynman-Kac semigroup studies on discretized state spaces")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the study in a config file, or every config in a directory")
    r.add_argument("config", help="config file or directory of config files")
    r.add_argument("--out", help="output directory (default: [study] output_dir or fk_ergo_out/<name>)")
    r.add_argument("--seed", type=int, help="base seed for particle studies")
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("validate", help="parse a config and check scenario hypotheses")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    ls = sub.add_parser("list-scenarios", help="list the named scenario presets")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
