"""Run every study in configs/ and print one line per config with its exit code."""
import argparse
import sys
from pathlib import Path

from fk_ergo.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run(config_dir: Path, out: Path) -> int:
    worst = 0
    for cfg in sorted(config_dir.glob("*.toml")):
        code = main(["run", str(cfg), "--out", str(out / cfg.stem)])
        print(f"-- {cfg.name}: exit {code}", file=sys.stderr)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=Path, default=ROOT / "configs")
    ap.add_argument("--out", type=Path, default=Path("fk_ergo_out"))
    args = ap.parse_args()
    sys.exit(run(args.configs, args.out))
