"""Run every scenario under scenarios/ through the CLI and write results to an output directory."""

import argparse
import json
import sys
from pathlib import Path

from rarekit import cli

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--only", nargs="*", help="scenario stems to run (default all)")
    a = ap.parse_args(argv)
    out = Path(a.out_dir)
    worst = 0
    for path in sorted((ROOT / "scenarios").glob("*.json")):
        if a.only and path.stem not in a.only:
            continue
        dest = json.loads(path.read_text()).get("output", {})
        target = out / Path(dest.get("path", path.stem + ".json")).name
        worst = max(worst, cli.run(path, a.threads, str(target)))
    return worst


if __name__ == "__main__":
    sys.exit(main())
