"""Run the shipped sweep plans and write CSV, manifest and plot script for each."""

import argparse
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
PLANS = {"cache_sweep": "cache_fraction", "cpu_sweep": "f1", "device_sweep": "K"}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", default=sorted(PLANS), help="plans to run (default: all)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--plot", action="store_true", help="also execute the generated plot scripts")
    args = ap.parse_args()
    out = ROOT / "results"
    out.mkdir(exist_ok=True)
    for name in args.names:
        csv = out / f"{name}.csv"
        script = out / f"plot_{name}.py"
        cmd = [
            "edgecast", "sweep", str(ROOT / "configs" / f"{name}.ini"), "--workers", str(args.workers),
            "--output", str(csv), "--plot-script", str(script), "--manifest", str(out / f"{name}_manifest.json"),
        ]
        print(" ".join(cmd), flush=True)
        subprocess.run(cmd, check=True)
        if args.plot:
            subprocess.run([sys.executable, str(script)], check=True)


if __name__ == "__main__":
    main()
