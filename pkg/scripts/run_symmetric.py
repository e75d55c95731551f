"""Closed-form gain tables for the symmetric configs (symmetric_cache, symmetric_cpu, symmetric_devices)."""

import argparse
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
X_AXIS = {"symmetric_cache": "beta_c", "symmetric_cpu": "f1", "symmetric_devices": "K"}
SERIES = {"symmetric_cpu": "energy_j"}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", default=sorted(X_AXIS))
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = ROOT / "results"
    out.mkdir(exist_ok=True)
    for name in args.names:
        csv = out / f"{name}.csv"
        script = out / f"plot_{name}.py"
        subprocess.run(
            ["edgecast", "symmetric", "--config", str(ROOT / "configs" / f"{name}.ini"),
             "--output", str(csv), "--plot-script", str(script), "--plot-x", X_AXIS[name],
             *(["--plot-series", SERIES[name]] if name in SERIES else []),
             "--manifest", str(out / f"{name}_manifest.json")],
            check=True,
        )
        print(f"wrote {csv}")
        if args.plot:
            subprocess.run([sys.executable, str(script)], check=True)


if __name__ == "__main__":
    main()
