"""Print bandwidth reductions against MEC from a sweep CSV."""

import csv
import sys
from collections import defaultdict


def main(path: str) -> None:
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    table = defaultdict(dict)
    for r in rows:
        table[r["value"]][r["solver"]] = float(r["saa_bandwidth_hz"])
    solvers = [s for s in dict.fromkeys(r["solver"] for r in rows) if s != "mec"]
    print("value".ljust(12) + "".join(s.rjust(22) for s in solvers))
    for value, vals in table.items():
        cells = "".join(f"{1 - vals[s] / vals['mec']:22.1%}" for s in solvers)
        print(value.ljust(12) + cells)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "results/cache_sweep.csv")
