"""Plot a sweep CSV (generated by edgecast)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else '/root/pkg/results/cpu_sweep.csv'
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
curves = {}
for r in rows:
    curves.setdefault(r["solver"], []).append((float(r["value"]), float(r["saa_bandwidth_hz"])))
for name, pts in curves.items():
    xs, ys = zip(*sorted(pts))
    plt.plot(xs, [y / 1e6 for y in ys], marker="o", label=name)
plt.xlabel(rows[0]["sweep"])
plt.ylabel("average bandwidth (MHz)")
plt.legend()
plt.grid(True, alpha=0.3)
plt.savefig('/root/pkg/results/cpu_sweep.png', dpi=150, bbox_inches="tight")
