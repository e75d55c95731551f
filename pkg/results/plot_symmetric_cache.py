"""Plot a symmetric-case CSV (generated by edgecast)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else '/root/pkg/results/symmetric_cache.csv'
x = sys.argv[2] if len(sys.argv) > 2 else 'beta_c'
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
series = None
groups = {}
for r in rows:
    groups.setdefault(r[series] if series else "", []).append(r)
for name, members in groups.items():
    pts = sorted((float(r[x]), float(r["ratio_mec"]), float(r["ratio_unicast"])) for r in members)
    tag = f" ({series}={name})" if series else ""
    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label="optimal / MEC computing" + tag)
    plt.plot([p[0] for p in pts], [p[2] for p in pts], marker="s", linestyle="--", label="multicast / unicast" + tag)
plt.xlabel(x)
plt.ylabel("bandwidth ratio")
plt.legend()
plt.grid(True, alpha=0.3)
plt.savefig('/root/pkg/results/symmetric_cache.png', dpi=150, bbox_inches="tight")
